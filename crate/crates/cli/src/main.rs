use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

use iebench::bench::{self, ReportFormat, ALL_FORMATS};
use iebench::config::{parse_algorithms, BenchConfig, DataSource, LeakageMode};
use iebench::ingest::{self, SynthSpec};
use iebench::metrics::no_information_rate;
use iebench::resample::ResampleMethod;

#[derive(Parser)]
#[command(name = "iebench", version, about = "Introvert/extrovert survey classification benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate and summarise a survey CSV; optionally write the canonical form.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        /// Canonical CSV output path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic survey-like dataset as canonical CSV.
    Synth {
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 20)]
        p: usize,
        /// Class proportions, comma separated; their count sets the class count.
        #[arg(long, default_value = "0.6,0.3,0.1", value_delimiter = ',')]
        proportions: Vec<f64>,
        /// Zero-based informative feature indices.
        #[arg(long, default_value = "0,1,2,3,4", value_delimiter = ',')]
        informative: Vec<usize>,
        #[arg(long, default_value_t = 0.8)]
        effect: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Forest importance over all features and baseline CV accuracy.
    Baseline(RunArgs),
    /// Full benchmark grid.
    Bench(RunArgs),
    /// Re-render a saved report.json.
    Report {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_delimiter = ',')]
        format: Vec<String>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Config file (`key = value` lines, `[section]` headers).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    split: Option<f64>,
    #[arg(long)]
    folds: Option<usize>,
    /// CV repetitions (baseline repetitions for `baseline`).
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    top_k: Option<usize>,
    /// none | smote | adasyn
    #[arg(long)]
    resample: Option<String>,
    /// Resample inside each CV fold instead of before CV.
    #[arg(long)]
    leak_free: bool,
    /// Comma-separated subset of gbm,rf,knn,nnet,svm.
    #[arg(long)]
    models: Option<String>,
    /// Precomputed importance CSV; skips the baseline run.
    #[arg(long)]
    importance: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// md | csv | svg (comma separated); all when omitted.
    #[arg(long, value_delimiter = ',')]
    format: Vec<String>,
    #[arg(long)]
    threads: Option<usize>,
}

impl RunArgs {
    fn config(&self, baseline: bool) -> Result<BenchConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                BenchConfig::parse(&text)?
            }
            None => BenchConfig::default(),
        };
        if let Some(p) = &self.input {
            cfg.source = DataSource::Csv(p.clone());
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.split {
            cfg.split_ratio = v;
        }
        if let Some(v) = self.folds {
            cfg.folds = v;
        }
        if let Some(v) = self.reps {
            if baseline {
                cfg.baseline_reps = v;
            } else {
                cfg.reps = v;
            }
        }
        if let Some(v) = self.top_k {
            cfg.top_k = v;
        }
        if let Some(m) = &self.resample {
            cfg.resample.method = m.parse::<ResampleMethod>()?;
        }
        if self.leak_free {
            cfg.leakage_mode = LeakageMode::LeakFree;
        }
        if let Some(m) = &self.models {
            cfg.algorithms = parse_algorithms(m)?;
        }
        if let Some(p) = &self.importance {
            cfg.importance_cache = Some(p.clone());
        }
        if let Some(o) = &self.out {
            cfg.out_dir = o.clone();
        }
        if let Some(t) = self.threads {
            cfg.threads = Some(t);
        }
        if self.config.is_none() && self.input.is_none() {
            bail!("either --input or --config is required");
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn formats(names: &[String]) -> Result<Vec<ReportFormat>> {
    if names.is_empty() {
        return Ok(ALL_FORMATS.to_vec());
    }
    Ok(names.iter().map(|f| f.parse()).collect::<Result<_, _>>()?)
}

fn ingest_cmd(input: &Path, out: Option<&Path>) -> Result<()> {
    let (ds, report) = bench::load_csv(input)?;
    if let Some(r) = &report {
        println!("raw rows: {}", r.raw_rows);
        println!("removed (missing target): {}", r.removed_missing_target);
        println!("dropped technical columns: {}", r.dropped_technical);
        if !r.dropped_date.is_empty() {
            println!("dropped date columns: {}", r.dropped_date.join(", "));
        }
        if !r.dropped_unknown.is_empty() {
            println!("dropped unknown columns: {}", r.dropped_unknown.join(", "));
        }
        println!("country levels: {}", r.country_levels);
    }
    println!("rows: {}", ds.n());
    println!("features: {}", ds.p());
    let dist = ds.class_distribution();
    for (name, (count, prop)) in ds.class_names().iter().zip(dist.counts.iter().zip(&dist.proportions)) {
        println!("class {name}: {count} ({:.2}%)", 100.0 * prop);
    }
    if ds.n() > 0 {
        println!("no-information rate: {:.2}%", 100.0 * no_information_rate(&ds)?);
    }
    if let Some(path) = out {
        let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        ingest::write_canonical(&ds, None, BufWriter::new(file))?;
        info!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Ingest { input, out } => ingest_cmd(&input, out.as_deref())?,
        Command::Synth {
            n,
            p,
            proportions,
            informative,
            effect,
            seed,
            out,
        } => {
            let spec = SynthSpec {
                n,
                p,
                c: proportions.len(),
                class_proportions: proportions,
                informative_features: informative,
                effect_size: effect,
                seed,
            };
            let ds = ingest::generate_synthetic(&spec)?;
            let file = fs::File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            ingest::write_canonical(&ds, None, BufWriter::new(file))?;
            println!("wrote {} rows x {} features to {}", ds.n(), ds.p(), out.display());
        }
        Command::Baseline(args) => {
            let cfg = args.config(true)?;
            let ds = bench::load_source(&cfg.source)?;
            let b = bench::with_pool(cfg.threads, || bench::run_baseline(&ds, &cfg))?;
            println!("baseline rf CV accuracy: {:.2}%", 100.0 * b.cv_accuracy);
            println!("top {}:", cfg.top_k.min(b.ranking.len()));
            for (i, e) in b.ranking.entries().iter().take(cfg.top_k).enumerate() {
                println!("{:>3}  {:<12} {:>8.3}", i + 1, e.feature, e.normalized);
            }
            fs::create_dir_all(&cfg.out_dir)?;
            let csv_path = cfg.out_dir.join("importance.csv");
            b.ranking.write_csv(BufWriter::new(fs::File::create(&csv_path)?))?;
            fs::write(
                cfg.out_dir.join("importance.svg"),
                b.ranking.to_svg(b.ranking.len().min(30), "Variable importance"),
            )?;
            println!("wrote {}", csv_path.display());
        }
        Command::Bench(args) => {
            let cfg = args.config(false)?;
            let fmts = formats(&args.format)?;
            let report = bench::run_benchmark(&cfg)?;
            bench::emit_report(&report, &cfg.out_dir, &fmts)?;
            bench::save_report(&report, &cfg.out_dir)?;
            print!("{}", bench::render_markdown(&report));
            println!("\nwrote reports to {}", cfg.out_dir.display());
        }
        Command::Report { input, out, format } => {
            let report = bench::load_report(&input)?;
            bench::emit_report(&report, &out, &formats(&format)?)?;
            println!("wrote reports to {}", out.display());
        }
    }
    Ok(())
}
