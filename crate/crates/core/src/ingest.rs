//! Survey file parsing, preprocessing, the canonical CSV format, and the
//! synthetic dataset generator.
//!
//! Raw files follow the MIES release layout: one answer column `QkA` per
//! item plus two technical columns `QkI` (position) and `QkE` (elapsed ms),
//! demographic columns `country`, `gender`, `engnat`, a submission date
//! column and the `IE` target. Column names are matched case-insensitively.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use log::{info, warn};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::data::{Dataset, FeatureDescriptor, FeatureKind};
use crate::error::{Error, Result};
use crate::seed;
use crate::util::largest_remainder;

/// Header plus rows, every cell kept verbatim.
#[derive(Clone, Debug, PartialEq)]
pub struct RawSurveyTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

fn detect_delimiter(bytes: &[u8]) -> u8 {
    let first_line = bytes.split(|&b| b == b'\n').next().unwrap_or_default();
    let tabs = first_line.iter().filter(|&&b| b == b'\t').count();
    let commas = first_line.iter().filter(|&&b| b == b',').count();
    if tabs > commas {
        b'\t'
    } else {
        b','
    }
}

/// Reads comma- or tab-separated text with a header row.
pub fn parse_raw<R: Read>(mut input: R) -> Result<RawSurveyTable> {
    let mut bytes = Vec::new();
    input
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io("<input>", e))?;
    if bytes.iter().all(|b| b.is_ascii_whitespace()) {
        return Err(Error::EmptyInput);
    }
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(detect_delimiter(&bytes))
        .has_headers(true)
        .flexible(false)
        .from_reader(bytes.as_slice());
    let header: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim_start_matches('\u{feff}').trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        match record {
            Ok(r) => rows.push(r.iter().map(str::to_string).collect()),
            Err(e) => {
                if let csv::ErrorKind::UnequalLengths {
                    pos,
                    expected_len,
                    len,
                } = e.kind()
                {
                    return Err(Error::MalformedRow {
                        line: pos.as_ref().map(|p| p.line()).unwrap_or(0),
                        expected: *expected_len as usize,
                        found: *len as usize,
                    });
                }
                return Err(e.into());
            }
        }
    }
    Ok(RawSurveyTable { header, rows })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum ColumnRole {
    Answer(u32),
    Technical,
    Target,
    Date,
    Country,
    Gender,
    EnglishNative,
    Unknown,
}

fn item_number(name: &str, suffixes: &[char]) -> Option<u32> {
    let rest = name.strip_prefix('Q')?;
    let last = rest.chars().last()?;
    if !suffixes.contains(&last) {
        return None;
    }
    let digits = &rest[..rest.len() - 1];
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

fn classify_column(name: &str) -> ColumnRole {
    let upper = name.to_ascii_uppercase();
    if let Some(k) = item_number(&upper, &['A']) {
        return ColumnRole::Answer(k);
    }
    if item_number(&upper, &['I', 'E']).is_some() {
        return ColumnRole::Technical;
    }
    match upper.as_str() {
        "IE" => ColumnRole::Target,
        "COUNTRY" => ColumnRole::Country,
        "GENDER" => ColumnRole::Gender,
        "ENGNAT" => ColumnRole::EnglishNative,
        _ if upper.contains("DATE") => ColumnRole::Date,
        _ => ColumnRole::Unknown,
    }
}

/// Frequency encoding for the country column: each code maps to the
/// fraction of fitted rows carrying it. Unseen codes encode as 0.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CountryEncoder {
    frequencies: BTreeMap<String, f64>,
}

impl CountryEncoder {
    pub fn fit<'a, I: IntoIterator<Item = &'a str>>(codes: I) -> Self {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        let mut total = 0usize;
        for c in codes {
            *counts.entry(c.trim().to_string()).or_default() += 1;
            total += 1;
        }
        let frequencies = counts
            .into_iter()
            .map(|(k, v)| (k, v as f64 / total as f64))
            .collect();
        Self { frequencies }
    }

    pub fn encode(&self, code: &str) -> f64 {
        self.frequencies.get(code.trim()).copied().unwrap_or(0.0)
    }

    pub fn levels(&self) -> usize {
        self.frequencies.len()
    }
}

fn small_code(raw: &str) -> f64 {
    raw.trim().parse::<f64>().ok().filter(|v| v.is_finite()).unwrap_or(0.0)
}

/// Encodes (gender, English-native, country) into three numeric features.
/// Gender and English-native pass through as their integer codes; country
/// is frequency-encoded.
pub fn encode_demographics(
    gender_raw: &str,
    english_raw: &str,
    country_raw: &str,
    countries: &CountryEncoder,
) -> [f64; 3] {
    [
        small_code(gender_raw),
        small_code(english_raw),
        countries.encode(country_raw),
    ]
}

/// What preprocessing removed, for audit.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PreprocessReport {
    pub raw_rows: usize,
    pub removed_missing_target: usize,
    pub dropped_technical: usize,
    pub dropped_date: Vec<String>,
    pub dropped_unknown: Vec<String>,
    pub country_levels: usize,
}

#[derive(Clone, Debug)]
pub struct Preprocessed {
    pub dataset: Dataset,
    pub report: PreprocessReport,
    pub countries: CountryEncoder,
}

fn is_missing_target(cell: &str) -> bool {
    let t = cell.trim();
    t.is_empty() || t == "0"
}

fn parse_likert(cell: &str, row: usize, column: &str) -> Result<f64> {
    let t = cell.trim();
    if t.is_empty() {
        return Ok(0.0);
    }
    match t.parse::<i64>() {
        Ok(v) if (0..=5).contains(&v) => Ok(v as f64),
        _ => Err(Error::InvalidCell {
            row,
            column: column.to_string(),
            value: cell.to_string(),
        }),
    }
}

/// Drops technical and date columns, removes rows with a missing target and
/// encodes demographics. Features come out as the answer items in item
/// order followed by `country`, `gender`, `engnat` (those present).
pub fn preprocess(raw: &RawSurveyTable) -> Result<Preprocessed> {
    let roles: Vec<ColumnRole> = raw.header.iter().map(|h| classify_column(h)).collect();
    let target = roles
        .iter()
        .position(|r| *r == ColumnRole::Target)
        .ok_or(Error::MissingTargetColumn)?;
    let mut answers: Vec<(u32, usize)> = roles
        .iter()
        .enumerate()
        .filter_map(|(i, r)| match r {
            ColumnRole::Answer(k) => Some((*k, i)),
            _ => None,
        })
        .collect();
    if answers.is_empty() {
        return Err(Error::MissingAnswerColumns);
    }
    answers.sort_unstable();
    let find = |role: ColumnRole| roles.iter().position(|r| *r == role);
    let country = find(ColumnRole::Country);
    let gender = find(ColumnRole::Gender);
    let engnat = find(ColumnRole::EnglishNative);

    let mut report = PreprocessReport {
        raw_rows: raw.rows.len(),
        ..Default::default()
    };
    for (name, role) in raw.header.iter().zip(&roles) {
        match role {
            ColumnRole::Technical => report.dropped_technical += 1,
            ColumnRole::Date => report.dropped_date.push(name.clone()),
            ColumnRole::Unknown => report.dropped_unknown.push(name.clone()),
            _ => {}
        }
    }
    if !report.dropped_unknown.is_empty() {
        warn!(
            "dropping {} unrecognised columns: {}",
            report.dropped_unknown.len(),
            report.dropped_unknown.join(", ")
        );
    }
    for (label, col) in [("country", country), ("gender", gender), ("engnat", engnat)] {
        if col.is_none() {
            warn!("demographic column `{label}` not found; feature omitted");
        }
    }

    let kept: Vec<&Vec<String>> = raw
        .rows
        .iter()
        .filter(|r| !is_missing_target(&r[target]))
        .collect();
    report.removed_missing_target = raw.rows.len() - kept.len();
    info!(
        "removed {} rows with a missing IE value ({} -> {})",
        report.removed_missing_target,
        raw.rows.len(),
        kept.len()
    );

    let countries = match country {
        Some(c) => CountryEncoder::fit(kept.iter().map(|r| r[c].as_str())),
        None => CountryEncoder::default(),
    };
    report.country_levels = countries.levels();

    let mut features: Vec<FeatureDescriptor> = answers
        .iter()
        .map(|&(k, _)| FeatureDescriptor::likert(format!("Q{k}A")))
        .collect();
    if country.is_some() {
        features.push(FeatureDescriptor::new("country", FeatureKind::DemographicCategorical));
    }
    if gender.is_some() {
        features.push(FeatureDescriptor::new("gender", FeatureKind::DemographicCategorical));
    }
    if engnat.is_some() {
        features.push(FeatureDescriptor::new("engnat", FeatureKind::DemographicBinary));
    }

    let mut class_names: Vec<String> = Vec::new();
    let mut class_index: HashMap<String, usize> = HashMap::new();
    let mut labels = Vec::with_capacity(kept.len());
    let mut matrix = Vec::with_capacity(kept.len() * features.len());
    for (row_no, row) in kept.iter().enumerate() {
        for &(_, col) in &answers {
            matrix.push(parse_likert(&row[col], row_no, &raw.header[col])?);
        }
        let cell = |c: Option<usize>| c.map(|i| row[i].as_str()).unwrap_or("");
        let [g, e, c] = encode_demographics(cell(gender), cell(engnat), cell(country), &countries);
        if country.is_some() {
            matrix.push(c);
        }
        if gender.is_some() {
            matrix.push(g);
        }
        if engnat.is_some() {
            matrix.push(e);
        }
        let code = row[target].trim().to_string();
        let next = class_names.len();
        let idx = *class_index.entry(code.clone()).or_insert_with(|| {
            class_names.push(code);
            next
        });
        labels.push(idx);
    }
    let dataset = Dataset::new(features, matrix, labels, class_names)?;
    Ok(Preprocessed {
        dataset,
        report,
        countries,
    })
}

/// Writes the canonical CSV: feature columns, then `label` (class name),
/// then an optional `synthetic` 0/1 column.
pub fn write_canonical<W: Write>(
    ds: &Dataset,
    synthetic: Option<&[bool]>,
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = ds.feature_names();
    header.push("label".into());
    if synthetic.is_some() {
        header.push("synthetic".into());
    }
    w.write_record(&header)?;
    let mut record: Vec<String> = Vec::with_capacity(header.len());
    for (i, row) in ds.rows().enumerate() {
        record.clear();
        record.extend(row.iter().map(|v| v.to_string()));
        record.push(ds.class_names()[ds.label(i)].clone());
        if let Some(flags) = synthetic {
            record.push(if flags[i] { "1" } else { "0" }.into());
        }
        w.write_record(&record)?;
    }
    w.flush().map_err(|e| Error::io("<output>", e))?;
    Ok(())
}

fn infer_kind(name: &str) -> FeatureKind {
    let upper = name.to_ascii_uppercase();
    if item_number(&upper, &['A']).is_some() {
        FeatureKind::Likert
    } else if upper == "ENGNAT" {
        FeatureKind::DemographicBinary
    } else {
        FeatureKind::DemographicCategorical
    }
}

/// Reads a canonical CSV back. Class indices follow `class_order` when
/// given, otherwise first appearance. A trailing `synthetic` column is
/// ignored.
pub fn read_canonical<R: Read>(input: R, class_order: Option<&[String]>) -> Result<Dataset> {
    let raw = parse_raw(input)?;
    let label_col = raw
        .header
        .iter()
        .position(|h| h == "label")
        .ok_or_else(|| Error::InvalidDataset("canonical CSV lacks a `label` column".into()))?;
    let feature_cols: Vec<usize> = (0..label_col).collect();
    let features = feature_cols
        .iter()
        .map(|&j| FeatureDescriptor::new(raw.header[j].clone(), infer_kind(&raw.header[j])))
        .collect();
    let mut class_names: Vec<String> = class_order.map(<[String]>::to_vec).unwrap_or_default();
    let mut labels = Vec::with_capacity(raw.rows.len());
    let mut matrix = Vec::with_capacity(raw.rows.len() * feature_cols.len());
    for (i, row) in raw.rows.iter().enumerate() {
        for &j in &feature_cols {
            let v: f64 = row[j].trim().parse().map_err(|_| Error::InvalidCell {
                row: i,
                column: raw.header[j].clone(),
                value: row[j].clone(),
            })?;
            matrix.push(v);
        }
        let name = &row[label_col];
        let idx = match class_names.iter().position(|c| c == name) {
            Some(idx) => idx,
            None if class_order.is_some() => {
                return Err(Error::InvalidCell {
                    row: i,
                    column: "label".into(),
                    value: name.clone(),
                })
            }
            None => {
                class_names.push(name.clone());
                class_names.len() - 1
            }
        };
        labels.push(idx);
    }
    Dataset::new(features, matrix, labels, class_names)
}

/// Parameters of the planted-signal generator.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthSpec {
    pub n: usize,
    pub p: usize,
    pub c: usize,
    pub class_proportions: Vec<f64>,
    pub informative_features: Vec<usize>,
    /// Mean shift between adjacent classes on informative items, in Likert units.
    pub effect_size: f64,
    pub seed: u64,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        if self.n == 0 || self.p == 0 {
            return bad("n and p must be positive".into());
        }
        if self.c < 2 {
            return bad(format!("need at least 2 classes, got {}", self.c));
        }
        if self.class_proportions.len() != self.c {
            return bad("class_proportions length must equal c".into());
        }
        if self.class_proportions.iter().any(|&q| !(q >= 0.0)) {
            return bad("class proportions must be non-negative".into());
        }
        let sum: f64 = self.class_proportions.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return bad(format!("class proportions sum to {sum}, not 1"));
        }
        if let Some(&j) = self.informative_features.iter().find(|&&j| j >= self.p) {
            return bad(format!("informative feature {j} outside [0,{})", self.p));
        }
        if !self.effect_size.is_finite() {
            return bad("effect_size must be finite".into());
        }
        Ok(())
    }
}

/// Deterministic survey-like dataset with a linear mean-shift signal on the
/// informative items. Every cell is an integer in 1..=5.
pub fn generate_synthetic(spec: &SynthSpec) -> Result<Dataset> {
    spec.validate()?;
    let quotas: Vec<f64> = spec
        .class_proportions
        .iter()
        .map(|q| q * spec.n as f64)
        .collect();
    let counts = largest_remainder(&quotas, spec.n);
    let mut labels: Vec<usize> = counts
        .iter()
        .enumerate()
        .flat_map(|(class, &k)| std::iter::repeat_n(class, k))
        .collect();
    let mut rng = seed::rng(seed::derive_str(spec.seed, "synth"));
    labels.shuffle(&mut rng);

    let mut informative = vec![false; spec.p];
    for &j in &spec.informative_features {
        informative[j] = true;
    }
    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    let centre = 3.0 - spec.effect_size * (spec.c - 1) as f64 / 2.0;
    let mut matrix = Vec::with_capacity(spec.n * spec.p);
    for &label in &labels {
        for &inf in &informative {
            let v = if inf {
                let latent = centre + spec.effect_size * label as f64 + noise.sample(&mut rng);
                latent.round().clamp(1.0, 5.0)
            } else {
                rng.random_range(1..=5) as f64
            };
            matrix.push(v);
        }
    }
    let features = (1..=spec.p)
        .map(|k| FeatureDescriptor::likert(format!("Q{k}A")))
        .collect();
    let class_names = (0..spec.c).map(|i| format!("{}", i + 1)).collect();
    Dataset::new(features, matrix, labels, class_names)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header_line() -> String {
        let mut cols = Vec::new();
        for k in 1..=3 {
            cols.push(format!("Q{k}A"));
            cols.push(format!("Q{k}I"));
            cols.push(format!("Q{k}E"));
        }
        cols.extend(["country", "dateload", "gender", "engnat", "IE"].map(String::from));
        cols.join("\t")
    }

    fn sample_file() -> String {
        let rows = [
            "5\t1\t900\t4\t2\t800\t3\t3\t700\tUS\t2019-01-01\t1\t1\t1",
            "1\t1\t900\t2\t2\t800\t0\t3\t700\tGB\t2019-01-01\t2\t2\t2",
            "3\t1\t900\t3\t2\t800\t3\t3\t700\tUS\t2019-01-01\t2\t1\t",
            "2\t1\t900\t2\t2\t800\t2\t3\t700\tUS\t2019-01-01\t1\t1\t3",
            "4\t1\t900\t4\t2\t800\t4\t3\t700\tCA\t2019-01-01\t1\t2\t0",
        ];
        format!("{}\n{}\n", header_line(), rows.join("\n"))
    }

    #[test]
    fn parses_tab_separated() {
        let t = parse_raw(sample_file().as_bytes()).unwrap();
        assert_eq!(t.header.len(), 14);
        assert_eq!(t.rows.len(), 5);
        assert_eq!(t.rows[2][13], "");
    }

    #[test]
    fn header_only_and_empty() {
        let t = parse_raw("a,b,IE\n".as_bytes()).unwrap();
        assert!(t.rows.is_empty());
        assert!(matches!(parse_raw("".as_bytes()), Err(Error::EmptyInput)));
    }

    #[test]
    fn short_row_is_malformed() {
        let err = parse_raw("a,b,c\n1,2,3\n1,2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::MalformedRow { line: 3, expected: 3, found: 2 }));
    }

    #[test]
    fn preprocess_drops_technical_date_and_missing_targets() {
        let raw = parse_raw(sample_file().as_bytes()).unwrap();
        let out = preprocess(&raw).unwrap();
        let ds = &out.dataset;
        assert_eq!(ds.n(), 3);
        assert_eq!(out.report.removed_missing_target, 2);
        assert_eq!(out.report.dropped_technical, 6);
        assert_eq!(out.report.dropped_date, vec!["dateload".to_string()]);
        assert_eq!(
            ds.feature_names(),
            vec!["Q1A", "Q2A", "Q3A", "country", "gender", "engnat"]
        );
        assert_eq!(ds.class_names(), &["1", "2", "3"]);
        // country frequency among the 3 kept rows: US twice, GB once
        assert!((ds.value(0, 3) - 2.0 / 3.0).abs() < 1e-12);
        assert!((ds.value(1, 3) - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(ds.row(1)[2], 0.0);
    }

    #[test]
    fn all_targets_missing_gives_empty_dataset() {
        let text = "Q1A,IE\n3,\n4,0\n";
        let out = preprocess(&parse_raw(text.as_bytes()).unwrap()).unwrap();
        assert_eq!(out.dataset.n(), 0);
        assert_eq!(out.report.removed_missing_target, 2);
    }

    #[test]
    fn preprocess_errors() {
        let no_target = parse_raw("Q1A,Q1I\n1,2\n".as_bytes()).unwrap();
        assert!(matches!(preprocess(&no_target), Err(Error::MissingTargetColumn)));
        let no_items = parse_raw("country,IE\nUS,1\n".as_bytes()).unwrap();
        assert!(matches!(preprocess(&no_items), Err(Error::MissingAnswerColumns)));
        let bad = parse_raw("Q1A,IE\n7,1\n2,2\n".as_bytes()).unwrap();
        assert!(matches!(preprocess(&bad), Err(Error::InvalidCell { .. })));
    }

    #[test]
    fn country_encoding() {
        let enc = CountryEncoder::fit(["US", "US", "GB", "DE"]);
        assert_eq!(enc.encode("US"), 0.5);
        assert_eq!(enc.encode("DE"), 0.25);
        assert_eq!(enc.encode("FR"), 0.0);
        assert_eq!(encode_demographics("2", "1", "GB", &enc), [2.0, 1.0, 0.25]);
    }

    #[test]
    fn canonical_round_trip() {
        let raw = parse_raw(sample_file().as_bytes()).unwrap();
        let ds = preprocess(&raw).unwrap().dataset;
        let mut buf = Vec::new();
        write_canonical(&ds, None, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("Q1A,Q2A,Q3A,country,gender,engnat,label\n"));
        let back = read_canonical(buf.as_slice(), Some(ds.class_names())).unwrap();
        assert_eq!(back, ds);
    }

    fn spec(n: usize, props: Vec<f64>, effect: f64, seed: u64) -> SynthSpec {
        SynthSpec {
            n,
            p: 6,
            c: props.len(),
            class_proportions: props,
            informative_features: vec![0, 1],
            effect_size: effect,
            seed,
        }
    }

    #[test]
    fn synthetic_counts_and_determinism() {
        let s = spec(1000, vec![0.6, 0.3, 0.1], 1.0, 3);
        let a = generate_synthetic(&s).unwrap();
        assert_eq!(a.class_distribution().counts, vec![600, 300, 100]);
        assert_eq!(a, generate_synthetic(&s).unwrap());
        assert!(a.matrix().iter().all(|&v| (1.0..=5.0).contains(&v) && v.fract() == 0.0));
        let b = generate_synthetic(&SynthSpec { seed: 4, ..s }).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn synthetic_rejects_bad_specs() {
        assert!(generate_synthetic(&spec(10, vec![0.5, 0.6], 1.0, 0)).is_err());
        assert!(generate_synthetic(&spec(10, vec![1.0], 1.0, 0)).is_err());
        let mut s = spec(10, vec![0.5, 0.5], 1.0, 0);
        s.informative_features = vec![6];
        assert!(matches!(generate_synthetic(&s), Err(Error::InvalidSpec(_))));
    }
}
