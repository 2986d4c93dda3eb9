//! Greedy binary decision trees on axis-aligned thresholds.
//!
//! Shared by the classifier wrapper, the random forest (Gini criterion) and
//! gradient boosting (squared-error criterion). Features are pre-binned into
//! their sorted distinct values, so the split search at a node is a single
//! pass over a per-bin histogram; candidate thresholds are midpoints between
//! consecutive values present in the node, exactly as with a sort-based
//! search.

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::seed::Rng;
use crate::util::argmax;

/// Minimum per-row impurity decrease for a split to be kept.
pub const MIN_GAIN: f64 = 1e-12;

/// Column-wise bin codes for a row-major matrix.
#[derive(Clone, Debug)]
pub struct Binned {
    n: usize,
    /// Sorted distinct values per feature.
    values: Vec<Vec<f64>>,
    /// `codes[f][row]` indexes `values[f]`.
    codes: Vec<Vec<u32>>,
}

impl Binned {
    pub fn new(matrix: &[f64], p: usize) -> Self {
        let n = matrix.len().checked_div(p).unwrap_or(0);
        let mut values = Vec::with_capacity(p);
        let mut codes = Vec::with_capacity(p);
        for f in 0..p {
            let column: Vec<f64> = (0..n).map(|i| matrix[i * p + f]).collect();
            let mut distinct = column.clone();
            distinct.sort_by(f64::total_cmp);
            distinct.dedup();
            let col_codes = column
                .iter()
                .map(|v| distinct.partition_point(|d| d < v) as u32)
                .collect();
            values.push(distinct);
            codes.push(col_codes);
        }
        Self { n, values, codes }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.values.len()
    }
}

/// What a tree is fitted to.
#[derive(Clone, Copy, Debug)]
pub enum Target<'a> {
    /// Class labels in `0..n_classes`; Gini impurity.
    Classes { labels: &'a [usize], n_classes: usize },
    /// Real responses; squared error.
    Values(&'a [f64]),
}

impl Target<'_> {
    fn width(&self) -> usize {
        match self {
            Target::Classes { n_classes, .. } => *n_classes,
            Target::Values(_) => 2,
        }
    }

    fn add(&self, stats: &mut [f64], row: usize) {
        match self {
            Target::Classes { labels, .. } => stats[labels[row]] += 1.0,
            Target::Values(y) => {
                stats[0] += y[row];
                stats[1] += 1.0;
            }
        }
    }

    fn count(&self, stats: &[f64]) -> f64 {
        match self {
            Target::Classes { .. } => stats.iter().sum(),
            Target::Values(_) => stats[1],
        }
    }

    /// Only class nodes can be recognised as pure from their stats.
    fn is_pure(&self, stats: &[f64]) -> bool {
        match self {
            Target::Classes { .. } => self.cost(stats) <= 0.0,
            Target::Values(_) => false,
        }
    }

    /// Node cost whose decrease is the split gain: `n * gini` for classes,
    /// `-(sum y)^2 / n` for values (SSE up to a constant).
    fn cost(&self, stats: &[f64]) -> f64 {
        let n = self.count(stats);
        if n == 0.0 {
            return 0.0;
        }
        match self {
            Target::Classes { .. } => n - stats.iter().map(|c| c * c).sum::<f64>() / n,
            Target::Values(_) => -stats[0] * stats[0] / n,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// Root has depth 0; `None` grows until nodes are pure or too small.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// Features examined per split; `None` examines all of them.
    pub mtry: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_leaf: 1,
            mtry: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf(Vec<f64>),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    /// Leaf payload reached by `x`: class proportions for classification
    /// trees, whatever the leaf function produced for regression trees.
    pub fn leaf(&self, x: &[f64]) -> &[f64] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf(v) => return v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf(_))).count()
    }

    /// Features used by at least one split.
    pub fn split_features(&self) -> Vec<usize> {
        let mut f: Vec<usize> = self
            .nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf(_) => None,
            })
            .collect();
        f.sort_unstable();
        f.dedup();
        f
    }
}

struct BestSplit {
    gain: f64,
    feature: usize,
    /// Last bin code sent left.
    code: u32,
    threshold: f64,
}

/// Grows one tree over `rows` (duplicates act as weights).
pub struct TreeGrower<'a, L> {
    binned: &'a Binned,
    target: Target<'a>,
    params: TreeParams,
    leaf_value: L,
    nodes: Vec<Node>,
    importance: Vec<f64>,
    width: usize,
}

impl<'a, L> TreeGrower<'a, L>
where
    L: FnMut(&[usize], &[f64]) -> Vec<f64>,
{
    /// `leaf_value` receives the rows of a leaf and their accumulated stats
    /// and returns the payload stored in that leaf.
    pub fn new(binned: &'a Binned, target: Target<'a>, params: TreeParams, leaf_value: L) -> Self {
        Self {
            binned,
            target,
            params,
            leaf_value,
            nodes: Vec::new(),
            importance: vec![0.0; binned.p()],
            width: target.width(),
        }
    }

    /// Returns the tree and the per-feature impurity decrease it realised.
    pub fn grow(mut self, rows: &mut [usize], mut rng: Option<&mut Rng>) -> (Tree, Vec<f64>) {
        self.nodes.push(Node::Leaf(Vec::new()));
        let mut stats = vec![0.0; self.width];
        for &r in rows.iter() {
            self.target.add(&mut stats, r);
        }
        self.build(0, rows, stats, 0, &mut rng);
        (Tree { nodes: self.nodes }, self.importance)
    }

    fn build(
        &mut self,
        slot: usize,
        rows: &mut [usize],
        stats: Vec<f64>,
        depth: usize,
        rng: &mut Option<&mut Rng>,
    ) {
        let n = rows.len();
        let parent_cost = self.target.cost(&stats);
        let can_split = n >= 2 * self.params.min_leaf.max(1)
            && self.params.max_depth.is_none_or(|d| depth < d)
            && !self.target.is_pure(&stats);
        let best = if can_split {
            self.find_split(rows, &stats, parent_cost, rng)
        } else {
            None
        };
        let Some(best) = best else {
            self.nodes[slot] = Node::Leaf((self.leaf_value)(rows, &stats));
            return;
        };
        self.importance[best.feature] += best.gain;
        let codes = &self.binned.codes[best.feature];
        let mut split_at = 0;
        for i in 0..n {
            if codes[rows[i]] <= best.code {
                rows.swap(i, split_at);
                split_at += 1;
            }
        }
        let (left_rows, right_rows) = rows.split_at_mut(split_at);
        let mut left_stats = vec![0.0; self.width];
        for &r in left_rows.iter() {
            self.target.add(&mut left_stats, r);
        }
        let right_stats: Vec<f64> = stats.iter().zip(&left_stats).map(|(a, b)| a - b).collect();
        let left = self.nodes.len();
        self.nodes.push(Node::Leaf(Vec::new()));
        let right = self.nodes.len();
        self.nodes.push(Node::Leaf(Vec::new()));
        self.nodes[slot] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        self.build(left, left_rows, left_stats, depth + 1, rng);
        self.build(right, right_rows, right_stats, depth + 1, rng);
    }

    fn candidate_features(&self, rng: &mut Option<&mut Rng>) -> Vec<usize> {
        let p = self.binned.p();
        match (self.params.mtry, rng.as_deref_mut()) {
            (Some(m), Some(rng)) if m < p => {
                let mut f = sample(rng, p, m).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..p).collect(),
        }
    }

    fn find_split(
        &self,
        rows: &[usize],
        stats: &[f64],
        parent_cost: f64,
        rng: &mut Option<&mut Rng>,
    ) -> Option<BestSplit> {
        let n = rows.len() as f64;
        let w = self.width;
        let min_leaf = self.params.min_leaf.max(1) as f64;
        let mut best: Option<BestSplit> = None;
        let mut left = vec![0.0; w];
        let mut right = vec![0.0; w];
        for feature in self.candidate_features(rng) {
            let codes = &self.binned.codes[feature];
            let values = &self.binned.values[feature];
            // (code, per-bin stats) for bins present in this node, ascending
            let bins = self.histogram(rows, codes, values.len());
            if bins.len() < 2 {
                continue;
            }
            left.iter_mut().for_each(|v| *v = 0.0);
            for pair in bins.windows(2) {
                let (code, ref bin_stats) = pair[0];
                for (l, b) in left.iter_mut().zip(bin_stats) {
                    *l += b;
                }
                for ((r, s), l) in right.iter_mut().zip(stats).zip(&left) {
                    *r = s - l;
                }
                if self.target.count(&left) < min_leaf || self.target.count(&right) < min_leaf {
                    continue;
                }
                let gain = parent_cost - self.target.cost(&left) - self.target.cost(&right);
                if gain / n <= MIN_GAIN {
                    continue;
                }
                if best.as_ref().is_none_or(|b| gain > b.gain) {
                    let lo = values[code as usize];
                    let hi = values[pair[1].0 as usize];
                    let mut threshold = lo + (hi - lo) / 2.0;
                    if threshold >= hi {
                        threshold = lo;
                    }
                    best = Some(BestSplit {
                        gain,
                        feature,
                        code,
                        threshold,
                    });
                }
            }
        }
        best
    }

    fn histogram(&self, rows: &[usize], codes: &[u32], n_bins: usize) -> Vec<(u32, Vec<f64>)> {
        let w = self.width;
        if rows.len() * 4 < n_bins {
            let mut sorted: Vec<usize> = rows.to_vec();
            sorted.sort_unstable_by_key(|&r| codes[r]);
            let mut out: Vec<(u32, Vec<f64>)> = Vec::new();
            for r in sorted {
                let c = codes[r];
                if out.last().is_none_or(|(lc, _)| *lc != c) {
                    out.push((c, vec![0.0; w]));
                }
                self.target.add(&mut out.last_mut().expect("pushed").1, r);
            }
            out
        } else {
            let mut hist = vec![0.0; n_bins * w];
            let mut present = vec![false; n_bins];
            for &r in rows {
                let c = codes[r] as usize;
                present[c] = true;
                self.target.add(&mut hist[c * w..(c + 1) * w], r);
            }
            present
                .iter()
                .enumerate()
                .filter(|(_, &p)| p)
                .map(|(c, _)| (c as u32, hist[c * w..(c + 1) * w].to_vec()))
                .collect()
        }
    }
}

/// Gini impurity of a count vector.
pub fn gini(counts: &[f64]) -> f64 {
    let n: f64 = counts.iter().sum();
    if n == 0.0 {
        return 0.0;
    }
    1.0 - counts.iter().map(|c| (c / n) * (c / n)).sum::<f64>()
}

/// Leaf payload for classification trees: class proportions.
pub fn class_proportions(_rows: &[usize], stats: &[f64]) -> Vec<f64> {
    let n: f64 = stats.iter().sum();
    stats.iter().map(|c| c / n).collect()
}

/// Standalone classification tree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CartModel {
    pub(crate) tree: Tree,
    pub(crate) n_classes: usize,
    pub(crate) importance: Vec<f64>,
}

impl CartModel {
    pub fn fit(matrix: &[f64], p: usize, labels: &[usize], n_classes: usize, params: TreeParams) -> Self {
        let binned = Binned::new(matrix, p);
        let mut rows: Vec<usize> = (0..binned.n()).collect();
        let target = Target::Classes { labels, n_classes };
        let (tree, importance) =
            TreeGrower::new(&binned, target, TreeParams { mtry: None, ..params }, class_proportions)
                .grow(&mut rows, None);
        Self {
            tree,
            n_classes,
            importance,
        }
    }

    pub fn tree(&self) -> &Tree {
        &self.tree
    }

    pub fn proba(&self, x: &[f64]) -> Vec<f64> {
        self.tree.leaf(x).to_vec()
    }

    pub fn predict_one(&self, x: &[f64]) -> usize {
        argmax(self.tree.leaf(x))
    }
}
