//! Random forest: bagged Gini trees with per-split feature subsampling.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cart::{class_proportions, Binned, Target, Tree, TreeGrower, TreeParams};
use crate::seed;
use crate::util::argmax;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RfParams {
    pub n_trees: usize,
    /// Features tried per split; `None` means `floor(sqrt(p))`.
    pub mtry: Option<usize>,
    pub bootstrap: bool,
    pub min_leaf: usize,
    pub max_depth: Option<usize>,
}

impl Default for RfParams {
    fn default() -> Self {
        Self {
            n_trees: 500,
            mtry: None,
            bootstrap: true,
            min_leaf: 1,
            max_depth: None,
        }
    }
}

impl RfParams {
    pub fn resolved_mtry(&self, p: usize) -> usize {
        self.mtry
            .unwrap_or_else(|| (p as f64).sqrt().floor() as usize)
            .clamp(1, p.max(1))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    trees: Vec<Tree>,
    n_classes: usize,
    importance: Vec<f64>,
}

impl RandomForest {
    pub fn fit(
        matrix: &[f64],
        p: usize,
        labels: &[usize],
        n_classes: usize,
        params: &RfParams,
        seed: u64,
    ) -> Self {
        let binned = Binned::new(matrix, p);
        let n = binned.n();
        let tree_params = TreeParams {
            max_depth: params.max_depth,
            min_leaf: params.min_leaf,
            mtry: Some(params.resolved_mtry(p)),
        };
        let target = Target::Classes { labels, n_classes };
        let grown: Vec<(Tree, Vec<f64>)> = (0..params.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = seed::rng(seed::derive(seed::derive_str(seed, "tree"), t as u64));
                let mut rows: Vec<usize> = if params.bootstrap {
                    (0..n).map(|_| rng.random_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                TreeGrower::new(&binned, target, tree_params, class_proportions)
                    .grow(&mut rows, Some(&mut rng))
            })
            .collect();
        let mut importance = vec![0.0; p];
        let mut trees = Vec::with_capacity(grown.len());
        for (tree, imp) in grown {
            for (a, b) in importance.iter_mut().zip(&imp) {
                *a += b;
            }
            trees.push(tree);
        }
        Self {
            trees,
            n_classes,
            importance,
        }
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    /// Vote fractions over trees.
    pub fn proba(&self, x: &[f64]) -> Vec<f64> {
        let mut votes = vec![0.0; self.n_classes];
        for tree in &self.trees {
            votes[argmax(tree.leaf(x))] += 1.0;
        }
        let total = self.trees.len().max(1) as f64;
        votes.iter_mut().for_each(|v| *v /= total);
        votes
    }

    /// Total Gini decrease per feature, summed over trees.
    pub fn importance(&self) -> &[f64] {
        &self.importance
    }
}
