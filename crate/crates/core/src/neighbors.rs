//! Exact brute-force nearest-neighbour search (Euclidean).
//!
//! Ordering is by (squared distance, row index), so equidistant candidates
//! resolve to the lower row index.

use crate::error::{Error, Result};
use crate::util::squared_euclidean;

/// The `k` accepted rows closest to `point` as (squared distance, row),
/// nearest first. Returns fewer than `k` only when fewer rows are accepted.
pub fn nearest<F>(matrix: &[f64], p: usize, point: &[f64], k: usize, accept: F) -> Vec<(f64, usize)>
where
    F: Fn(usize) -> bool,
{
    let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
    if k == 0 {
        return best;
    }
    for (i, row) in matrix.chunks_exact(p).enumerate() {
        if !accept(i) {
            continue;
        }
        let d = squared_euclidean(point, row);
        if best.len() == k && d >= best[k - 1].0 {
            // equal distance never displaces: the incumbent has a lower index
            continue;
        }
        let pos = best.partition_point(|&(bd, _)| bd <= d);
        best.insert(pos, (d, i));
        best.truncate(k);
    }
    best
}

/// Neighbour lookup over the rows of a row-major matrix.
#[derive(Clone, Copy, Debug)]
pub struct KnnIndex<'a> {
    matrix: &'a [f64],
    p: usize,
}

impl<'a> KnnIndex<'a> {
    pub fn new(matrix: &'a [f64], p: usize) -> Result<Self> {
        let n = matrix.len().checked_div(p).unwrap_or(0);
        if n < 2 {
            return Err(Error::InvalidDataset(format!(
                "neighbour index needs at least 2 rows, got {n}"
            )));
        }
        Ok(Self { matrix, p })
    }

    pub fn n(&self) -> usize {
        self.matrix.len() / self.p
    }

    pub fn row(&self, i: usize) -> &'a [f64] {
        &self.matrix[i * self.p..(i + 1) * self.p]
    }

    /// `k` nearest rows to an arbitrary point among rows passing `accept`.
    pub fn query<F>(&self, point: &[f64], k: usize, accept: F) -> Result<Vec<usize>>
    where
        F: Fn(usize) -> bool,
    {
        let found = nearest(self.matrix, self.p, point, k, accept);
        if found.len() < k {
            return Err(Error::KTooLarge {
                k,
                available: found.len(),
            });
        }
        Ok(found.into_iter().map(|(_, i)| i).collect())
    }

    /// `k` nearest rows to row `i`, excluding `i` itself, optionally only
    /// rows whose label equals `class`.
    pub fn query_row(
        &self,
        i: usize,
        k: usize,
        class: Option<(&[usize], usize)>,
    ) -> Result<Vec<usize>> {
        match class {
            Some((labels, c)) => self.query(self.row(i), k, |j| j != i && labels[j] == c),
            None => self.query(self.row(i), k, |j| j != i),
        }
    }
}
