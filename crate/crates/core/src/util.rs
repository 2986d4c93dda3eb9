//! Small numeric helpers used across modules.

/// Hamilton (largest-remainder) apportionment of `total` units according to
/// non-negative `quotas`. Each entry receives its floor plus at most one
/// extra unit; extras go to the largest fractional parts, ties to the lowest
/// index. Quotas are expected to sum to roughly `total`.
pub fn largest_remainder(quotas: &[f64], total: usize) -> Vec<usize> {
    let mut alloc: Vec<usize> = quotas.iter().map(|q| q.max(0.0).floor() as usize).collect();
    let assigned: usize = alloc.iter().sum();
    if assigned >= total {
        return alloc;
    }
    let mut order: Vec<usize> = (0..quotas.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = quotas[a].max(0.0) - quotas[a].max(0.0).floor();
        let fb = quotas[b].max(0.0) - quotas[b].max(0.0).floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &i in order.iter().cycle().take(total - assigned) {
        alloc[i] += 1;
    }
    alloc
}

/// Mean and sample (n-1) standard deviation; sd is 0 for a single value.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    (mean, (ss / (n - 1) as f64).sqrt())
}

/// Index of the largest value; ties resolve to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn apportionment_hits_total() {
        assert_eq!(largest_remainder(&[600.0, 300.0, 100.0], 1000), vec![600, 300, 100]);
        assert_eq!(largest_remainder(&[2.5, 2.5], 5), vec![3, 2]);
        assert_eq!(largest_remainder(&[0.4, 0.4, 0.2], 1), vec![1, 0, 0]);
        let q = [1.7, 0.2, 3.1];
        assert_eq!(largest_remainder(&q, 5).iter().sum::<usize>(), 5);
    }

    #[test]
    fn sample_sd() {
        let (m, s) = mean_sd(&[0.5, 0.7]);
        assert!((m - 0.6).abs() < 1e-12);
        assert!((s - 0.141_421_356_237_309_5).abs() < 1e-12);
        assert_eq!(mean_sd(&[0.3]), (0.3, 0.0));
    }

    #[test]
    fn argmax_prefers_lowest_index() {
        assert_eq!(argmax(&[0.2, 0.4, 0.4]), 1);
    }
}
