//! Small numerical helpers shared by the solvers.

/// Sums values in ascending order.
///
/// The result depends only on the multiset of inputs, so permuting the
/// modes (for example relabelling L and R) leaves every reduction bitwise
/// unchanged.
pub fn ordered_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut v: Vec<f64> = values.into_iter().collect();
    v.sort_by(f64::total_cmp);
    v.iter().sum()
}

/// Maximum of a sequence, `0.0` when empty. NaN propagates.
pub fn max_of<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values
        .into_iter()
        .reduce(|acc, x| if x.is_nan() || acc.is_nan() { f64::NAN } else { acc.max(x) })
        .unwrap_or(0.0)
}

/// `n` points from `start` to `stop` inclusive, evenly spaced.
/// Grids symmetric about zero come out exactly antisymmetric.
pub fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            // Weighted form keeps grids symmetric about zero exactly.
            let m = (n - 1) as f64;
            (0..n)
                .map(|i| (start * (m - i as f64) + stop * i as f64) / m)
                .collect()
        }
    }
}

/// `n` points from `start` to `stop` inclusive, evenly spaced in log.
pub fn logspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    let (a, b) = (start.ln(), stop.ln());
    linspace(a, b, n)
        .into_iter()
        .enumerate()
        .map(|(i, x)| match i {
            0 => start,
            _ if i == n - 1 => stop,
            _ => x.exp(),
        })
        .collect()
}
