//! Small order statistics shared by the estimators.

/// Lower nearest-rank quantile: the ⌊q·(N−1)⌋-th smallest value.
/// NaN sorts last; an empty slice gives NaN.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let idx = ((q.clamp(0.0, 1.0) * (v.len() - 1) as f64).floor() as usize).min(v.len() - 1);
    v[idx]
}

pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

/// Whether two successive estimates agree within a relative tolerance.
pub fn agree(prev: f64, last: f64, rel_tol: f64) -> bool {
    if prev == last {
        return true;
    }
    if !prev.is_finite() || !last.is_finite() {
        return false;
    }
    (last - prev).abs() <= rel_tol * prev.abs().max(last.abs())
}

/// Slope of the least-squares line through (x_i, y_i), with y centered on
/// its first value so constant data gives exactly 0.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    if x.len() < 2 {
        return f64::NAN;
    }
    let y0 = y[0];
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().map(|v| v - y0).sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - y0 - my);
        sxx += (a - mx) * (a - mx);
    }
    if sxy == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}
