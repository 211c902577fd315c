//! Small least-squares and extrapolation helpers shared by the classifiers.

/// `n` points spaced evenly in log between `lo` and `hi` (inclusive).
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (llo + (lhi - llo) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Straight-line least-squares fit `y ≈ intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    pub intercept_stderr: f64,
    pub slope_stderr: f64,
    pub r_squared: f64,
    /// Weighted residual sum of squares (chi-square when weights are 1/σ²).
    pub chi2: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> LinearFit {
    let w = vec![1.0; xs.len()];
    weighted_linear_fit(xs, ys, &w)
}

/// Weighted fit; `weights` are 1/σ² when the points carry standard errors.
pub fn weighted_linear_fit(xs: &[f64], ys: &[f64], weights: &[f64]) -> LinearFit {
    assert_eq!(xs.len(), ys.len());
    assert_eq!(xs.len(), weights.len());
    let sw: f64 = weights.iter().sum();
    let sx: f64 = xs.iter().zip(weights).map(|(x, w)| w * x).sum();
    let sy: f64 = ys.iter().zip(weights).map(|(y, w)| w * y).sum();
    let mx = sx / sw;
    let my = sy / sw;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for ((x, y), w) in xs.iter().zip(ys).zip(weights) {
        sxx += w * (x - mx) * (x - mx);
        sxy += w * (x - mx) * (y - my);
        syy += w * (y - my) * (y - my);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let chi2: f64 = xs
        .iter()
        .zip(ys)
        .zip(weights)
        .map(|((x, y), w)| w * (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - chi2 / syy } else { 1.0 };
    // With weights = 1/σ² the parameter covariance is the inverse normal matrix.
    let slope_var = if sxx > 0.0 { 1.0 / sxx } else { f64::INFINITY };
    let intercept_var = 1.0 / sw + mx * mx * slope_var;
    LinearFit {
        intercept,
        slope,
        intercept_stderr: intercept_var.sqrt(),
        slope_stderr: slope_var.sqrt(),
        r_squared,
        chi2,
    }
}

/// Log-log fit of `|y| ≈ A·x^p`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerFit {
    pub exponent: f64,
    pub r_squared: f64,
    /// Every sample was exactly zero.
    pub all_zero: bool,
    /// Some, but not all, samples were zero; no fit is possible.
    pub mixed_zero: bool,
    /// Slopes between consecutive samples in log-log coordinates.
    pub local_slopes: Vec<f64>,
}

impl PowerFit {
    /// A definite fit in the sense of the classifiers (R² ≥ 0.999).
    pub fn is_definite(&self) -> bool {
        !self.all_zero && !self.mixed_zero && self.exponent.is_finite() && self.r_squared >= 0.999
    }
}

pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> PowerFit {
    let zeros = ys.iter().filter(|y| **y == 0.0).count();
    let non_finite = ys.iter().any(|y| !y.is_finite());
    if zeros == ys.len() {
        return PowerFit {
            exponent: f64::NEG_INFINITY,
            r_squared: 1.0,
            all_zero: true,
            mixed_zero: false,
            local_slopes: Vec::new(),
        };
    }
    if zeros > 0 || non_finite {
        return PowerFit {
            exponent: f64::NAN,
            r_squared: 0.0,
            all_zero: false,
            mixed_zero: zeros > 0,
            local_slopes: Vec::new(),
        };
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.abs().ln()).collect();
    let fit = linear_fit(&lx, &ly);
    let local_slopes = lx
        .windows(2)
        .zip(ly.windows(2))
        .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
        .collect();
    PowerFit {
        exponent: fit.slope,
        r_squared: fit.r_squared,
        all_zero: false,
        mixed_zero: false,
        local_slopes,
    }
}

/// Polynomial (Neville) extrapolation of `ys(xs)` to `x = 0`.
///
/// Returns the extrapolated value and the difference between the two
/// highest-order estimates as an error indicator.
pub fn extrapolate_to_zero(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    assert!(n >= 1);
    if n == 1 {
        return (ys[0], f64::INFINITY);
    }
    let mut p = ys.to_vec();
    let mut previous = (p[0], p[1]);
    for k in 1..n {
        previous = (p[0], p[1]);
        for i in 0..n - k {
            // Value at 0 of the interpolant through points i..=i+k.
            p[i] = (xs[i + k] * p[i] - xs[i] * p[i + 1]) / (xs[i + k] - xs[i]);
        }
    }
    let value = p[0];
    let err = (value - previous.0).abs().max((value - previous.1).abs());
    (value, err)
}

/// Ordinary least squares `y ≈ Σ_j c_j·column_j`.
///
/// Returns the coefficients and their standard errors, or `None` when the
/// columns are degenerate or there are no residual degrees of freedom.
pub fn least_squares(columns: &[Vec<f64>], ys: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
    let p = columns.len();
    let n = ys.len();
    if p == 0 || n <= p || columns.iter().any(|c| c.len() != n) {
        return None;
    }
    let scales: Vec<f64> = columns.iter().map(|c| c.iter().fold(0.0, |m: f64, v| m.max(v.abs()))).collect();
    if scales.iter().any(|s| *s == 0.0) {
        return None;
    }
    let x = |j: usize, i: usize| columns[j][i] / scales[j];
    // Augmented normal equations [XᵀX | Xᵀy | I].
    let width = 2 * p + 1;
    let mut m = vec![vec![0.0; width]; p];
    for r in 0..p {
        for c in 0..p {
            m[r][c] = (0..n).map(|i| x(r, i) * x(c, i)).sum();
        }
        m[r][p] = (0..n).map(|i| x(r, i) * ys[i]).sum();
        m[r][p + 1 + r] = 1.0;
    }
    for col in 0..p {
        let pivot = (col..p).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[pivot][col].abs() < 1e-14 {
            return None;
        }
        m.swap(col, pivot);
        let d = m[col][col];
        m[col].iter_mut().for_each(|v| *v /= d);
        for r in 0..p {
            if r != col {
                let f = m[r][col];
                let pivot_row = m[col].clone();
                m[r].iter_mut().zip(pivot_row).for_each(|(v, pv)| *v -= f * pv);
            }
        }
    }
    let scaled: Vec<f64> = (0..p).map(|j| m[j][p]).collect();
    let rss: f64 = (0..n)
        .map(|i| (ys[i] - (0..p).map(|j| scaled[j] * x(j, i)).sum::<f64>()).powi(2))
        .sum();
    let sigma2 = rss / (n - p) as f64;
    let coefficients = (0..p).map(|j| scaled[j] / scales[j]).collect();
    let stderr = (0..p).map(|j| (sigma2 * m[j][p + 1 + j]).max(0.0).sqrt() / scales[j]).collect();
    Some((coefficients, stderr))
}
