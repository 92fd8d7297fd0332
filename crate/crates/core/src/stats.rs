//! Small statistical helpers shared across the estimation modules.

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("singular linear system")]
    Singular,
    #[error("invalid degrees of freedom: {0}")]
    BadDof(f64),
    #[error("design matrix is rank deficient")]
    RankDeficient,
    #[error("need at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },
}

/// Upper tail of the χ² distribution, P(X ≥ x).
pub fn chi2_sf(x: f64, dof: f64) -> Result<f64, StatsError> {
    if !(dof > 0.0) {
        return Err(StatsError::BadDof(dof));
    }
    let dist = ChiSquared::new(dof).map_err(|_| StatsError::BadDof(dof))?;
    Ok(dist.sf(x.max(0.0)))
}

/// Standard normal quantile Φ⁻¹(q).
pub fn normal_quantile(q: f64) -> f64 {
    if q <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if q >= 1.0 {
        return f64::INFINITY;
    }
    Normal::standard().inverse_cdf(q)
}

/// Standard normal CDF Φ(x).
pub fn normal_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

/// One-sample Kolmogorov–Smirnov statistic against U(0, 1).
pub fn ks_uniform(samples: &[f64]) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let lo = (x - i as f64 / n).abs();
            let hi = ((i as f64 + 1.0) / n - x).abs();
            lo.max(hi)
        })
        .fold(0.0, f64::max)
}

/// Solve a 3×3 linear system by Gaussian elimination with partial pivoting.
pub fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Result<[f64; 3], StatsError> {
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        if a[pivot][col].abs() < 1e-300 {
            return Err(StatsError::Singular);
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in (col + 1)..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let mut acc = b[row];
        for k in (row + 1)..3 {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Ok(x)
}

/// Weighted least-squares line y = slope·x + intercept.
/// Weights are 1/σ² (uniform when `sigmas` is `None`).
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub intercept_se: f64,
    pub residual_rms: f64,
}

pub fn weighted_line_fit(
    x: &[f64],
    y: &[f64],
    sigmas: Option<&[f64]>,
) -> Result<LineFit, StatsError> {
    let n = x.len();
    if n < 2 {
        return Err(StatsError::TooFewPoints { need: 2, got: n });
    }
    let w: Vec<f64> = match sigmas {
        Some(s) => s.iter().map(|si| 1.0 / (si * si)).collect(),
        None => vec![1.0; n],
    };
    let sw: f64 = w.iter().sum();
    let swx: f64 = w.iter().zip(x).map(|(wi, xi)| wi * xi).sum();
    let swy: f64 = w.iter().zip(y).map(|(wi, yi)| wi * yi).sum();
    let swxx: f64 = w.iter().zip(x).map(|(wi, xi)| wi * xi * xi).sum();
    let swxy: f64 = w
        .iter()
        .zip(x)
        .zip(y)
        .map(|((wi, xi), yi)| wi * xi * yi)
        .sum();
    let det = sw * swxx - swx * swx;
    let xspread = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |acc, &v| {
        (acc.0.min(v), acc.1.max(v))
    });
    if det.abs() < 1e-300 || xspread.0 == xspread.1 {
        return Err(StatsError::RankDeficient);
    }
    let slope = (sw * swxy - swx * swy) / det;
    let intercept = (swxx * swy - swx * swxy) / det;
    let mut chi2 = 0.0;
    for i in 0..n {
        let r = y[i] - slope * x[i] - intercept;
        chi2 += w[i] * r * r;
    }
    // scale parameter errors by the reduced chi-square when no sigmas given
    let scale = if sigmas.is_some() || n <= 2 {
        1.0
    } else {
        (chi2 / (n as f64 - 2.0)).max(0.0)
    };
    let slope_var = sw / det * if sigmas.is_some() { 1.0 } else { scale };
    let intercept_var = swxx / det * if sigmas.is_some() { 1.0 } else { scale };
    Ok(LineFit {
        slope,
        intercept,
        slope_se: slope_var.max(0.0).sqrt(),
        intercept_se: intercept_var.max(0.0).sqrt(),
        residual_rms: (chi2 / n as f64).sqrt(),
    })
}

/// Empirical quantile by linear interpolation of the order statistics.
pub fn quantile(samples: &[f64], q: f64) -> f64 {
    assert!(!samples.is_empty());
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let f = pos - lo as f64;
        sorted[lo] * (1.0 - f) + sorted[hi] * f
    }
}

/// Central 68% interval (16th and 84th percentiles).
pub fn central_68(samples: &[f64]) -> (f64, f64) {
    (quantile(samples, 0.16), quantile(samples, 0.84))
}
