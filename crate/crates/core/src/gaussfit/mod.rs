//! Gaussian-ansatz estimation of the phase-space distribution from homodyne
//! samples, goodness-of-fit validation by G-test, and posterior uncertainty
//! by Metropolis–Hastings MCMC.
//!
//! The model: a sample at phase φ is normal with mean
//! M(Θ, φ) = −μ_z1 sinφ + μ_p1 cosφ and variance
//! V(Θ, φ) = A + B_c cos2φ + B_s sin2φ, which is the quadrature marginal of
//! the phase-space Gaussian with covariance
//! Σ = [[A − B_c, −B_s], [−B_s, A + B_c]]. Positive definiteness is the
//! constraint A > √(B_c² + B_s²).

mod gtest;
mod mcmc;

pub use gtest::{g_test, GTestReport, LumpedPhase};
pub use mcmc::{run_mcmc, McmcDiagnostics, McmcSettings, PosteriorDraw};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::optim::{newton_maximize, OptimError};

#[derive(Debug, Error)]
pub enum GaussFitError {
    #[error("model variance is not positive at phase {phase}: V = {variance}")]
    ConstraintViolation { phase: f64, variance: f64 },
    #[error("parameters are infeasible: A = {a} must exceed √(B_c²+B_s²) = {b_norm}")]
    Infeasible { a: f64, b_norm: f64 },
    #[error("need at least {need} samples spanning >= 2 phases, got {got} over {phases} phases")]
    TooFewSamples {
        need: usize,
        got: usize,
        phases: usize,
    },
    #[error("fit did not converge: gradient norm {grad_norm:.3e} at {last:?}")]
    NoConvergence {
        last: GaussianModelParams,
        grad_norm: f64,
    },
    #[error("phase {0} lumps to fewer than 2 bins")]
    DegeneratePhase(usize),
    #[error("degrees of freedom not positive: {0}")]
    BadDof(i64),
    #[error("mcmc did not reach the R-hat criterion within the sample budget")]
    McmcBudget,
    #[error("posterior is empty")]
    EmptyPosterior,
}

/// Parameters Θ = (μ_z1, μ_p1, A, B_c, B_s) of the Gaussian ansatz,
/// in zpf-normalized units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianModelParams {
    pub mu_z1: f64,
    pub mu_p1: f64,
    pub a: f64,
    pub b_c: f64,
    pub b_s: f64,
}

impl GaussianModelParams {
    pub fn b_norm(&self) -> f64 {
        self.b_c.hypot(self.b_s)
    }

    /// A > √(B_c² + B_s²): positive-definite phase-space covariance.
    pub fn is_feasible(&self) -> bool {
        self.a > self.b_norm()
    }

    /// σ₊ = √(A + √(B_c²+B_s²)), the antisqueezed principal spread.
    pub fn sigma_plus(&self) -> f64 {
        (self.a + self.b_norm()).sqrt()
    }

    /// σ₋ = √(A − √(B_c²+B_s²)), the squeezed principal spread.
    pub fn sigma_minus(&self) -> f64 {
        (self.a - self.b_norm()).max(0.0).sqrt()
    }

    /// Model mean of p̃ at phase φ.
    pub fn mean(&self, phase: f64) -> f64 {
        let (s, c) = phase.sin_cos();
        -self.mu_z1 * s + self.mu_p1 * c
    }

    /// Model variance of p̃ at phase φ.
    pub fn variance(&self, phase: f64) -> f64 {
        self.a + self.b_c * (2.0 * phase).cos() + self.b_s * (2.0 * phase).sin()
    }

    fn from_vec(v: &[f64]) -> Self {
        GaussianModelParams {
            mu_z1: v[0],
            mu_p1: v[1],
            a: v[2],
            b_c: v[3],
            b_s: v[4],
        }
    }

    fn to_vec(self) -> [f64; 5] {
        [self.mu_z1, self.mu_p1, self.a, self.b_c, self.b_s]
    }
}

/// Per-phase sufficient statistics (count, Σp̃, Σp̃²). The Gaussian likelihood
/// depends on the samples only through these, which makes the fit and the
/// MCMC independent of the sample count per evaluation.
#[derive(Debug, Clone)]
pub struct SampleStats {
    pub phases: Vec<PhaseStat>,
    pub n_total: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct PhaseStat {
    pub phase: f64,
    pub count: f64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl SampleStats {
    pub fn from_samples(samples: &[(f64, f64)]) -> Self {
        let mut map = std::collections::BTreeMap::<u64, PhaseStat>::new();
        for &(p, phi) in samples {
            let entry = map.entry(phi.to_bits()).or_insert(PhaseStat {
                phase: phi,
                count: 0.0,
                sum: 0.0,
                sum_sq: 0.0,
            });
            entry.count += 1.0;
            entry.sum += p;
            entry.sum_sq += p * p;
        }
        SampleStats {
            phases: map.into_values().collect(),
            n_total: samples.len(),
        }
    }

    pub fn n_phases(&self) -> usize {
        self.phases.len()
    }
}

/// Log-likelihood Σ_i [−½ln(2πV(φ_i)) − (p̃_i − M(φ_i))²/(2V(φ_i))].
pub fn gaussian_loglik(
    params: &GaussianModelParams,
    samples: &[(f64, f64)],
) -> Result<f64, GaussFitError> {
    gaussian_loglik_stats(params, &SampleStats::from_samples(samples))
}

/// Same value computed from sufficient statistics.
pub fn gaussian_loglik_stats(
    params: &GaussianModelParams,
    stats: &SampleStats,
) -> Result<f64, GaussFitError> {
    let mut total = 0.0;
    for ps in &stats.phases {
        let v = params.variance(ps.phase);
        if v <= 0.0 {
            return Err(GaussFitError::ConstraintViolation {
                phase: ps.phase,
                variance: v,
            });
        }
        let m = params.mean(ps.phase);
        let quad = ps.sum_sq - 2.0 * m * ps.sum + ps.count * m * m;
        total += -0.5 * ps.count * (2.0 * std::f64::consts::PI * v).ln() - quad / (2.0 * v);
    }
    Ok(total)
}

fn loglik_gradient(params: &GaussianModelParams, stats: &SampleStats) -> [f64; 5] {
    let mut grad = [0.0; 5];
    for ps in &stats.phases {
        let (s, c) = ps.phase.sin_cos();
        let c2 = (2.0 * ps.phase).cos();
        let s2 = (2.0 * ps.phase).sin();
        let v = params.variance(ps.phase);
        let m = params.mean(ps.phase);
        let quad = ps.sum_sq - 2.0 * m * ps.sum + ps.count * m * m;
        let dl_dm = (ps.sum - ps.count * m) / v;
        let dl_dv = -0.5 * ps.count / v + quad / (2.0 * v * v);
        grad[0] += dl_dm * (-s);
        grad[1] += dl_dm * c;
        grad[2] += dl_dv;
        grad[3] += dl_dv * c2;
        grad[4] += dl_dv * s2;
    }
    grad
}

/// Moment-based starting point: means regressed on (−sinφ, cosφ), per-phase
/// variances regressed on (1, cos2φ, sin2φ), pulled into the feasible region.
fn moment_init(stats: &SampleStats) -> GaussianModelParams {
    let mut m00 = 0.0;
    let mut m01 = 0.0;
    let mut m11 = 0.0;
    let mut r0 = 0.0;
    let mut r1 = 0.0;
    for ps in &stats.phases {
        let (s, c) = ps.phase.sin_cos();
        let mean = ps.sum / ps.count;
        let w = ps.count;
        m00 += w * s * s;
        m01 += w * (-s) * c;
        m11 += w * c * c;
        r0 += w * (-s) * mean;
        r1 += w * c * mean;
    }
    let det = m00 * m11 - m01 * m01;
    let (mu_z1, mu_p1) = if det.abs() > 1e-12 {
        ((m11 * r0 - m01 * r1) / det, (m00 * r1 - m01 * r0) / det)
    } else {
        (0.0, 0.0)
    };

    let mut ata = [[0.0f64; 3]; 3];
    let mut aty = [0.0f64; 3];
    for ps in &stats.phases {
        let mean = ps.sum / ps.count;
        let var = (ps.sum_sq / ps.count - mean * mean).max(1e-12);
        let row = [1.0, (2.0 * ps.phase).cos(), (2.0 * ps.phase).sin()];
        for a in 0..3 {
            for b in 0..3 {
                ata[a][b] += ps.count * row[a] * row[b];
            }
            aty[a] += ps.count * row[a] * var;
        }
    }
    let beta = crate::stats::solve3(ata, aty).unwrap_or([1.0, 0.0, 0.0]);
    let (mut a, mut b_c, mut b_s) = (beta[0], beta[1], beta[2]);
    if !(a > 0.0) {
        a = 1.0;
        b_c = 0.0;
        b_s = 0.0;
    }
    let b_norm = b_c.hypot(b_s);
    if b_norm >= a {
        let shrink = 0.9 * a / b_norm;
        b_c *= shrink;
        b_s *= shrink;
    }
    GaussianModelParams {
        mu_z1,
        mu_p1,
        a,
        b_c,
        b_s,
    }
}

/// Maximum-likelihood fit of the Gaussian ansatz under the strict-feasibility
/// constraint, via a log-barrier interior method with decreasing barrier
/// weight and Newton steps.
pub fn fit_gaussian(samples: &[(f64, f64)]) -> Result<GaussianModelParams, GaussFitError> {
    let stats = SampleStats::from_samples(samples);
    if samples.len() < 5 || stats.n_phases() < 2 {
        return Err(GaussFitError::TooFewSamples {
            need: 5,
            got: samples.len(),
            phases: stats.n_phases(),
        });
    }
    fit_gaussian_stats(&stats)
}

pub fn fit_gaussian_stats(stats: &SampleStats) -> Result<GaussianModelParams, GaussFitError> {
    let mut current = moment_init(stats);
    let scale = stats.n_total as f64;
    for barrier in [1e-2 * scale, 1e-4 * scale, 1e-6 * scale, 1e-10 * scale] {
        let value = |v: &[f64]| -> f64 {
            let p = GaussianModelParams::from_vec(v);
            let gap = p.a - p.b_norm();
            if gap <= 0.0 {
                return f64::NEG_INFINITY;
            }
            match gaussian_loglik_stats(&p, stats) {
                Ok(ll) => ll + barrier * gap.ln(),
                Err(_) => f64::NEG_INFINITY,
            }
        };
        let gradient = |v: &[f64]| -> Vec<f64> {
            let p = GaussianModelParams::from_vec(v);
            let mut g = loglik_gradient(&p, stats).to_vec();
            let b_norm = p.b_norm();
            let gap = p.a - b_norm;
            if gap > 0.0 {
                g[2] += barrier / gap;
                if b_norm > 1e-300 {
                    g[3] -= barrier * (p.b_c / b_norm) / gap;
                    g[4] -= barrier * (p.b_s / b_norm) / gap;
                }
            }
            g
        };
        match newton_maximize(value, gradient, &current.to_vec(), 200, 1e-10 * scale) {
            Ok((v, _)) => current = GaussianModelParams::from_vec(&v),
            Err(OptimError::NoConvergence(_, grad_norm)) => {
                return Err(GaussFitError::NoConvergence {
                    last: current,
                    grad_norm,
                })
            }
            Err(OptimError::Singular) => {
                return Err(GaussFitError::NoConvergence {
                    last: current,
                    grad_norm: f64::NAN,
                })
            }
        }
    }
    if !current.is_feasible() {
        return Err(GaussFitError::Infeasible {
            a: current.a,
            b_norm: current.b_norm(),
        });
    }
    Ok(current)
}

/// Posterior summary of the principal spreads σ±.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SigmaSummary {
    pub sigma_plus: f64,
    pub sigma_plus_interval: (f64, f64),
    pub sigma_minus: f64,
    pub sigma_minus_interval: (f64, f64),
    /// Mean of σ₊ and σ₋ per draw (the thermal-state convention).
    pub sigma_thermal: f64,
    pub sigma_thermal_interval: (f64, f64),
}

/// Per-draw σ± with central 68% intervals; the thermal convention averages
/// σ₊ and σ₋ within each draw.
pub fn sigma_summary(posterior: &[GaussianModelParams]) -> Result<SigmaSummary, GaussFitError> {
    if posterior.is_empty() {
        return Err(GaussFitError::EmptyPosterior);
    }
    let plus: Vec<f64> = posterior.iter().map(|p| p.sigma_plus()).collect();
    let minus: Vec<f64> = posterior.iter().map(|p| p.sigma_minus()).collect();
    let thermal: Vec<f64> = plus
        .iter()
        .zip(&minus)
        .map(|(p, m)| 0.5 * (p + m))
        .collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Ok(SigmaSummary {
        sigma_plus: mean(&plus),
        sigma_plus_interval: crate::stats::central_68(&plus),
        sigma_minus: mean(&minus),
        sigma_minus_interval: crate::stats::central_68(&minus),
        sigma_thermal: mean(&thermal),
        sigma_thermal_interval: crate::stats::central_68(&thermal),
    })
}

/// Draw synthetic samples from the Gaussian model at the given phases
/// (used by calibration studies and tests).
pub fn sample_from_model(
    params: &GaussianModelParams,
    phases: &[f64],
    per_phase: usize,
    seed: u64,
) -> Vec<(f64, f64)> {
    use rand::Rng;
    use rand_distr::StandardNormal;
    let mut out = Vec::with_capacity(phases.len() * per_phase);
    for (i, &phi) in phases.iter().enumerate() {
        let mut rng = crate::rng::indexed_substream(seed, "gaussfit.model", i as u64);
        let m = params.mean(phi);
        let sd = params.variance(phi).sqrt();
        for _ in 0..per_phase {
            let x: f64 = rng.sample(StandardNormal);
            out.push((m + sd * x, phi));
        }
    }
    out
}
