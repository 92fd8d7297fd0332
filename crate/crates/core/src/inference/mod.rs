//! Fisher-information sensitivity analysis, classical fits, and Allan
//! deviation.

mod allan;
mod fits;

pub use allan::allan_deviation;
pub use fits::{
    estimate_heating_rate, fit_folded_gaussian, fit_oscillation_offset, fit_squeezing_floor,
    fit_susceptibility, oscillation_offset_theory, FitParam, FitReport,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::ProtocolConfig;
use crate::consts::HBAR;
use crate::fockstate::{moments, quadrature_pdf, DensityMatrix};
use crate::rng::indexed_substream;
use crate::stats::central_68;
use crate::synthlab::{bin_on_grid, Sinogram, SinogramMeta};
use crate::tomomle::{reconstruct, MleSettings, TomoError};

#[derive(Debug, Error)]
pub enum InferenceError {
    #[error("grid too narrow: boundary density is {ratio:.2e} of the peak (needs < 1e-8)")]
    GridTooNarrow { ratio: f64 },
    #[error("density matrix frame (omega = {got:.4e}) does not match the protocol frame (omega = {expected:.4e})")]
    FrameMismatch { got: f64, expected: f64 },
    #[error("fit did not converge: {0}")]
    FitFailed(String),
    #[error("alternating fit did not converge after {rounds} rounds; trace: {trace:?}")]
    AlternatingDiverged { rounds: usize, trace: Vec<f64> },
    #[error("{failed} of {total} bootstrap resamples failed reconstruction (> 10%)")]
    BootstrapFailures { failed: usize, total: usize },
    #[error("series too short: need at least {need} samples, got {got}")]
    SeriesTooShort { need: usize, got: usize },
    #[error("no representable averaging times; notes: {0:?}")]
    NoUsableTaus(Vec<String>),
    #[error(transparent)]
    Tomo(#[from] TomoError),
    #[error("need at least {need} data points, got {got}")]
    TooFewPoints { need: usize, got: usize },
}

/// Classical Fisher information of a translation family,
/// I[P] = ∫ (∂_q P)²/P dq, from pointwise density values on a uniform grid.
///
/// Central differences on the analytic density; grid points with
/// P < 1e-12 × peak are excluded from the integrand.
pub fn translation_fisher(pdf: &[f64], step: f64) -> Result<f64, InferenceError> {
    assert!(pdf.len() >= 3 && step > 0.0);
    let peak = pdf.iter().fold(0.0f64, |m, &p| m.max(p));
    let boundary = pdf[0].max(pdf[pdf.len() - 1]);
    if boundary > 1e-8 * peak {
        return Err(InferenceError::GridTooNarrow {
            ratio: boundary / peak,
        });
    }
    let mut total = 0.0;
    for i in 1..pdf.len() - 1 {
        if pdf[i] < 1e-12 * peak {
            continue;
        }
        let derivative = (pdf[i + 1] - pdf[i - 1]) / (2.0 * step);
        total += derivative * derivative / pdf[i] * step;
    }
    Ok(total)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BootstrapStats {
    pub mean: f64,
    pub interval_68: (f64, f64),
    pub resamples: usize,
    pub failures: usize,
    /// Degenerate when only one resample was requested.
    pub degenerate: bool,
}

/// Fisher-information sensitivity of the TOF force measurement.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FisherResult {
    /// Fisher information for the tilt parameter θ [1/rad²].
    pub f_theta: f64,
    /// Fisher information for the force F = mgθ [1/N²].
    pub f_force: f64,
    /// Expected sensitivity S = 1/√F_force [N].
    pub sensitivity: f64,
    /// Translation information I[P] of the measured quadrature density.
    pub translation_information: f64,
    /// Set when ω t_TOF < 5 (outside the long-TOF regime the formula assumes).
    pub regime_warning: bool,
    pub bootstrap: Option<BootstrapStats>,
}

/// Fisher information of the readout for a state given in the matching
/// zpf frame (ω₁ with preparation, ω₀ without): evaluates the quadrature
/// density at φ = ω t_SP, its translation information, and
/// F_z = D_θ² I[P] / ((t_TOF/m)² ħmω/2) with
/// D_θ = g t_TOF sin(ω t_SP)/ω + g t_TOF²/2.
pub fn fisher_sensitivity(
    rho: &DensityMatrix,
    frame_omega: f64,
    cfg: &ProtocolConfig,
    with_prep: bool,
) -> Result<FisherResult, InferenceError> {
    let omega = if with_prep { cfg.omega1 } else { cfg.omega0 };
    if (frame_omega - omega).abs() > 1e-9 * omega {
        return Err(InferenceError::FrameMismatch {
            got: frame_omega,
            expected: omega,
        });
    }
    let phase = omega * cfg.t_sp;
    let m = moments(rho);
    let max_std = m.principal_sigmas().0.max(1e-6);
    let center = m.quadrature_mean(phase);
    let half_width = 10.0 * max_std;
    let n_points = 2001usize;
    let step = 2.0 * half_width / (n_points - 1) as f64;
    let grid: Vec<f64> = (0..n_points)
        .map(|i| center - half_width + i as f64 * step)
        .collect();
    let pdf = quadrature_pdf(rho, phase, &grid);
    let info = translation_fisher(&pdf, step)?;

    let t = cfg.t_tof;
    let d_theta = cfg.g * t * (omega * cfg.t_sp).sin() / omega + cfg.g * t * t / 2.0;
    let t_over_m = t / cfg.m;
    let f_theta = d_theta * d_theta / (t_over_m * t_over_m * (HBAR * cfg.m * omega / 2.0)) * info;
    let f_force = f_theta / (cfg.m * cfg.g).powi(2);
    Ok(FisherResult {
        f_theta,
        f_force,
        sensitivity: 1.0 / f_force.sqrt(),
        translation_information: info,
        regime_warning: omega * t < 5.0,
        bootstrap: None,
    })
}

#[derive(Debug, Clone)]
pub struct BootstrapSettings {
    pub resamples: usize,
    pub seed: u64,
    pub mle: MleSettings,
    /// Warm-start each resample's reconstruction from the base estimate.
    pub warm_start: bool,
}

impl BootstrapSettings {
    pub fn new(mle: MleSettings, seed: u64) -> Self {
        BootstrapSettings {
            resamples: 200,
            seed,
            mle,
            warm_start: true,
        }
    }
}

/// Assemble a sinogram directly from per-phase quadrature values using the
/// standard bin-width rule (Δ = 0.2 × min per-phase std unless given).
pub fn sinogram_from_quadratures(
    phase_samples: &[(f64, Vec<f64>)],
    delta: Option<f64>,
    omega: f64,
    t_tof: f64,
) -> Sinogram {
    let delta = delta.unwrap_or_else(|| {
        let min_std = phase_samples
            .iter()
            .map(|(_, vals)| {
                let n = vals.len() as f64;
                let mean = vals.iter().sum::<f64>() / n;
                (vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
            })
            .fold(f64::INFINITY, f64::min);
        if min_std > 0.0 {
            0.2 * min_std
        } else {
            1e-6
        }
    });
    Sinogram {
        phases: phase_samples.iter().map(|(p, _)| *p).collect(),
        delta,
        histograms: phase_samples
            .iter()
            .map(|(_, vals)| bin_on_grid(vals, delta))
            .collect(),
        meta: SinogramMeta {
            omega,
            t_tof,
            centered: true,
            seed: None,
            degenerate_delta: false,
        },
    }
}

/// Bootstrap the Fisher sensitivity: resample shots with replacement within
/// each phase, redo tomography (warm-started from the base reconstruction)
/// and the Fisher evaluation per resample, and report the mean and central
/// 68% interval. Resamples whose reconstruction fails to converge are
/// excluded; more than 10% failures aborts.
pub fn bootstrap_fisher(
    phase_samples: &[(f64, Vec<f64>)],
    cfg: &ProtocolConfig,
    with_prep: bool,
    settings: &BootstrapSettings,
) -> Result<FisherResult, InferenceError> {
    let omega = if with_prep { cfg.omega1 } else { cfg.omega0 };
    let base_sino = sinogram_from_quadratures(phase_samples, None, omega, cfg.t_tof);
    let base = reconstruct(&base_sino, &settings.mle, None)?;
    let mut result = fisher_sensitivity(&base.rho, omega, cfg, with_prep)?;

    let mut values = Vec::with_capacity(settings.resamples);
    let mut failures = 0usize;
    for b in 0..settings.resamples {
        let mut rng = indexed_substream(settings.seed, "inference.bootstrap", b as u64);
        let resampled: Vec<(f64, Vec<f64>)> = phase_samples
            .iter()
            .map(|(phi, vals)| {
                use rand::Rng;
                let drawn: Vec<f64> = (0..vals.len())
                    .map(|_| vals[rng.random_range(0..vals.len())])
                    .collect();
                (*phi, drawn)
            })
            .collect();
        let sino = sinogram_from_quadratures(&resampled, Some(base_sino.delta), omega, cfg.t_tof);
        let warm = if settings.warm_start {
            Some(&base.rho)
        } else {
            None
        };
        let rec = reconstruct(&sino, &settings.mle, warm)?;
        if !(rec.report.converged_distance && rec.report.converged_loglik) {
            failures += 1;
            continue;
        }
        match fisher_sensitivity(&rec.rho, omega, cfg, with_prep) {
            Ok(f) => values.push(f.sensitivity),
            Err(_) => failures += 1,
        }
    }
    if failures * 10 > settings.resamples {
        return Err(InferenceError::BootstrapFailures {
            failed: failures,
            total: settings.resamples,
        });
    }
    if !values.is_empty() {
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        result.bootstrap = Some(BootstrapStats {
            mean,
            interval_68: central_68(&values),
            resamples: settings.resamples,
            failures,
            degenerate: values.len() < 2,
        });
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockstate::{gaussian_to_density_dimensionless, DimensionlessGaussian};
    use approx::assert_relative_eq;

    fn gaussian_pdf_grid(sigma: f64, n: usize, half: f64) -> (Vec<f64>, f64) {
        let step = 2.0 * half / (n - 1) as f64;
        let pdf: Vec<f64> = (0..n)
            .map(|i| {
                let x = -half + i as f64 * step;
                (-(x * x) / (2.0 * sigma * sigma)).exp()
                    / ((2.0 * std::f64::consts::PI).sqrt() * sigma)
            })
            .collect();
        (pdf, step)
    }

    #[test]
    fn fisher_of_gaussians() {
        let (pdf, step) = gaussian_pdf_grid(1.0, 2001, 10.0);
        assert_relative_eq!(translation_fisher(&pdf, step).unwrap(), 1.0, max_relative = 1e-4);
        for sigma in [0.5, 2.0, 3.3] {
            let (pdf, step) = gaussian_pdf_grid(sigma, 2001, 10.0 * sigma);
            assert_relative_eq!(
                translation_fisher(&pdf, step).unwrap(),
                1.0 / (sigma * sigma),
                max_relative = 1e-4
            );
        }
    }

    #[test]
    fn fisher_rejects_narrow_grid() {
        let (pdf, step) = gaussian_pdf_grid(1.0, 401, 2.0);
        assert!(matches!(
            translation_fisher(&pdf, step),
            Err(InferenceError::GridTooNarrow { .. })
        ));
    }

    #[test]
    fn fisher_of_ground_state_density() {
        let rho = DensityMatrix::fock(10, 0);
        let grid: Vec<f64> = (0..2001).map(|i| -10.0 + i as f64 * 0.01).collect();
        let pdf = quadrature_pdf(&rho, 0.0, &grid);
        let info = translation_fisher(&pdf, 0.01).unwrap();
        assert_relative_eq!(info, 1.0, max_relative = 1e-4);
    }

    #[test]
    fn convolution_noise_decreases_information() {
        let (pdf, step) = gaussian_pdf_grid(1.0, 4001, 14.0);
        let base = translation_fisher(&pdf, step).unwrap();
        // convolve with a Gaussian kernel of width 0.5
        let kw = 0.5f64;
        let kernel_half = (4.0 * kw / step).ceil() as i64;
        let kernel: Vec<f64> = (-kernel_half..=kernel_half)
            .map(|k| {
                let x = k as f64 * step;
                (-(x * x) / (2.0 * kw * kw)).exp()
            })
            .collect();
        let ksum: f64 = kernel.iter().sum();
        let n = pdf.len() as i64;
        let blurred: Vec<f64> = (0..n)
            .map(|i| {
                let mut acc = 0.0;
                for (j, kv) in kernel.iter().enumerate() {
                    let idx = i + j as i64 - kernel_half;
                    if idx >= 0 && idx < n {
                        acc += kv * pdf[idx as usize];
                    }
                }
                acc / ksum
            })
            .collect();
        let after = translation_fisher(&blurred, step).unwrap();
        assert!(after < base, "I did not decrease: {after} vs {base}");
        // analytic check: variances add under convolution
        assert_relative_eq!(after, 1.0 / (1.0 + kw * kw), max_relative = 1e-3);
    }

    #[test]
    fn fisher_sensitivity_matches_theory_for_thermal_state() {
        // no preparation, thermal state in the ω₀ frame, long TOF
        let mut cfg = ProtocolConfig::nominal();
        cfg.gamma_bg = 0.0;
        cfg.t_sp = 0.0;
        cfg.t_tof = 50.0 / cfg.omega0; // ω₀ t = 50
        let kappa = cfg.kappa();
        let g = DimensionlessGaussian {
            mean_z1: 0.0,
            mean_p1: 0.0,
            var_z1: kappa,
            cov_z1p1: 0.0,
            var_p1: kappa,
        };
        let rho = gaussian_to_density_dimensionless(&g, 30).unwrap();
        let fisher = fisher_sensitivity(&rho, cfg.omega0, &cfg, false).unwrap();
        let theory = crate::phasespace::sensitivity_theory(&cfg, false).unwrap();
        assert_relative_eq!(fisher.sensitivity, theory, max_relative = 0.01);
        assert!(!fisher.regime_warning);
    }

    #[test]
    fn fisher_frame_mismatch_rejected() {
        let cfg = ProtocolConfig::nominal();
        let rho = DensityMatrix::fock(6, 0);
        assert!(matches!(
            fisher_sensitivity(&rho, cfg.omega1, &cfg, false),
            Err(InferenceError::FrameMismatch { .. })
        ));
    }

    #[test]
    fn bootstrap_small_scale() {
        use rand::Rng;
        use rand_distr::StandardNormal;
        // small thermal dataset in a reduced basis for speed
        let n_phases = 24;
        let per_phase = 150;
        let phase_samples: Vec<(f64, Vec<f64>)> = (0..n_phases)
            .map(|i| {
                let phi = std::f64::consts::PI * i as f64 / n_phases as f64;
                let mut rng = indexed_substream(3, "bootstrap-test", i as u64);
                let vals: Vec<f64> = (0..per_phase)
                    .map(|_| 1.6f64.sqrt() * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                (phi, vals)
            })
            .collect();
        let mut cfg = ProtocolConfig::nominal();
        cfg.t_sp = 0.0;
        let mle = MleSettings {
            epsilon: 0.2,
            n_max: 10,
            threshold_distance: 5e-4,
            threshold_loglik: 1e-5,
            max_iterations: 800,
        };
        let mut settings = BootstrapSettings::new(mle, 5);
        settings.resamples = 24;
        let result = bootstrap_fisher(&phase_samples, &cfg, false, &settings).unwrap();
        let boot = result.bootstrap.as_ref().unwrap();
        assert!(!boot.degenerate);
        assert!(boot.failures * 10 <= settings.resamples);
        // interval covers the direct estimate
        assert!(
            boot.interval_68.0 <= result.sensitivity && result.sensitivity <= boot.interval_68.1,
            "direct {} outside [{}, {}]",
            result.sensitivity,
            boot.interval_68.0,
            boot.interval_68.1
        );

        // B = 1 → degenerate interval flagged
        let mut single = settings.clone();
        single.resamples = 1;
        let r1 = bootstrap_fisher(&phase_samples, &cfg, false, &single).unwrap();
        assert!(r1.bootstrap.unwrap().degenerate);
    }
}
