//! Classical parameter fits: recapture-oscillation offset, force
//! susceptibility, squeezing floor, background-gas heating rate, and the
//! folded-readout mean/spread extraction.

use serde::{Deserialize, Serialize};

use super::InferenceError;
use crate::config::ProtocolConfig;
use crate::consts::{HBAR, KB};
use crate::optim::levenberg_marquardt;
use crate::stats::weighted_line_fit;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitParam {
    pub name: String,
    pub value: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitReport {
    pub model: String,
    pub params: Vec<FitParam>,
    pub residual_rms: f64,
    pub notes: Vec<String>,
}

impl FitReport {
    pub fn get(&self, name: &str) -> Option<&FitParam> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn value(&self, name: &str) -> f64 {
        self.get(name).map(|p| p.value).unwrap_or(f64::NAN)
    }
}

fn param(name: &str, value: f64, std_error: f64) -> FitParam {
    FitParam {
        name: name.to_string(),
        value,
        std_error: std_error.max(0.0),
    }
}

/// Fit |b₁ + b₂ cos(b₃ t_SP + b₄)| + b₅ to mean-position data, multi-started
/// over b₄ ∈ {0, π/2, π, 3π/2}. `init_b3` seeds the oscillation frequency;
/// `fixed_b5` pins the measurement offset when provided.
///
/// The absolute value makes (b₁, b₂) → (−b₁, −b₂) and b₂ → −b₂ with
/// b₄ → b₄ + π exact symmetries; reported parameters are canonicalized to
/// b₁ ≥ 0, b₂ ≥ 0, b₄ ∈ [0, 2π).
pub fn fit_oscillation_offset(
    data: &[(f64, f64)],
    init_b3: f64,
    fixed_b5: Option<f64>,
) -> Result<FitReport, InferenceError> {
    if data.len() < 8 {
        return Err(InferenceError::TooFewPoints {
            need: 8,
            got: data.len(),
        });
    }
    let span = data.iter().map(|d| d.0).fold(f64::NEG_INFINITY, f64::max)
        - data.iter().map(|d| d.0).fold(f64::INFINITY, f64::min);
    if span * init_b3 < 2.0 * std::f64::consts::PI {
        return Err(InferenceError::FitFailed(
            "data span less than one oscillation period".into(),
        ));
    }
    let ys: Vec<f64> = data.iter().map(|d| d.1).collect();
    let y_min = ys.iter().cloned().fold(f64::INFINITY, f64::min);
    let y_max = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let b5_0 = fixed_b5.unwrap_or(0.0);
    let b1_0 = (0.5 * (y_max + y_min) - b5_0).max(1e-3 * (y_max - y_min).abs() + 1e-30);
    let b2_0 = 0.5 * (y_max - y_min);

    let model = |p: &[f64], t: f64| -> f64 {
        let b5 = if p.len() == 5 { p[4] } else { b5_0 };
        (p[0] + p[1] * (p[2] * t + p[3]).cos()).abs() + b5
    };

    let mut best: Option<crate::optim::LmFit> = None;
    for start_phase in [0.0, 0.5, 1.0, 1.5].map(|k| k * std::f64::consts::PI) {
        let mut init = vec![b1_0, b2_0, init_b3, start_phase];
        if fixed_b5.is_none() {
            init.push(0.0);
        }
        let fit = levenberg_marquardt(
            |p, out| {
                for (i, &(t, y)) in data.iter().enumerate() {
                    out[i] = model(p, t) - y;
                }
            },
            &init,
            data.len(),
            400,
        );
        if let Ok(f) = fit {
            if best.as_ref().map_or(true, |b| f.ssr < b.ssr) {
                best = Some(f);
            }
        }
    }
    let fit = best.ok_or_else(|| {
        InferenceError::FitFailed("oscillation fit failed from all phase starts".into())
    })?;

    // canonicalize the sign/phase degeneracies
    let mut b = fit.params.clone();
    let mut se = fit.std_errors.clone();
    if b[0] < 0.0 {
        b[0] = -b[0];
        b[1] = -b[1];
    }
    if b[1] < 0.0 {
        b[1] = -b[1];
        b[3] += std::f64::consts::PI;
    }
    b[3] = b[3].rem_euclid(2.0 * std::f64::consts::PI);
    if se.iter().any(|s| !s.is_finite()) {
        se = vec![0.0; b.len()];
    }

    let mut params = vec![
        param("b1", b[0], se[0]),
        param("b2", b[1], se[1]),
        param("b3", b[2], se[2]),
        param("b4", b[3], se[3]),
    ];
    let mut notes = Vec::new();
    if let Some(v) = fixed_b5 {
        params.push(param("b5", v, 0.0));
        notes.push("b5 held fixed".to_string());
    } else {
        params.push(param("b5", b[4], se[4]));
    }
    Ok(FitReport {
        model: "abs_sinusoid_offset".into(),
        params,
        residual_rms: (fit.ssr / data.len() as f64).sqrt(),
        notes,
    })
}

/// Offset of the recapture oscillation predicted from the tilt:
/// b₁ = ½ g sinθ (t_TOF² − 1/ω₀² + 1/ω₁²).
pub fn oscillation_offset_theory(cfg: &ProtocolConfig) -> f64 {
    0.5 * cfg.g
        * cfg.theta.sin()
        * (cfg.t_tof * cfg.t_tof - 1.0 / (cfg.omega0 * cfg.omega0)
            + 1.0 / (cfg.omega1 * cfg.omega1))
}

/// Weighted linear fit of μ_z against the projected force F = mg sinθ.
/// Data: (θ [rad], μ_z [m], optional σ of μ_z).
pub fn fit_susceptibility(
    data: &[(f64, f64, Option<f64>)],
    cfg: &ProtocolConfig,
) -> Result<FitReport, InferenceError> {
    if data.len() < 3 {
        return Err(InferenceError::TooFewPoints {
            need: 3,
            got: data.len(),
        });
    }
    let forces: Vec<f64> = data.iter().map(|d| cfg.m * cfg.g * d.0.sin()).collect();
    let mu: Vec<f64> = data.iter().map(|d| d.1).collect();
    let sigmas: Option<Vec<f64>> = data.iter().map(|d| d.2).collect();
    let fit = weighted_line_fit(&forces, &mu, sigmas.as_deref())
        .map_err(|e| InferenceError::FitFailed(e.to_string()))?;
    Ok(FitReport {
        model: "linear_susceptibility".into(),
        params: vec![
            param("slope_m_per_N", fit.slope, fit.slope_se),
            param("intercept_m", fit.intercept, fit.intercept_se),
        ],
        residual_rms: fit.residual_rms,
        notes: Vec::new(),
    })
}

/// Fit the normalized squeezing-floor model
/// m σ_z,min/(t_TOF √(ħmω₀/2)) = √(V_n + V_ini e^{−4r}); both parameters are
/// constrained nonnegative. Data: (r, σ_z,min [m]).
pub fn fit_squeezing_floor(
    data: &[(f64, f64)],
    cfg: &ProtocolConfig,
) -> Result<FitReport, InferenceError> {
    let distinct = {
        let mut rs: Vec<f64> = data.iter().map(|d| d.0).collect();
        rs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        rs.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        rs.len()
    };
    if distinct < 4 {
        return Err(InferenceError::TooFewPoints {
            need: 4,
            got: distinct,
        });
    }
    let norm = cfg.t_tof * (HBAR * cfg.m * cfg.omega0 / 2.0).sqrt() / cfg.m;
    let y: Vec<f64> = data.iter().map(|d| d.1 / norm).collect();
    // plateau at large r seeds V_n; smallest r seeds V_ini
    let (r_max_idx, _) = data
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .0.partial_cmp(&b.1 .0).unwrap())
        .unwrap();
    let (r_min_idx, _) = data
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .0.partial_cmp(&b.1 .0).unwrap())
        .unwrap();
    let vn_0 = (y[r_max_idx] * y[r_max_idx]).max(1e-6);
    let vini_0 = ((y[r_min_idx] * y[r_min_idx] - vn_0).max(1e-3))
        / (-4.0 * data[r_min_idx].0).exp();
    let fit = levenberg_marquardt(
        |p, out| {
            for (i, &(r, _)) in data.iter().enumerate() {
                let v = p[0] * p[0] * (-4.0 * r).exp() + p[1] * p[1];
                out[i] = v.sqrt() - y[i];
            }
        },
        &[vini_0.sqrt(), vn_0.sqrt()],
        data.len(),
        400,
    )
    .map_err(|e| InferenceError::FitFailed(e.to_string()))?;
    let (s_ini, s_n) = (fit.params[0].abs(), fit.params[1].abs());
    Ok(FitReport {
        model: "squeezing_floor".into(),
        params: vec![
            param("v_ini", s_ini * s_ini, 2.0 * s_ini * fit.std_errors[0]),
            param("v_n", s_n * s_n, 2.0 * s_n * fit.std_errors[1]),
        ],
        residual_rms: (fit.ssr / data.len() as f64).sqrt(),
        notes: Vec::new(),
    })
}

fn sigma_model_no_prep(t: f64, n: f64, gamma: f64, cfg: &ProtocolConfig) -> f64 {
    let kappa = 2.0 * n + 1.0;
    let w0t = cfg.omega0 * t;
    (kappa * HBAR / (2.0 * cfg.m * cfg.omega0) * (1.0 + w0t * w0t)
        + 2.0 * KB * gamma / (3.0 * cfg.m) * t * t * t)
        .sqrt()
}

fn sigma_model_with_prep(t: f64, n: f64, gamma: f64, cfg: &ProtocolConfig) -> f64 {
    let kappa = 2.0 * n + 1.0;
    let ratio = cfg.omega0 / cfg.omega1;
    let w1t = cfg.omega1 * t;
    (kappa * HBAR / (2.0 * cfg.m * cfg.omega0) * (ratio * ratio + w1t * w1t)
        + 2.0 * KB * gamma / (3.0 * cfg.m) * t * t * t)
        .sqrt()
}

/// Alternating estimation of (n, Γ_BG) from position spreads versus t_TOF,
/// measured without and with state preparation at one pressure:
/// (a) fit n on the bare data at the current Γ_BG, (b) fit Γ_BG on the
/// prepared data at the current n, until Γ_BG moves by less than 1%.
///
/// Data: (t_TOF [s], σ_z [m]) for each protocol variant.
pub fn estimate_heating_rate(
    no_prep: &[(f64, f64)],
    with_prep: &[(f64, f64)],
    cfg: &ProtocolConfig,
) -> Result<FitReport, InferenceError> {
    if no_prep.len() < 3 || with_prep.len() < 3 {
        return Err(InferenceError::TooFewPoints {
            need: 3,
            got: no_prep.len().min(with_prep.len()),
        });
    }
    let mut gamma = 0.0f64;
    let mut n_est = cfg.n.max(0.0);
    let mut trace = Vec::new();
    let mut n_fit_se;
    let mut gamma_fit_se;
    let max_rounds = 100;
    for round in 0..max_rounds {
        // (a) occupation from the bare protocol at fixed Γ
        let g_now = gamma;
        let fit_n = levenberg_marquardt(
            |p, out| {
                for (i, &(t, s)) in no_prep.iter().enumerate() {
                    out[i] = sigma_model_no_prep(t, p[0] * p[0], g_now, cfg) - s;
                }
            },
            &[n_est.max(0.05).sqrt()],
            no_prep.len(),
            300,
        )
        .map_err(|e| InferenceError::FitFailed(format!("occupation fit: {e}")))?;
        n_est = fit_n.params[0] * fit_n.params[0];
        n_fit_se = 2.0 * fit_n.params[0].abs() * fit_n.std_errors[0];

        // (b) heating rate from the prepared protocol at fixed n
        let n_now = n_est;
        let fit_g = levenberg_marquardt(
            |p, out| {
                for (i, &(t, s)) in with_prep.iter().enumerate() {
                    out[i] = sigma_model_with_prep(t, n_now, p[0] * p[0], cfg) - s;
                }
            },
            &[gamma.max(1e-4).sqrt()],
            with_prep.len(),
            300,
        )
        .map_err(|e| InferenceError::FitFailed(format!("heating fit: {e}")))?;
        let gamma_new = fit_g.params[0] * fit_g.params[0];
        gamma_fit_se = 2.0 * fit_g.params[0].abs() * fit_g.std_errors[0];
        trace.push(gamma_new);

        let converged = if gamma_new.max(gamma) < 1e-9 {
            true
        } else {
            (gamma_new - gamma).abs() <= 0.01 * gamma_new.max(1e-300)
        };
        gamma = gamma_new;
        if converged && round > 0 {
            return Ok(FitReport {
                model: "alternating_heating".into(),
                params: vec![
                    param("n", n_est, n_fit_se),
                    param("gamma_bg", gamma, gamma_fit_se),
                ],
                residual_rms: 0.0,
                notes: vec![format!("converged after {} rounds", round + 1)],
            });
        }
    }
    Err(InferenceError::AlternatingDiverged {
        rounds: max_rounds,
        trace,
    })
}

/// Mean and spread of a folded (|z|) readout distribution. In the well
/// separated regime μ ≥ 3σ a plain Gaussian fit is used; otherwise a
/// folded-normal likelihood is maximized and the report is flagged.
pub fn fit_folded_gaussian(abs_samples: &[f64]) -> Result<FitReport, InferenceError> {
    if abs_samples.len() < 5 {
        return Err(InferenceError::TooFewPoints {
            need: 5,
            got: abs_samples.len(),
        });
    }
    let n = abs_samples.len() as f64;
    let mean = abs_samples.iter().sum::<f64>() / n;
    let var = abs_samples
        .iter()
        .map(|x| (x - mean) * (x - mean))
        .sum::<f64>()
        / (n - 1.0);
    let sd = var.sqrt();
    if mean >= 3.0 * sd {
        return Ok(FitReport {
            model: "gaussian".into(),
            params: vec![
                param("mu", mean, sd / n.sqrt()),
                param("sigma", sd, sd / (2.0 * n).sqrt()),
            ],
            residual_rms: 0.0,
            notes: Vec::new(),
        });
    }
    // folded-normal maximum likelihood in (μ, ln σ) with analytic gradient
    let loglik = |p: &[f64]| -> f64 {
        let (mu, sigma) = (p[0], p[1].exp());
        abs_samples
            .iter()
            .map(|&x| {
                let a = (-(x - mu) * (x - mu) / (2.0 * sigma * sigma)).exp();
                let b = (-(x + mu) * (x + mu) / (2.0 * sigma * sigma)).exp();
                (((a + b) / ((2.0 * std::f64::consts::PI).sqrt() * sigma)).max(1e-300)).ln()
            })
            .sum()
    };
    let gradient = |p: &[f64]| -> Vec<f64> {
        let (mu, sigma) = (p[0], p[1].exp());
        let s2 = sigma * sigma;
        let mut g_mu = 0.0;
        let mut g_ls = 0.0;
        for &x in abs_samples {
            let a = (-(x - mu) * (x - mu) / (2.0 * s2)).exp();
            let b = (-(x + mu) * (x + mu) / (2.0 * s2)).exp();
            let w = (a + b).max(1e-300);
            g_mu += ((x - mu) * a - (x + mu) * b) / (s2 * w);
            g_ls += ((x - mu) * (x - mu) * a + (x + mu) * (x + mu) * b) / (s2 * w) - 1.0;
        }
        vec![g_mu, g_ls]
    };
    let init = [0.5 * mean, (sd.max(1e-12)).ln()];
    let tol = 1e-9 * abs_samples.len() as f64;
    let (best, _) = crate::optim::newton_maximize(loglik, gradient, &init, 200, tol)
        .map_err(|e| InferenceError::FitFailed(format!("folded-normal fit: {e}")))?;
    let (mu, sigma) = (best[0].abs(), best[1].exp());
    Ok(FitReport {
        model: "folded_gaussian".into(),
        params: vec![
            param("mu", mu, sigma / n.sqrt()),
            param("sigma", sigma, sigma / (2.0 * n).sqrt()),
        ],
        residual_rms: 0.0,
        notes: vec!["folded-normal likelihood (mu < 3 sigma regime)".into()],
    })
}
