//! Stochastic reference simulator for the protocol dynamics.
//!
//! Integrates the Langevin equations
//!
//! ```text
//! dz/dt = p/m
//! dp/dt = −mω²(t) z + m g sinθ + ξ(t),   ⟨ξ(t)ξ(0)⟩ = 2 m k_B Γ_BG δ(t)
//! ```
//!
//! with Euler–Maruyama over the state-preparation (ω = ω₁) and free-flight
//! (ω = 0) phases. This is the independent cross-check for the closed-form
//! covariance propagation in [`crate::phasespace`]; the analytic path never
//! calls into it.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::config::ProtocolConfig;
use crate::consts::KB;
use crate::phasespace::Cov2;
use crate::rng::indexed_substream;

/// Monte-Carlo estimate of the readout-time state with standard errors.
#[derive(Debug, Clone)]
pub struct LangevinEstimate {
    pub n_traj: usize,
    pub mean_z: f64,
    pub mean_p: f64,
    pub cov: Cov2,
    /// Standard errors of the covariance entries, from fourth sample moments.
    pub cov_se: Cov2,
}

/// Run `n_traj` trajectories of the full protocol and estimate the final
/// covariance. `steps_per_period` controls the state-preparation time step
/// dt = T₁/steps_per_period (the free-flight step is t_TOF/2000, capped at
/// the same dt). Deterministic in (cfg, seed) regardless of thread count.
pub fn simulate_protocol(
    cfg: &ProtocolConfig,
    n_traj: usize,
    steps_per_period: usize,
    seed: u64,
) -> LangevinEstimate {
    let period1 = 2.0 * std::f64::consts::PI / cfg.omega1;
    let dt_sp = period1 / steps_per_period as f64;
    let dt_tof = (cfg.t_tof / 2000.0).min(period1 / 200.0);
    let noise = (2.0 * cfg.m * KB * cfg.gamma_bg).sqrt();
    let force = cfg.m * cfg.g * cfg.theta.sin();
    let kappa = cfg.kappa();
    let sz0 = (kappa * crate::consts::HBAR / (2.0 * cfg.m * cfg.omega0)).sqrt();
    let sp0 = (kappa * crate::consts::HBAR * cfg.m * cfg.omega0 / 2.0).sqrt();
    let z_eq = cfg.g * cfg.theta.sin() / (cfg.omega0 * cfg.omega0);

    let finals: Vec<(f64, f64)> = (0..n_traj)
        .into_par_iter()
        .map(|i| {
            let mut rng = indexed_substream(seed, "oracle.langevin", i as u64);
            let mut z = z_eq + sz0 * rng.sample::<f64, _>(StandardNormal);
            let mut p = sp0 * rng.sample::<f64, _>(StandardNormal);

            // phase (i): harmonic at ω₁
            let k1 = cfg.m * cfg.omega1 * cfg.omega1;
            let mut remaining = cfg.t_sp;
            while remaining > 0.0 {
                let dt = dt_sp.min(remaining);
                let sqdt = dt.sqrt();
                let zn = z + p / cfg.m * dt;
                let pn = p + (-k1 * z + force) * dt
                    + noise * sqdt * rng.sample::<f64, _>(StandardNormal);
                z = zn;
                p = pn;
                remaining -= dt;
            }

            // phase (ii): free flight
            remaining = cfg.t_tof;
            while remaining > 0.0 {
                let dt = dt_tof.min(remaining);
                let sqdt = dt.sqrt();
                let zn = z + p / cfg.m * dt;
                let pn = p + force * dt + noise * sqdt * rng.sample::<f64, _>(StandardNormal);
                z = zn;
                p = pn;
                remaining -= dt;
            }
            (z, p)
        })
        .collect();

    // Fixed-order accumulation so results do not depend on thread count.
    let n = finals.len() as f64;
    let mean_z = finals.iter().map(|f| f.0).sum::<f64>() / n;
    let mean_p = finals.iter().map(|f| f.1).sum::<f64>() / n;
    let mut czz = 0.0;
    let mut czp = 0.0;
    let mut cpp = 0.0;
    for &(z, p) in &finals {
        let (dz, dp) = (z - mean_z, p - mean_p);
        czz += dz * dz;
        czp += dz * dp;
        cpp += dp * dp;
    }
    let cov = Cov2 {
        zz: czz / (n - 1.0),
        zp: czp / (n - 1.0),
        pp: cpp / (n - 1.0),
    };
    // Var(V̂_ab) ≈ (E[(Δa)²(Δb)²] − V_ab²)/n, estimated from the samples.
    let mut m22 = [0.0f64; 3];
    for &(z, p) in &finals {
        let (dz, dp) = (z - mean_z, p - mean_p);
        m22[0] += dz * dz * dz * dz;
        m22[1] += dz * dz * dp * dp;
        m22[2] += dp * dp * dp * dp;
    }
    let cov_se = Cov2 {
        zz: ((m22[0] / n - cov.zz * cov.zz).max(0.0) / n).sqrt(),
        zp: ((m22[1] / n - cov.zp * cov.zp).max(0.0) / n).sqrt(),
        pp: ((m22[2] / n - cov.pp * cov.pp).max(0.0) / n).sqrt(),
    };

    LangevinEstimate {
        n_traj,
        mean_z,
        mean_p,
        cov,
        cov_se,
    }
}
