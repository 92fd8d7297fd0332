//! Closed-form Gaussian dynamics of the z-axis center-of-mass mode through
//! state preparation, time-of-flight expansion, and recapture, including
//! gravity and background-gas heating.
//!
//! Everything here is strict SI. The state of the mode is a mean vector
//! (z [m], p [kg·m/s]) and a symmetric 2×2 covariance matrix; both phases of
//! the protocol act as affine maps (z,p) → A·(z,p) + b, and heating adds a
//! covariance increment integrated in closed form.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::ProtocolConfig;
use crate::consts::{HBAR, KB};

#[derive(Debug, Error)]
pub enum PhaseSpaceError {
    #[error("trap frequency must be positive, got {0}")]
    NonPositiveFrequency(f64),
    #[error("susceptibility is undefined at t_tof = 0")]
    UndefinedSusceptibility,
    #[error("squeezing parameter requires omega0 >= omega1 > 0, got ({0}, {1})")]
    FrequencyOrder(f64, f64),
}

/// Symmetric 2×2 covariance matrix of (z, p).
///
/// Units: `zz` [m²], `zp` [m·kg·m/s], `pp` [(kg·m/s)²].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cov2 {
    pub zz: f64,
    pub zp: f64,
    pub pp: f64,
}

impl Cov2 {
    pub fn zero() -> Self {
        Cov2 {
            zz: 0.0,
            zp: 0.0,
            pp: 0.0,
        }
    }

    pub fn diag(zz: f64, pp: f64) -> Self {
        Cov2 { zz, zp: 0.0, pp }
    }

    pub fn det(&self) -> f64 {
        self.zz * self.pp - self.zp * self.zp
    }

    pub fn add(&self, other: &Cov2) -> Cov2 {
        Cov2 {
            zz: self.zz + other.zz,
            zp: self.zp + other.zp,
            pp: self.pp + other.pp,
        }
    }
}

/// Gaussian state of the center-of-mass mode: first and second moments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianState {
    /// Mean position [m].
    pub mean_z: f64,
    /// Mean momentum [kg·m/s].
    pub mean_p: f64,
    pub cov: Cov2,
}

impl GaussianState {
    /// det(cov) ≥ (ħ/2)² within relative tolerance `tol`.
    pub fn satisfies_heisenberg(&self, tol: f64) -> bool {
        let bound = (HBAR / 2.0) * (HBAR / 2.0);
        self.cov.det() >= bound * (1.0 - tol)
    }
}

/// Affine phase-space map (z,p) → linear·(z,p) + shift.
///
/// Both protocol maps are symplectic: det(linear) = 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub linear: [[f64; 2]; 2],
    pub shift: [f64; 2],
}

impl AffineMap {
    pub fn identity() -> Self {
        AffineMap {
            linear: [[1.0, 0.0], [0.0, 1.0]],
            shift: [0.0, 0.0],
        }
    }

    pub fn det_linear(&self) -> f64 {
        self.linear[0][0] * self.linear[1][1] - self.linear[0][1] * self.linear[1][0]
    }

    pub fn apply_mean(&self, z: f64, p: f64) -> (f64, f64) {
        (
            self.linear[0][0] * z + self.linear[0][1] * p + self.shift[0],
            self.linear[1][0] * z + self.linear[1][1] * p + self.shift[1],
        )
    }

    /// A V Aᵀ for symmetric V.
    pub fn apply_cov(&self, v: &Cov2) -> Cov2 {
        let a = self.linear;
        let zz = a[0][0] * (a[0][0] * v.zz + a[0][1] * v.zp)
            + a[0][1] * (a[0][0] * v.zp + a[0][1] * v.pp);
        let zp = a[1][0] * (a[0][0] * v.zz + a[0][1] * v.zp)
            + a[1][1] * (a[0][0] * v.zp + a[0][1] * v.pp);
        let pp = a[1][0] * (a[1][0] * v.zz + a[1][1] * v.zp)
            + a[1][1] * (a[1][0] * v.zp + a[1][1] * v.pp);
        Cov2 { zz, zp, pp }
    }
}

/// Thermal state of the mode in a trap at `trap_frequency`, with the
/// gravity-shifted equilibrium mean (g·sinθ/ω², 0) and covariance
/// diag(κħ/2mω, κħmω/2), κ = 2n + 1.
pub fn thermal_state(
    cfg: &ProtocolConfig,
    trap_frequency: f64,
) -> Result<GaussianState, PhaseSpaceError> {
    if !(trap_frequency > 0.0) {
        return Err(PhaseSpaceError::NonPositiveFrequency(trap_frequency));
    }
    let kappa = cfg.kappa();
    Ok(GaussianState {
        mean_z: cfg.g * cfg.theta.sin() / (trap_frequency * trap_frequency),
        mean_p: 0.0,
        cov: Cov2::diag(
            kappa * HBAR / (2.0 * cfg.m * trap_frequency),
            kappa * HBAR * cfg.m * trap_frequency / 2.0,
        ),
    })
}

/// Harmonic evolution for `t_sp` in the ω₁ potential, tilted by θ.
pub fn state_prep_map(cfg: &ProtocolConfig) -> AffineMap {
    let (w1, t) = (cfg.omega1, cfg.t_sp);
    let (s, c) = (w1 * t).sin_cos();
    let gs = cfg.g * cfg.theta.sin();
    AffineMap {
        linear: [[c, s / (cfg.m * w1)], [-cfg.m * w1 * s, c]],
        shift: [gs * (1.0 - c) / (w1 * w1), cfg.m * gs * s / w1],
    }
}

/// Free flight for `t_tof` under the tilted gravity projection.
pub fn tof_map(cfg: &ProtocolConfig) -> AffineMap {
    let t = cfg.t_tof;
    let gs = cfg.g * cfg.theta.sin();
    AffineMap {
        linear: [[1.0, t / cfg.m], [0.0, 1.0]],
        shift: [0.5 * gs * t * t, cfg.m * gs * t],
    }
}

/// Push a Gaussian state through an affine map: mean → A·mean + b,
/// cov → A cov Aᵀ.
pub fn propagate(state: &GaussianState, map: &AffineMap) -> GaussianState {
    let (mean_z, mean_p) = map.apply_mean(state.mean_z, state.mean_p);
    GaussianState {
        mean_z,
        mean_p,
        cov: map.apply_cov(&state.cov),
    }
}

/// Covariance added by background-gas heating over the state-preparation
/// phase, integrated through the ω₁ harmonic evolution.
pub fn heating_sp(cfg: &ProtocolConfig) -> Cov2 {
    let (w1, t) = (cfg.omega1, cfg.t_sp);
    let rate = KB * cfg.gamma_bg;
    let s2 = (2.0 * w1 * t).sin();
    let c2 = (2.0 * w1 * t).cos();
    Cov2 {
        zz: rate / (cfg.m * w1 * w1) * (t - s2 / (2.0 * w1)),
        zp: rate / (2.0 * w1 * w1) * (1.0 - c2),
        pp: cfg.m * rate * (t + s2 / (2.0 * w1)),
    }
}

/// Covariance added by background-gas heating over the free expansion.
pub fn heating_tof(cfg: &ProtocolConfig) -> Cov2 {
    let t = cfg.t_tof;
    let rate = KB * cfg.gamma_bg;
    Cov2 {
        zz: 2.0 * rate / (3.0 * cfg.m) * t * t * t,
        zp: rate * t * t,
        pp: 2.0 * cfg.m * rate * t,
    }
}

/// Full protocol: thermal state at ω₀ → state preparation (+ heating) →
/// free expansion (+ heating). Returns the state at the readout instant
/// t_sp + t_tof.
pub fn run_protocol(cfg: &ProtocolConfig) -> Result<GaussianState, PhaseSpaceError> {
    let initial = thermal_state(cfg, cfg.omega0)?;
    let mut state = propagate(&initial, &state_prep_map(cfg));
    state.cov = state.cov.add(&heating_sp(cfg));
    let mut state = propagate(&state, &tof_map(cfg));
    state.cov = state.cov.add(&heating_tof(cfg));
    Ok(state)
}

/// Displacement response of the readout to a static force, dμ_z/dF [m/N].
///
/// Without preparation this is t_TOF²/2m; with preparation (t_SP at the
/// quarter period) the gravity-induced motion during the ramp-down adds the
/// (1 + ω₁t_TOF)(1/ω₁² − 1/ω₀²) term. Small-angle regime: dF = mg·dθ.
pub fn susceptibility_theory(cfg: &ProtocolConfig, with_prep: bool) -> f64 {
    let t = cfg.t_tof;
    if with_prep {
        let (w0, w1) = (cfg.omega0, cfg.omega1);
        ((1.0 + w1 * t) * (1.0 / (w1 * w1) - 1.0 / (w0 * w0)) + 0.5 * t * t) / cfg.m
    } else {
        0.5 * t * t / cfg.m
    }
}

/// Theoretical per-shot force sensitivity S = σ_z / |dμ_z/dF| [N] in the
/// long-TOF regime, where the position spread at readout is dominated by the
/// momentum spread at release mapped through t_TOF/m (the release-position
/// variance drops out). `with_prep` selects t_SP = π/2ω₁ versus t_SP = 0.
///
/// At n = 0 and Γ_BG = 0 this reduces exactly to √(2mħω₀)/t_TOF without
/// preparation, and approaches that bound scaled by ω₁/ω₀ with preparation.
pub fn sensitivity_theory(cfg: &ProtocolConfig, with_prep: bool) -> Result<f64, PhaseSpaceError> {
    if cfg.t_tof <= 0.0 {
        return Err(PhaseSpaceError::UndefinedSusceptibility);
    }
    let canonical = if with_prep {
        cfg.with_prep()
    } else {
        cfg.without_prep()
    };
    let initial = thermal_state(&canonical, canonical.omega0)?;
    let after_sp = propagate(&initial, &state_prep_map(&canonical))
        .cov
        .add(&heating_sp(&canonical));
    let t_over_m = canonical.t_tof / canonical.m;
    let sigma_sq = t_over_m * t_over_m * after_sp.pp + heating_tof(&canonical).zz;
    Ok(sigma_sq.sqrt() / susceptibility_theory(&canonical, with_prep))
}

/// Squeezing parameter of the abrupt frequency drop, r = ½ ln(ω₀/ω₁).
pub fn squeezing_parameter(omega0: f64, omega1: f64) -> Result<f64, PhaseSpaceError> {
    if !(omega1 > 0.0) || omega0 < omega1 {
        return Err(PhaseSpaceError::FrequencyOrder(omega0, omega1));
    }
    Ok(0.5 * (omega0 / omega1).ln())
}

/// Minimum position spread after TOF as a function of the squeezing
/// parameter, σ_z = √((κħ/2mω₀)[e^{4r} + (ω₀t_TOF)² e^{−4r}]).
pub fn sigma_z_min_model(r: f64, cfg: &ProtocolConfig) -> f64 {
    let kappa = cfg.kappa();
    let w0t = cfg.omega0 * cfg.t_tof;
    (kappa * HBAR / (2.0 * cfg.m * cfg.omega0) * ((4.0 * r).exp() + w0t * w0t * (-4.0 * r).exp()))
        .sqrt()
}

/// The squeezing parameter minimizing [`sigma_z_min_model`]: r* = ¼ ln(ω₀t_TOF).
pub fn optimal_squeezing(cfg: &ProtocolConfig) -> f64 {
    0.25 * (cfg.omega0 * cfg.t_tof).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::f64::consts::PI;

    fn cfg() -> ProtocolConfig {
        ProtocolConfig::nominal()
    }

    #[test]
    fn thermal_ground_state_level_trap() {
        let mut c = cfg();
        c.n = 0.0;
        c.theta = 0.0;
        let s = thermal_state(&c, c.omega0).unwrap();
        assert_eq!(s.mean_z, 0.0);
        assert_eq!(s.mean_p, 0.0);
        assert_relative_eq!(s.cov.zz, HBAR / (2.0 * c.m * c.omega0), max_relative = 1e-15);
        assert_relative_eq!(s.cov.pp, HBAR * c.m * c.omega0 / 2.0, max_relative = 1e-15);
        assert!(s.satisfies_heisenberg(1e-12));
    }

    #[test]
    fn thermal_occupation_scales_momentum_variance() {
        let c = cfg(); // n = 0.75 → κ = 2.5
        let s = thermal_state(&c, c.omega0).unwrap();
        assert_relative_eq!(
            s.cov.pp,
            2.5 * HBAR * c.m * c.omega0 / 2.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn thermal_numeric_values_nominal() {
        // Direct formula evaluation at n = 0.75, m = 3.2e-17 kg, ω₀ = 2π·221 kHz.
        let c = cfg();
        let s = thermal_state(&c, c.omega0).unwrap();
        let kappa = 2.5;
        let vzz = kappa * 1.054_571_817e-34 / (2.0 * 3.2e-17 * (2.0 * PI * 221e3));
        let vpp = kappa * 1.054_571_817e-34 * 3.2e-17 * (2.0 * PI * 221e3) / 2.0;
        assert_relative_eq!(s.cov.zz, vzz, max_relative = 1e-14);
        assert_relative_eq!(s.cov.pp, vpp, max_relative = 1e-14);
        assert_abs_diff_eq!(vzz, 2.966_6e-24, epsilon = 1e-27);
    }

    #[test]
    fn thermal_rejects_nonpositive_frequency() {
        assert!(thermal_state(&cfg(), 0.0).is_err());
        assert!(thermal_state(&cfg(), -1.0).is_err());
    }

    #[test]
    fn state_prep_map_limits() {
        let mut c = cfg();
        c.t_sp = 0.0;
        assert_eq!(state_prep_map(&c), AffineMap::identity());

        c.t_sp = PI / (2.0 * c.omega1);
        let map = state_prep_map(&c);
        let gs = c.g * c.theta.sin();
        assert_abs_diff_eq!(map.linear[0][0], 0.0, epsilon = 1e-12);
        assert_relative_eq!(map.linear[0][1], 1.0 / (c.m * c.omega1), max_relative = 1e-12);
        assert_relative_eq!(map.linear[1][0], -c.m * c.omega1, max_relative = 1e-12);
        assert_relative_eq!(map.shift[0], gs / (c.omega1 * c.omega1), max_relative = 1e-12);
        assert_relative_eq!(map.shift[1], c.m * gs / c.omega1, max_relative = 1e-12);
    }

    #[test]
    fn tof_map_limits() {
        let mut c = cfg();
        c.t_tof = 0.0;
        assert_eq!(tof_map(&c), AffineMap::identity());

        c = cfg();
        c.theta = 0.0;
        let map = tof_map(&c);
        assert_eq!(map.shift, [0.0, 0.0]);
        assert_eq!(map.linear[0][1], c.t_tof / c.m);

        // Formula evaluation at t_TOF = 100 µs, θ = −2.62°, g = 9.798.
        let map = tof_map(&cfg());
        assert_relative_eq!(map.shift[0], -2.2397e-9, max_relative = 1e-3);
    }

    #[test]
    fn maps_are_symplectic() {
        for k in 0..200 {
            let mut c = cfg();
            c.t_sp = k as f64 * 1.7e-7;
            c.t_tof = k as f64 * 3.1e-6;
            assert_relative_eq!(state_prep_map(&c).det_linear(), 1.0, max_relative = 1e-12);
            assert_relative_eq!(tof_map(&c).det_linear(), 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn propagate_identity_is_noop() {
        let s = thermal_state(&cfg(), cfg().omega0).unwrap();
        assert_eq!(propagate(&s, &AffineMap::identity()), s);
    }

    #[test]
    fn quarter_period_swaps_momentum_variance() {
        let mut c = cfg();
        c.n = 0.0;
        c.t_sp = PI / (2.0 * c.omega1);
        let s = thermal_state(&c, c.omega0).unwrap();
        let out = propagate(&s, &state_prep_map(&c));
        let expect = (HBAR * c.m * c.omega0 / 2.0) * (c.omega1 / c.omega0).powi(2);
        assert_relative_eq!(out.cov.pp, expect, max_relative = 1e-12);
    }

    #[test]
    fn propagate_matches_closed_form_sp_covariance() {
        // A₁ V A₁ᵀ against the three explicit closed forms on a (t_sp, ω₁) grid.
        let base = cfg();
        let kappa = base.kappa();
        for i in 0..12 {
            for j in 1..8 {
                let mut c = base;
                c.t_sp = i as f64 * 9.3e-7;
                c.omega1 = j as f64 * 0.11 * base.omega0;
                let (s, co) = (c.omega1 * c.t_sp).sin_cos();
                let pref = kappa * HBAR / (2.0 * c.m * c.omega0);
                let vzz = pref * (co * co + (c.omega0 / c.omega1).powi(2) * s * s);
                let vzp = kappa * HBAR / 4.0 * (c.omega0 / c.omega1 - c.omega1 / c.omega0)
                    * (2.0 * c.omega1 * c.t_sp).sin();
                let vpp = kappa * HBAR * c.m * c.omega0 / 2.0
                    * (co * co + (c.omega1 / c.omega0).powi(2) * s * s);
                let out = propagate(
                    &thermal_state(&c, c.omega0).unwrap(),
                    &state_prep_map(&c),
                );
                assert_relative_eq!(out.cov.zz, vzz, max_relative = 1e-12);
                assert_abs_diff_eq!(out.cov.zp, vzp, epsilon = 1e-12 * (vzz * vpp).sqrt());
                assert_relative_eq!(out.cov.pp, vpp, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn sp_then_tof_matches_closed_form_vzz() {
        // Quarter-period preparation then TOF against the closed form
        // (κħ/2mω₀)[(ω₀/ω₁)² + (ω₁ t_TOF)²].
        let mut c = cfg();
        c.gamma_bg = 0.0;
        c.t_sp = PI / (2.0 * c.omega1);
        let s = thermal_state(&c, c.omega0).unwrap();
        let s = propagate(&s, &state_prep_map(&c));
        let s = propagate(&s, &tof_map(&c));
        let w0t = c.omega0 * c.t_tof;
        let expect = c.kappa() * HBAR / (2.0 * c.m * c.omega0)
            * ((c.omega0 / c.omega1).powi(2) + (c.omega1 * c.t_tof).powi(2));
        assert_relative_eq!(s.cov.zz, expect, max_relative = 1e-12);
        // and the no-preparation closed form (κħ/2mω₀)(1 + (ω₀t)²)
        let c0 = c.without_prep();
        let s0 = run_protocol(&ProtocolConfig { gamma_bg: 0.0, ..c0 }).unwrap();
        let expect0 = c.kappa() * HBAR / (2.0 * c.m * c.omega0) * (1.0 + w0t * w0t);
        assert_relative_eq!(s0.cov.zz, expect0, max_relative = 1e-12);
    }

    #[test]
    fn purity_preserved_without_heating() {
        let mut c = cfg();
        c.gamma_bg = 0.0;
        let s = thermal_state(&c, c.omega0).unwrap();
        let det0 = s.cov.det();
        for k in 0..50 {
            let mut ck = c;
            ck.t_sp = k as f64 * 4.1e-7;
            ck.t_tof = k as f64 * 7.7e-6;
            let out = propagate(
                &propagate(&s, &state_prep_map(&ck)),
                &tof_map(&ck),
            );
            assert_relative_eq!(out.cov.det(), det0, max_relative = 1e-10);
        }
    }

    #[test]
    fn heating_sp_zero_cases() {
        let mut c = cfg();
        c.gamma_bg = 0.0;
        assert_eq!(heating_sp(&c), Cov2::zero());
        c = cfg();
        c.t_sp = 0.0;
        assert_eq!(heating_sp(&c), Cov2::zero());
    }

    #[test]
    fn heating_sp_half_period() {
        let mut c = cfg();
        c.t_sp = PI / c.omega1; // sin(2ω₁t) = 0, cos(2ω₁t) = 1
        let h = heating_sp(&c);
        assert_relative_eq!(
            h.zz,
            KB * c.gamma_bg * c.t_sp / (c.m * c.omega1 * c.omega1),
            max_relative = 1e-10
        );
        assert_abs_diff_eq!(h.zp, 0.0, epsilon = 1e-10 * h.pp.max(h.zz));
        assert_relative_eq!(h.pp, c.m * KB * c.gamma_bg * c.t_sp, max_relative = 1e-10);
    }

    #[test]
    fn heating_tof_scaling_and_value() {
        let mut c = cfg();
        c.t_tof = 0.0;
        assert_eq!(heating_tof(&c), Cov2::zero());

        c = cfg();
        let h1 = heating_tof(&c);
        c.t_tof *= 2.0;
        let h2 = heating_tof(&c);
        assert_relative_eq!(h2.zz, 8.0 * h1.zz, max_relative = 1e-12);

        // Γ_BG = 16 mK/s, t_TOF = 100 µs, m = 3.2e-17 kg.
        let expect = 2.0 * 1.380_649e-23 * 0.016 / (3.0 * 3.2e-17) * 1e-12;
        assert_relative_eq!(h1.zz, expect, max_relative = 1e-12);
        assert_relative_eq!(expect, 4.6022e-21, max_relative = 1e-4);
    }

    #[test]
    fn protocol_states_respect_heisenberg() {
        for n in [0.0, 0.3, 0.75, 4.0] {
            let mut c = cfg();
            c.n = n;
            c.t_sp = c.quarter_period();
            let s = run_protocol(&c).unwrap();
            assert!(s.satisfies_heisenberg(1e-12));
        }
    }

    #[test]
    fn susceptibility_values() {
        let c = cfg();
        let no_prep = susceptibility_theory(&c, false);
        assert_relative_eq!(no_prep, 1.5625e8, max_relative = 1e-12);
        let with_prep = susceptibility_theory(&c, true);
        assert_relative_eq!(with_prep, 1.6976e8, max_relative = 1e-3);
        let mut c0 = c;
        c0.t_tof = 0.0;
        assert_eq!(susceptibility_theory(&c0, false), 0.0);
    }

    #[test]
    fn sensitivity_zero_point_bound() {
        let mut c = cfg();
        c.n = 0.0;
        c.gamma_bg = 0.0;
        let s = sensitivity_theory(&c, false).unwrap();
        let bound = (2.0 * c.m * HBAR * c.omega0).sqrt() / c.t_tof;
        assert_relative_eq!(s, bound, max_relative = 1e-12);
        assert_relative_eq!(s, 9.681e-19, max_relative = 1e-3);

        // with preparation, long TOF: scaled by ω₁/ω₀
        c.t_tof = 5e-3;
        let s1 = sensitivity_theory(&c, true).unwrap();
        let bound_long = (2.0 * c.m * HBAR * c.omega0).sqrt() / c.t_tof;
        assert_relative_eq!(s1, bound_long * c.omega1 / c.omega0, max_relative = 1e-2);
    }

    #[test]
    fn sensitivity_rejects_zero_tof() {
        let mut c = cfg();
        c.t_tof = 0.0;
        assert!(matches!(
            sensitivity_theory(&c, false),
            Err(PhaseSpaceError::UndefinedSusceptibility)
        ));
    }

    #[test]
    fn squeezing_parameter_values() {
        let c = cfg();
        assert_eq!(squeezing_parameter(c.omega0, c.omega0).unwrap(), 0.0);
        let r = squeezing_parameter(c.omega0, c.omega1).unwrap();
        assert_relative_eq!(r, 0.890, max_relative = 1e-3);
        let e2 = std::f64::consts::E * std::f64::consts::E;
        assert_relative_eq!(squeezing_parameter(e2, 1.0).unwrap(), 1.0, max_relative = 1e-15);
        assert!(squeezing_parameter(1.0, 2.0).is_err());
    }

    #[test]
    fn sigma_z_min_model_properties() {
        let c = cfg();
        let w0t = c.omega0 * c.t_tof;
        let no_prep_var = c.kappa() * HBAR / (2.0 * c.m * c.omega0) * (1.0 + w0t * w0t);
        assert_relative_eq!(sigma_z_min_model(0.0, &c), no_prep_var.sqrt(), max_relative = 1e-12);

        let r_star = optimal_squeezing(&c);
        assert_relative_eq!(r_star, 1.23, max_relative = 5e-3);
        // monotone decreasing below r*
        let mut prev = sigma_z_min_model(0.0, &c);
        for k in 1..20 {
            let r = r_star * k as f64 / 20.0;
            let v = sigma_z_min_model(r, &c);
            assert!(v < prev);
            prev = v;
        }
        assert!(sigma_z_min_model(r_star + 0.3, &c) > sigma_z_min_model(r_star, &c));
    }
}
