//! Synthetic experiment generator: per-shot readout outcomes, phase-resolved
//! quadrature sinograms, and long force time series for stability studies.
//!
//! Shots are drawn from the exact Gaussian law of the protocol's final state
//! (the stochastic trajectory integrator lives in [`crate::oracle`] and is
//! used only as a cross-check). All sampling is deterministic in
//! (config, seed) and independent of thread count.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::ProtocolConfig;
use crate::phasespace::{run_protocol, PhaseSpaceError};
use crate::rng::indexed_substream;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("shot count must be >= 1")]
    EmptyRequest,
    #[error("velocity requires t_tof > 0")]
    ZeroTof,
    #[error("need at least two phases, got {0}")]
    TooFewPhases(usize),
    #[error("phases with fewer than 2 shots: {0:?}")]
    UnderpopulatedPhases(Vec<usize>),
    #[error(transparent)]
    PhaseSpace(#[from] PhaseSpaceError),
    #[error("time series needs duration*f_s >= 10, got {0}")]
    SeriesTooShort(f64),
}

/// One protocol execution: readout position and derived velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub t_sp: f64,
    pub t_tof: f64,
    /// Signed readout position [m] (noise floor included).
    pub z_meas: f64,
}

impl ShotRecord {
    /// |v| = |z|/t_TOF, the folded velocity readout.
    pub fn v_meas(&self) -> Result<f64, SynthError> {
        if self.t_tof <= 0.0 {
            return Err(SynthError::ZeroTof);
        }
        Ok(self.z_meas / self.t_tof)
    }
}

/// Absolute-value view of the readout, |z_meas|, as used by the folded
/// mean/spread fits. Tomography keeps the signed values.
pub fn abs_view(shots: &[ShotRecord]) -> Vec<f64> {
    shots.iter().map(|s| s.z_meas.abs()).collect()
}

/// Draw `count` independent shots of the protocol defined by `cfg`
/// (including its `t_sp`), adding the Gaussian noise floor.
pub fn sample_shots(
    cfg: &ProtocolConfig,
    count: usize,
    seed: u64,
) -> Result<Vec<ShotRecord>, SynthError> {
    if count == 0 {
        return Err(SynthError::EmptyRequest);
    }
    let state = run_protocol(cfg)?;
    let sigma = state.cov.zz.sqrt();
    let shots = (0..count)
        .map(|i| {
            let mut rng = indexed_substream(seed, "synthlab.shots", i as u64);
            let z = state.mean_z
                + sigma * rng.sample::<f64, _>(StandardNormal)
                + cfg.noise_floor * rng.sample::<f64, _>(StandardNormal);
            ShotRecord {
                t_sp: cfg.t_sp,
                t_tof: cfg.t_tof,
                z_meas: z,
            }
        })
        .collect();
    Ok(shots)
}

/// Tomography phase of a readout at state-preparation time `t_sp`:
/// φ = ω t_SP − arctan(1/(ω t_TOF)), with ω = ω₁ (prepared) or ω₀ (bare).
pub fn phase_of(t_sp: f64, cfg: &ProtocolConfig, with_prep: bool) -> Result<f64, SynthError> {
    if cfg.t_tof <= 0.0 {
        return Err(SynthError::ZeroTof);
    }
    let omega = if with_prep { cfg.omega1 } else { cfg.omega0 };
    Ok(omega * t_sp - (1.0 / (omega * cfg.t_tof)).atan())
}

/// Shots sharing one state-preparation time.
#[derive(Debug, Clone)]
pub struct PhaseGroup {
    pub t_sp: f64,
    pub z_meas: Vec<f64>,
}

/// One phase-resolved quadrature histogram (sparse: only populated bins).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub centers: Vec<f64>,
    pub counts: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinogramMeta {
    /// Trap frequency used for the zpf normalization [rad/s].
    pub omega: f64,
    pub t_tof: f64,
    pub centered: bool,
    pub seed: Option<u64>,
    /// Set when the bin-width rule degenerated (constant data fallback).
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub degenerate_delta: bool,
}

/// Phase-resolved, binned quadrature histograms: the tomography input.
///
/// All histograms share one bin width `delta`; bin centers sit on the global
/// grid (k + ½)·delta. Counts are stored as f64 so that expected-count
/// (non-integer) sinograms can be represented in tests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sinogram {
    pub phases: Vec<f64>,
    pub delta: f64,
    pub histograms: Vec<Histogram>,
    pub meta: SinogramMeta,
}

impl Sinogram {
    pub fn total_counts(&self) -> f64 {
        self.histograms
            .iter()
            .map(|h| h.counts.iter().sum::<f64>())
            .sum()
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let mut bad = Vec::new();
        for (i, h) in self.histograms.iter().enumerate() {
            if h.counts.iter().sum::<f64>() <= 0.0 || h.counts.iter().any(|&c| c < 0.0) {
                bad.push(i);
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(SynthError::UnderpopulatedPhases(bad))
        }
    }
}

/// Map a readout position to the zpf-normalized quadrature:
/// p̃ = z_meas / (√(ħ/2mω) · √(1 + (ω t_TOF)²)).
pub fn quadrature_of_z(z_meas: f64, cfg: &ProtocolConfig, omega: f64) -> f64 {
    let scale = cfg.zpf_z(omega) * (1.0 + (omega * cfg.t_tof).powi(2)).sqrt();
    z_meas / scale
}

/// Build a sinogram from shots grouped by `t_sp`.
///
/// Each group is converted to quadratures, centered by subtracting its mean
/// (before binning), and binned on a common grid with
/// Δ = 0.2 × min over phases of the per-phase sample standard deviation.
pub fn build_sinogram(
    groups: &[PhaseGroup],
    cfg: &ProtocolConfig,
    with_prep: bool,
    seed: Option<u64>,
) -> Result<Sinogram, SynthError> {
    if groups.len() < 2 {
        return Err(SynthError::TooFewPhases(groups.len()));
    }
    let under: Vec<usize> = groups
        .iter()
        .enumerate()
        .filter(|(_, g)| g.z_meas.len() < 2)
        .map(|(i, _)| i)
        .collect();
    if !under.is_empty() {
        return Err(SynthError::UnderpopulatedPhases(under));
    }
    let omega = if with_prep { cfg.omega1 } else { cfg.omega0 };

    let mut phases = Vec::with_capacity(groups.len());
    let mut centered: Vec<Vec<f64>> = Vec::with_capacity(groups.len());
    let mut min_std = f64::INFINITY;
    for g in groups {
        phases.push(phase_of(g.t_sp, cfg, with_prep)?);
        let quads: Vec<f64> = g
            .z_meas
            .iter()
            .map(|&z| quadrature_of_z(z, cfg, omega))
            .collect();
        let mean = quads.iter().sum::<f64>() / quads.len() as f64;
        let var = quads.iter().map(|q| (q - mean) * (q - mean)).sum::<f64>()
            / (quads.len() - 1) as f64;
        min_std = min_std.min(var.sqrt());
        centered.push(quads.into_iter().map(|q| q - mean).collect());
    }

    // Δ rule, with a fallback for degenerate (constant) input.
    let degenerate = !(min_std > 0.0);
    let delta = if degenerate { 1e-6 } else { 0.2 * min_std };

    let histograms = centered
        .iter()
        .map(|quads| bin_on_grid(quads, delta))
        .collect();

    Ok(Sinogram {
        phases,
        delta,
        histograms,
        meta: SinogramMeta {
            omega,
            t_tof: cfg.t_tof,
            centered: true,
            seed,
            degenerate_delta: degenerate,
        },
    })
}

/// Histogram values on the global grid with bin k covering
/// [kΔ, (k+1)Δ) and center (k + ½)Δ. Sparse, ordered by bin index.
pub fn bin_on_grid(values: &[f64], delta: f64) -> Histogram {
    let mut counts = std::collections::BTreeMap::<i64, f64>::new();
    for &v in values {
        let k = (v / delta).floor() as i64;
        *counts.entry(k).or_insert(0.0) += 1.0;
    }
    Histogram {
        centers: counts
            .keys()
            .map(|&k| (k as f64 + 0.5) * delta)
            .collect(),
        counts: counts.into_values().collect(),
    }
}

/// Slow drift added to synthetic force series to emulate setup instability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftConfig {
    /// Linear drift rate [N/s].
    pub linear_rate: f64,
    /// Sinusoidal drift amplitude [N].
    pub sin_amplitude: f64,
    /// Sinusoidal drift period [s].
    pub sin_period: f64,
}

impl DriftConfig {
    pub fn none() -> Self {
        DriftConfig {
            linear_rate: 0.0,
            sin_amplitude: 0.0,
            sin_period: 1.0,
        }
    }
}

/// Per-sample force estimates F̂ = z_meas/(dμ_z/dF) at rate `f_s`, from
/// independent protocol shots, plus the configured drift. The per-sample
/// standard deviation equals the per-shot sensitivity σ_z/(dμ_z/dF).
pub fn timeseries_for_allan(
    cfg: &ProtocolConfig,
    duration: f64,
    f_s: f64,
    seed: u64,
    drift: &DriftConfig,
    with_prep: bool,
) -> Result<Vec<f64>, SynthError> {
    let count = (duration * f_s).floor() as usize;
    if (count as f64) < 10.0 {
        return Err(SynthError::SeriesTooShort(duration * f_s));
    }
    let state = run_protocol(cfg)?;
    let sigma = state.cov.zz.sqrt();
    let susceptibility = crate::phasespace::susceptibility_theory(cfg, with_prep);
    let series = (0..count)
        .map(|i| {
            let mut rng = indexed_substream(seed, "synthlab.series", i as u64);
            let z = state.mean_z
                + sigma * rng.sample::<f64, _>(StandardNormal)
                + cfg.noise_floor * rng.sample::<f64, _>(StandardNormal);
            let t = i as f64 / f_s;
            z / susceptibility
                + drift.linear_rate * t
                + drift.sin_amplitude * (2.0 * std::f64::consts::PI * t / drift.sin_period).sin()
        })
        .collect();
    Ok(series)
}

/// State-preparation times whose tomography phases sweep [0, π) in `count`
/// uniform steps.
pub fn tomography_tsp_grid(cfg: &ProtocolConfig, with_prep: bool, count: usize) -> Vec<f64> {
    let omega = if with_prep { cfg.omega1 } else { cfg.omega0 };
    let correction = (1.0 / (omega * cfg.t_tof)).atan();
    (0..count)
        .map(|j| (std::f64::consts::PI * j as f64 / count as f64 + correction) / omega)
        .collect()
}

/// Simulate a full tomography run: `shots_per_phase` shots at each of the
/// `phases` state-preparation times, returned with the assembled sinogram.
pub fn simulate_sinogram(
    cfg: &ProtocolConfig,
    phases: usize,
    shots_per_phase: usize,
    with_prep: bool,
    seed: u64,
) -> Result<(Vec<PhaseGroup>, Sinogram), SynthError> {
    if phases < 2 {
        return Err(SynthError::TooFewPhases(phases));
    }
    // without preparation the trap stays at ω₀ during the pre-release delay
    let dyn_cfg = if with_prep {
        *cfg
    } else {
        ProtocolConfig {
            omega1: cfg.omega0,
            ..*cfg
        }
    };
    let grid = tomography_tsp_grid(cfg, with_prep, phases);
    let mut groups = Vec::with_capacity(phases);
    for (idx, &t_sp) in grid.iter().enumerate() {
        let cfg_i = ProtocolConfig { t_sp, ..dyn_cfg };
        let shots = sample_shots(&cfg_i, shots_per_phase, seed.wrapping_add(idx as u64))?;
        groups.push(PhaseGroup {
            t_sp,
            z_meas: shots.iter().map(|s| s.z_meas).collect(),
        });
    }
    let sino = build_sinogram(&groups, cfg, with_prep, Some(seed))?;
    Ok((groups, sino))
}

/// Quadrature samples (p̃, φ) of a simulated run, centered per phase exactly
/// as [`build_sinogram`] centers them.
pub fn quadrature_samples(
    groups: &[PhaseGroup],
    cfg: &ProtocolConfig,
    with_prep: bool,
) -> Result<Vec<(f64, f64)>, SynthError> {
    let omega = if with_prep { cfg.omega1 } else { cfg.omega0 };
    let mut out = Vec::new();
    for g in groups {
        let phi = phase_of(g.t_sp, cfg, with_prep)?;
        let quads: Vec<f64> = g
            .z_meas
            .iter()
            .map(|&z| quadrature_of_z(z, cfg, omega))
            .collect();
        let mean = quads.iter().sum::<f64>() / quads.len() as f64;
        out.extend(quads.into_iter().map(|q| (q - mean, phi)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consts::HBAR;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn cfg() -> ProtocolConfig {
        ProtocolConfig::nominal()
    }

    #[test]
    fn shots_match_closed_form_variance() {
        let mut c = cfg();
        c.gamma_bg = 0.0;
        c.noise_floor = 0.0;
        c.theta = 0.0;
        c.t_sp = 0.0;
        let shots = sample_shots(&c, 200_000, 11).unwrap();
        let mean = shots.iter().map(|s| s.z_meas).sum::<f64>() / shots.len() as f64;
        let var = shots
            .iter()
            .map(|s| (s.z_meas - mean).powi(2))
            .sum::<f64>()
            / (shots.len() - 1) as f64;
        let w0t = c.omega0 * c.t_tof;
        let expect = c.kappa() * HBAR / (2.0 * c.m * c.omega0) * (1.0 + w0t * w0t);
        assert_relative_eq!(var, expect, max_relative = 0.01);
    }

    #[test]
    fn shots_mean_tracks_ballistic_offset() {
        let mut c = cfg();
        c.t_sp = 0.0;
        c.noise_floor = 0.0;
        let shots = sample_shots(&c, 150_000, 4).unwrap();
        let mean = shots.iter().map(|s| s.z_meas).sum::<f64>() / shots.len() as f64;
        let gs = c.g * c.theta.sin();
        let expect = gs / (c.omega0 * c.omega0) + 0.5 * gs * c.t_tof * c.t_tof;
        let sigma = (c.kappa() * HBAR / (2.0 * c.m * c.omega0)
            * (1.0 + (c.omega0 * c.t_tof).powi(2)))
        .sqrt();
        assert_abs_diff_eq!(mean, expect, epsilon = 4.0 * sigma / (shots.len() as f64).sqrt());
    }

    #[test]
    fn zero_count_rejected() {
        assert!(matches!(
            sample_shots(&cfg(), 0, 1),
            Err(SynthError::EmptyRequest)
        ));
    }

    #[test]
    fn shots_are_deterministic() {
        let a = sample_shots(&cfg(), 64, 77).unwrap();
        let b = sample_shots(&cfg(), 64, 77).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn phase_map_values() {
        let c = cfg();
        // ω₁ t_TOF = 1 → correction π/4
        let mut c1 = c;
        c1.t_tof = 1.0 / c.omega1;
        let phi = phase_of(2e-6, &c1, true).unwrap();
        assert_relative_eq!(
            phi,
            c.omega1 * 2e-6 - std::f64::consts::FRAC_PI_4,
            max_relative = 1e-12
        );
        // long TOF → φ → ω₁ t_SP
        let mut c2 = c;
        c2.t_tof = 1.0;
        let phi = phase_of(2e-6, &c2, true).unwrap();
        assert_abs_diff_eq!(phi, c.omega1 * 2e-6, epsilon = 1e-5);
        // nominal correction ≈ 0.0426 rad
        let corr = c.omega1 * 0.0 - phase_of(0.0, &c, true).unwrap();
        assert_relative_eq!(corr, 0.042644, max_relative = 1e-3);
        let mut c3 = c;
        c3.t_tof = 0.0;
        assert!(phase_of(0.0, &c3, true).is_err());
    }

    #[test]
    fn sinogram_ground_state_unit_variance() {
        let mut c = cfg();
        c.n = 0.0;
        c.gamma_bg = 0.0;
        c.noise_floor = 0.0;
        let (groups, sino) = simulate_sinogram(&c, 12, 600, false, 21).unwrap();
        assert_eq!(groups.len(), 12);
        // per-phase sample variance is unity within sampling noise
        // (se ≈ √(2/600) ≈ 5.8% per phase), pooled within 5%
        let mut pooled = 0.0;
        let mut pooled_n = 0.0;
        for h in &sino.histograms {
            let n: f64 = h.counts.iter().sum();
            let mean: f64 = h
                .centers
                .iter()
                .zip(&h.counts)
                .map(|(c, f)| c * f)
                .sum::<f64>()
                / n;
            let var: f64 = h
                .centers
                .iter()
                .zip(&h.counts)
                .map(|(c, f)| f * (c - mean) * (c - mean))
                .sum::<f64>()
                / (n - 1.0);
            let se = (2.0 / n).sqrt();
            assert_relative_eq!(var, 1.0, max_relative = 3.0 * se);
            pooled += var * n;
            pooled_n += n;
        }
        assert_relative_eq!(pooled / pooled_n, 1.0, max_relative = 0.05);
    }

    #[test]
    fn sinogram_squeezed_variance_oscillates_at_2_omega1() {
        let mut c = cfg();
        c.gamma_bg = 0.0;
        c.noise_floor = 0.0;
        let (groups, sino) = simulate_sinogram(&c, 40, 600, true, 5).unwrap();
        // regress per-phase variance on (1, cos 2ω₁t_SP, sin 2ω₁t_SP)
        let vars: Vec<f64> = sino
            .histograms
            .iter()
            .map(|h| {
                let n: f64 = h.counts.iter().sum();
                let mean: f64 =
                    h.centers.iter().zip(&h.counts).map(|(c, f)| c * f).sum::<f64>() / n;
                h.centers
                    .iter()
                    .zip(&h.counts)
                    .map(|(c, f)| f * (c - mean) * (c - mean))
                    .sum::<f64>()
                    / (n - 1.0)
            })
            .collect();
        let design: Vec<[f64; 3]> = groups
            .iter()
            .map(|g| {
                let x = 2.0 * c.omega1 * g.t_sp;
                [1.0, x.cos(), x.sin()]
            })
            .collect();
        // normal equations for the 3-parameter fit
        let mut ata = [[0.0f64; 3]; 3];
        let mut aty = [0.0f64; 3];
        for (row, y) in design.iter().zip(&vars) {
            for a in 0..3 {
                for b in 0..3 {
                    ata[a][b] += row[a] * row[b];
                }
                aty[a] += row[a] * y;
            }
        }
        let beta = crate::stats::solve3(ata, aty).unwrap();
        let fitted: Vec<f64> = design
            .iter()
            .map(|r| r[0] * beta[0] + r[1] * beta[1] + r[2] * beta[2])
            .collect();
        let mean_v = vars.iter().sum::<f64>() / vars.len() as f64;
        let ss_tot: f64 = vars.iter().map(|v| (v - mean_v).powi(2)).sum();
        let ss_res: f64 = vars
            .iter()
            .zip(&fitted)
            .map(|(v, f)| (v - f).powi(2))
            .sum();
        let r2 = 1.0 - ss_res / ss_tot;
        assert!(r2 > 0.9, "R² = {r2}");
        // oscillation amplitude consistent with the squeezing ratio
        assert!(beta[1].hypot(beta[2]) > 0.2 * beta[0]);
    }

    #[test]
    fn sinogram_constant_shots_degenerate_delta() {
        let c = cfg();
        let groups: Vec<PhaseGroup> = (0..3)
            .map(|i| PhaseGroup {
                t_sp: i as f64 * 1e-6,
                z_meas: vec![5e-9; 10],
            })
            .collect();
        let sino = build_sinogram(&groups, &c, true, None).unwrap();
        assert!(sino.meta.degenerate_delta);
        assert_eq!(sino.delta, 1e-6);
        for h in &sino.histograms {
            assert_eq!(h.counts.len(), 1); // all mass in one bin after centering
            assert_eq!(h.counts[0], 10.0);
        }
    }

    #[test]
    fn sinogram_rejects_thin_input() {
        let c = cfg();
        let one = vec![PhaseGroup {
            t_sp: 0.0,
            z_meas: vec![1e-9; 5],
        }];
        assert!(matches!(
            build_sinogram(&one, &c, true, None),
            Err(SynthError::TooFewPhases(1))
        ));
        let thin = vec![
            PhaseGroup {
                t_sp: 0.0,
                z_meas: vec![1e-9; 5],
            },
            PhaseGroup {
                t_sp: 1e-6,
                z_meas: vec![1e-9],
            },
        ];
        match build_sinogram(&thin, &c, true, None) {
            Err(SynthError::UnderpopulatedPhases(idx)) => assert_eq!(idx, vec![1]),
            other => panic!("expected underpopulated error, got {other:?}"),
        }
    }

    #[test]
    fn centering_is_idempotent_up_to_rebinning() {
        let mut c = cfg();
        c.noise_floor = 0.0;
        let (groups, sino) = simulate_sinogram(&c, 8, 400, true, 9).unwrap();
        // re-center already centered quadratures: identical bin counts
        let omega = c.omega1;
        let scale = c.zpf_z(omega) * (1.0 + (omega * c.t_tof).powi(2)).sqrt();
        let centered_groups: Vec<PhaseGroup> = groups
            .iter()
            .map(|g| {
                let mean = g.z_meas.iter().sum::<f64>() / g.z_meas.len() as f64;
                PhaseGroup {
                    t_sp: g.t_sp,
                    z_meas: g.z_meas.iter().map(|z| z - mean).collect(),
                }
            })
            .collect();
        let again = build_sinogram(&centered_groups, &c, true, None).unwrap();
        assert_relative_eq!(sino.delta, again.delta, max_relative = 1e-12);
        let _ = scale;
        for (a, b) in sino.histograms.iter().zip(&again.histograms) {
            assert_eq!(a.counts, b.counts);
        }
    }

    #[test]
    fn series_white_noise_std_equals_sensitivity() {
        let mut c = cfg().with_prep();
        c.gamma_bg = 0.0;
        c.noise_floor = 0.0;
        let series =
            timeseries_for_allan(&c, 4000.0, 5.0, 3, &DriftConfig::none(), true).unwrap();
        let n = series.len() as f64;
        let mean = series.iter().sum::<f64>() / n;
        let std = (series.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let state = run_protocol(&c).unwrap();
        let s_expected =
            state.cov.zz.sqrt() / crate::phasespace::susceptibility_theory(&c, true);
        assert_relative_eq!(std, s_expected, max_relative = 0.02);
    }

    #[test]
    fn series_rejects_short_duration() {
        let c = cfg();
        assert!(matches!(
            timeseries_for_allan(&c, 1.0, 5.0, 1, &DriftConfig::none(), false),
            Err(SynthError::SeriesTooShort(_))
        ));
    }

    #[test]
    fn quadrature_mapping_round_trip_covariance() {
        // empirical sinogram moments recover the release-frame covariance
        let mut c = cfg();
        c.gamma_bg = 0.0;
        c.noise_floor = 0.0;
        let (groups, _) = simulate_sinogram(&c, 60, 500, true, 17).unwrap();
        let samples = quadrature_samples(&groups, &c, true).unwrap();
        // variance at the phase closest to φ = π/2 (squeezed axis: −z₁)
        let mut best: Option<(f64, Vec<f64>)> = None;
        for g in &groups {
            let phi = phase_of(g.t_sp, &c, true).unwrap();
            let d = (phi - std::f64::consts::FRAC_PI_2).abs();
            if best.as_ref().map_or(true, |(bd, _)| d < *bd) {
                let vals: Vec<f64> = samples
                    .iter()
                    .filter(|(_, p)| (p - phi).abs() < 1e-12)
                    .map(|(q, _)| *q)
                    .collect();
                best = Some((d, vals));
            }
        }
        let (_, vals) = best.unwrap();
        let var = vals.iter().map(|v| v * v).sum::<f64>() / (vals.len() - 1) as f64;
        // z₁ variance of the release state in ω₁ units: κ ω₁/ω₀
        let expect = c.kappa() * c.omega1 / c.omega0;
        let se = expect * (2.0 / vals.len() as f64).sqrt();
        assert!((var - expect).abs() < 3.5 * se, "var {var} expect {expect}");
    }
}
