//! Maximum-likelihood quantum state tomography from binned homodyne
//! sinograms via the diluted iterative algorithm
//! ρ ← N[R_d ρ R_d], R_d = I + ε(R − I).
//!
//! Projectors factor as Π(bin, φ) = U(φ) G(bin) U(φ)† with a diagonal phase
//! U and a real, phase-independent core G, so the cores are computed once per
//! distinct bin and shared across all phases and iterations. Per-phase sums
//! run in parallel and are reduced in fixed phase order, so results are
//! bit-identical regardless of thread count.

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fockstate::{core_probability, projector_core_auto, rotate_to_phase, DensityMatrix};
use crate::special::quadrature_amplitudes;
use crate::synthlab::Sinogram;

/// Probability floor before division inside the iteration operator.
const PROB_FLOOR: f64 = 1e-300;

#[derive(Debug, Error)]
pub enum TomoError {
    #[error(
        "pathological support: populated bin (phase index {phase_index}, center {center}) has \
         predicted probability below {PROB_FLOOR:e}"
    )]
    PathologicalSupport { phase_index: usize, center: f64 },
    #[error("invalid settings: {0}")]
    BadSettings(String),
    #[error("sinogram: {0}")]
    BadSinogram(String),
}

/// Tuning of the diluted iteration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MleSettings {
    /// Dilution parameter ε ∈ (0, 1].
    pub epsilon: f64,
    pub n_max: usize,
    /// Convergence threshold on the max-norm distance between iterates.
    pub threshold_distance: f64,
    /// Convergence threshold on the relative log-likelihood change.
    pub threshold_loglik: f64,
    pub max_iterations: usize,
}

impl MleSettings {
    /// Profile for thermal-like states: n_max 23, thresholds (3e-4, 4e-5).
    pub fn thermal() -> Self {
        MleSettings {
            epsilon: 0.1,
            n_max: 23,
            threshold_distance: 3e-4,
            threshold_loglik: 4e-5,
            max_iterations: 5000,
        }
    }

    /// Profile for squeezed states: n_max 70, thresholds (9e-5, 8e-6).
    pub fn squeezed() -> Self {
        MleSettings {
            epsilon: 0.1,
            n_max: 70,
            threshold_distance: 9e-5,
            threshold_loglik: 8e-6,
            max_iterations: 5000,
        }
    }

    pub fn validate(&self) -> Result<(), TomoError> {
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(TomoError::BadSettings(format!(
                "epsilon must be in (0, 1], got {}",
                self.epsilon
            )));
        }
        if !(self.threshold_distance > 0.0 && self.threshold_loglik > 0.0) {
            return Err(TomoError::BadSettings("thresholds must be > 0".into()));
        }
        Ok(())
    }
}

struct PhaseBins {
    phase: f64,
    /// (core index, count, center) for populated bins only.
    bins: Vec<(usize, f64, f64)>,
}

/// Precomputed projector cores for one sinogram at one truncation.
pub struct ProjectorCache {
    dim: usize,
    cores: Vec<Array2<f64>>,
    phases: Vec<PhaseBins>,
    total_count: f64,
}

impl ProjectorCache {
    pub fn build(sino: &Sinogram, n_max: usize) -> Result<Self, TomoError> {
        if !(sino.delta > 0.0) {
            return Err(TomoError::BadSinogram(format!(
                "bin width must be positive, got {}",
                sino.delta
            )));
        }
        if sino.phases.len() != sino.histograms.len() {
            return Err(TomoError::BadSinogram(
                "phase and histogram counts differ".into(),
            ));
        }
        if sino
            .histograms
            .iter()
            .any(|h| h.counts.iter().any(|&c| c < 0.0))
        {
            return Err(TomoError::BadSinogram("negative counts".into()));
        }
        let delta = sino.delta;
        // dedup identical centers across phases; the shared Δ means amplitude
        // cores depend on the center alone
        let mut key_index = std::collections::BTreeMap::<u64, usize>::new();
        let mut bin_centers = Vec::new();
        let mut phases = Vec::with_capacity(sino.phases.len());
        let mut total_count = 0.0;
        for (phase, hist) in sino.phases.iter().zip(&sino.histograms) {
            let mut bins = Vec::with_capacity(hist.centers.len());
            for (&center, &count) in hist.centers.iter().zip(&hist.counts) {
                if count <= 0.0 {
                    continue;
                }
                let idx = *key_index.entry(center.to_bits()).or_insert_with(|| {
                    bin_centers.push(center);
                    bin_centers.len() - 1
                });
                bins.push((idx, count, center));
                total_count += count;
            }
            phases.push(PhaseBins {
                phase: *phase,
                bins,
            });
        }
        if total_count <= 0.0 {
            return Err(TomoError::BadSinogram("no populated bins".into()));
        }
        let cores: Vec<Array2<f64>> = bin_centers
            .par_iter()
            .map(|&center| projector_core_auto(center, delta, n_max))
            .collect();
        Ok(ProjectorCache {
            dim: n_max + 1,
            cores,
            phases,
            total_count,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_phases(&self) -> usize {
        self.phases.len()
    }

    /// Number of distinct measurement phases (identifiability needs ≥ 2).
    pub fn distinct_phases(&self) -> usize {
        let mut sorted: Vec<f64> = self.phases.iter().map(|p| p.phase).collect();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        sorted.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        sorted.len()
    }

    /// Predicted bin probabilities Tr(Π_ij ρ), grouped per phase.
    pub fn probabilities(&self, rho: &DensityMatrix) -> Vec<Vec<f64>> {
        self.phases
            .par_iter()
            .map(|pb| {
                let rot = rotate_to_phase(rho.matrix(), pb.phase);
                pb.bins
                    .iter()
                    .map(|&(core, _, _)| core_probability(&self.cores[core], &rot))
                    .collect()
            })
            .collect()
    }
}

/// Log-likelihood value plus identification of any populated bins the state
/// assigns (numerically) zero probability; the value is −∞ when such bins
/// exist.
#[derive(Debug, Clone, PartialEq)]
pub struct LogLik {
    pub value: f64,
    /// (phase index, bin center) of offending bins.
    pub zero_bins: Vec<(usize, f64)>,
}

/// Σ f_ij ln Tr(Π_ij ρ) over populated bins (the log of the binned
/// likelihood product).
pub fn log_likelihood(rho: &DensityMatrix, sino: &Sinogram) -> Result<LogLik, TomoError> {
    let cache = ProjectorCache::build(sino, rho.n_max())?;
    Ok(log_likelihood_cached(rho, &cache))
}

pub fn log_likelihood_cached(rho: &DensityMatrix, cache: &ProjectorCache) -> LogLik {
    let per_phase: Vec<(f64, Vec<(usize, f64)>)> = cache
        .phases
        .par_iter()
        .enumerate()
        .map(|(i, pb)| {
            let rot = rotate_to_phase(rho.matrix(), pb.phase);
            let mut acc = 0.0;
            let mut zeros = Vec::new();
            for &(core, count, center) in &pb.bins {
                let p = core_probability(&cache.cores[core], &rot);
                if p <= 0.0 {
                    zeros.push((i, center));
                } else {
                    acc += count * p.ln();
                }
            }
            (acc, zeros)
        })
        .collect();
    let mut value = 0.0;
    let mut zero_bins = Vec::new();
    for (v, z) in per_phase {
        value += v;
        zero_bins.extend(z);
    }
    if !zero_bins.is_empty() {
        value = f64::NEG_INFINITY;
    }
    LogLik { value, zero_bins }
}

/// Unbinned (point-data) log-likelihood Σ ln ⟨p̃,φ|ρ|p̃,φ⟩; exposed for
/// fixed-point tests against the binned route.
pub fn log_likelihood_point(rho: &DensityMatrix, samples: &[(f64, f64)]) -> f64 {
    samples
        .iter()
        .map(|&(p_tilde, phase)| {
            let rot = rotate_to_phase(rho.matrix(), phase);
            let psi = ndarray::Array1::from_vec(quadrature_amplitudes(rho.n_max(), p_tilde));
            let re = rot.mapv(|x| x.re);
            let p: f64 = psi.dot(&re.dot(&psi));
            p.max(1e-300).ln()
        })
        .sum()
}

fn r_and_loglik(
    rho: &DensityMatrix,
    cache: &ProjectorCache,
) -> Result<(Array2<Complex64>, f64), TomoError> {
    let dim = cache.dim;
    let per_phase: Vec<Result<(Array2<f64>, f64, f64), TomoError>> = cache
        .phases
        .par_iter()
        .enumerate()
        .map(|(i, pb)| {
            let rot = rotate_to_phase(rho.matrix(), pb.phase);
            let mut acc = Array2::<f64>::zeros((dim, dim));
            let acc_slice = acc.as_slice_mut().unwrap();
            let mut loglik = 0.0;
            for &(core, count, center) in &pb.bins {
                let g = &cache.cores[core];
                let p = core_probability(g, &rot);
                if p < PROB_FLOOR {
                    return Err(TomoError::PathologicalSupport {
                        phase_index: i,
                        center,
                    });
                }
                loglik += count * p.ln();
                let w = count / p;
                for (a, gv) in acc_slice.iter_mut().zip(g.as_slice().unwrap()) {
                    *a += w * gv;
                }
            }
            Ok((acc, pb.phase, loglik))
        })
        .collect();

    let mut r = Array2::<Complex64>::zeros((dim, dim));
    let mut loglik = 0.0;
    for res in per_phase {
        let (acc, phase, ll) = res?;
        loglik += ll;
        // rotate the real accumulator back: R += U S U†
        let psi = phase + std::f64::consts::FRAC_PI_2;
        for a in 0..dim {
            for b in 0..dim {
                let ph = Complex64::from_polar(1.0, (a as f64 - b as f64) * psi);
                r[(a, b)] += ph * acc[(a, b)];
            }
        }
    }
    r.mapv_inplace(|x| x / cache.total_count);
    Ok((r, loglik))
}

/// The iteration operator R̂_bin(ρ) = (1/N) Σ_ij f_ij Π_ij / Tr(Π_ij ρ).
pub fn r_bin(rho: &DensityMatrix, sino: &Sinogram) -> Result<Array2<Complex64>, TomoError> {
    let cache = ProjectorCache::build(sino, rho.n_max())?;
    Ok(r_and_loglik(rho, &cache)?.0)
}

fn diluted_step(
    rho: &DensityMatrix,
    r: &Array2<Complex64>,
    epsilon: f64,
) -> DensityMatrix {
    let dim = rho.dim();
    let mut rd = r.mapv(|x| x * epsilon);
    for i in 0..dim {
        rd[(i, i)] += 1.0 - epsilon;
    }
    let next = rd.dot(rho.matrix()).dot(&rd);
    // hermitize and renormalize (the sandwich keeps PSD)
    let nh = next.t().mapv(|x| x.conj());
    let mut sym = (&next + &nh).mapv(|x| x / 2.0);
    let trace: f64 = (0..dim).map(|i| sym[(i, i)].re).sum();
    sym.mapv_inplace(|x| x / trace);
    DensityMatrix::from_matrix_unchecked(sym)
}

/// One diluted iteration ρ → N[R_d ρ R_d] at the settings' ε.
pub fn mle_step(
    rho: &DensityMatrix,
    sino: &Sinogram,
    settings: &MleSettings,
) -> Result<DensityMatrix, TomoError> {
    settings.validate()?;
    let r = r_bin(rho, sino)?;
    Ok(diluted_step(rho, &r, settings.epsilon))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub iterations: usize,
    pub final_loglik: f64,
    pub final_distance: f64,
    pub final_rel_change: f64,
    pub converged_distance: bool,
    pub converged_loglik: bool,
    /// ρ_{n_max,n_max} < 1e-4 at the final iterate.
    pub truncation_ok: bool,
    pub tail_population: f64,
    /// ≥ 2 distinct phases present.
    pub identifiable: bool,
    /// Log-likelihood never decreased along the accepted iterates.
    pub monotonic: bool,
    /// ε in effect at the last step (halved from the initial value if a
    /// decrease was ever encountered).
    pub epsilon_final: f64,
}

#[derive(Debug, Clone)]
pub struct MleResult {
    pub rho: DensityMatrix,
    pub report: ConvergenceReport,
    /// Log-likelihood of every accepted iterate (index 0 = initial state).
    pub loglik_trace: Vec<f64>,
}

/// Full reconstruction: iterate from the maximally mixed state until both
/// the max-norm distance and the relative log-likelihood change fall below
/// their thresholds. Non-convergence is reported through the flags, not as
/// an error. `warm_start` overrides the initial state (off by default).
pub fn reconstruct(
    sino: &Sinogram,
    settings: &MleSettings,
    warm_start: Option<&DensityMatrix>,
) -> Result<MleResult, TomoError> {
    settings.validate()?;
    sino.validate()
        .map_err(|e| TomoError::BadSinogram(e.to_string()))?;
    let cache = ProjectorCache::build(sino, settings.n_max)?;
    let dim = settings.n_max + 1;
    let mut rho = match warm_start {
        Some(r) => {
            if r.dim() != dim {
                return Err(TomoError::BadSettings(format!(
                    "warm start dimension {} does not match n_max {}",
                    r.dim(),
                    settings.n_max
                )));
            }
            r.clone()
        }
        None => DensityMatrix::maximally_mixed(dim),
    };

    let mut epsilon = settings.epsilon;
    let mut monotonic = true;
    let (mut r_op, mut loglik) = r_and_loglik(&rho, &cache)?;
    let mut trace = vec![loglik];
    let mut iterations = 0;
    let mut final_distance = f64::INFINITY;
    let mut final_rel_change = f64::INFINITY;
    let mut converged_distance = false;
    let mut converged_loglik = false;

    while iterations < settings.max_iterations {
        iterations += 1;
        // candidate step, halving ε if the likelihood would decrease
        let (next, next_r, next_ll) = loop {
            let cand = diluted_step(&rho, &r_op, epsilon);
            let (cand_r, cand_ll) = r_and_loglik(&cand, &cache)?;
            if cand_ll + 1e-9 * cand_ll.abs() >= loglik {
                break (cand, cand_r, cand_ll);
            }
            epsilon *= 0.5;
            if epsilon < 1e-8 {
                monotonic = false;
                break (cand, cand_r, cand_ll);
            }
        };

        final_distance = rho
            .matrix()
            .iter()
            .zip(next.matrix().iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        final_rel_change = ((next_ll - loglik) / loglik).abs();
        if next_ll < loglik {
            monotonic = false;
        }
        rho = next;
        r_op = next_r;
        loglik = next_ll;
        trace.push(loglik);

        converged_distance = final_distance < settings.threshold_distance;
        converged_loglik = final_rel_change < settings.threshold_loglik;
        if converged_distance && converged_loglik {
            break;
        }
    }

    let tail = rho.tail_population();
    let report = ConvergenceReport {
        iterations,
        final_loglik: loglik,
        final_distance,
        final_rel_change,
        converged_distance,
        converged_loglik,
        truncation_ok: tail < crate::fockstate::TRUNCATION_LIMIT,
        tail_population: tail,
        identifiable: cache.distinct_phases() >= 2,
        monotonic,
        epsilon_final: epsilon,
    };
    Ok(MleResult {
        rho,
        report,
        loglik_trace: trace,
    })
}

/// Sinogram whose counts equal N·Tr(Π_ij ρ) exactly (the fixed point of the
/// iteration); bins partition [−extent, extent] at width `delta`.
pub fn expected_count_sinogram(
    rho: &DensityMatrix,
    phases: &[f64],
    delta: f64,
    extent: f64,
    counts_per_phase: f64,
    omega: f64,
    t_tof: f64,
) -> Sinogram {
    let nbins = (2.0 * extent / delta).ceil() as i64;
    let k0 = -(nbins / 2);
    let mut histograms = Vec::with_capacity(phases.len());
    for &phase in phases {
        let rot = rotate_to_phase(rho.matrix(), phase);
        let mut centers = Vec::new();
        let mut counts = Vec::new();
        for k in k0..(k0 + nbins) {
            let center = (k as f64 + 0.5) * delta;
            let g = projector_core_auto(center, delta, rho.n_max());
            let p = core_probability(&g, &rot);
            if p > 0.0 {
                centers.push(center);
                counts.push(counts_per_phase * p);
            }
        }
        histograms.push(crate::synthlab::Histogram { centers, counts });
    }
    Sinogram {
        phases: phases.to_vec(),
        delta,
        histograms,
        meta: crate::synthlab::SinogramMeta {
            omega,
            t_tof,
            centered: true,
            seed: None,
            degenerate_delta: false,
        },
    }
}
