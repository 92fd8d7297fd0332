//! Likelihood-ratio (G) goodness-of-fit test of the Gaussian ansatz against
//! a binned sinogram, with adaptive lumping and Williams' correction.

use serde::{Deserialize, Serialize};

use super::{GaussFitError, GaussianModelParams};
use crate::stats::{chi2_sf, normal_cdf, normal_quantile};
use crate::synthlab::Sinogram;

/// Lumping record for one phase: which original grid bins were merged into
/// which merged bin.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LumpedPhase {
    pub phase: f64,
    /// (original bin key, merged bin index); keys are grid indices k with
    /// bin k = [kΔ, (k+1)Δ).
    pub map: Vec<(i64, usize)>,
    pub merged_bins: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GTestReport {
    pub g_statistic: f64,
    /// Williams' correction divisor q = 1 + (k+1)/(6N).
    pub williams_q: f64,
    pub g_corrected: f64,
    pub degrees_of_freedom: usize,
    pub upper_p_value: f64,
    /// z-score of the upper p-value, Φ⁻¹(1 − p) [σ units].
    pub percentile_sigma: f64,
    pub total_merged_bins: usize,
    pub lumping: Vec<LumpedPhase>,
}

struct MergedBin {
    observed: f64,
    expected: f64,
    keys: Vec<i64>,
}

/// Deterministic lumping: the left and right tails are each accumulated
/// inward until their expectation reaches 10; remaining interior bins below
/// 10 are swept into their right neighbor until every merged bin is ≥ 10.
fn lump_phase(observed: &[f64], expected: &[f64], keys: &[i64]) -> Vec<MergedBin> {
    let n = observed.len();
    let mut lo = 0usize;
    let mut acc_o = 0.0;
    let mut acc_e = 0.0;
    let mut left_keys = Vec::new();
    while lo < n && acc_e < 10.0 {
        acc_o += observed[lo];
        acc_e += expected[lo];
        left_keys.push(keys[lo]);
        lo += 1;
    }
    let left = MergedBin {
        observed: acc_o,
        expected: acc_e,
        keys: left_keys,
    };

    let mut hi = n;
    let mut acc_o = 0.0;
    let mut acc_e = 0.0;
    let mut right_keys = Vec::new();
    while hi > lo && acc_e < 10.0 {
        hi -= 1;
        acc_o += observed[hi];
        acc_e += expected[hi];
        right_keys.push(keys[hi]);
    }
    right_keys.reverse();
    let right = MergedBin {
        observed: acc_o,
        expected: acc_e,
        keys: right_keys,
    };

    let mut bins: Vec<MergedBin> = Vec::new();
    bins.push(left);
    for i in lo..hi {
        bins.push(MergedBin {
            observed: observed[i],
            expected: expected[i],
            keys: vec![keys[i]],
        });
    }
    if !right.keys.is_empty() {
        bins.push(right);
    }

    // interior sweep: deficient bins merge rightward until all ≥ 10
    loop {
        let deficient = bins.iter().position(|b| b.expected < 10.0);
        match deficient {
            None => break,
            Some(i) => {
                if bins.len() < 2 {
                    break;
                }
                let target = if i + 1 < bins.len() { i + 1 } else { i - 1 };
                let (src, dst) = if target > i { (i, i + 1) } else { (i, i - 1) };
                let moved = bins.remove(src);
                let dst = if dst > src { dst - 1 } else { dst };
                bins[dst].observed += moved.observed;
                bins[dst].expected += moved.expected;
                if target > i {
                    let mut keys = moved.keys;
                    keys.extend(bins[dst].keys.iter().copied());
                    bins[dst].keys = keys;
                } else {
                    bins[dst].keys.extend(moved.keys);
                }
            }
        }
    }
    bins
}

/// G-test of `params` against a grid-binned sinogram. Expected counts use
/// the model's normal law per phase, with the off-grid tail mass folded into
/// the outermost bins so each phase is a proper multinomial.
///
/// Degrees of freedom: (total merged bins) − (number of phases) − 5 fitted
/// parameters.
pub fn g_test(sino: &Sinogram, params: &GaussianModelParams) -> Result<GTestReport, GaussFitError> {
    let delta = sino.delta;
    let mut g_stat = 0.0;
    let mut total_merged = 0usize;
    let mut total_counts = 0.0;
    let mut lumping = Vec::with_capacity(sino.phases.len());

    for (idx, (phase, hist)) in sino.phases.iter().zip(&sino.histograms).enumerate() {
        let m = params.mean(*phase);
        let v = params.variance(*phase);
        if v <= 0.0 {
            return Err(GaussFitError::ConstraintViolation {
                phase: *phase,
                variance: v,
            });
        }
        let sd = v.sqrt();
        let n_phase: f64 = hist.counts.iter().sum();
        total_counts += n_phase;

        // contiguous key range covering all populated bins
        let keys_populated: Vec<i64> = hist
            .centers
            .iter()
            .map(|&c| (c / delta).floor() as i64)
            .collect();
        let kmin = *keys_populated.iter().min().expect("validated sinogram");
        let kmax = *keys_populated.iter().max().unwrap();
        let nbins = (kmax - kmin + 1) as usize;
        if nbins < 2 {
            return Err(GaussFitError::DegeneratePhase(idx));
        }
        let mut observed = vec![0.0; nbins];
        for (key, count) in keys_populated.iter().zip(&hist.counts) {
            observed[(key - kmin) as usize] += count;
        }
        let keys: Vec<i64> = (kmin..=kmax).collect();
        let expected: Vec<f64> = keys
            .iter()
            .enumerate()
            .map(|(j, &k)| {
                let lo_edge = k as f64 * delta;
                let hi_edge = (k + 1) as f64 * delta;
                let p_lo = if j == 0 {
                    0.0
                } else {
                    normal_cdf((lo_edge - m) / sd)
                };
                let p_hi = if j == nbins - 1 {
                    1.0
                } else {
                    normal_cdf((hi_edge - m) / sd)
                };
                n_phase * (p_hi - p_lo)
            })
            .collect();

        let merged = lump_phase(&observed, &expected, &keys);
        if merged.len() < 2 {
            return Err(GaussFitError::DegeneratePhase(idx));
        }
        let mut map = Vec::new();
        for (mi, mb) in merged.iter().enumerate() {
            for &k in &mb.keys {
                map.push((k, mi));
            }
            if mb.observed > 0.0 {
                g_stat += 2.0 * mb.observed * (mb.observed / mb.expected).ln();
            }
        }
        total_merged += merged.len();
        lumping.push(LumpedPhase {
            phase: *phase,
            map,
            merged_bins: merged.len(),
        });
    }

    let dof = total_merged as i64 - sino.phases.len() as i64 - 5;
    if dof < 1 {
        return Err(GaussFitError::BadDof(dof));
    }
    // Williams' correction, one-way-table variant q = 1 + (k+1)/(6N)
    let williams_q = 1.0 + (total_merged as f64 + 1.0) / (6.0 * total_counts);
    let g_corrected = g_stat / williams_q;
    let upper_p = chi2_sf(g_corrected, dof as f64).map_err(|_| GaussFitError::BadDof(dof))?;
    Ok(GTestReport {
        g_statistic: g_stat,
        williams_q,
        g_corrected,
        degrees_of_freedom: dof as usize,
        upper_p_value: upper_p,
        percentile_sigma: normal_quantile(1.0 - upper_p),
        total_merged_bins: total_merged,
        lumping,
    })
}
