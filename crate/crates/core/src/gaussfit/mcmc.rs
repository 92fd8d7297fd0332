//! Metropolis–Hastings sampling of the Gaussian-model posterior
//! (flat prior on the feasible region, so posterior ∝ likelihood), with
//! rank-normalized split-R̂ burn-in determination and Geyer
//! initial-monotone-sequence autocorrelation thinning.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{gaussian_loglik_stats, GaussFitError, GaussianModelParams, SampleStats};
use crate::rng::indexed_substream;
use crate::stats::{central_68, normal_quantile};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McmcSettings {
    pub n_chains: usize,
    pub seed: u64,
    /// Minimum effective sample count across the merged chains.
    pub target_effective: usize,
    /// Adaptation draws per chain (discarded; proposal frozen afterwards).
    pub adapt_draws: usize,
    /// Draws added per chain between convergence checks.
    pub block_draws: usize,
    /// Hard budget of post-adaptation draws per chain.
    pub max_draws_per_chain: usize,
}

impl Default for McmcSettings {
    fn default() -> Self {
        McmcSettings {
            n_chains: 8,
            seed: 0,
            target_effective: 6000,
            adapt_draws: 2000,
            block_draws: 4000,
            max_draws_per_chain: 400_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PosteriorDraw {
    pub chain: usize,
    pub iteration: usize,
    pub params: GaussianModelParams,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McmcDiagnostics {
    pub n_chains: usize,
    /// Discarded prefix per chain (adaptation plus burn-in).
    pub burn_in: usize,
    /// Rank-normalized split-R̂ per parameter (μ_z1, μ_p1, A, B_c, B_s).
    pub split_rhat: [f64; 5],
    /// Integrated autocorrelation time per parameter.
    pub iact: [f64; 5],
    /// Thinning interval = ceil(max IACT).
    pub thin: usize,
    pub effective_samples: f64,
    pub acceptance_rate: f64,
    pub converged: bool,
    pub sigma_plus_interval: (f64, f64),
    pub sigma_minus_interval: (f64, f64),
}

struct Chain {
    rng: rand_chacha::ChaCha12Rng,
    current: [f64; 5],
    current_ll: f64,
    draws: Vec<[f64; 5]>,
    accepted: usize,
    proposed: usize,
}

fn feasible(v: &[f64; 5]) -> bool {
    v[2] > v[3].hypot(v[4])
}

fn loglik(v: &[f64; 5], stats: &SampleStats) -> f64 {
    let p = GaussianModelParams {
        mu_z1: v[0],
        mu_p1: v[1],
        a: v[2],
        b_c: v[3],
        b_s: v[4],
    };
    match gaussian_loglik_stats(&p, stats) {
        Ok(ll) => ll,
        Err(_) => f64::NEG_INFINITY,
    }
}

fn advance(chain: &mut Chain, stats: &SampleStats, scales: &[f64; 5], count: usize) {
    for _ in 0..count {
        let mut proposal = chain.current;
        for (p, s) in proposal.iter_mut().zip(scales) {
            *p += s * chain.rng.sample::<f64, _>(StandardNormal);
        }
        chain.proposed += 1;
        if feasible(&proposal) {
            let ll = loglik(&proposal, stats);
            let log_u: f64 = chain.rng.random::<f64>().max(1e-300).ln();
            if ll - chain.current_ll >= log_u {
                chain.current = proposal;
                chain.current_ll = ll;
                chain.accepted += 1;
            }
        } else {
            // draw and discard the comparison variate so the stream stays aligned
            let _: f64 = chain.rng.random();
        }
        chain.draws.push(chain.current);
    }
}

/// Rank-normalized split-R̂ over chains for one parameter.
fn split_rhat(chains: &[&[f64]]) -> f64 {
    let half = chains.iter().map(|c| c.len()).min().unwrap_or(0) / 2;
    if half < 4 {
        return f64::INFINITY;
    }
    let mut sequences: Vec<&[f64]> = Vec::with_capacity(chains.len() * 2);
    for c in chains {
        sequences.push(&c[..half]);
        sequences.push(&c[c.len() - half..]);
    }
    // pooled rank normalization
    let total = sequences.len() * half;
    let mut indexed: Vec<(f64, usize)> = Vec::with_capacity(total);
    for (si, s) in sequences.iter().enumerate() {
        for (k, &v) in s.iter().enumerate() {
            indexed.push((v, si * half + k));
        }
    }
    indexed.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut z = vec![0.0; total];
    let s_total = total as f64;
    for (rank, &(_, pos)) in indexed.iter().enumerate() {
        let r = rank as f64 + 1.0;
        z[pos] = normal_quantile((r - 0.375) / (s_total + 0.25));
    }
    // classic split-R̂ on the z-scores
    let m = sequences.len() as f64;
    let n = half as f64;
    let mut means = Vec::with_capacity(sequences.len());
    let mut vars = Vec::with_capacity(sequences.len());
    for si in 0..sequences.len() {
        let seq = &z[si * half..(si + 1) * half];
        let mean = seq.iter().sum::<f64>() / n;
        let var = seq.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        means.push(mean);
        vars.push(var);
    }
    let grand = means.iter().sum::<f64>() / m;
    let b = n / (m - 1.0) * means.iter().map(|x| (x - grand) * (x - grand)).sum::<f64>();
    let w = vars.iter().sum::<f64>() / m;
    if w <= 0.0 {
        return 1.0;
    }
    let var_plus = (n - 1.0) / n * w + b / n;
    (var_plus / w).sqrt()
}

/// Geyer initial-monotone-sequence estimate of the integrated
/// autocorrelation time of one chain.
fn geyer_iact(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 8 {
        return 1.0;
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let gamma = |t: usize| -> f64 {
        let mut acc = 0.0;
        for i in 0..(n - t) {
            acc += (x[i] - mean) * (x[i + t] - mean);
        }
        acc / n as f64
    };
    let g0 = gamma(0);
    if g0 <= 0.0 {
        return 1.0;
    }
    let mut sum_pairs = 0.0;
    let mut prev_pair = f64::INFINITY;
    let mut k = 0usize;
    loop {
        let t = 2 * k;
        if t + 1 >= n {
            break;
        }
        let pair = gamma(t) + gamma(t + 1);
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev_pair); // enforce monotone decrease
        sum_pairs += pair;
        prev_pair = pair;
        k += 1;
        if k > n / 2 {
            break;
        }
    }
    ((2.0 * sum_pairs / g0) - 1.0).max(1.0)
}

/// Run the sampler. Returns the thinned posterior draws (merged in chain
/// order) and the diagnostics; failure to reach R̂ < 1.01 within the budget
/// is reported through `converged`, not as an error.
pub fn run_mcmc(
    stats: &SampleStats,
    init: &GaussianModelParams,
    settings: &McmcSettings,
) -> Result<(Vec<PosteriorDraw>, McmcDiagnostics), GaussFitError> {
    if !init.is_feasible() {
        return Err(GaussFitError::Infeasible {
            a: init.a,
            b_norm: init.b_norm(),
        });
    }
    let init_v = [init.mu_z1, init.mu_p1, init.a, init.b_c, init.b_s];

    // proposal scales from the curvature of the log-likelihood at init
    let base_scales = proposal_scales(&init_v, stats);

    let mut chains: Vec<Chain> = (0..settings.n_chains)
        .map(|c| {
            let mut rng = indexed_substream(settings.seed, "gaussfit.mcmc", c as u64);
            // jitter the start within the feasible region
            let mut start = init_v;
            for _ in 0..100 {
                let mut cand = init_v;
                for (j, s) in base_scales.iter().enumerate() {
                    cand[j] += 2.0 * s * rng.sample::<f64, _>(StandardNormal);
                }
                if feasible(&cand) {
                    start = cand;
                    break;
                }
            }
            let ll = loglik(&start, stats);
            Chain {
                rng,
                current: start,
                current_ll: ll,
                draws: Vec::new(),
                accepted: 0,
                proposed: 0,
            }
        })
        .collect();

    // adaptation: tune a global factor toward 20–40% acceptance, then freeze
    let mut factor = 2.4 / (5.0f64).sqrt();
    let adapt_window = 100;
    let mut adapted = 0;
    while adapted < settings.adapt_draws {
        let scales = scaled(&base_scales, factor);
        let before: usize = chains.iter().map(|c| c.accepted).sum();
        chains
            .par_iter_mut()
            .for_each(|c| advance(c, stats, &scales, adapt_window));
        let after: usize = chains.iter().map(|c| c.accepted).sum();
        let rate = (after - before) as f64 / (adapt_window * chains.len()) as f64;
        factor *= ((rate - 0.28) * 1.5).exp().clamp(0.5, 2.0);
        adapted += adapt_window;
    }
    for c in &mut chains {
        c.draws.clear();
        c.accepted = 0;
        c.proposed = 0;
    }
    let scales = scaled(&base_scales, factor);

    // sampling blocks with convergence checks
    let mut converged = false;
    let mut burn;
    let mut rhat = [f64::INFINITY; 5];
    let mut iact = [1.0f64; 5];
    loop {
        chains
            .par_iter_mut()
            .for_each(|c| advance(c, stats, &scales, settings.block_draws));
        let drawn = chains[0].draws.len();
        burn = drawn / 2;
        for (j, r) in rhat.iter_mut().enumerate() {
            let views: Vec<Vec<f64>> = chains
                .iter()
                .map(|c| c.draws[burn..].iter().map(|d| d[j]).collect())
                .collect();
            let refs: Vec<&[f64]> = views.iter().map(|v| v.as_slice()).collect();
            *r = split_rhat(&refs);
        }
        if rhat.iter().all(|&r| r < 1.01) {
            for (j, tau) in iact.iter_mut().enumerate() {
                let mut acc = 0.0;
                for c in &chains {
                    let series: Vec<f64> = c.draws[burn..].iter().map(|d| d[j]).collect();
                    acc += geyer_iact(&series);
                }
                *tau = acc / chains.len() as f64;
            }
            let max_iact = iact.iter().fold(1.0f64, |m, &t| m.max(t));
            let ess = chains.len() as f64 * (drawn - burn) as f64 / max_iact;
            if ess >= settings.target_effective as f64 {
                converged = true;
                break;
            }
        }
        if drawn >= settings.max_draws_per_chain {
            break;
        }
    }

    let max_iact = iact.iter().fold(1.0f64, |m, &t| m.max(t));
    let thin = max_iact.ceil() as usize;
    let mut posterior = Vec::new();
    for (ci, c) in chains.iter().enumerate() {
        let mut k = burn;
        while k < c.draws.len() {
            let d = c.draws[k];
            posterior.push(PosteriorDraw {
                chain: ci,
                iteration: k,
                params: GaussianModelParams {
                    mu_z1: d[0],
                    mu_p1: d[1],
                    a: d[2],
                    b_c: d[3],
                    b_s: d[4],
                },
            });
            k += thin;
        }
    }

    let plus: Vec<f64> = posterior.iter().map(|d| d.params.sigma_plus()).collect();
    let minus: Vec<f64> = posterior.iter().map(|d| d.params.sigma_minus()).collect();
    let accepted: usize = chains.iter().map(|c| c.accepted).sum();
    let proposed: usize = chains.iter().map(|c| c.proposed).sum();
    let drawn = chains[0].draws.len();
    let diagnostics = McmcDiagnostics {
        n_chains: settings.n_chains,
        burn_in: settings.adapt_draws + burn,
        split_rhat: rhat,
        iact,
        thin,
        effective_samples: chains.len() as f64 * (drawn - burn) as f64 / max_iact,
        acceptance_rate: accepted as f64 / proposed.max(1) as f64,
        converged,
        sigma_plus_interval: central_68(&plus),
        sigma_minus_interval: central_68(&minus),
    };
    Ok((posterior, diagnostics))
}

fn scaled(base: &[f64; 5], factor: f64) -> [f64; 5] {
    let mut out = *base;
    for v in &mut out {
        *v *= factor;
    }
    out
}

/// Per-parameter proposal scales ≈ posterior standard deviations, from the
/// diagonal curvature of the log-likelihood.
fn proposal_scales(v: &[f64; 5], stats: &SampleStats) -> [f64; 5] {
    let mut scales = [0.0; 5];
    let f0 = loglik(v, stats);
    for j in 0..5 {
        let h = (v[j].abs() * 1e-3).max(1e-5);
        let mut vp = *v;
        vp[j] += h;
        let mut vm = *v;
        vm[j] -= h;
        let (fp, fm) = (loglik(&vp, stats), loglik(&vm, stats));
        let curv = (2.0 * f0 - fp - fm) / (h * h);
        scales[j] = if curv > 0.0 && curv.is_finite() {
            (1.0 / curv).sqrt()
        } else {
            v[j].abs() * 0.05 + 1e-3
        };
    }
    scales
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussfit::{fit_gaussian, sample_from_model};

    #[test]
    fn iact_of_iid_sequence_is_near_one() {
        use rand::Rng;
        let mut rng = crate::rng::substream(17, "iact-test");
        let x: Vec<f64> = (0..20_000).map(|_| rng.sample(StandardNormal)).collect();
        let tau = geyer_iact(&x);
        assert!((tau - 1.0).abs() < 0.1, "IACT {tau}");
    }

    #[test]
    fn iact_grows_for_correlated_sequence() {
        use rand::Rng;
        let mut rng = crate::rng::substream(18, "iact-test2");
        let rho = 0.9f64;
        let mut x = vec![0.0f64; 40_000];
        for i in 1..x.len() {
            let e: f64 = rng.sample(StandardNormal);
            x[i] = rho * x[i - 1] + (1.0 - rho * rho).sqrt() * e;
        }
        let tau = geyer_iact(&x);
        // AR(1) with ρ = 0.9 has τ = (1+ρ)/(1−ρ) = 19
        assert!((tau - 19.0).abs() < 5.0, "IACT {tau}");
    }

    #[test]
    fn split_rhat_of_identical_distributions_below_threshold() {
        use rand::Rng;
        let chains: Vec<Vec<f64>> = (0..8)
            .map(|c| {
                let mut rng = crate::rng::indexed_substream(4, "rhat-test", c);
                (0..4000).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
            })
            .collect();
        let refs: Vec<&[f64]> = chains.iter().map(|v| v.as_slice()).collect();
        let r = split_rhat(&refs);
        assert!(r < 1.01, "R̂ = {r}");
    }

    #[test]
    fn split_rhat_detects_shifted_chain() {
        use rand::Rng;
        let chains: Vec<Vec<f64>> = (0..4)
            .map(|c| {
                let mut rng = crate::rng::indexed_substream(5, "rhat-test2", c);
                let shift = if c == 0 { 3.0 } else { 0.0 };
                (0..2000)
                    .map(|_| shift + rng.sample::<f64, _>(StandardNormal))
                    .collect()
            })
            .collect();
        let refs: Vec<&[f64]> = chains.iter().map(|v| v.as_slice()).collect();
        assert!(split_rhat(&refs) > 1.1);
    }

    #[test]
    fn mcmc_reaches_convergence_on_synthetic_data() {
        let truth = GaussianModelParams {
            mu_z1: 0.2,
            mu_p1: -0.1,
            a: 2.0,
            b_c: 0.7,
            b_s: 0.3,
        };
        let phases: Vec<f64> = (0..20)
            .map(|i| std::f64::consts::PI * i as f64 / 20.0)
            .collect();
        let samples = sample_from_model(&truth, &phases, 200, 42);
        let stats = SampleStats::from_samples(&samples);
        let init = fit_gaussian(&samples).unwrap();
        let settings = McmcSettings {
            seed: 7,
            target_effective: 6000,
            ..Default::default()
        };
        let (posterior, diag) = run_mcmc(&stats, &init, &settings).unwrap();
        assert!(diag.converged, "diagnostics: {diag:?}");
        assert!(diag.split_rhat.iter().all(|&r| r < 1.01));
        assert!(diag.effective_samples >= 6000.0);
        assert!(!posterior.is_empty());
        assert!(diag.acceptance_rate > 0.1 && diag.acceptance_rate < 0.6);
        // truth σ± inside a generous posterior envelope
        let s = crate::gaussfit::sigma_summary(
            &posterior.iter().map(|d| d.params).collect::<Vec<_>>(),
        )
        .unwrap();
        assert!((s.sigma_plus - truth.sigma_plus()).abs() < 0.2);
        assert!((s.sigma_minus - truth.sigma_minus()).abs() < 0.2);
        // every draw feasible
        assert!(posterior.iter().all(|d| d.params.is_feasible()));
    }

    #[test]
    fn mcmc_rejects_infeasible_init() {
        let stats = SampleStats::from_samples(&[(0.0, 0.0), (0.1, 1.0)]);
        let bad = GaussianModelParams {
            mu_z1: 0.0,
            mu_p1: 0.0,
            a: 1.0,
            b_c: 2.0,
            b_s: 0.0,
        };
        assert!(run_mcmc(&stats, &bad, &McmcSettings::default()).is_err());
    }
}
