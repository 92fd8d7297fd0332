//! Truncated-Fock-basis quantum states: density matrices, quadrature
//! projectors, Wigner-function evaluation, and moment extraction.
//!
//! Quadratures are zero-point normalized so that the ground state has unit
//! variance in every quadrature: z₁ = z/√(ħ/2mω), p₁ = p/√(ħmω/2),
//! p̃(φ) = −z₁ sinφ + p₁ cosφ. The Heisenberg bound in this convention is
//! det(cov) ≥ 1.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::ProtocolConfig;
use crate::hermitian::{eigh, min_eigenvalue, unitary_exp_i};
use crate::phasespace::GaussianState;
use crate::special::{gauss_legendre, laguerre_weighted, quadrature_amplitudes};

const HERMITICITY_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-10;
const PSD_TOL: f64 = -1e-10;
/// Population allowed in the highest Fock state before the truncation is
/// declared invalid.
pub const TRUNCATION_LIMIT: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum FockError {
    #[error("matrix is not Hermitian (max asymmetry {0:.3e})")]
    NonHermitian(f64),
    #[error("trace is {0}, expected 1")]
    TraceNotOne(f64),
    #[error("matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPsd(f64),
    #[error("truncated basis too small: highest-state population {tail:.3e} >= {limit:.0e}")]
    Truncation { tail: f64, limit: f64 },
    #[error("quadrature bin width must be positive, got {0}")]
    NonPositiveWidth(f64),
    #[error("covariance is not physical (det = {0}, needs det >= 1 in zpf units)")]
    NonPhysicalCovariance(f64),
    #[error("dimension must be at least 1")]
    EmptyBasis,
}

/// Complex Hermitian, unit-trace, positive-semidefinite matrix in the Fock
/// basis {|0⟩, …, |n_max⟩}.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: Array2<Complex64>,
}

impl DensityMatrix {
    /// Validating constructor. Hermiticity and trace are checked to 1e-10,
    /// the minimum eigenvalue to −1e-10.
    pub fn from_matrix(mat: Array2<Complex64>) -> Result<Self, FockError> {
        let dm = DensityMatrix { mat };
        dm.validate()?;
        Ok(dm)
    }

    /// Construct without validation; for internal iteration loops that
    /// preserve the invariants by construction.
    pub fn from_matrix_unchecked(mat: Array2<Complex64>) -> Self {
        DensityMatrix { mat }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let eye = Array2::<Complex64>::eye(dim);
        DensityMatrix {
            mat: eye.mapv(|x| x / dim as f64),
        }
    }

    /// Pure Fock state |k⟩⟨k|.
    pub fn fock(dim: usize, k: usize) -> Self {
        assert!(k < dim);
        let mut mat = Array2::<Complex64>::zeros((dim, dim));
        mat[(k, k)] = Complex64::new(1.0, 0.0);
        DensityMatrix { mat }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn n_max(&self) -> usize {
        self.dim() - 1
    }

    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.mat
    }

    pub fn into_matrix(self) -> Array2<Complex64> {
        self.mat
    }

    /// Population of the highest Fock state, ρ_{n_max, n_max}.
    pub fn tail_population(&self) -> f64 {
        let n = self.n_max();
        self.mat[(n, n)].re
    }

    pub fn truncation_ok(&self) -> bool {
        self.tail_population() < TRUNCATION_LIMIT
    }

    pub fn validate(&self) -> Result<(), FockError> {
        let n = self.dim();
        if n == 0 {
            return Err(FockError::EmptyBasis);
        }
        let mut asym = 0.0f64;
        for i in 0..n {
            for j in i..n {
                let d = (self.mat[(i, j)] - self.mat[(j, i)].conj()).norm();
                asym = asym.max(d);
            }
        }
        if asym > HERMITICITY_TOL {
            return Err(FockError::NonHermitian(asym));
        }
        let trace: Complex64 = (0..n).map(|i| self.mat[(i, i)]).sum();
        if (trace.re - 1.0).abs() > TRACE_TOL || trace.im.abs() > TRACE_TOL {
            return Err(FockError::TraceNotOne(trace.re));
        }
        let min_eig = min_eigenvalue(&self.mat);
        if min_eig < PSD_TOL {
            return Err(FockError::NotPsd(min_eig));
        }
        Ok(())
    }
}

/// One bin of a phase-resolved quadrature histogram, in zpf-normalized units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureBin {
    pub center: f64,
    pub width: f64,
    pub phase: f64,
}

/// Wigner quasiprobability on a rectangular (z₁, p₁) grid.
/// `values[i][j] = W(z1[i], p1[j])`.
#[derive(Debug, Clone)]
pub struct WignerGrid {
    pub z1: Vec<f64>,
    pub p1: Vec<f64>,
    pub values: Array2<f64>,
}

impl WignerGrid {
    /// Cell sum × cell area; 1 for states well inside a uniform grid.
    pub fn normalization(&self) -> f64 {
        let dz = (self.z1[self.z1.len() - 1] - self.z1[0]) / (self.z1.len() - 1) as f64;
        let dp = (self.p1[self.p1.len() - 1] - self.p1[0]) / (self.p1.len() - 1) as f64;
        self.values.sum() * dz * dp
    }

    /// Marginal over z₁ (trapezoid), one value per p₁ grid point.
    pub fn marginal_over_z(&self) -> Vec<f64> {
        let dz = (self.z1[self.z1.len() - 1] - self.z1[0]) / (self.z1.len() - 1) as f64;
        let (nz, np) = (self.z1.len(), self.p1.len());
        (0..np)
            .map(|j| {
                let mut acc = 0.0;
                for i in 0..nz {
                    let w = if i == 0 || i == nz - 1 { 0.5 } else { 1.0 };
                    acc += w * self.values[(i, j)];
                }
                acc * dz
            })
            .collect()
    }
}

/// Overlap ⟨m|p̃, φ⟩ = e^{im(φ+π/2)} (2π)^{-1/4} H_m(p̃/√2) e^{-p̃²/4} / √(2^m m!),
/// evaluated through the weighted eigenfunction recurrence (no factorials).
pub fn quadrature_overlap(m: usize, p_tilde: f64, phase: f64) -> Complex64 {
    let psi = quadrature_amplitudes(m, p_tilde);
    Complex64::from_polar(1.0, m as f64 * (phase + std::f64::consts::FRAC_PI_2)) * psi[m]
}

/// Phase-free projector core G(bin): G_mn = ∫_bin ψ_m(p̃) ψ_n(p̃) dp̃ at the
/// given Gauss–Legendre order. The full projector is U G U† with
/// U = diag(e^{im(φ+π/2)}), so G is shared across phases.
pub fn projector_core(center: f64, width: f64, n_max: usize, order: usize) -> Array2<f64> {
    let (nodes, weights) = gauss_legendre(order);
    let half = width / 2.0;
    let dim = n_max + 1;
    let mut g = Array2::<f64>::zeros((dim, dim));
    for (t, w) in nodes.iter().zip(&weights) {
        let psi = quadrature_amplitudes(n_max, center + half * t);
        let scale = w * half;
        for a in 0..dim {
            let pa = psi[a] * scale;
            for b in a..dim {
                g[(a, b)] += pa * psi[b];
            }
        }
    }
    for a in 0..dim {
        for b in 0..a {
            g[(a, b)] = g[(b, a)];
        }
    }
    g
}

/// Projector core with the quadrature order doubled until no element moves
/// by more than 1e-10 (starting at order 16, capped at 256).
pub fn projector_core_auto(center: f64, width: f64, n_max: usize) -> Array2<f64> {
    let mut order = 16;
    let mut g = projector_core(center, width, n_max, order);
    while order < 256 {
        let g2 = projector_core(center, width, n_max, order * 2);
        let diff = (&g2 - &g).iter().fold(0.0f64, |m, x| m.max(x.abs()));
        g = g2;
        order *= 2;
        if diff <= 1e-10 {
            break;
        }
    }
    g
}

/// Hermitian PSD projector Π for one quadrature bin,
/// Π = ∫_bin |p̃,φ⟩⟨p̃,φ| dp̃ in the truncated basis.
pub fn bin_projector(bin: &QuadratureBin, n_max: usize) -> Result<Array2<Complex64>, FockError> {
    if !(bin.width > 0.0) {
        return Err(FockError::NonPositiveWidth(bin.width));
    }
    let g = projector_core_auto(bin.center, bin.width, n_max);
    let dim = n_max + 1;
    let mut out = Array2::<Complex64>::zeros((dim, dim));
    for a in 0..dim {
        for b in 0..dim {
            let ph = Complex64::from_polar(
                1.0,
                (a as f64 - b as f64) * (bin.phase + std::f64::consts::FRAC_PI_2),
            );
            out[(a, b)] = ph * g[(a, b)];
        }
    }
    Ok(out)
}

/// Rotate a density matrix into the frame of phase `phase`:
/// ρ̃ = U†ρU with U = diag(e^{im(φ+π/2)}). In this frame every bin probability
/// is the real contraction Tr(G ρ̃) with the phase-free core G.
pub(crate) fn rotate_to_phase(rho: &Array2<Complex64>, phase: f64) -> Array2<Complex64> {
    let dim = rho.nrows();
    let psi = phase + std::f64::consts::FRAC_PI_2;
    let mut out = rho.clone();
    for a in 0..dim {
        for b in 0..dim {
            out[(a, b)] *= Complex64::from_polar(1.0, (b as f64 - a as f64) * psi);
        }
    }
    out
}

/// Real contraction Σ_mn G_mn Re(ρ̃_mn) = Tr(Π ρ) for a phase-rotated state.
pub(crate) fn core_probability(g: &Array2<f64>, rho_rot: &Array2<Complex64>) -> f64 {
    g.iter()
        .zip(rho_rot.iter())
        .map(|(gv, rv)| gv * rv.re)
        .sum()
}

/// Pointwise probability density P_φ(p̃) = ⟨p̃,φ|ρ|p̃,φ⟩ on a grid of
/// quadrature values.
pub fn quadrature_pdf(rho: &DensityMatrix, phase: f64, grid: &[f64]) -> Vec<f64> {
    let rot = rotate_to_phase(rho.matrix(), phase);
    let re = rot.mapv(|x| x.re);
    let n_max = rho.n_max();
    grid.iter()
        .map(|&p| {
            let psi = Array1::from_vec(quadrature_amplitudes(n_max, p));
            let v = re.dot(&psi);
            psi.dot(&v).max(0.0)
        })
        .collect()
}

/// Wigner function W(z₁, p₁) on a rectangular grid, from the Laguerre
/// expansion of displaced-Fock matrix elements. Conjugate index pairs are
/// combined analytically, so the result is exactly real.
pub fn wigner(rho: &DensityMatrix, z1: &[f64], p1: &[f64]) -> WignerGrid {
    let dim = rho.dim();
    let n_max = rho.n_max();
    let mat = rho.matrix();
    let rows: Vec<Vec<f64>> = z1
        .par_iter()
        .map(|&z| {
            p1.iter()
                .map(|&p| {
                    // α = (z₁ + i p₁)/2, x = 4|α|², λ = arg α
                    let x = z * z + p * p;
                    let lambda = if x == 0.0 { 0.0 } else { p.atan2(z) };
                    let mut acc = 0.0;
                    for delta in 0..dim {
                        let t = laguerre_weighted(n_max - delta, delta, x);
                        if delta == 0 {
                            let mut sign = 1.0;
                            for (l, tv) in t.iter().enumerate() {
                                acc += sign * mat[(l, l)].re * tv;
                                sign = -sign;
                            }
                        } else {
                            // phase orientation pinned by the displaced-state
                            // marginal test against quadrature_pdf
                            let ph = Complex64::from_polar(1.0, lambda * delta as f64);
                            let mut sign = 1.0;
                            for (l, tv) in t.iter().enumerate() {
                                let pair = (mat[(l, l + delta)] * ph).re;
                                acc += 2.0 * sign * pair * tv;
                                sign = -sign;
                            }
                        }
                    }
                    acc / (2.0 * std::f64::consts::PI)
                })
                .collect()
        })
        .collect();
    let mut values = Array2::<f64>::zeros((z1.len(), p1.len()));
    for (i, row) in rows.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            values[(i, j)] = *v;
        }
    }
    WignerGrid {
        z1: z1.to_vec(),
        p1: p1.to_vec(),
        values,
    }
}

/// First and second (symmetrized) moments of a density matrix in
/// zpf-normalized units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadMoments {
    pub mean_z1: f64,
    pub mean_p1: f64,
    pub var_z1: f64,
    pub cov_z1p1: f64,
    pub var_p1: f64,
}

impl QuadMoments {
    /// Variance of the rotated quadrature p̃(φ) = −z₁ sinφ + p₁ cosφ.
    pub fn quadrature_variance(&self, phase: f64) -> f64 {
        let (s, c) = phase.sin_cos();
        self.var_z1 * s * s + self.var_p1 * c * c - 2.0 * self.cov_z1p1 * s * c
    }

    /// Mean of the rotated quadrature.
    pub fn quadrature_mean(&self, phase: f64) -> f64 {
        let (s, c) = phase.sin_cos();
        -self.mean_z1 * s + self.mean_p1 * c
    }

    /// Principal standard deviations (σ₊ antisqueezed, σ₋ squeezed).
    pub fn principal_sigmas(&self) -> (f64, f64) {
        let a = 0.5 * (self.var_z1 + self.var_p1);
        let b = (0.25 * (self.var_z1 - self.var_p1).powi(2) + self.cov_z1p1 * self.cov_z1p1)
            .sqrt();
        ((a + b).sqrt(), (a - b).max(0.0).sqrt())
    }
}

/// Extract means and the symmetrized covariance from ladder-operator
/// expectation values.
pub fn moments(rho: &DensityMatrix) -> QuadMoments {
    let mat = rho.matrix();
    let dim = rho.dim();
    let mut a_exp = Complex64::default(); // ⟨a⟩
    let mut a2_exp = Complex64::default(); // ⟨a²⟩
    let mut n_exp = 0.0; // ⟨a†a⟩
    for m in 0..dim {
        if m >= 1 {
            a_exp += mat[(m, m - 1)] * (m as f64).sqrt();
        }
        if m >= 2 {
            a2_exp += mat[(m, m - 2)] * ((m * (m - 1)) as f64).sqrt();
        }
        n_exp += m as f64 * mat[(m, m)].re;
    }
    let mean_z1 = 2.0 * a_exp.re;
    let mean_p1 = 2.0 * a_exp.im;
    let z2 = 2.0 * a2_exp.re + 2.0 * n_exp + 1.0;
    let p2 = -2.0 * a2_exp.re + 2.0 * n_exp + 1.0;
    let zp = 2.0 * a2_exp.im;
    QuadMoments {
        mean_z1,
        mean_p1,
        var_z1: z2 - mean_z1 * mean_z1,
        cov_z1p1: zp - mean_z1 * mean_p1,
        var_p1: p2 - mean_p1 * mean_p1,
    }
}

/// Dimensionless Gaussian description: means and 2×2 covariance in zpf units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionlessGaussian {
    pub mean_z1: f64,
    pub mean_p1: f64,
    pub var_z1: f64,
    pub cov_z1p1: f64,
    pub var_p1: f64,
}

impl DimensionlessGaussian {
    /// Express an SI Gaussian state in the zpf units of `reference_frequency`.
    pub fn from_si(state: &GaussianState, cfg: &ProtocolConfig, reference_frequency: f64) -> Self {
        let sz = cfg.zpf_z(reference_frequency);
        let sp = cfg.zpf_p(reference_frequency);
        DimensionlessGaussian {
            mean_z1: state.mean_z / sz,
            mean_p1: state.mean_p / sp,
            var_z1: state.cov.zz / (sz * sz),
            cov_z1p1: state.cov.zp / (sz * sp),
            var_p1: state.cov.pp / (sp * sp),
        }
    }
}

/// Embed a Gaussian state into the truncated Fock basis as a displaced,
/// rotated, squeezed thermal state. The unitaries are matrix exponentials of
/// truncated generators, built in a padded working space and projected back.
pub fn gaussian_to_density(
    state: &GaussianState,
    cfg: &ProtocolConfig,
    reference_frequency: f64,
    n_max: usize,
) -> Result<DensityMatrix, FockError> {
    gaussian_to_density_dimensionless(
        &DimensionlessGaussian::from_si(state, cfg, reference_frequency),
        n_max,
    )
}

/// Fock embedding of a dimensionless Gaussian description (ground-state
/// variance 1 per quadrature).
pub fn gaussian_to_density_dimensionless(
    g: &DimensionlessGaussian,
    n_max: usize,
) -> Result<DensityMatrix, FockError> {
    let det = g.var_z1 * g.var_p1 - g.cov_z1p1 * g.cov_z1p1;
    if det < 1.0 - 1e-9 {
        return Err(FockError::NonPhysicalCovariance(det));
    }
    // covariance eigen-structure: Σ = R(χ) diag(κ e^{2r}, κ e^{−2r}) R(χ)ᵀ
    let kappa = det.sqrt();
    let half_sum = 0.5 * (g.var_z1 + g.var_p1);
    let half_diff = 0.5 * (g.var_z1 - g.var_p1);
    let b = (half_diff * half_diff + g.cov_z1p1 * g.cov_z1p1).sqrt();
    let lam_plus = half_sum + b;
    let r = 0.5 * (lam_plus / kappa).ln().max(0.0); // ¼ ln(λ₊/λ₋) = ½ ln(λ₊/κ)
    // eigenvector of λ₊ sets the antisqueezed axis angle
    let chi = if b < 1e-14 {
        0.0
    } else {
        0.5 * g.cov_z1p1.atan2(half_diff)
    };

    let n_bar = (kappa - 1.0) / 2.0;
    let pad = 40;
    let wdim = n_max + 1 + pad;

    // thermal core: Bose-Einstein diagonal, renormalized over the working space
    let mut rho = Array2::<Complex64>::zeros((wdim, wdim));
    if n_bar < 1e-14 {
        rho[(0, 0)] = Complex64::new(1.0, 0.0);
    } else {
        let ratio = n_bar / (n_bar + 1.0);
        let mut w = 1.0 / (n_bar + 1.0);
        let mut total = 0.0;
        for k in 0..wdim {
            rho[(k, k)] = Complex64::new(w, 0.0);
            total += w;
            w *= ratio;
        }
        for k in 0..wdim {
            rho[(k, k)] /= total;
        }
    }

    // squeeze: S = exp((r/2)(a†² − a²)) stretches z₁ by e^{r}; applied as
    // exp(iH) with Hermitian H = −i(r/2)(a†² − a²)
    if r.abs() > 1e-15 {
        let mut h = Array2::<Complex64>::zeros((wdim, wdim));
        for m in 0..wdim.saturating_sub(2) {
            let v = ((m + 1) as f64 * (m + 2) as f64).sqrt() * r / 2.0;
            h[(m, m + 2)] = Complex64::new(0.0, v);
            h[(m + 2, m)] = Complex64::new(0.0, -v);
        }
        let s = unitary_exp_i(&h);
        let sh = s.t().mapv(|x| x.conj());
        rho = s.dot(&rho).dot(&sh);
    }

    // rotate the antisqueezed axis from 0 to χ: ρ → UρU†, U = e^{iχ a†a}
    if chi.abs() > 1e-15 {
        let mut u = Array2::<Complex64>::zeros((wdim, wdim));
        for m in 0..wdim {
            u[(m, m)] = Complex64::from_polar(1.0, chi * m as f64);
        }
        let uh = u.t().mapv(|x| x.conj());
        rho = u.dot(&rho).dot(&uh);
    }

    // displace to α = (⟨z₁⟩ + i⟨p₁⟩)/2
    let alpha = Complex64::new(g.mean_z1 / 2.0, g.mean_p1 / 2.0);
    if alpha.norm() > 1e-15 {
        let mut h = Array2::<Complex64>::zeros((wdim, wdim));
        for m in 0..wdim - 1 {
            let v = Complex64::new(0.0, -1.0) * alpha * ((m + 1) as f64).sqrt();
            h[(m + 1, m)] = v;
            h[(m, m + 1)] = v.conj();
        }
        let d = unitary_exp_i(&h);
        let dh = d.t().mapv(|x| x.conj());
        rho = d.dot(&rho).dot(&dh);
    }

    // project back to the requested truncation
    let dim = n_max + 1;
    let mut out = Array2::<Complex64>::zeros((dim, dim));
    for a in 0..dim {
        for b_ix in 0..dim {
            out[(a, b_ix)] = rho[(a, b_ix)];
        }
    }
    let tail = out[(n_max, n_max)].re;
    if tail >= TRUNCATION_LIMIT {
        return Err(FockError::Truncation {
            tail,
            limit: TRUNCATION_LIMIT,
        });
    }
    // hermitize and renormalize the projected block
    let outh = out.t().mapv(|x| x.conj());
    let mut sym = (&out + &outh).mapv(|x| x / 2.0);
    let trace: f64 = (0..dim).map(|i| sym[(i, i)].re).sum();
    sym.mapv_inplace(|x| x / trace);
    Ok(DensityMatrix::from_matrix_unchecked(sym))
}

/// Clip tiny negative eigenvalues (from floating-point round-off) and
/// renormalize; used at serialization boundaries.
pub fn project_to_physical(rho: &DensityMatrix) -> DensityMatrix {
    let (vals, vecs) = eigh(rho.matrix());
    let dim = rho.dim();
    let mut scaled = vecs.clone();
    let total: f64 = vals.iter().map(|v| v.max(0.0)).sum();
    for (j, v) in vals.iter().enumerate() {
        let w = v.max(0.0) / total;
        for i in 0..dim {
            scaled[(i, j)] *= w;
        }
    }
    let vh = vecs.t().mapv(|x| x.conj());
    DensityMatrix::from_matrix_unchecked(scaled.dot(&vh))
}
