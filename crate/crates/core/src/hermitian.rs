//! Dense complex-Hermitian linear algebra: a cyclic Jacobi eigensolver plus
//! the matrix functions built on it. Matrix dimensions in this crate stay
//! below ~150, where Jacobi is plenty fast and fully deterministic.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

/// Eigendecomposition A = V diag(λ) V† of a Hermitian matrix.
/// Eigenvalues ascend; V's columns are the matching orthonormal eigenvectors.
pub fn eigh(a: &Array2<Complex64>) -> (Array1<f64>, Array2<Complex64>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    let mut m = a.clone();
    let mut v = Array2::<Complex64>::eye(n);
    let norm: f64 = a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let tol = (norm * 1e-15).max(f64::MIN_POSITIVE);

    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                let abs = apq.norm();
                if abs <= tol * 1e-2 / (n as f64) {
                    continue;
                }
                let phase = apq / abs; // e^{iφ}
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let tau = (aqq - app) / (2.0 * abs);
                let t = if tau == 0.0 {
                    1.0
                } else {
                    tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let su = Complex64::new(s, 0.0) * phase;

                // columns: M ← M·J, with J[p,p]=c, J[q,q]=c, J[p,q]=s·u, J[q,p]=−s·ū
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = mkp * c - mkq * su.conj();
                    m[(k, q)] = mkp * su + mkq * c;
                }
                // rows: M ← J†·M
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = mpk * c - mqk * su;
                    m[(q, k)] = mpk * su.conj() + mqk * c;
                }
                m[(p, q)] = Complex64::new(0.0, 0.0);
                m[(q, p)] = Complex64::new(0.0, 0.0);
                m[(p, p)] = Complex64::new(m[(p, p)].re, 0.0);
                m[(q, q)] = Complex64::new(m[(q, q)].re, 0.0);

                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * c - vkq * su.conj();
                    v[(k, q)] = vkp * su + vkq * c;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).unwrap());
    let eigvals = Array1::from_iter(order.iter().map(|&i| diag[i]));
    let mut eigvecs = Array2::<Complex64>::zeros((n, n));
    for (new_col, &old_col) in order.iter().enumerate() {
        for k in 0..n {
            eigvecs[(k, new_col)] = v[(k, old_col)];
        }
    }
    (eigvals, eigvecs)
}

/// Apply a real function to the spectrum of a Hermitian matrix:
/// f(A) = V diag(f(λ)) V†.
pub fn hermitian_function<F: Fn(f64) -> f64>(a: &Array2<Complex64>, f: F) -> Array2<Complex64> {
    let (vals, vecs) = eigh(a);
    let n = a.nrows();
    let mut scaled = vecs.clone();
    for (j, lam) in vals.iter().enumerate() {
        let fv = f(*lam);
        for i in 0..n {
            scaled[(i, j)] *= fv;
        }
    }
    let vh = vecs.t().mapv(|x| x.conj());
    scaled.dot(&vh)
}

/// exp(iH) for Hermitian H (an exactly unitary result in the truncated space).
pub fn unitary_exp_i(h: &Array2<Complex64>) -> Array2<Complex64> {
    let (vals, vecs) = eigh(h);
    let n = h.nrows();
    let mut scaled = vecs.clone();
    for (j, lam) in vals.iter().enumerate() {
        let ph = Complex64::from_polar(1.0, *lam);
        for i in 0..n {
            scaled[(i, j)] *= ph;
        }
    }
    let vh = vecs.t().mapv(|x| x.conj());
    scaled.dot(&vh)
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(a: &Array2<Complex64>) -> f64 {
    eigh(a).0[0]
}

/// Uhlmann fidelity F(ρ, σ) = (Tr √(√ρ σ √ρ))² between two density matrices.
pub fn fidelity(rho: &Array2<Complex64>, sigma: &Array2<Complex64>) -> f64 {
    let sqrt_rho = hermitian_function(rho, |x| x.max(0.0).sqrt());
    let inner = sqrt_rho.dot(sigma).dot(&sqrt_rho);
    let (vals, _) = eigh(&inner);
    let tr: f64 = vals.iter().map(|&x| x.max(0.0).sqrt()).sum();
    tr * tr
}
