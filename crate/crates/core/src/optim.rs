//! Deterministic small-scale optimizers: Levenberg–Marquardt for nonlinear
//! least squares (numerical Jacobians) and a damped Newton iteration for
//! smooth likelihood maximization.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum OptimError {
    #[error("did not converge within {0} iterations (last gradient norm {1:.3e})")]
    NoConvergence(usize, f64),
    #[error("singular normal equations")]
    Singular,
}

/// Result of a Levenberg–Marquardt run.
#[derive(Debug, Clone)]
pub struct LmFit {
    pub params: Vec<f64>,
    /// Standard errors from σ̂²(JᵀJ)⁻¹ with σ̂² = SSR/(N − p).
    pub std_errors: Vec<f64>,
    pub ssr: f64,
    pub iterations: usize,
}

fn solve_dense(a: &mut [Vec<f64>], b: &mut [f64]) -> Result<Vec<f64>, OptimError> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        if a[pivot][col].abs() < 1e-300 {
            return Err(OptimError::Singular);
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in (col + 1)..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in (row + 1)..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Ok(x)
}

fn invert_dense(a: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, OptimError> {
    let n = a.len();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let mut m: Vec<Vec<f64>> = a.to_vec();
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        cols.push(solve_dense(&mut m, &mut e)?);
    }
    let mut inv = vec![vec![0.0; n]; n];
    for (j, col) in cols.iter().enumerate() {
        for i in 0..n {
            inv[i][j] = col[i];
        }
    }
    Ok(inv)
}

/// Levenberg–Marquardt with forward-difference Jacobians.
/// `residuals(params, out)` fills the residual vector r(θ); minimizes ‖r‖².
pub fn levenberg_marquardt<F>(
    mut residuals: F,
    initial: &[f64],
    n_residuals: usize,
    max_iter: usize,
) -> Result<LmFit, OptimError>
where
    F: FnMut(&[f64], &mut [f64]),
{
    let p = initial.len();
    let mut params = initial.to_vec();
    let mut r = vec![0.0; n_residuals];
    residuals(&params, &mut r);
    let mut ssr: f64 = r.iter().map(|v| v * v).sum();
    let mut lambda = 1e-3;
    let mut jac = vec![vec![0.0; p]; n_residuals];
    let mut r_pert = vec![0.0; n_residuals];
    let mut grad_norm = f64::INFINITY;

    for iter in 0..max_iter {
        // forward-difference Jacobian
        for j in 0..p {
            let h = 1e-7 * params[j].abs().max(1e-9);
            let mut pp = params.clone();
            pp[j] += h;
            residuals(&pp, &mut r_pert);
            for i in 0..n_residuals {
                jac[i][j] = (r_pert[i] - r[i]) / h;
            }
        }
        // normal equations (JᵀJ + λ diag) δ = −Jᵀr
        let mut jtj = vec![vec![0.0; p]; p];
        let mut jtr = vec![0.0; p];
        let mut jac_norm_sq = 0.0;
        for i in 0..n_residuals {
            for a in 0..p {
                jtr[a] += jac[i][a] * r[i];
                jac_norm_sq += jac[i][a] * jac[i][a];
                for b in a..p {
                    jtj[a][b] += jac[i][a] * jac[i][b];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                jtj[a][b] = jtj[b][a];
            }
        }
        grad_norm = jtr.iter().map(|v| v * v).sum::<f64>().sqrt();
        // scale-free stationarity: ‖Jᵀr‖ ≪ ‖J‖·‖r‖
        let grad_scale = (jac_norm_sq * ssr).sqrt();
        if grad_norm <= 1e-12 * grad_scale || grad_scale == 0.0 {
            return finish(params, jtj, ssr, n_residuals, iter);
        }

        let mut improved = false;
        for _ in 0..40 {
            let mut lhs = jtj.clone();
            for a in 0..p {
                lhs[a][a] += lambda * (jtj[a][a].max(1e-30));
            }
            let mut rhs: Vec<f64> = jtr.iter().map(|v| -v).collect();
            let delta = match solve_dense(&mut lhs, &mut rhs) {
                Ok(d) => d,
                Err(_) => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let cand: Vec<f64> = params.iter().zip(&delta).map(|(a, d)| a + d).collect();
            residuals(&cand, &mut r_pert);
            let cand_ssr: f64 = r_pert.iter().map(|v| v * v).sum();
            if cand_ssr.is_finite() && cand_ssr <= ssr {
                let step: f64 = delta.iter().map(|d| d * d).sum::<f64>().sqrt();
                let scale: f64 = params
                    .iter()
                    .map(|v| v.abs())
                    .sum::<f64>()
                    .max(1e-12);
                let rel_impr = (ssr - cand_ssr) / ssr.max(1e-300);
                params = cand;
                std::mem::swap(&mut r, &mut r_pert);
                ssr = cand_ssr;
                lambda = (lambda * 0.3).max(1e-12);
                improved = true;
                if rel_impr < 1e-14 || step < 1e-14 * scale {
                    return finish(params, jtj, ssr, n_residuals, iter);
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            // no damping level yields an improvement: numerical optimum
            return finish(params, jtj, ssr, n_residuals, iter);
        }
    }
    Err(OptimError::NoConvergence(max_iter, grad_norm))
}

fn finish(
    params: Vec<f64>,
    jtj: Vec<Vec<f64>>,
    ssr: f64,
    n_residuals: usize,
    iterations: usize,
) -> Result<LmFit, OptimError> {
    let p = params.len();
    let dof = (n_residuals as f64 - p as f64).max(1.0);
    let variance = (ssr / dof).max(0.0);
    let std_errors = match invert_dense(&jtj) {
        Ok(inv) => (0..p)
            .map(|a| (variance * inv[a][a].max(0.0)).sqrt())
            .collect(),
        Err(_) => vec![f64::NAN; p],
    };
    Ok(LmFit {
        params,
        std_errors,
        ssr,
        iterations,
    })
}

/// Damped Newton ascent for a smooth objective with caller-supplied gradient.
/// The Hessian is built by central differences of the gradient. Maximizes.
pub fn newton_maximize<F, G>(
    value: F,
    gradient: G,
    initial: &[f64],
    max_iter: usize,
    tol: f64,
) -> Result<(Vec<f64>, f64), OptimError>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    let p = initial.len();
    let mut x = initial.to_vec();
    let mut fx = value(&x);
    for iter in 0..max_iter {
        let g = gradient(&x);
        let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if gnorm < tol {
            return Ok((x, fx));
        }
        // central-difference Hessian of the gradient
        let mut hess = vec![vec![0.0; p]; p];
        for j in 0..p {
            let h = 1e-6 * x[j].abs().max(1e-8);
            let mut xp = x.clone();
            xp[j] += h;
            let mut xm = x.clone();
            xm[j] -= h;
            let gp = gradient(&xp);
            let gm = gradient(&xm);
            for i in 0..p {
                hess[i][j] = (gp[i] - gm[i]) / (2.0 * h);
            }
        }
        // symmetrize
        for i in 0..p {
            for j in (i + 1)..p {
                let s = 0.5 * (hess[i][j] + hess[j][i]);
                hess[i][j] = s;
                hess[j][i] = s;
            }
        }
        // Newton direction for a maximum: solve (−H) d = g, damped if needed
        let mut step_found = false;
        let mut damping = 0.0;
        for _ in 0..30 {
            let mut lhs = vec![vec![0.0; p]; p];
            for i in 0..p {
                for j in 0..p {
                    lhs[i][j] = -hess[i][j];
                }
                lhs[i][i] += damping;
            }
            let mut rhs = g.clone();
            if let Ok(dir) = solve_dense(&mut lhs, &mut rhs) {
                // backtracking line search along dir
                let mut alpha = 1.0;
                for _ in 0..50 {
                    let cand: Vec<f64> =
                        x.iter().zip(&dir).map(|(xi, di)| xi + alpha * di).collect();
                    let fc = value(&cand);
                    if fc.is_finite() && fc > fx {
                        x = cand;
                        fx = fc;
                        step_found = true;
                        break;
                    }
                    alpha *= 0.5;
                }
                if step_found {
                    break;
                }
            }
            damping = if damping == 0.0 { 1e-6 * gnorm } else { damping * 10.0 };
        }
        if !step_found {
            // no direction at any damping improves the objective: we are at
            // the numerical maximum of this (deterministic) surface
            let _ = iter;
            return Ok((x, fx));
        }
    }
    let g = gradient(&x);
    let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    if gnorm < tol * 1e6 {
        Ok((x, fx))
    } else {
        Err(OptimError::NoConvergence(max_iter, gnorm))
    }
}
