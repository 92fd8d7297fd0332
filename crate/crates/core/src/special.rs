//! Numerically stable special functions for the Fock-basis machinery:
//! harmonic-oscillator eigenfunctions, Gauss–Legendre quadrature rules, and
//! the weighted generalized-Laguerre terms of the Wigner expansion.

use statrs::function::gamma::ln_gamma;

/// Orthonormal harmonic-oscillator eigenfunctions h_0..h_nmax evaluated at
/// `x` (unit-frequency convention, ∫h_m² dx = 1), via the weighted recurrence
/// h_{m+1} = √(2/(m+1)) x h_m − √(m/(m+1)) h_{m−1}. The Gaussian envelope is
/// folded in from the start so no factorials or powers ever appear.
pub fn hermite_functions(n_max: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    let h0 = std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp();
    out.push(h0);
    if n_max == 0 {
        return out;
    }
    out.push(std::f64::consts::SQRT_2 * x * h0);
    for m in 1..n_max {
        let mf = m as f64;
        let next = (2.0 / (mf + 1.0)).sqrt() * x * out[m] - (mf / (mf + 1.0)).sqrt() * out[m - 1];
        out.push(next);
    }
    out
}

/// Real amplitudes ψ_m(p̃) of the quadrature eigenstate expansion, m = 0..n_max:
/// ψ_m(p̃) = (2π)^{-1/4} H_m(p̃/√2) e^{-p̃²/4} / √(2^m m!) = 2^{-1/4} h_m(p̃/√2).
///
/// The full overlap ⟨m|p̃,φ⟩ is e^{im(φ+π/2)} ψ_m(p̃); see
/// [`crate::fockstate::quadrature_overlap`].
pub fn quadrature_amplitudes(n_max: usize, p_tilde: f64) -> Vec<f64> {
    let scale = 2f64.powf(-0.25);
    hermite_functions(n_max, p_tilde / std::f64::consts::SQRT_2)
        .into_iter()
        .map(|h| scale * h)
        .collect()
}

/// Nodes and weights of the `order`-point Gauss–Legendre rule on [−1, 1].
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1);
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Newton iteration from the Chebyshev-like initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 1..n {
                let kf = k as f64;
                let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Weighted generalized-Laguerre sequence
/// T_l = e^{−x/2} √(l!/(l+δ)!) x^{δ/2} L_l^δ(x) for l = 0..l_max at x ≥ 0.
///
/// These are the radial factors of displaced-Fock matrix elements, bounded by
/// one in magnitude, so the upward recurrence is stable and overflow-free for
/// any order.
pub fn laguerre_weighted(l_max: usize, delta: usize, x: f64) -> Vec<f64> {
    let d = delta as f64;
    let mut out = Vec::with_capacity(l_max + 1);
    let t0 = if x == 0.0 {
        if delta == 0 {
            1.0
        } else {
            0.0
        }
    } else {
        (-0.5 * x + 0.5 * d * x.ln() - 0.5 * ln_gamma(d + 1.0)).exp()
    };
    out.push(t0);
    if l_max == 0 {
        return out;
    }
    out.push((1.0 + d - x) / (1.0 + d).sqrt() * t0);
    for l in 1..l_max {
        let lf = l as f64;
        let next = ((2.0 * lf + d + 1.0 - x) * out[l] - (lf * (lf + d)).sqrt() * out[l - 1])
            / ((lf + 1.0) * (lf + 1.0 + d)).sqrt();
        out.push(next);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use num_bigint::BigInt;

    #[test]
    fn hermite_low_orders() {
        // h_0, h_1, h_2 against explicit formulas.
        let x = 0.7;
        let h = hermite_functions(2, x);
        let h0 = std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp();
        assert_relative_eq!(h[0], h0, max_relative = 1e-15);
        assert_relative_eq!(h[1], std::f64::consts::SQRT_2 * x * h0, max_relative = 1e-14);
        assert_relative_eq!(
            h[2],
            (2.0 * x * x - 1.0) / std::f64::consts::SQRT_2 * h0,
            max_relative = 1e-14
        );
    }

    /// Exact Hermite polynomial values at points where x² is an integer:
    /// by parity H_m(x) is a polynomial in x² (possibly times x), so the
    /// integer recurrence H_{m+1} = 2x H_m − 2m H_{m−1} can be carried out
    /// exactly over BigInt in the variable u = x².
    fn hermite_exact_even_part(m: usize, x_sq: i64) -> (BigInt, bool) {
        // Track coefficient vectors in u for (even part, odd part/x).
        // H_m = E_m(u) + x·O_m(u) with exactly one of the two nonzero.
        let u = BigInt::from(x_sq);
        let mut e_prev = BigInt::from(1); // H_0 = 1
        let mut o_prev = BigInt::from(0);
        if m == 0 {
            return (e_prev, true);
        }
        let mut e_cur = BigInt::from(0); // H_1 = 2x → odd part 2
        let mut o_cur = BigInt::from(2);
        for k in 1..m {
            // H_{k+1} = 2x H_k − 2k H_{k−1}
            let e_next = 2 * &u * &o_cur - 2 * k as i64 * &e_prev;
            let o_next = 2 * &e_cur - 2 * k as i64 * &o_prev;
            e_prev = e_cur;
            o_prev = o_cur;
            e_cur = e_next;
            o_cur = o_next;
        }
        if m % 2 == 0 {
            (e_cur, true)
        } else {
            (o_cur, false)
        }
    }

    #[test]
    fn hermite_high_order_against_exact_recurrence() {
        // m = 60 at p̃ = 8 → x = p̃/√2 = 4√2, x² = 32 exactly.
        let m = 60;
        let p_tilde = 8.0f64;
        let x = p_tilde / std::f64::consts::SQRT_2;
        let (coeff, is_even) = hermite_exact_even_part(m, 32);
        assert!(is_even);
        // h_m(x) = H_m(x) e^{−x²/2} π^{−1/4} / √(2^m m!)
        let h_exact = {
            let hval: f64 = coeff.to_string().parse::<f64>().unwrap();
            let ln_norm = 0.5 * (m as f64) * std::f64::consts::LN_2
                + 0.5 * ln_gamma(m as f64 + 1.0)
                + 0.25 * std::f64::consts::PI.ln()
                + 16.0; // e^{−x²/2} = e^{−16}
            hval * (-ln_norm).exp()
        };
        let h = hermite_functions(m, x);
        assert_relative_eq!(h[m], h_exact, max_relative = 1e-10);
        assert!(h[m].is_finite());
    }

    #[test]
    fn hermite_orthonormality_by_quadrature() {
        // ∫ h_m h_n dx over a wide Gauss–Legendre grid.
        let (nodes, weights) = gauss_legendre(220);
        let half = 12.0;
        let mut gram = [[0.0f64; 6]; 6];
        for (t, w) in nodes.iter().zip(&weights) {
            let x = t * half;
            let h = hermite_functions(5, x);
            for a in 0..6 {
                for b in 0..6 {
                    gram[a][b] += w * half * h[a] * h[b];
                }
            }
        }
        for a in 0..6 {
            for b in 0..6 {
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((gram[a][b] - expect).abs() < 1e-10, "gram[{a}][{b}]");
            }
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (nodes, weights) = gauss_legendre(16);
        // degree ≤ 2·16−1: ∫ x^k over [−1,1]
        for k in 0..=31usize {
            let num: f64 = nodes
                .iter()
                .zip(&weights)
                .map(|(x, w)| w * x.powi(k as i32))
                .sum();
            let exact = if k % 2 == 0 { 2.0 / (k as f64 + 1.0) } else { 0.0 };
            assert!((num - exact).abs() < 1e-13, "k = {k}");
        }
    }

    /// Exact generalized Laguerre via BigRational-free integer recurrence:
    /// for integer x, (l+1) L_{l+1} = (2l+δ+1−x) L_l − (l+δ) L_{l−1} keeps
    /// rational values with denominator l!; track numerators of l!·L_l.
    fn laguerre_exact(l: usize, delta: usize, x: i64) -> f64 {
        use num_bigint::BigInt;
        // work with rationals p_l/q_l where q_l = l! (denominators are exact)
        let mut num_prev = BigInt::from(1); // L_0 = 1 → 0!·L_0 = 1
        let mut num_cur = BigInt::from(1 + delta as i64 - x); // 1!·L_1
        if l == 0 {
            return 1.0;
        }
        for k in 1..l {
            // (k+1)!·L_{k+1} = (2k+δ+1−x)·k!·L_k − (k+δ)·k·(k−1)!·L_{k−1}
            let a = BigInt::from(2 * k as i64 + delta as i64 + 1 - x);
            let b = BigInt::from((k + delta) as i64 * k as i64);
            let next = a * &num_cur - b * &num_prev;
            num_prev = num_cur;
            num_cur = next;
        }
        let num: f64 = num_cur.to_string().parse().unwrap();
        num * (-ln_gamma(l as f64 + 1.0)).exp()
    }

    #[test]
    fn laguerre_weighted_against_exact_recurrence() {
        for (l, delta, x) in [(100usize, 0usize, 7i64), (80, 5, 3), (60, 40, 12), (90, 1, 25)] {
            let t = laguerre_weighted(l, delta, x as f64);
            let lag = laguerre_exact(l, delta, x);
            let ln_pref = -0.5 * x as f64 + 0.5 * delta as f64 * (x as f64).ln()
                + 0.5 * (ln_gamma(l as f64 + 1.0) - ln_gamma((l + delta) as f64 + 1.0));
            let expect = lag.signum()
                * (ln_pref + lag.abs().ln()).exp();
            assert_relative_eq!(t[l], expect, max_relative = 1e-10);
        }
    }

    #[test]
    fn laguerre_weighted_edge_cases() {
        let t = laguerre_weighted(3, 0, 0.0);
        // L_l(0) = 1 and the weight is 1 at x=0, δ=0.
        for v in &t {
            assert_relative_eq!(*v, 1.0, max_relative = 1e-14);
        }
        let t = laguerre_weighted(3, 2, 0.0);
        for v in &t {
            assert_eq!(*v, 0.0);
        }
    }
}
