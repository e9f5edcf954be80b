//! Corrected trapezoid rules for periodic integrands with a power singularity.
//!
//! If `F(t) = A(t)|t|^γ + smooth` near `t = 0` on a periodic grid of step
//! `h`, the punctured sum `h Σ_{j≠0} F(jh)` misses the singular part by
//! `−2ζ(−γ) h^{1+γ} A(0) + O(h^{3+γ})`.

use std::f64::consts::PI;

/// Riemann zeta function for real `x ≠ 1`.
pub fn riemann_zeta(x: f64) -> f64 {
    if x == 1.0 {
        return f64::INFINITY;
    }
    if x == 0.0 {
        return -0.5;
    }
    if x >= 0.5 {
        eta_borwein(x) / (1.0 - 2f64.powf(1.0 - x))
    } else {
        // functional equation
        let one_minus = 1.0 - x;
        2f64.powf(x) * PI.powf(x - 1.0) * (0.5 * PI * x).sin() * libm::tgamma(one_minus) * riemann_zeta(one_minus)
    }
}

/// Dirichlet eta by Borwein's accelerated alternating series.
fn eta_borwein(x: f64) -> f64 {
    const N: usize = 30;
    // d_k = n Σ_{i≤k} (n+i−1)! 4^i / ((n−i)! (2i)!)
    let n = N as f64;
    let mut d = [0.0f64; N + 1];
    let mut term = 1.0 / n;
    let mut acc = term;
    d[0] = n * acc;
    for i in 1..=N {
        let fi = i as f64;
        term *= (n + fi - 1.0) * (n - fi + 1.0) * 4.0 / ((2.0 * fi - 1.0) * (2.0 * fi));
        acc += term;
        d[i] = n * acc;
    }
    let mut sum = 0.0;
    for k in 0..N {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * (d[k] - d[N]) / ((k + 1) as f64).powf(x);
    }
    -sum / d[N]
}

/// Amount to add to a punctured trapezoid sum for a `A(0)|t|^γ` singularity.
pub fn punctured_correction(gamma: f64, h: f64, a0: f64) -> f64 {
    -2.0 * riemann_zeta(-gamma) * h.powf(1.0 + gamma) * a0
}
