//! Exact one-dimensional functionals on finite unions of intervals.

use crate::quad::primitives::{cross_interaction, kernel_primitive, power_integral, self_interaction, EndpointView};
use crate::sets::IntervalSet;
use crate::{Error, Result};

/// `P_s(E) = Σ_i P_s(I_i) − 2 Σ_{i<j} ∬_{I_i×I_j} |x−y|^(−1−s)`.
pub fn frac_perimeter(set: &IntervalSet, s: f64) -> f64 {
    let iv = set.intervals();
    let single: f64 = iv.iter().map(|&(a, b)| 2.0 * (b - a).powf(1.0 - s) / (s * (1.0 - s))).sum();
    single - 2.0 * pairwise(iv, 1.0 + s)
}

/// `∬_{E×E} |x−y|^(−α)`.
pub fn riesz_energy(set: &IntervalSet, alpha: f64) -> f64 {
    let iv = set.intervals();
    let diag: f64 = iv.iter().map(|&(a, b)| self_interaction(b - a, alpha)).sum();
    diag + 2.0 * pairwise(iv, alpha)
}

fn pairwise(iv: &[(f64, f64)], p: f64) -> f64 {
    let mut acc = 0.0;
    for (i, &(a1, b1)) in iv.iter().enumerate() {
        for &(a2, b2) in &iv[i + 1..] {
            acc += cross_interaction(b1 - a1, a2 - b1, b2 - a2, p);
        }
    }
    acc
}

/// `V_E(x)` anywhere on the line.
pub fn potential(set: &IntervalSet, x: f64, alpha: f64) -> Result<f64> {
    if set.endpoint_index(x).is_some() {
        return Ok(EndpointView::new(set, x)?.potential(alpha));
    }
    let q = 1.0 - alpha;
    let mut acc = 0.0;
    for &(a, b) in set.intervals() {
        acc += if a < x && x < b {
            power_integral(0.0, x - a, q) + power_integral(0.0, b - x, q)
        } else {
            kernel_primitive(a, b, x, alpha)?
        };
    }
    Ok(acc)
}

/// `V_E′(x) = Σ_i (|x − a_i|^(−α) − |x − b_i|^(−α))` away from `∂E`.
pub fn grad_potential(set: &IntervalSet, x: f64, alpha: f64) -> Result<f64> {
    if set.endpoint_index(x).is_some() {
        return Err(Error::DivergentRegime(format!("V′ is infinite at the endpoint {x} (α = {alpha} ≥ n − 1 = 0)")));
    }
    Ok(set.intervals().iter().map(|&(a, b)| (x - a).abs().powf(-alpha) - (x - b).abs().powf(-alpha)).sum())
}

/// `κ_E(x)` at an endpoint.
pub fn frac_curvature(set: &IntervalSet, x: f64, s: f64) -> Result<f64> {
    Ok(EndpointView::new(set, x)?.curvature(s))
}
