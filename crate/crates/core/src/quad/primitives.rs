//! Closed forms for `|x − y|^(−p)` kernels on the line.

use crate::sets::IntervalSet;
use crate::{Error, Result};

/// `∫_{u1}^{u2} u^(q−1) du = (u2^q − u1^q)/q` for `0 ≤ u1 ≤ u2 ≤ ∞`.
///
/// Evaluated as `u1^q·expm1(q·ln1p((u2 − u1)/u1))/q`, which keeps full
/// relative precision when `u2/u1` is close to one.
pub fn power_integral(u1: f64, u2: f64, q: f64) -> f64 {
    debug_assert!(u1 >= 0.0 && u2 >= u1 && q != 0.0);
    if u1 == u2 {
        return 0.0;
    }
    if u2.is_infinite() {
        return if q < 0.0 { -u1.powf(q) / q } else { f64::INFINITY };
    }
    if u1 == 0.0 {
        return if q > 0.0 { u2.powf(q) / q } else { f64::INFINITY };
    }
    u1.powf(q) * (q * ((u2 - u1) / u1).ln_1p()).exp_m1() / q
}

/// `∫_a^b |x − y|^(−p) dy` for `x` outside the open interval `(a, b)`.
///
/// `a` may be `−∞` and `b` may be `+∞` when `p > 1`.
pub fn kernel_primitive(a: f64, b: f64, x: f64, p: f64) -> Result<f64> {
    if p == 1.0 {
        return Err(Error::LogCaseUnsupported);
    }
    if !(p > 0.0) {
        return Err(Error::InvalidParams { key: "p", msg: format!("exponent must be positive, got {p}") });
    }
    if a > b {
        return Err(Error::InvalidGeometry(format!("reversed interval ({a}, {b})")));
    }
    if a == b {
        return Ok(0.0);
    }
    if a < x && x < b {
        return Err(Error::SingularInteriorPoint);
    }
    if p > 1.0 && (x == a || x == b) {
        return Err(Error::DivergentRegime(format!("∫|x−y|^(−{p}) is not integrable at an endpoint")));
    }
    if p < 1.0 && (a.is_infinite() || b.is_infinite()) {
        return Err(Error::DivergentRegime(format!("∫|x−y|^(−{p}) over an unbounded interval")));
    }
    let (near, far) = if x <= a { (a - x, b - x) } else { (x - b, x - a) };
    Ok(power_integral(near, far, 1.0 - p))
}

/// `∬_{I×J} |x − y|^(−p)` for intervals of lengths `l1`, `l2` separated by
/// a gap `gap ≥ 0`. With `gap = 0` and the same interval on both sides use
/// [`self_interaction`] instead.
pub fn cross_interaction(l1: f64, gap: f64, l2: f64, p: f64) -> f64 {
    if gap >= l1 + l2 {
        // smooth integrand on the rectangle; tensor Gauss–Legendre avoids
        // the cancellation in the four-term second difference
        let rule = super::gauss::legendre(20);
        let mut acc = 0.0;
        for (xu, wu) in rule.iter() {
            let u = 0.5 * l1 * (xu + 1.0);
            let mut inner = 0.0;
            for (xv, wv) in rule.iter() {
                let v = 0.5 * l2 * (xv + 1.0);
                inner += wv * (gap + u + v).powf(-p);
            }
            acc += wu * inner;
        }
        return 0.25 * l1 * l2 * acc;
    }
    let g = |t: f64| second_primitive(t, p);
    g(gap + l1 + l2) - g(gap + l2) - g(gap + l1) + g(gap)
}

/// `∬_{(0,L)²} |x − y|^(−p)`, finite for `p < 1`.
pub fn self_interaction(l: f64, p: f64) -> f64 {
    2.0 * second_primitive(l, p)
}

/// `G(t) = t^(2−p)/((1−p)(2−p))`, so that `G″(t) = t^(−p)`.
fn second_primitive(t: f64, p: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    t.powf(2.0 - p) / ((1.0 - p) * (2.0 - p))
}

/// A boundary point seen from itself: the distances at which the
/// indicator of the set flips along each half-line, and whether each
/// half-line starts inside the set.
#[derive(Clone, Debug, PartialEq)]
pub struct EndpointView {
    pub right: Vec<f64>,
    pub right_starts_inside: bool,
    pub left: Vec<f64>,
}

impl EndpointView {
    /// View from the endpoint `x` of `set`; errors if `x` is not an endpoint.
    pub fn new(set: &IntervalSet, x: f64) -> Result<Self> {
        let (_, side) = set.endpoint_index(x).ok_or(Error::NotEndpoint(x))?;
        let mut right = Vec::new();
        let mut left = Vec::new();
        for &(a, b) in set.intervals() {
            for bp in [a, b] {
                if bp > x {
                    right.push(bp - x);
                } else if bp < x {
                    left.push(x - bp);
                }
            }
        }
        left.reverse();
        Ok(EndpointView { right, right_starts_inside: side == crate::sets::Side::Left, left })
    }

    /// Principal value of `∫ (χ_{Eᶜ} − χ_E)(y) |x − y|^(−1−s) dy`.
    ///
    /// The two pieces adjacent to `x` (one inside, one outside) each
    /// diverge like `ρ^(−s)/s`; their difference is kept in closed form.
    /// Every other piece is a plain primitive.
    pub fn curvature(&self, s: f64) -> f64 {
        let q = -s;
        let (inside_first, outside_first) =
            if self.right_starts_inside { (&self.right, &self.left) } else { (&self.left, &self.right) };
        let l_in = inside_first[0];
        let l_out = outside_first.first().copied().unwrap_or(f64::INFINITY);
        // (l_in^{-s} − l_out^{-s})/s: inner piece counts −, outer piece +
        let adjacent = power_integral(l_in.min(l_out), l_in.max(l_out), q) * if l_in <= l_out { 1.0 } else { -1.0 };
        let right = far_pieces(&self.right, self.right_starts_inside, q);
        let left = far_pieces(&self.left, !self.right_starts_inside, q);
        adjacent + (right + left)
    }

    /// `∫_E |x − y|^(−α) dy`.
    pub fn potential(&self, alpha: f64) -> f64 {
        let q = 1.0 - alpha;
        let right = all_pieces(&self.right, self.right_starts_inside, q);
        let left = all_pieces(&self.left, !self.right_starts_inside, q);
        right + left
    }
}

/// Pieces past the first flip along one half-line, signed `+` outside and
/// `−` inside: `Σ σ ∫_{u_j}^{u_{j+1}} u^(q−1) du`.
fn far_pieces(flips: &[f64], starts_inside: bool, q: f64) -> f64 {
    let mut inside = starts_inside;
    let mut acc = 0.0;
    for (j, &u) in flips.iter().enumerate() {
        inside = !inside;
        let next = flips.get(j + 1).copied().unwrap_or(f64::INFINITY);
        let piece = power_integral(u, next, q);
        acc += if inside { -piece } else { piece };
    }
    acc
}

/// Inside pieces only, unsigned: `Σ_{inside} ∫ u^(q−1) du`.
fn all_pieces(flips: &[f64], starts_inside: bool, q: f64) -> f64 {
    let mut inside = starts_inside;
    let mut lo = 0.0;
    let mut acc = 0.0;
    for &u in flips {
        if inside {
            acc += power_integral(lo, u, q);
        }
        inside = !inside;
        lo = u;
    }
    debug_assert!(!inside, "bounded sets end outside");
    acc
}

/// Principal value of `∫ (χ_{Eᶜ} − χ_E)(y)|x − y|^(−1−s) dy` at an
/// endpoint `x` of `set`.
pub fn pv_pair_integral(set: &IntervalSet, x: f64, s: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidParams { key: "s", msg: format!("s ∈ (0,1) required, got {s}") });
    }
    Ok(EndpointView::new(set, x)?.curvature(s))
}
