//! Ray-decomposition oracle for planar star-shaped sets.
//!
//! In polar coordinates about `x`, an integral of `g(|y − x|)` against
//! `χ_E` (or `χ_{Eᶜ} − χ_E`) becomes an angular integral of one-dimensional
//! radial integrals, and along each ray the indicator only changes where
//! the line crosses `∂E`. The radial integrals are then exact, and only
//! the angular integral is left to adaptive quadrature. Lines through `x`
//! are treated as pairs of opposite rays, which is what makes the
//! principal value of the curvature integral converge.
//!
//! This path shares nothing with the boundary-integral evaluation in
//! `functionals` and serves as its reference.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use super::oracle::{integrate, integrate_pieces, OracleReport};
use super::QuadTolerance;
use crate::sets::{Point2, StarShape2D};
use crate::{Error, Result};

/// Where the rays start.
#[derive(Clone, Copy, Debug)]
pub enum Origin {
    /// Boundary point at polar angle `θ` of the parameterization.
    Boundary(f64),
    /// Any point not on the boundary.
    Point(Point2),
}

/// Uniform crossing-search cells per revolution.
const BASE_CELLS: usize = 512;
/// Half-octave refinement steps towards the origin parameter.
const END_REFINEMENT: usize = 128;
/// Angular cut-off below which the near crossing is taken from the
/// osculating circle. Closer to the tangent the crossing parameter is so
/// small that the normal offset loses its relative precision.
const PSI_CUT: f64 = 1e-6;

struct Frame<'a> {
    shape: &'a StarShape2D,
    origin: Origin,
    tangent: Point2,
    normal: Point2,
    /// Signed curvature of the boundary at a boundary origin.
    curvature: f64,
    cells: usize,
}

impl<'a> Frame<'a> {
    fn new(shape: &'a StarShape2D, origin: Origin) -> Self {
        let cells = BASE_CELLS.max(32 * shape.radius().max_mode());
        match origin {
            Origin::Boundary(theta) => {
                let (r, d1, d2) = shape.radius().derivatives(theta);
                let (sn, cs) = theta.sin_cos();
                let dy = [d1 * cs - r * sn, d1 * sn + r * cs];
                let ddy = [(d2 - r) * cs - 2.0 * d1 * sn, (d2 - r) * sn + 2.0 * d1 * cs];
                let speed = dy[0].hypot(dy[1]);
                let tangent = [dy[0] / speed, dy[1] / speed];
                let curvature = (dy[0] * ddy[1] - dy[1] * ddy[0]) / speed.powi(3);
                Frame { shape, origin, tangent, normal: [tangent[1], -tangent[0]], curvature, cells }
            }
            Origin::Point(_) => {
                Frame { shape, origin, tangent: [1.0, 0.0], normal: [0.0, -1.0], curvature: 0.0, cells }
            }
        }
    }

    /// `y(θ + τ) − x`, accurate relative to `|τ|` at a boundary origin.
    fn offset(&self, tau: f64) -> Point2 {
        match self.origin {
            Origin::Boundary(theta) => {
                let radius = self.shape.radius();
                let mut dr = 0.0;
                for k in 1..=radius.max_mode() {
                    let a = radius.cos.get(k - 1).copied().unwrap_or(0.0);
                    let b = radius.sin.get(k - 1).copied().unwrap_or(0.0);
                    if a == 0.0 && b == 0.0 {
                        continue;
                    }
                    let kf = k as f64;
                    let half = (0.5 * kf * tau).sin();
                    let (sm, cm) = (kf * theta + 0.5 * kf * tau).sin_cos();
                    dr += 2.0 * half * (b * cm - a * sm);
                }
                let r = radius.value(theta);
                let (s1, c1) = (theta + tau).sin_cos();
                let half = (0.5 * tau).sin();
                let (sm, cm) = (theta + 0.5 * tau).sin_cos();
                [dr * c1 - r * 2.0 * half * sm, dr * s1 + r * 2.0 * half * cm]
            }
            Origin::Point(x) => {
                let y = self.shape.point(tau);
                [y[0] - x[0], y[1] - x[1]]
            }
        }
    }

    fn direction(&self, psi: f64) -> Point2 {
        let (sn, cs) = psi.sin_cos();
        [cs * self.tangent[0] - sn * self.normal[0], cs * self.tangent[1] - sn * self.normal[1]]
    }

    /// Function whose zeros in the curve parameter are the crossings of
    /// the line `x + ℝe`. At a boundary origin the trivial zero at `τ = 0`
    /// is divided out.
    fn line_function(&self, tau: f64, psi: f64) -> f64 {
        let d = self.offset(tau);
        match self.origin {
            Origin::Boundary(_) => {
                let dt = d[0] * self.tangent[0] + d[1] * self.tangent[1];
                let dn = d[0] * self.normal[0] + d[1] * self.normal[1];
                let (sn, cs) = psi.sin_cos();
                (dt * sn + dn * cs) / (0.5 * tau).sin().abs()
            }
            Origin::Point(_) => {
                let e = self.direction(psi);
                d[0] * e[1] - d[1] * e[0]
            }
        }
    }

    /// Search parameters in curve order, as signed offsets from the origin
    /// parameter.
    fn samples(&self) -> Vec<f64> {
        let h = TAU / self.cells as f64;
        let mut out = Vec::with_capacity(self.cells + 2 * END_REFINEMENT);
        match self.origin {
            Origin::Boundary(_) => {
                for i in (1..=END_REFINEMENT).rev() {
                    out.push(h * (-0.5 * i as f64).exp2());
                }
                for j in 1..self.cells {
                    let t = h * j as f64;
                    // second half measured backwards from 2π
                    out.push(if 2 * j <= self.cells { t } else { t - TAU });
                }
                for i in 1..=END_REFINEMENT {
                    out.push(-h * (-0.5 * i as f64).exp2());
                }
            }
            Origin::Point(_) => {
                for j in 0..=self.cells {
                    out.push(h * j as f64);
                }
            }
        }
        out
    }

    /// Distances to the crossings on the `+e` and `−e` rays, each sorted.
    fn crossings(&self, psi: f64, samples: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let e = self.direction(psi);
        let mut plus = Vec::new();
        let mut minus = Vec::new();
        let mut prev_t = samples[0];
        let mut prev_g = self.line_function(prev_t, psi);
        for &t0 in &samples[1..] {
            let mut t = t0;
            if t < prev_t {
                // jump from +π to −π in the signed offset
                t += TAU;
            }
            let g = self.line_function(t, psi);
            if prev_g == 0.0 || (prev_g < 0.0) != (g < 0.0) {
                let root = self.bisect(prev_t, prev_g, t, psi);
                let d = self.offset(root);
                let rho = d[0] * e[0] + d[1] * e[1];
                let dist = d[0].hypot(d[1]);
                if rho >= 0.0 {
                    plus.push(dist);
                } else {
                    minus.push(dist);
                }
            }
            prev_t = t0;
            prev_g = g;
        }
        plus.sort_by(f64::total_cmp);
        minus.sort_by(f64::total_cmp);
        (plus, minus)
    }

    fn bisect(&self, mut a: f64, ga: f64, mut b: f64, psi: f64) -> f64 {
        let neg_a = ga < 0.0;
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if !(m > a.min(b) && m < a.max(b)) {
                break;
            }
            let gm = self.line_function(m, psi);
            if gm == 0.0 {
                return m;
            }
            if (gm < 0.0) == neg_a {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }

    fn starts_inside(&self) -> (bool, bool) {
        match self.origin {
            Origin::Boundary(_) => (true, false),
            Origin::Point(x) => {
                let c = self.shape.center();
                let (dx, dy) = (x[0] - c[0], x[1] - c[1]);
                let inside = dx.hypot(dy) < self.shape.radius_at(dy.atan2(dx));
                (inside, inside)
            }
        }
    }
}

/// `Σ ∫ (χ_{Eᶜ} − χ_E) ρ^{−1−s} dρ` along a ray, without the divergent
/// contribution of the first segment at `ρ = 0`.
fn ray_curvature(crossings: &[f64], starts_inside: bool, s: f64) -> f64 {
    let mut sigma = if starts_inside { -1.0 } else { 1.0 };
    let mut acc = 0.0;
    for &c in crossings {
        acc += -2.0 * sigma * c.powf(-s) / s;
        sigma = -sigma;
    }
    acc
}

/// `∫ χ_E ρ^{1−α} dρ` along a ray.
fn ray_potential(crossings: &[f64], starts_inside: bool, alpha: f64) -> f64 {
    let q = 2.0 - alpha;
    let mut inside = starts_inside;
    let mut last = 0.0f64;
    let mut acc = 0.0;
    for &c in crossings {
        if inside {
            acc += c.powf(q) - last.powf(q);
        }
        inside = !inside;
        last = c;
    }
    acc / q
}

/// Fractional curvature `PV ∫ (χ_{Eᶜ} − χ_E)|x − y|^{−2−s} dy` at the
/// boundary point with polar angle `theta`.
pub fn curvature_oracle(shape: &StarShape2D, theta: f64, s: f64, tol: &QuadTolerance) -> Result<OracleReport> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidParams { key: "s", msg: format!("must lie in (0,1), got {s}") });
    }
    let frame = Frame::new(shape, Origin::Boundary(theta));
    let samples = frame.samples();
    let (plus_inside, minus_inside) = frame.starts_inside();
    let pair = |psi: f64| {
        let (plus, minus) = frame.crossings(psi, &samples);
        ray_curvature(&plus, plus_inside, s) + ray_curvature(&minus, minus_inside, s)
    };
    // ψ = w^m near both tangent directions, where the integrand ~ ψ^{−s}
    let m = (2.0 / (1.0 - s)).ceil();
    let w_lo = PSI_CUT.powf(1.0 / m);
    let w_hi = FRAC_PI_2.powf(1.0 / m);
    let left = integrate(|w: f64| pair(w.powf(m)) * m * w.powf(m - 1.0), w_lo, w_hi, tol)?;
    let right = integrate(|w: f64| pair(PI - w.powf(m)) * m * w.powf(m - 1.0), w_lo, w_hi, tol)?;
    // Below the cut-off the near crossing sits at 2ψ/k on the osculating
    // circle; its first correction is odd in the direction of travel and
    // cancels between the two ends. The far crossings vary slowly and are
    // frozen at their value at the cut-off.
    let k = frame.curvature;
    let near = |psi: f64| {
        if k == 0.0 {
            0.0
        } else {
            k.signum() * (2.0 / s) * (2.0 * psi / k.abs()).powf(-s)
        }
    };
    let near_integral = PSI_CUT * near(PSI_CUT) / (1.0 - s);
    let tail = 2.0 * near_integral + PSI_CUT * (pair(PSI_CUT) + pair(PI - PSI_CUT) - 2.0 * near(PSI_CUT));
    Ok(OracleReport {
        estimate: left.estimate + right.estimate + tail,
        error_bound: left.error_bound + right.error_bound,
        subdivisions: left.subdivisions + right.subdivisions,
    })
}

/// Riesz potential `∫_E |x − y|^{−α} dy` seen from `origin`.
pub fn potential_oracle(shape: &StarShape2D, origin: Origin, alpha: f64, tol: &QuadTolerance) -> Result<OracleReport> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::InvalidParams { key: "alpha", msg: format!("must lie in (0,2), got {alpha}") });
    }
    let frame = Frame::new(shape, origin);
    let samples = frame.samples();
    let (plus_inside, minus_inside) = frame.starts_inside();
    let pair = |psi: f64| {
        let (plus, minus) = frame.crossings(psi, &samples);
        ray_potential(&plus, plus_inside, alpha) + ray_potential(&minus, minus_inside, alpha)
    };
    // From far away only a narrow cone of lines meets the set; break the
    // angular range at its edges so the quadrature cannot step over it.
    let mut breaks: Vec<f64> = (0..=8).map(|j| PI * j as f64 / 8.0).collect();
    if let Origin::Point(x) = origin {
        let c = shape.center();
        let (dx, dy) = (c[0] - x[0], c[1] - x[1]);
        let dist = dx.hypot(dy);
        let radius = shape.radius();
        let r_max = radius.r0 + radius.cos.iter().chain(radius.sin.iter()).map(|v| v.abs()).sum::<f64>();
        if dist > r_max {
            let axis = dy.atan2(dx).rem_euclid(PI);
            let half = (r_max / dist).asin();
            for delta in [-half, -0.5 * half, 0.0, 0.5 * half, half] {
                breaks.push((axis + delta).rem_euclid(PI));
            }
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    integrate_pieces(pair, &breaks, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> QuadTolerance {
        QuadTolerance { rel_tol: 1e-10, abs_tol: 1e-12, max_subdivisions: 2000 }
    }

    fn disk_curvature(r: f64, s: f64) -> f64 {
        (2.0 / s) * (2.0 * r).powf(-s) * PI.sqrt() * libm::tgamma(0.5 * (1.0 - s)) / libm::tgamma(1.0 - 0.5 * s)
    }

    #[test]
    fn disk_curvature_matches_closed_form() {
        for &(r, s) in &[(1.0, 0.5), (0.3, 0.2), (2.0, 0.9)] {
            let disk = StarShape2D::disk([0.4, -0.2], r).unwrap();
            let got = curvature_oracle(&disk, 0.7, s, &tol()).unwrap().estimate;
            let want = disk_curvature(r, s);
            assert!(((got - want) / want).abs() < 1e-8, "r={r} s={s}: {got} vs {want}");
        }
    }

    #[test]
    fn disk_potential_at_center_and_boundary() {
        let alpha = 0.5;
        let disk = StarShape2D::disk([0.0, 0.0], 1.5).unwrap();
        let center = potential_oracle(&disk, Origin::Point([0.0, 0.0]), alpha, &tol()).unwrap().estimate;
        let want = TAU * 1.5f64.powf(2.0 - alpha) / (2.0 - alpha);
        assert!(((center - want) / want).abs() < 1e-9);
        // the boundary value is smaller than the center value and matches a
        // point approaching the boundary from inside
        let on = potential_oracle(&disk, Origin::Boundary(0.3), alpha, &tol()).unwrap().estimate;
        let near = potential_oracle(
            &disk,
            Origin::Point([1.5 * (1.0 - 1e-9) * 0.3f64.cos(), 1.5 * (1.0 - 1e-9) * 0.3f64.sin()]),
            alpha,
            &tol(),
        )
        .unwrap()
        .estimate;
        assert!(on < center);
        assert!(((on - near) / on).abs() < 1e-6, "{on} vs {near}");
    }

    #[test]
    fn exterior_potential_of_disk_is_finite_and_decays() {
        let disk = StarShape2D::disk([0.0, 0.0], 1.0).unwrap();
        let v2 = potential_oracle(&disk, Origin::Point([2.0, 0.0]), 0.5, &tol()).unwrap().estimate;
        let v4 = potential_oracle(&disk, Origin::Point([4.0, 0.0]), 0.5, &tol()).unwrap().estimate;
        assert!(v2 > v4 && v4 > 0.0);
        // far field: V ≈ |E| |x|^{−α}
        let v100 = potential_oracle(&disk, Origin::Point([100.0, 0.0]), 0.5, &tol()).unwrap().estimate;
        assert!((v100 / (PI * 0.1) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn perturbed_disk_curvature_varies_along_boundary() {
        let shape = StarShape2D::from_modes([0.0, 0.0], 1.0, &[(3, 0.1, 0.0)]).unwrap();
        let a = curvature_oracle(&shape, 0.0, 0.5, &tol()).unwrap().estimate;
        let b = curvature_oracle(&shape, PI / 3.0, 0.5, &tol()).unwrap().estimate;
        // the tip of a lobe is more curved than the waist
        assert!(a > b);
        // threefold symmetry
        let c = curvature_oracle(&shape, 2.0 * PI / 3.0, 0.5, &tol()).unwrap().estimate;
        assert!(((a - c) / a).abs() < 1e-8);
    }
}
