//! Integral identities of the potential and the curvature, evaluated
//! numerically on both sides.
//!
//! * `Au1`: `∫_E ∇V·x dx = −(α/2) ∫_E V dx`
//! * `Au2`: `∮ V x·ν dσ = (n − α/2) ∫_E V dx`
//! * `Lal`: `V_E(x) ≤ V_B(0)` for the ball `B` with `|B| = |E|`
//! * `Minkowski`: `∮ κ x·ν dσ = (n − s) P_s(E) / c_var`
//! * `TangentialBall`: `sup |∇V·τ|` is linear in the distance `μ` to the
//!   equal-area disk
//!
//! Planar area integrals use a polar grid about the shape center
//! (uniform in angle, Gauss–Legendre in the radial fraction) with the
//! potential evaluated by [`PlaneField`], so the two sides of `Au1` and
//! `Au2` come from different discretizations.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::Sampled;
use crate::functionals::{line, plane, PlaneField};
use crate::quad::gauss::{legendre_rule, mapped};
use crate::quad::oracle::integrate;
use crate::quad::QuadTolerance;
use crate::sets::{Ball, CurveMesh, FourierRadius, IntervalSet, Params, Point2, Resolved, SetGeometry, StarShape2D};
use crate::{par, Error, Result};

/// Relative residuals below this are reported as computed but compared
/// against it as a floor.
const ABS_FLOOR: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IdentityKind {
    Au1,
    Au2,
    Lal,
    Minkowski,
    TangentialBall,
}

impl IdentityKind {
    pub const ALL: [IdentityKind; 5] = [
        IdentityKind::Au1,
        IdentityKind::Au2,
        IdentityKind::Lal,
        IdentityKind::Minkowski,
        IdentityKind::TangentialBall,
    ];
}

impl fmt::Display for IdentityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            IdentityKind::Au1 => "au1",
            IdentityKind::Au2 => "au2",
            IdentityKind::Lal => "lal",
            IdentityKind::Minkowski => "minkowski",
            IdentityKind::TangentialBall => "tangential_ball",
        };
        f.write_str(name)
    }
}

impl FromStr for IdentityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        IdentityKind::ALL
            .into_iter()
            .find(|k| k.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParams { key: "identities", msg: format!("unknown identity `{s}`") })
    }
}

/// Both sides of an identity and their relative mismatch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityResult {
    pub lhs: f64,
    pub rhs: f64,
    /// `|lhs − rhs| / max(|lhs|, |rhs|)`; for `Lal` the relative positive
    /// part of `max V − V_B(0)`.
    pub residual: f64,
}

impl IdentityResult {
    fn new(lhs: f64, rhs: f64) -> Self {
        IdentityResult { lhs, rhs, residual: rel(lhs, rhs) }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(ABS_FLOOR)
}

/// Evaluate one identity at the given boundary resolution.
pub fn identity_check(
    shape: &SetGeometry,
    p: &Params,
    kind: IdentityKind,
    resolution: usize,
) -> Result<IdentityResult> {
    p.validate()?;
    match shape.resolve()? {
        Resolved::Line(set) => line_identity(&set, p, kind),
        Resolved::Plane(star) => plane_identity(&star, p, kind, resolution),
    }
}

fn line_identity(set: &IntervalSet, p: &Params, kind: IdentityKind) -> Result<IdentityResult> {
    let a = p.alpha;
    let int_v = line::riesz_energy(set, a);
    match kind {
        IdentityKind::Au1 => {
            let tol = QuadTolerance { rel_tol: 1e-12, abs_tol: 1e-14, max_subdivisions: 4000 };
            // V′ blows up at every endpoint, so each half interval is
            // integrated in the distance u from its outer endpoint and V′
            // is rebuilt from endpoint offsets that are exact in u
            let ends = set.endpoints();
            let mut lhs = 0.0;
            for &(lo, hi) in set.intervals() {
                let half = 0.5 * (hi - lo);
                for (base, dir) in [(lo, 1.0), (hi, -1.0)] {
                    let f = |u: f64| {
                        let x = base + dir * u;
                        // x − e = (base − e) + dir·u and V′ = −Σ ν_e |x − e|^(−α)
                        let grad: f64 = ends.iter().map(|&(e, nu)| -nu * ((base - e) + dir * u).abs().powf(-a)).sum();
                        grad * x
                    };
                    lhs += integrate(f, 0.0, half, &tol)?.estimate;
                }
            }
            Ok(IdentityResult::new(lhs, -0.5 * a * int_v))
        }
        IdentityKind::Au2 | IdentityKind::Minkowski => {
            let data = Sampled::line(set, p)?;
            if kind == IdentityKind::Au2 {
                let lhs = dot(&data.potential, &data.support);
                Ok(IdentityResult::new(lhs, (1.0 - 0.5 * a) * int_v))
            } else {
                let lhs = dot(&data.kappa, &data.support);
                Ok(IdentityResult::new(lhs, (1.0 - p.s) * line::frac_perimeter(set, p.s) / p.c_var))
            }
        }
        IdentityKind::Lal => {
            let ball = Ball::with_volume(1, set.volume())?;
            let bound = ball.potential_at_center(a)?;
            let mut probes = Vec::new();
            for &(lo, hi) in set.intervals() {
                probes.extend((0..=16).map(|k| lo + (hi - lo) * k as f64 / 16.0));
            }
            let mut vmax = f64::NEG_INFINITY;
            for x in probes {
                vmax = vmax.max(line::potential(set, x, a)?);
            }
            Ok(lal_result(vmax, bound))
        }
        IdentityKind::TangentialBall => Err(Error::Unsupported("tangential gradients on the line".into())),
    }
}

fn lal_result(vmax: f64, bound: f64) -> IdentityResult {
    IdentityResult { lhs: vmax, rhs: bound, residual: ((vmax - bound) / bound).max(0.0) }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    par::compensated_sum(a.iter().zip(b).map(|(x, y)| x * y))
}

fn plane_identity(star: &StarShape2D, p: &Params, kind: IdentityKind, m: usize) -> Result<IdentityResult> {
    if p.n != 2 {
        return Err(Error::InvalidParams { key: "n", msg: format!("planar set with n = {}", p.n) });
    }
    let a = p.alpha;
    match kind {
        IdentityKind::Au1 => {
            let field = PlaneField::new(star, m)?;
            let c = star.center();
            let (int_v, int_grad) = area_integrals(star, m, |x| {
                let v = field.potential_at(x, a)?;
                let g = field.grad_potential_at(x, a)?;
                Ok((v, g[0] * (x[0] - c[0]) + g[1] * (x[1] - c[1])))
            })?;
            Ok(IdentityResult::new(int_grad, -0.5 * a * int_v))
        }
        IdentityKind::Au2 => {
            let (lhs, int_v) = au2_sides(star, a, m)?;
            Ok(IdentityResult::new(lhs, (2.0 - 0.5 * a) * int_v))
        }
        IdentityKind::Lal => {
            let mut probes = vec![star.center()];
            for &frac in &[0.25, 0.5, 0.75, 0.9, 1.1] {
                for k in 0..8 {
                    let th = std::f64::consts::TAU * k as f64 / 8.0;
                    let c = star.center();
                    let r = frac * star.radius_at(th);
                    probes.push([c[0] + r * th.cos(), c[1] + r * th.sin()]);
                }
            }
            lal_check(star, &probes, a, m).map(|(r, _)| r)
        }
        IdentityKind::Minkowski => {
            let mesh = CurveMesh::new(star, m)?;
            let data = Sampled::curve(&mesh, p);
            let lhs = dot(&data.kappa, &weighted(&data.support, &data.weights));
            Ok(IdentityResult::new(lhs, (2.0 - p.s) * plane::frac_perimeter(&mesh, p.s) / p.c_var))
        }
        IdentityKind::TangentialBall => {
            let half = halfway_to_disk(star)?;
            let (g1, g2) = (tangential_sup(star, a, m)?, tangential_sup(&half, a, m)?);
            let (m1, m2) = (ball_map_mu(star, m), ball_map_mu(&half, m));
            if m1 == 0.0 {
                return Ok(IdentityResult { lhs: g1, rhs: 0.0, residual: 0.0 });
            }
            Ok(IdentityResult::new(g2 / g1, m2 / m1))
        }
    }
}

fn weighted(v: &[f64], w: &[f64]) -> Vec<f64> {
    v.iter().zip(w).map(|(a, b)| a * b).collect()
}

/// `∮ V x·ν dσ` (corrected boundary rule) and `∫_E V dx` (polar grid).
fn au2_sides(star: &StarShape2D, alpha: f64, m: usize) -> Result<(f64, f64)> {
    let mesh = CurveMesh::new(star, m)?;
    let v = plane::potential_nodes(&mesh, alpha);
    let support: Vec<f64> = (0..mesh.len())
        .map(|i| {
            let (x, n) = (mesh.points[i], mesh.normals[i]);
            ((x[0] - mesh.center[0]) * n[0] + (x[1] - mesh.center[1]) * n[1]) * mesh.weights[i]
        })
        .collect();
    let lhs = dot(&v, &support);
    let field = PlaneField::new(star, m)?;
    let (int_v, _) = area_integrals(star, m, |x| Ok((field.potential_at(x, alpha)?, 0.0)))?;
    Ok((lhs, int_v))
}

/// `(∮ V x·ν dσ) / ∫_E V dx`, which should equal `2 − α/2`.
pub fn au2_factor(star: &StarShape2D, alpha: f64, resolution: usize) -> Result<f64> {
    let (lhs, int_v) = au2_sides(star, alpha, resolution)?;
    Ok(lhs / int_v)
}

/// `(∫_E f₁, ∫_E f₂)` on the polar grid with `M` angles and `M/8`
/// (at least 8) Gauss–Legendre radial fractions.
fn area_integrals(star: &StarShape2D, m: usize, f: impl Fn(Point2) -> Result<(f64, f64)> + Sync) -> Result<(f64, f64)> {
    let rule = legendre_rule((m / 8).max(8));
    let radial: Vec<(f64, f64)> = mapped(&rule, 0.0, 1.0).collect();
    let h = std::f64::consts::TAU / m as f64;
    let c = star.center();
    let rows = par::map_range(m, |j| -> Result<(f64, f64)> {
        let th = h * j as f64;
        let r = star.radius_at(th);
        let (sn, cs) = th.sin_cos();
        let mut acc = (0.0, 0.0);
        for &(t, w) in &radial {
            let x = [c[0] + t * r * cs, c[1] + t * r * sn];
            let (a, b) = f(x)?;
            let jac = w * t * r * r;
            acc.0 += jac * a;
            acc.1 += jac * b;
        }
        Ok((h * acc.0, h * acc.1))
    });
    let rows: Vec<(f64, f64)> = rows.into_iter().collect::<Result<_>>()?;
    Ok((par::compensated_sum(rows.iter().map(|r| r.0)), par::compensated_sum(rows.iter().map(|r| r.1))))
}

/// `max_x V_E(x) − V_B(0)` over `probes` at resolution `m`, and the
/// largest change of `V` at the probes when the resolution is halved
/// (a quadrature error bar).
pub fn lal_check(star: &StarShape2D, probes: &[Point2], alpha: f64, m: usize) -> Result<(IdentityResult, f64)> {
    let ball = Ball::with_volume(2, star.area())?;
    let bound = ball.potential_at_center(alpha)?;
    let fine = PlaneField::new(star, m)?;
    let coarse = PlaneField::new(star, (m / 2).max(4))?;
    let vals = par::map_slice(probes, |&x| -> Result<(f64, f64)> {
        let v = fine.potential_at(x, alpha)?;
        Ok((v, (v - coarse.potential_at(x, alpha)?).abs()))
    });
    let mut vmax = f64::NEG_INFINITY;
    let mut err = 0.0f64;
    for v in vals {
        let (v, e) = v?;
        vmax = vmax.max(v);
        err = err.max(e);
    }
    Ok((lal_result(vmax, bound), err))
}

/// `sup |∇V·τ|` over `m` boundary nodes; needs `α < 1`.
pub fn tangential_sup(star: &StarShape2D, alpha: f64, m: usize) -> Result<f64> {
    let mesh = CurveMesh::new(star, m)?;
    let g = plane::grad_potential_nodes(&mesh, alpha)?;
    Ok(g.iter().zip(&mesh.tangents).map(|(g, t)| (g[0] * t[0] + g[1] * t[1]).abs()).fold(0.0, f64::max))
}

/// `μ = max_θ |r(θ) − R_B| + |r′(θ)|` over `m` samples, `R_B` the radius
/// of the equal-area disk: a `C¹` size of `T − Id` for the radial map
/// `T(x) = x r(x/|x|)/R_B` from that disk onto the shape.
pub fn ball_map_mu(star: &StarShape2D, m: usize) -> f64 {
    let rb = (star.area() / std::f64::consts::PI).sqrt();
    let h = std::f64::consts::TAU / m as f64;
    (0..m)
        .map(|j| {
            let (r, dr, _) = star.radius().derivatives(h * j as f64);
            (r - rb).abs() + dr.abs()
        })
        .fold(0.0, f64::max)
}

/// `r ↦ (r + R_B)/2` with `R_B` the equal-area radius: the shape halfway
/// along the radial map from its disk.
fn halfway_to_disk(star: &StarShape2D) -> Result<StarShape2D> {
    let rb = (star.area() / std::f64::consts::PI).sqrt();
    let r = star.radius();
    let half = FourierRadius {
        r0: 0.5 * (r.r0 + rb),
        cos: r.cos.iter().map(|c| 0.5 * c).collect(),
        sin: r.sin.iter().map(|c| 0.5 * c).collect(),
    };
    star.with_radius(half)
}

/// `c_var = (n−s)P_s(B) / ∮ κ_B x·ν dσ` over balls of several radii.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub c_var: f64,
    /// `(radius, ratio)` per ball.
    pub ratios: Vec<(f64, f64)>,
    /// Largest relative deviation of a ratio from `c_var`.
    pub spread: f64,
}

/// Ratios on balls of radius ½, 1 and 2 in dimension `n ∈ {1, 2}`; the
/// reported constant is their mean.
pub fn calibrate_variation_constant(s: f64, n: usize, resolution: usize) -> Result<Calibration> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidParams { key: "s", msg: format!("s ∈ (0,1) required, got {s}") });
    }
    let nf = n as f64;
    let mut ratios = Vec::new();
    for &r in &[0.5, 1.0, 2.0] {
        let ratio = match n {
            1 => {
                let set = IntervalSet::new(vec![(0.0, 2.0 * r)])?;
                let mut lhs = 0.0;
                for (x, nu) in set.endpoints() {
                    lhs += line::frac_curvature(&set, x, s)? * x * nu;
                }
                (nf - s) * line::frac_perimeter(&set, s) / lhs
            }
            2 => {
                let mesh = CurveMesh::new(&StarShape2D::disk([0.0, 0.0], r)?, resolution)?;
                let k = plane::curvature_nodes(&mesh, s);
                let lhs: f64 = (0..mesh.len())
                    .map(|i| {
                        let (x, nu) = (mesh.points[i], mesh.normals[i]);
                        k[i] * (x[0] * nu[0] + x[1] * nu[1]) * mesh.weights[i]
                    })
                    .sum();
                (nf - s) * plane::frac_perimeter(&mesh, s) / lhs
            }
            _ => return Err(Error::Unsupported(format!("calibration in dimension {n}"))),
        };
        ratios.push((r, ratio));
    }
    let c_var = ratios.iter().map(|r| r.1).sum::<f64>() / ratios.len() as f64;
    let spread = ratios.iter().map(|r| rel(r.1, c_var)).fold(0.0, f64::max);
    Ok(Calibration { c_var, ratios, spread })
}
