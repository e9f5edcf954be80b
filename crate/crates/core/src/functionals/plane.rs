//! Planar functionals as boundary integrals over a star-shaped curve.
//!
//! With `y(φ)` the counter-clockwise boundary and `ν dσ = (y₂′, −y₁′) dφ`,
//! the divergence theorem turns every area integral into a contour
//! integral:
//!
//! ```text
//! κ(x)  = (2/s)    ∮ (y−x)×y′ |y−x|^(−2−s) dφ
//! V(x)  = 1/(2−α)  ∮ (y−x)×y′ |y−x|^(−α)   dφ
//! ∇V(x) = −        ∮ |y−x|^(−α) (y₂′, −y₁′) dφ
//! P_s   = 1/s²     ∮∮ y′(θ)·y′(φ) |y(θ)−y(φ)|^(−s)  dθ dφ
//! R_α   = −1/(2−α)² ∮∮ y′(θ)·y′(φ) |y(θ)−y(φ)|^(2−α) dθ dφ
//! ```
//!
//! where `a×b = a₁b₂ − a₂b₁`. For `x` on the curve each integrand behaves
//! like `A|φ − φ_x|^γ` and the uniform rule skips the node at `x` and adds
//! the zeta correction from [`crate::quad::singular`]. The κ integrand is
//! already absolutely integrable, so no principal value is needed once
//! the area integral has been converted.

use std::sync::OnceLock;

use crate::par;
use crate::quad::singular::punctured_correction;
use crate::sets::{CurveMesh, Point2, StarShape2D};
use crate::{Error, Result};

fn cross(a: Point2, b: Point2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn sub(a: Point2, b: Point2) -> Point2 {
    [a[0] - b[0], a[1] - b[1]]
}

/// `(y₂′, −y₁′)`: outward normal times speed.
fn normal_flux(v: Point2) -> Point2 {
    [v[1], -v[0]]
}

/// `h Σ_{j≠i} f(j)` in index order.
fn punctured_sum(mesh: &CurveMesh, i: usize, f: impl Fn(usize) -> f64) -> f64 {
    let mut acc = 0.0;
    for j in 0..mesh.len() {
        if j != i {
            acc += f(j);
        }
    }
    mesh.h * acc
}

/// `κ_E` at node `i`.
pub fn curvature_at_node(mesh: &CurveMesh, i: usize, s: f64) -> f64 {
    let x = mesh.points[i];
    let body = punctured_sum(mesh, i, |j| {
        let d = sub(mesh.points[j], x);
        let r2 = d[0] * d[0] + d[1] * d[1];
        cross(d, mesh.velocity[j]) * r2.powf(-1.0 - 0.5 * s)
    });
    let a0 = 0.5 * mesh.curvature[i] * mesh.speed[i].powf(1.0 - s);
    (2.0 / s) * (body + punctured_correction(-s, mesh.h, a0))
}

/// `V_E` at node `i`.
pub fn potential_at_node(mesh: &CurveMesh, i: usize, alpha: f64) -> f64 {
    let x = mesh.points[i];
    let body = punctured_sum(mesh, i, |j| {
        let d = sub(mesh.points[j], x);
        let r2 = d[0] * d[0] + d[1] * d[1];
        cross(d, mesh.velocity[j]) * r2.powf(-0.5 * alpha)
    });
    let a0 = 0.5 * mesh.curvature[i] * mesh.speed[i].powf(3.0 - alpha);
    (body + punctured_correction(2.0 - alpha, mesh.h, a0)) / (2.0 - alpha)
}

/// `∇V_E` at node `i`; finite for `α < 1`.
pub fn grad_potential_at_node(mesh: &CurveMesh, i: usize, alpha: f64) -> Point2 {
    let x = mesh.points[i];
    let mut out = [0.0; 2];
    for (c, slot) in out.iter_mut().enumerate() {
        let body = punctured_sum(mesh, i, |j| {
            let d = sub(mesh.points[j], x);
            let r2 = d[0] * d[0] + d[1] * d[1];
            r2.powf(-0.5 * alpha) * normal_flux(mesh.velocity[j])[c]
        });
        let a0 = mesh.speed[i].powf(-alpha) * normal_flux(mesh.velocity[i])[c];
        *slot = -(body + punctured_correction(-alpha, mesh.h, a0));
    }
    out
}

pub fn curvature_nodes(mesh: &CurveMesh, s: f64) -> Vec<f64> {
    par::map_range(mesh.len(), |i| curvature_at_node(mesh, i, s))
}

pub fn potential_nodes(mesh: &CurveMesh, alpha: f64) -> Vec<f64> {
    par::map_range(mesh.len(), |i| potential_at_node(mesh, i, alpha))
}

pub fn grad_potential_nodes(mesh: &CurveMesh, alpha: f64) -> Result<Vec<Point2>> {
    check_gradient_regime(alpha)?;
    Ok(par::map_range(mesh.len(), |i| grad_potential_at_node(mesh, i, alpha)))
}

pub(crate) fn check_gradient_regime(alpha: f64) -> Result<()> {
    if alpha >= 1.0 {
        return Err(Error::DivergentRegime(format!("∇V on the boundary requires α < n − 1 = 1, got α = {alpha}")));
    }
    Ok(())
}

/// `∮∮ y′(θ)·y′(φ) K(|y(θ) − y(φ)|²) dθ dφ` with `K(r²) ~ r^γ` at the
/// diagonal.
fn double_integral(mesh: &CurveMesh, gamma: f64, kernel: impl Fn(f64) -> f64 + Sync) -> f64 {
    let rows = par::map_range(mesh.len(), |i| {
        let x = mesh.points[i];
        let vi = mesh.velocity[i];
        let body = punctured_sum(mesh, i, |j| {
            let d = sub(mesh.points[j], x);
            let vj = mesh.velocity[j];
            (vi[0] * vj[0] + vi[1] * vj[1]) * kernel(d[0] * d[0] + d[1] * d[1])
        });
        let a0 = mesh.speed[i].powf(2.0 + gamma);
        let a2 = next_coefficient(vi, mesh.acceleration[i], mesh.jerk[i], gamma);
        mesh.h * (body + punctured_correction(gamma, mesh.h, a0) + punctured_correction(gamma + 2.0, mesh.h, a2))
    });
    par::compensated_sum(rows)
}

/// Coefficient of `|φ|^(γ+2)` in `y′(θ)·y′(θ+φ) |y(θ+φ) − y(θ)|^γ`, from
/// `v = y′`, `a = y″`, `b = y‴` at `θ`. Odd powers cancel in the
/// symmetric sum and need no correction.
fn next_coefficient(v: Point2, a: Point2, b: Point2, gamma: f64) -> f64 {
    let dot = |p: Point2, q: Point2| p[0] * q[0] + p[1] * q[1];
    let vv = dot(v, v);
    let va = dot(v, a);
    let vb = dot(v, b);
    // |Δ|² = vv φ² (1 + c1 φ + c2 φ² + …)
    let c1 = va / vv;
    let c2 = (0.25 * dot(a, a) + vb / 3.0) / vv;
    let g = 0.5 * gamma;
    let e1 = g * c1;
    let e2 = g * c2 + 0.5 * g * (g - 1.0) * c1 * c1;
    vv.powf(g) * (vv * e2 + va * e1 + 0.5 * vb)
}

/// `P_s(E) = ∬_{E×Eᶜ} |x−y|^(−2−s)`.
pub fn frac_perimeter(mesh: &CurveMesh, s: f64) -> f64 {
    double_integral(mesh, -s, |r2| r2.powf(-0.5 * s)) / (s * s)
}

/// `∬_{E×E} |x−y|^(−α)`.
pub fn riesz_energy(mesh: &CurveMesh, alpha: f64) -> f64 {
    let q = 2.0 - alpha;
    -double_integral(mesh, q, |r2| r2.powf(0.5 * q)) / (q * q)
}

/// Finest refinement of the base mesh used for points near the curve.
const MAX_LEVEL: usize = 6;

/// Boundary quadrature for one shape, with refined meshes built on demand
/// for evaluation points close to the curve.
pub struct PlaneField {
    shape: StarShape2D,
    resolution: usize,
    levels: Vec<OnceLock<CurveMesh>>,
    max_speed: f64,
}

impl PlaneField {
    pub fn new(shape: &StarShape2D, resolution: usize) -> Result<Self> {
        let base = CurveMesh::new(shape, resolution)?;
        let max_speed = base.speed.iter().copied().fold(0.0, f64::max);
        let levels: Vec<OnceLock<CurveMesh>> = (0..=MAX_LEVEL).map(|_| OnceLock::new()).collect();
        let _ = levels[0].set(base);
        Ok(PlaneField { shape: shape.clone(), resolution, levels, max_speed })
    }

    pub fn shape(&self) -> &StarShape2D {
        &self.shape
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn base_mesh(&self) -> &CurveMesh {
        self.mesh(0)
    }

    fn mesh(&self, level: usize) -> &CurveMesh {
        self.levels[level]
            .get_or_init(|| CurveMesh::new(&self.shape, self.resolution << level).expect("refinement of a valid mesh"))
    }

    /// Polar angle of `x` about the center and its signed radial offset
    /// from the boundary (negative inside).
    fn radial_position(&self, x: Point2) -> (f64, f64) {
        let c = self.shape.center();
        let (dx, dy) = (x[0] - c[0], x[1] - c[1]);
        let theta = dy.atan2(dx);
        (theta, dx.hypot(dy) - self.shape.radius_at(theta))
    }

    /// Whether `x` lies on the curve to within rounding.
    pub fn on_boundary(&self, x: Point2) -> Option<f64> {
        let (theta, offset) = self.radial_position(x);
        let scale = self.shape.radius_at(theta);
        (offset.abs() <= 1e-12 * scale.max(1.0)).then_some(theta)
    }

    /// Mesh fine enough that its spacing is a quarter of the distance
    /// from `x` to the curve, up to [`MAX_LEVEL`] halvings.
    fn mesh_for(&self, x: Point2) -> &CurveMesh {
        let base = self.mesh(0);
        let node_dist = base.points.iter().map(|y| (y[0] - x[0]).hypot(y[1] - x[1])).fold(f64::INFINITY, f64::min);
        let (theta, offset) = self.radial_position(x);
        let (r, dr, _) = self.shape.radius().derivatives(theta);
        let normal_dist = offset.abs() * r / r.hypot(dr);
        let dist = node_dist.min(normal_dist);
        let spacing = base.h * self.max_speed;
        let mut level = 0;
        while level < MAX_LEVEL && spacing / (1 << level) as f64 > 0.25 * dist {
            level += 1;
        }
        self.mesh(level)
    }

    /// `V_E(x)` at any point.
    pub fn potential_at(&self, x: Point2, alpha: f64) -> Result<f64> {
        if let Some(theta) = self.on_boundary(x) {
            let mesh = CurveMesh::with_phase(&self.shape, self.resolution, theta)?;
            return Ok(potential_at_node(&mesh, 0, alpha));
        }
        let mesh = self.mesh_for(x);
        let mut acc = 0.0;
        for j in 0..mesh.len() {
            let d = sub(mesh.points[j], x);
            let r2 = d[0] * d[0] + d[1] * d[1];
            acc += cross(d, mesh.velocity[j]) * r2.powf(-0.5 * alpha);
        }
        Ok(mesh.h * acc / (2.0 - alpha))
    }

    /// `∇V_E(x)` at any point; boundary points need `α < 1`.
    pub fn grad_potential_at(&self, x: Point2, alpha: f64) -> Result<Point2> {
        if let Some(theta) = self.on_boundary(x) {
            check_gradient_regime(alpha)?;
            let mesh = CurveMesh::with_phase(&self.shape, self.resolution, theta)?;
            return Ok(grad_potential_at_node(&mesh, 0, alpha));
        }
        let mesh = self.mesh_for(x);
        let mut acc = [0.0; 2];
        for j in 0..mesh.len() {
            let d = sub(mesh.points[j], x);
            let w = (d[0] * d[0] + d[1] * d[1]).powf(-0.5 * alpha);
            let n = normal_flux(mesh.velocity[j]);
            acc[0] += w * n[0];
            acc[1] += w * n[1];
        }
        Ok([-mesh.h * acc[0], -mesh.h * acc[1]])
    }

    /// `κ_E(x)` at a boundary point.
    pub fn curvature_at(&self, x: Point2, s: f64) -> Result<f64> {
        let theta = self.on_boundary(x).ok_or(Error::NotOnBoundary)?;
        let mesh = CurveMesh::with_phase(&self.shape, self.resolution, theta)?;
        Ok(curvature_at_node(&mesh, 0, s))
    }
}
