use std::f64::consts::TAU;

use super::{IntervalSet, Point2, StarShape2D};
use crate::{Error, Result};

/// Sampled boundary of a set.
#[derive(Clone, Debug)]
#[allow(clippy::large_enum_variant)]
pub enum BoundaryMesh {
    Endpoints(EndpointMesh),
    Curve(CurveMesh),
}

impl BoundaryMesh {
    pub fn len(&self) -> usize {
        match self {
            BoundaryMesh::Endpoints(m) => m.points.len(),
            BoundaryMesh::Curve(m) => m.points.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn total_weight(&self) -> f64 {
        match self {
            BoundaryMesh::Endpoints(m) => m.weights.iter().sum(),
            BoundaryMesh::Curve(m) => m.weights.iter().sum(),
        }
    }
}

/// Boundary of an interval union: its endpoints, with normals ±1 and unit
/// counting weights.
#[derive(Clone, Debug)]
pub struct EndpointMesh {
    pub points: Vec<f64>,
    pub normals: Vec<f64>,
    pub weights: Vec<f64>,
}

impl EndpointMesh {
    pub fn new(set: &IntervalSet) -> Self {
        let (points, normals): (Vec<f64>, Vec<f64>) = set.endpoints().into_iter().unzip();
        let weights = vec![1.0; points.len()];
        EndpointMesh { points, normals, weights }
    }
}

/// Uniform-in-angle sampling of a star-shaped boundary curve.
///
/// Node `j` sits at `θ_j = phase + jh`, `h = 2π/M`. Alongside points,
/// unit normals and tangents the mesh keeps the parametric derivative
/// `y′(θ)`, the speed `|y′|` and the curvature, which the singular
/// quadrature corrections need.
#[derive(Clone, Debug)]
pub struct CurveMesh {
    pub h: f64,
    pub phase: f64,
    pub center: Point2,
    pub theta: Vec<f64>,
    pub radius: Vec<f64>,
    pub points: Vec<Point2>,
    pub normals: Vec<Point2>,
    pub tangents: Vec<Point2>,
    /// Arclength weights `h|y′(θ_j)|`.
    pub weights: Vec<f64>,
    pub velocity: Vec<Point2>,
    /// `y″(θ_j)`.
    pub acceleration: Vec<Point2>,
    /// `y‴(θ_j)`.
    pub jerk: Vec<Point2>,
    pub speed: Vec<f64>,
    pub curvature: Vec<f64>,
}

impl CurveMesh {
    pub fn new(shape: &StarShape2D, m: usize) -> Result<Self> {
        CurveMesh::with_phase(shape, m, 0.0)
    }

    /// Mesh whose node 0 sits at polar angle `phase`.
    pub fn with_phase(shape: &StarShape2D, m: usize, phase: f64) -> Result<Self> {
        if m < 4 {
            return Err(Error::InvalidGeometry(format!("mesh resolution {m} < 4")));
        }
        let h = TAU / m as f64;
        let c = shape.center();
        let mut mesh = CurveMesh {
            h,
            phase,
            center: c,
            theta: Vec::with_capacity(m),
            radius: Vec::with_capacity(m),
            points: Vec::with_capacity(m),
            normals: Vec::with_capacity(m),
            tangents: Vec::with_capacity(m),
            weights: Vec::with_capacity(m),
            velocity: Vec::with_capacity(m),
            acceleration: Vec::with_capacity(m),
            jerk: Vec::with_capacity(m),
            speed: Vec::with_capacity(m),
            curvature: Vec::with_capacity(m),
        };
        for j in 0..m {
            let th = phase + h * j as f64;
            let (r, d1, d2, d3) = shape.radius().derivatives3(th);
            let (sn, cs) = th.sin_cos();
            let y = [c[0] + r * cs, c[1] + r * sn];
            // y′ = r′u + r u⊥, y″ = (r″ − r)u + 2r′u⊥, y‴ = (r‴ − 3r′)u + (3r″ − r)u⊥
            let dy = [d1 * cs - r * sn, d1 * sn + r * cs];
            let ddy = [(d2 - r) * cs - 2.0 * d1 * sn, (d2 - r) * sn + 2.0 * d1 * cs];
            let dddy = [(d3 - 3.0 * d1) * cs - (3.0 * d2 - r) * sn, (d3 - 3.0 * d1) * sn + (3.0 * d2 - r) * cs];
            let speed = dy[0].hypot(dy[1]);
            let tau = [dy[0] / speed, dy[1] / speed];
            let cross = dy[0] * ddy[1] - dy[1] * ddy[0];
            mesh.theta.push(th);
            mesh.radius.push(r);
            mesh.points.push(y);
            mesh.tangents.push(tau);
            mesh.normals.push([tau[1], -tau[0]]);
            mesh.weights.push(h * speed);
            mesh.velocity.push(dy);
            mesh.acceleration.push(ddy);
            mesh.jerk.push(dddy);
            mesh.speed.push(speed);
            mesh.curvature.push(cross / (speed * speed * speed));
        }
        Ok(mesh)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn perimeter(&self) -> f64 {
        self.weights.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sets::SetGeometry;

    #[test]
    fn interval_endpoints() {
        let s = IntervalSet::new(vec![(0.0, 1.0)]).unwrap();
        let m = EndpointMesh::new(&s);
        assert_eq!(m.points, vec![0.0, 1.0]);
        assert_eq!(m.normals, vec![-1.0, 1.0]);
    }

    #[test]
    fn disk_circumference() {
        let disk = StarShape2D::disk([0.0, 0.0], 1.0).unwrap();
        let mesh = SetGeometry::Star(disk).boundary_mesh(256).unwrap();
        assert!((mesh.total_weight() - TAU).abs() < 1e-6);
    }

    #[test]
    fn frame_is_orthonormal() {
        let s = StarShape2D::from_modes([0.2, 0.0], 1.0, &[(3, 0.1, 0.02), (5, 0.0, 0.03)]).unwrap();
        let mesh = CurveMesh::new(&s, 200).unwrap();
        for (n, t) in mesh.normals.iter().zip(&mesh.tangents) {
            assert!((n[0] * t[0] + n[1] * t[1]).abs() < 1e-12);
            assert!((n[0].hypot(n[1]) - 1.0).abs() < 1e-12);
            assert!((t[0].hypot(t[1]) - 1.0).abs() < 1e-12);
        }
        // outward: ν·(y − c) > 0 on a star shape
        for (n, p) in mesh.normals.iter().zip(&mesh.points) {
            assert!(n[0] * (p[0] - 0.2) + n[1] * p[1] > 0.0);
        }
    }

    #[test]
    fn perimeter_converges() {
        // ellipse-like shape; the trapezoidal rule is spectrally accurate
        let s = StarShape2D::from_modes([0.0, 0.0], 1.0, &[(2, 0.2, 0.0)]).unwrap();
        let fine = CurveMesh::new(&s, 1024).unwrap().perimeter();
        let e16 = (CurveMesh::new(&s, 16).unwrap().perimeter() - fine).abs();
        let e32 = (CurveMesh::new(&s, 32).unwrap().perimeter() - fine).abs();
        assert!(e32 <= e16 / 4.0 || e32 < 1e-13);
        assert!(CurveMesh::new(&s, 3).is_err());
    }
}
