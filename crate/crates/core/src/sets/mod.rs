//! Admissible sets and their elementary measurements.

mod ball;
mod interval;
mod mesh;
mod star;

pub use ball::Ball;
pub use interval::{IntervalSet, Side};
pub use mesh::{BoundaryMesh, CurveMesh, EndpointMesh};
pub use star::{FourierRadius, StarShape2D};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default node count used when a star shape is measured without an
/// explicit resolution (diameter, annulus deficit).
pub const DEFAULT_STAR_RESOLUTION: usize = 512;

pub type Point2 = [f64; 2];

/// Problem constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    /// Ambient dimension.
    pub n: usize,
    /// Order of the fractional perimeter, in (0,1).
    pub s: f64,
    /// Riesz exponent, in (0,n).
    pub alpha: f64,
    /// Coupling ε in front of the Riesz term of the rescaled energy.
    pub eps: f64,
    /// Volume m of the unrescaled problem, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    /// Constant c in `κ + cεV = λ`.
    #[serde(default = "default_coupling")]
    pub c_coupling: f64,
    /// Normalization between `κ` and the first variation of `P_s`.
    #[serde(default = "default_c_var")]
    pub c_var: f64,
}

fn default_coupling() -> f64 {
    2.0
}

fn default_c_var() -> f64 {
    1.0
}

impl Params {
    pub fn new(n: usize, s: f64, alpha: f64, eps: f64) -> Result<Self> {
        let p = Params { n, s, alpha, eps, mass: None, c_coupling: default_coupling(), c_var: default_c_var() };
        p.validate()?;
        Ok(p)
    }

    /// Parameters for volume `mass`, with `ε = m^(1 − α/n + s/n)`.
    pub fn from_mass(n: usize, s: f64, alpha: f64, mass: f64) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidParams { key: "mass", msg: format!("must be positive and finite, got {mass}") });
        }
        let mut p = Params::new(n, s, alpha, 0.0)?;
        p.eps = mass.powf(p.eps_exponent());
        p.mass = Some(mass);
        Ok(p)
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self.mass = None;
        self
    }

    pub fn with_coupling(mut self, c: f64) -> Self {
        self.c_coupling = c;
        self
    }

    /// Exponent `1 − α/n + s/n` relating ε to the volume.
    pub fn eps_exponent(&self) -> f64 {
        let n = self.n as f64;
        1.0 - self.alpha / n + self.s / n
    }

    pub fn beta_exponent(&self) -> f64 {
        beta_exponent(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &'static str, msg: String| Err(Error::InvalidParams { key, msg });
        if self.n == 0 {
            return bad("n", "dimension must be positive".into());
        }
        if !(self.s > 0.0 && self.s < 1.0) {
            return bad("s", format!("s ∈ (0,1) required, got {}", self.s));
        }
        let n = self.n as f64;
        if !(self.alpha > 0.0 && self.alpha < n) {
            return bad("alpha", format!("alpha ∈ (0,{n}) required, got {}", self.alpha));
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return bad("eps", format!("eps must be nonnegative and finite, got {}", self.eps));
        }
        if !(self.c_coupling > 0.0 && self.c_coupling.is_finite()) {
            return bad("c_coupling", format!("must be positive, got {}", self.c_coupling));
        }
        if !(self.c_var > 0.0 && self.c_var.is_finite()) {
            return bad("c_var", format!("must be positive, got {}", self.c_var));
        }
        if let Some(m) = self.mass {
            if !(m > 0.0 && m.is_finite()) {
                return bad("mass", format!("must be positive and finite, got {m}"));
            }
            let expected = m.powf(self.eps_exponent());
            if (expected - self.eps).abs() > 1e-12 * expected.max(self.eps) {
                return bad("eps", format!("eps = {} inconsistent with mass {m} (expected {expected})", self.eps));
            }
        }
        Ok(())
    }
}

/// `β = (n+s−α)/((2n+s+1)n)`, the exponent linking volume and diameter.
pub fn beta_exponent(p: &Params) -> f64 {
    let n = p.n as f64;
    (n + p.s - p.alpha) / ((2.0 * n + p.s + 1.0) * n)
}

/// A set on which the energy can be evaluated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SetGeometry {
    Intervals(IntervalSet),
    Star(StarShape2D),
    Ball(Ball),
}

impl From<IntervalSet> for SetGeometry {
    fn from(s: IntervalSet) -> Self {
        SetGeometry::Intervals(s)
    }
}

impl From<StarShape2D> for SetGeometry {
    fn from(s: StarShape2D) -> Self {
        SetGeometry::Star(s)
    }
}

impl From<Ball> for SetGeometry {
    fn from(b: Ball) -> Self {
        SetGeometry::Ball(b)
    }
}

/// Shapes reduced to the two representations the functionals work with.
#[derive(Clone, Debug)]
pub enum Resolved {
    Line(IntervalSet),
    Plane(StarShape2D),
}

impl SetGeometry {
    pub fn dim(&self) -> usize {
        match self {
            SetGeometry::Intervals(_) => 1,
            SetGeometry::Star(_) => 2,
            SetGeometry::Ball(b) => b.dim(),
        }
    }

    /// Lebesgue measure.
    pub fn volume(&self) -> f64 {
        match self {
            SetGeometry::Intervals(s) => s.volume(),
            SetGeometry::Star(s) => s.area(),
            SetGeometry::Ball(b) => b.volume(),
        }
    }

    /// Diameter; for star shapes, the largest distance between
    /// [`DEFAULT_STAR_RESOLUTION`] boundary samples.
    pub fn diameter(&self) -> f64 {
        match self {
            SetGeometry::Intervals(s) => s.diameter(),
            SetGeometry::Star(s) => s.diameter(DEFAULT_STAR_RESOLUTION),
            SetGeometry::Ball(b) => 2.0 * b.radius(),
        }
    }

    /// `I(E) = |E|^(1/n) / diam(E)`.
    pub fn isodiametric_ratio(&self) -> f64 {
        self.volume().powf(1.0 / self.dim() as f64) / self.diameter()
    }

    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        Ok(match self {
            SetGeometry::Intervals(s) => SetGeometry::Intervals(s.scaled(lambda)?),
            SetGeometry::Star(s) => SetGeometry::Star(s.scaled(lambda)?),
            SetGeometry::Ball(b) => SetGeometry::Ball(b.scaled(lambda)?),
        })
    }

    pub fn translated(&self, shift: &[f64]) -> Result<Self> {
        if shift.len() != self.dim() {
            return Err(Error::InvalidGeometry(format!(
                "translation of dimension {} applied to a {}-dimensional set",
                shift.len(),
                self.dim()
            )));
        }
        Ok(match self {
            SetGeometry::Intervals(s) => SetGeometry::Intervals(s.translated(shift[0])),
            SetGeometry::Star(s) => SetGeometry::Star(s.translated([shift[0], shift[1]])),
            SetGeometry::Ball(b) => SetGeometry::Ball(b.translated(shift)),
        })
    }

    /// Reduce balls to intervals (n = 1) or discs (n = 2).
    pub fn resolve(&self) -> Result<Resolved> {
        match self {
            SetGeometry::Intervals(s) => Ok(Resolved::Line(s.clone())),
            SetGeometry::Star(s) => Ok(Resolved::Plane(s.clone())),
            SetGeometry::Ball(b) => match b.dim() {
                1 => Ok(Resolved::Line(b.to_interval()?)),
                2 => Ok(Resolved::Plane(b.to_disk()?)),
                n => Err(Error::Unsupported(format!("boundary computations on balls in dimension {n}"))),
            },
        }
    }

    /// Sampled boundary. `resolution` is ignored in one dimension.
    pub fn boundary_mesh(&self, resolution: usize) -> Result<BoundaryMesh> {
        match self.resolve()? {
            Resolved::Line(s) => Ok(BoundaryMesh::Endpoints(EndpointMesh::new(&s))),
            Resolved::Plane(s) => Ok(BoundaryMesh::Curve(CurveMesh::new(&s, resolution)?)),
        }
    }
}

/// Dilate to unit volume: `E = m^(−1/n) E⋆` and `ε = m^(1−α/n+s/n)`.
pub fn unit_volume_rescale(shape: &SetGeometry, p: &Params) -> Result<(SetGeometry, Params)> {
    if shape.dim() != p.n {
        return Err(Error::InvalidParams {
            key: "n",
            msg: format!("params have n = {} but the set has dimension {}", p.n, shape.dim()),
        });
    }
    let m = shape.volume();
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::InvalidGeometry(format!("degenerate volume {m}")));
    }
    let n = p.n as f64;
    let rescaled = shape.scaled(m.powf(-1.0 / n))?;
    let mut q = *p;
    q.eps = m.powf(p.eps_exponent());
    q.mass = Some(m);
    q.validate()?;
    Ok((rescaled, q))
}

/// Both sides of `ε·diam(E)^(2n+s+1) = (m^β / I(E⋆))^(2n+s+1)`, computed
/// independently from the unrescaled set `E⋆`.
pub fn epsis_sides(shape_star: &SetGeometry, p: &Params) -> Result<(f64, f64)> {
    let (rescaled, q) = unit_volume_rescale(shape_star, p)?;
    let power = 2.0 * p.n as f64 + p.s + 1.0;
    let lhs = q.eps * rescaled.diameter().powf(power);
    let m = shape_star.volume();
    let rhs = (m.powf(beta_exponent(p)) / shape_star.isodiametric_ratio()).powf(power);
    Ok((lhs, rhs))
}
