//! Energy, potential and curvature of admissible sets.
//!
//! One-dimensional sets are handled in closed form ([`line`]); planar star
//! shapes through corrected boundary quadrature ([`plane`]). The functions
//! here dispatch on [`SetGeometry`] and take a mesh resolution that the
//! closed forms ignore.

pub mod line;
pub mod plane;

use serde::{Deserialize, Serialize};

use crate::sets::{CurveMesh, Params, Point2, Resolved, SetGeometry, DEFAULT_STAR_RESOLUTION};
use crate::{par, Error, Result};

pub use plane::PlaneField;

/// Discretization used by planar evaluations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    /// Boundary nodes per revolution.
    pub resolution: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { resolution: DEFAULT_STAR_RESOLUTION }
    }
}

impl EvalOptions {
    pub fn with_resolution(resolution: usize) -> Self {
        EvalOptions { resolution }
    }
}

/// A value with its discretization error estimate (zero for closed forms).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    fn exact(value: f64) -> Self {
        Estimate { value, error: 0.0 }
    }
}

/// The two terms of `F` and the totals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub perimeter_term: f64,
    pub riesz_term: f64,
    /// `P_s + Riesz`.
    pub total_f: f64,
    /// `P_s + ε·Riesz`.
    pub total_f_eps: f64,
    pub eps_used: f64,
}

impl EnergyBreakdown {
    pub fn new(perimeter_term: f64, riesz_term: f64, eps: f64) -> Self {
        EnergyBreakdown {
            perimeter_term,
            riesz_term,
            total_f: perimeter_term + riesz_term,
            total_f_eps: perimeter_term + eps * riesz_term,
            eps_used: eps,
        }
    }
}

fn check_s(s: f64) -> Result<()> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidParams { key: "s", msg: format!("must lie in (0,1), got {s}") });
    }
    Ok(())
}

fn check_alpha(alpha: f64, n: usize) -> Result<()> {
    if !(alpha > 0.0 && alpha < n as f64) {
        return Err(Error::InvalidParams { key: "alpha", msg: format!("must lie in (0,{n}), got {alpha}") });
    }
    Ok(())
}

fn point1(x: &[f64]) -> Result<f64> {
    match x {
        [v] => Ok(*v),
        _ => Err(Error::InvalidGeometry(format!("expected a point on the line, got {} coordinates", x.len()))),
    }
}

fn point2(x: &[f64]) -> Result<Point2> {
    match x {
        [a, b] => Ok([*a, *b]),
        _ => Err(Error::InvalidGeometry(format!("expected a point in the plane, got {} coordinates", x.len()))),
    }
}

/// Run `f` at the resolution and at half of it; the difference is the
/// error estimate.
fn halving_estimate(resolution: usize, f: impl Fn(usize) -> Result<f64>) -> Result<Estimate> {
    let fine = f(resolution)?;
    let coarse = f((resolution / 2).max(4))?;
    Ok(Estimate { value: fine, error: (fine - coarse).abs() })
}

/// `P_s(E) = ∬_{E×Eᶜ} |x−y|^(−n−s)`.
pub fn frac_perimeter(shape: &SetGeometry, s: f64, opts: &EvalOptions) -> Result<f64> {
    Ok(frac_perimeter_estimate(shape, s, opts)?.value)
}

pub fn frac_perimeter_estimate(shape: &SetGeometry, s: f64, opts: &EvalOptions) -> Result<Estimate> {
    check_s(s)?;
    match shape.resolve()? {
        Resolved::Line(set) => Ok(Estimate::exact(line::frac_perimeter(&set, s))),
        Resolved::Plane(star) => {
            halving_estimate(opts.resolution, |m| Ok(plane::frac_perimeter(&CurveMesh::new(&star, m)?, s)))
        }
    }
}

/// `∬_{E×E} |x−y|^(−α)`.
pub fn riesz_energy(shape: &SetGeometry, alpha: f64, opts: &EvalOptions) -> Result<f64> {
    Ok(riesz_energy_estimate(shape, alpha, opts)?.value)
}

pub fn riesz_energy_estimate(shape: &SetGeometry, alpha: f64, opts: &EvalOptions) -> Result<Estimate> {
    check_alpha(alpha, shape.dim())?;
    match shape.resolve()? {
        Resolved::Line(set) => Ok(Estimate::exact(line::riesz_energy(&set, alpha))),
        Resolved::Plane(star) => {
            halving_estimate(opts.resolution, |m| Ok(plane::riesz_energy(&CurveMesh::new(&star, m)?, alpha)))
        }
    }
}

/// `F = P_s + Riesz` and `F_ε = P_s + ε·Riesz`.
pub fn energy(shape: &SetGeometry, p: &Params, opts: &EvalOptions) -> Result<EnergyBreakdown> {
    p.validate()?;
    check_dim(shape, p)?;
    let per = frac_perimeter(shape, p.s, opts)?;
    let riesz = riesz_energy(shape, p.alpha, opts)?;
    Ok(EnergyBreakdown::new(per, riesz, p.eps))
}

/// `F_ε` of a planar mesh, the objective of the shape optimizer.
pub fn energy_on_mesh(mesh: &CurveMesh, p: &Params) -> EnergyBreakdown {
    EnergyBreakdown::new(plane::frac_perimeter(mesh, p.s), plane::riesz_energy(mesh, p.alpha), p.eps)
}

fn check_dim(shape: &SetGeometry, p: &Params) -> Result<()> {
    if shape.dim() != p.n {
        return Err(Error::InvalidParams {
            key: "n",
            msg: format!("params have n = {} but the set has dimension {}", p.n, shape.dim()),
        });
    }
    Ok(())
}

/// `V_E(x) = ∫_E |x−y|^(−α) dy`.
pub fn potential(shape: &SetGeometry, x: &[f64], alpha: f64, opts: &EvalOptions) -> Result<f64> {
    check_alpha(alpha, shape.dim())?;
    match shape.resolve()? {
        Resolved::Line(set) => line::potential(&set, point1(x)?, alpha),
        Resolved::Plane(star) => PlaneField::new(&star, opts.resolution)?.potential_at(point2(x)?, alpha),
    }
}

/// `∇V_E(x) = −α ∫_E (x−y)|x−y|^(−α−2) dy`.
pub fn grad_potential(shape: &SetGeometry, x: &[f64], alpha: f64, opts: &EvalOptions) -> Result<Vec<f64>> {
    check_alpha(alpha, shape.dim())?;
    match shape.resolve()? {
        Resolved::Line(set) => Ok(vec![line::grad_potential(&set, point1(x)?, alpha)?]),
        Resolved::Plane(star) => {
            Ok(PlaneField::new(&star, opts.resolution)?.grad_potential_at(point2(x)?, alpha)?.to_vec())
        }
    }
}

/// `∇V_E·τ` at node `node` of the boundary mesh at `opts.resolution`.
pub fn tangential_grad_potential(shape: &SetGeometry, node: usize, alpha: f64, opts: &EvalOptions) -> Result<f64> {
    check_alpha(alpha, shape.dim())?;
    match shape.resolve()? {
        Resolved::Line(_) => Err(Error::Unsupported("tangential gradient of a one-dimensional set".into())),
        Resolved::Plane(star) => {
            plane::check_gradient_regime(alpha)?;
            let mesh = CurveMesh::new(&star, opts.resolution)?;
            if node >= mesh.len() {
                return Err(Error::InvalidParams {
                    key: "node",
                    msg: format!("index {node} out of range for {} nodes", mesh.len()),
                });
            }
            let g = plane::grad_potential_at_node(&mesh, node, alpha);
            let t = mesh.tangents[node];
            Ok(g[0] * t[0] + g[1] * t[1])
        }
    }
}

/// Fractional mean curvature `κ_E(x)` at a boundary point.
pub fn frac_curvature(shape: &SetGeometry, x: &[f64], s: f64, opts: &EvalOptions) -> Result<f64> {
    Ok(frac_curvature_estimate(shape, x, s, opts)?.value)
}

pub fn frac_curvature_estimate(shape: &SetGeometry, x: &[f64], s: f64, opts: &EvalOptions) -> Result<Estimate> {
    check_s(s)?;
    match shape.resolve()? {
        Resolved::Line(set) => {
            let x = point1(x)?;
            if set.endpoint_index(x).is_none() {
                return Err(Error::NotOnBoundary);
            }
            Ok(Estimate::exact(line::frac_curvature(&set, x, s)?))
        }
        Resolved::Plane(star) => {
            let x = point2(x)?;
            halving_estimate(opts.resolution, |m| PlaneField::new(&star, m)?.curvature_at(x, s))
        }
    }
}

/// `ζ_E(x) = κ_E(x) + cεV_E(x)` at a boundary point.
pub fn zeta(shape: &SetGeometry, x: &[f64], p: &Params, opts: &EvalOptions) -> Result<f64> {
    p.validate()?;
    check_dim(shape, p)?;
    let k = frac_curvature(shape, x, p.s, opts)?;
    let v = potential(shape, x, p.alpha, opts)?;
    Ok(k + p.c_coupling * p.eps * v)
}

/// Per-node boundary values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeValues {
    pub index: usize,
    pub point: Vec<f64>,
    pub kappa: f64,
    pub potential: f64,
    /// `∇V·τ`; absent in one dimension and when `α ≥ n − 1`.
    pub tangential_grad: Option<f64>,
    pub zeta: f64,
}

/// Boundary values at planar mesh nodes, in node order.
#[derive(Clone, Debug)]
pub struct CurveFields {
    pub kappa: Vec<f64>,
    pub potential: Vec<f64>,
    pub grad: Option<Vec<Point2>>,
    pub zeta: Vec<f64>,
}

impl CurveFields {
    pub fn compute(mesh: &CurveMesh, p: &Params, with_gradient: bool) -> Self {
        let kappa = plane::curvature_nodes(mesh, p.s);
        let potential = plane::potential_nodes(mesh, p.alpha);
        let grad = (with_gradient && p.alpha < 1.0)
            .then(|| par::map_range(mesh.len(), |i| plane::grad_potential_at_node(mesh, i, p.alpha)));
        let zeta = kappa.iter().zip(&potential).map(|(k, v)| k + p.c_coupling * p.eps * v).collect();
        CurveFields { kappa, potential, grad, zeta }
    }

    pub fn tangential(&self, mesh: &CurveMesh) -> Option<Vec<f64>> {
        self.grad.as_ref().map(|g| g.iter().zip(&mesh.tangents).map(|(g, t)| g[0] * t[0] + g[1] * t[1]).collect())
    }
}

/// One row per boundary node (endpoint in one dimension).
pub fn boundary_table(shape: &SetGeometry, p: &Params, opts: &EvalOptions) -> Result<Vec<NodeValues>> {
    p.validate()?;
    check_dim(shape, p)?;
    let ce = p.c_coupling * p.eps;
    match shape.resolve()? {
        Resolved::Line(set) => set
            .endpoints()
            .into_iter()
            .enumerate()
            .map(|(index, (x, _))| {
                let kappa = line::frac_curvature(&set, x, p.s)?;
                let v = line::potential(&set, x, p.alpha)?;
                Ok(NodeValues {
                    index,
                    point: vec![x],
                    kappa,
                    potential: v,
                    tangential_grad: None,
                    zeta: kappa + ce * v,
                })
            })
            .collect(),
        Resolved::Plane(star) => {
            let mesh = CurveMesh::new(&star, opts.resolution)?;
            let fields = CurveFields::compute(&mesh, p, true);
            let tangential = fields.tangential(&mesh);
            Ok((0..mesh.len())
                .map(|i| NodeValues {
                    index: i,
                    point: mesh.points[i].to_vec(),
                    kappa: fields.kappa[i],
                    potential: fields.potential[i],
                    tangential_grad: tangential.as_ref().map(|t| t[i]),
                    zeta: fields.zeta[i],
                })
                .collect())
        }
    }
}
