//! Rigidity diagnostics for (near-)critical sets.
//!
//! Everything here is evaluated on boundary samples: the curvature
//! Lipschitz defect `δ_s`, its diameter-weighted form `η_s`, the annulus
//! deficit `ρ`, the Lagrange multiplier estimate `λ̂` with the
//! Euler–Lagrange residual, and numerical checks of the integral
//! identities satisfied by `V_E` and `κ_E` (see [`identities`]).
//!
//! Constants that only exist as "there is a `C`" statements are never
//! fixed here; the report carries the ratios they would have to bound.

pub mod identities;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use identities::{
    ball_map_mu, calibrate_variation_constant, identity_check, tangential_sup, Calibration, IdentityKind,
    IdentityResult,
};

use crate::functionals::{line, plane, CurveFields, EvalOptions};
use crate::sets::{CurveMesh, IntervalSet, Params, Point2, Resolved, SetGeometry, DEFAULT_STAR_RESOLUTION};
use crate::{par, Error, Result};

/// Boundary values shared by the diagnostics.
pub(crate) struct Sampled {
    /// Node positions; points on the line are embedded as `(x, 0)`.
    pub points: Vec<Point2>,
    /// Arclength weights (1 at endpoints).
    pub weights: Vec<f64>,
    pub kappa: Vec<f64>,
    pub potential: Vec<f64>,
    pub zeta: Vec<f64>,
    /// `(x − c)·ν`, `c` the shape center (the origin on the line).
    pub support: Vec<f64>,
}

impl Sampled {
    pub fn line(set: &IntervalSet, p: &Params) -> Result<Self> {
        let ce = p.c_coupling * p.eps;
        let ends = set.endpoints();
        let mut out = Sampled {
            points: Vec::new(),
            weights: Vec::new(),
            kappa: Vec::new(),
            potential: Vec::new(),
            zeta: Vec::new(),
            support: Vec::new(),
        };
        for (x, nu) in ends {
            let k = line::frac_curvature(set, x, p.s)?;
            let v = line::potential(set, x, p.alpha)?;
            out.points.push([x, 0.0]);
            out.weights.push(1.0);
            out.kappa.push(k);
            out.potential.push(v);
            out.zeta.push(k + ce * v);
            out.support.push(x * nu);
        }
        Ok(out)
    }

    pub fn curve(mesh: &CurveMesh, p: &Params) -> Self {
        let f = CurveFields::compute(mesh, p, false);
        let support = (0..mesh.len())
            .map(|i| {
                let (x, n) = (mesh.points[i], mesh.normals[i]);
                (x[0] - mesh.center[0]) * n[0] + (x[1] - mesh.center[1]) * n[1]
            })
            .collect();
        Sampled {
            points: mesh.points.clone(),
            weights: mesh.weights.clone(),
            kappa: f.kappa,
            potential: f.potential,
            zeta: f.zeta,
            support,
        }
    }

    fn weighted_mean(&self, v: &[f64]) -> f64 {
        let w: f64 = self.weights.iter().sum();
        par::compensated_sum(self.weights.iter().zip(v).map(|(w, v)| w * v)) / w
    }
}

/// `sup_{i≠j} |v_i − v_j| / |x_i − x_j|` over all node pairs.
pub fn lipschitz_defect(points: &[Point2], values: &[f64]) -> f64 {
    assert_eq!(points.len(), values.len());
    let rows = par::map_range(points.len(), |i| {
        let mut best = 0.0f64;
        for j in i + 1..points.len() {
            let d = (points[i][0] - points[j][0]).hypot(points[i][1] - points[j][1]);
            if d > 0.0 {
                best = best.max((values[i] - values[j]).abs() / d);
            }
        }
        best
    });
    rows.into_iter().fold(0.0, f64::max)
}

/// `δ_s` computed from `κ` and, independently, as `cε·sup|ΔV|/|Δx|`; on
/// critical sets the two agree.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaReport {
    pub from_curvature: f64,
    pub from_potential: f64,
}

pub fn lipschitz_defect_delta(shape: &SetGeometry, p: &Params, opts: &EvalOptions) -> Result<DeltaReport> {
    let data = sample(shape, p, opts)?;
    Ok(delta_of(&data, p))
}

fn delta_of(data: &Sampled, p: &Params) -> DeltaReport {
    DeltaReport {
        from_curvature: lipschitz_defect(&data.points, &data.kappa),
        from_potential: p.c_coupling * p.eps * lipschitz_defect(&data.points, &data.potential),
    }
}

pub(crate) fn sample(shape: &SetGeometry, p: &Params, opts: &EvalOptions) -> Result<Sampled> {
    p.validate()?;
    if shape.dim() != p.n {
        return Err(Error::InvalidParams {
            key: "n",
            msg: format!("params have n = {} but the set has dimension {}", p.n, shape.dim()),
        });
    }
    match shape.resolve()? {
        Resolved::Line(set) => Sampled::line(&set, p),
        Resolved::Plane(star) => Ok(Sampled::curve(&CurveMesh::new(&star, opts.resolution)?, p)),
    }
}

/// `η_s = diam^(2n+s+1)·δ_s`.
pub fn eta(diameter: f64, n: usize, s: f64, delta: f64) -> f64 {
    diameter.powf(2.0 * n as f64 + s + 1.0) * delta
}

/// Best annulus found by the center search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Annulus {
    /// `(R − r)/diam`.
    pub rho: f64,
    pub center: Point2,
    pub inner: f64,
    pub outer: f64,
}

/// `ρ(E) = inf_p (R(p) − r(p))/diam` with `B_r(p) ⊆ E ⊆ B_R(p)`.
///
/// `R` and `r` are the largest and smallest distances from `p` to
/// `resolution` boundary samples. The center is refined by coordinate
/// descent from the shape center and two nearby starts, so the result is
/// a local minimum.
pub fn annulus_deficit_rho(shape: &SetGeometry, resolution: usize) -> Result<Annulus> {
    let star = match shape {
        SetGeometry::Ball(b) if b.dim() != 2 => {
            let c = b.center();
            let center = [c[0], c.get(1).copied().unwrap_or(0.0)];
            return Ok(Annulus { rho: 0.0, center, inner: b.radius(), outer: b.radius() });
        }
        _ => match shape.resolve()? {
            Resolved::Plane(star) => star,
            Resolved::Line(_) => {
                return Err(Error::Unsupported("annulus deficit of a set on the line".into()));
            }
        },
    };
    let mesh = CurveMesh::new(&star, resolution)?;
    let diam = star.diameter(resolution);
    let pts = &mesh.points;
    let radii = |c: Point2| {
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for y in pts {
            let d = (y[0] - c[0]).hypot(y[1] - c[1]);
            lo = lo.min(d);
            hi = hi.max(d);
        }
        (lo, hi)
    };
    let objective = |c: Point2| {
        let (lo, hi) = radii(c);
        (hi - lo) / diam
    };
    let c0 = star.center();
    let g = 0.05 * diam;
    let starts = [c0, [c0[0] + g, c0[1]], [c0[0], c0[1] + g]];
    let mut best = (f64::INFINITY, c0);
    for start in starts {
        let found = descend(&objective, start, g, diam);
        if found.0 < best.0 {
            best = found;
        }
    }
    let (inner, outer) = radii(best.1);
    Ok(Annulus { rho: best.0, center: best.1, inner, outer })
}

fn descend(objective: &impl Fn(Point2) -> f64, start: Point2, step0: f64, scale: f64) -> (f64, Point2) {
    let mut c = start;
    let mut val = objective(c);
    let mut step = step0;
    let mut iterations = 0;
    while step > 1e-13 * scale && iterations < 20_000 {
        iterations += 1;
        let mut moved = false;
        for dir in [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]] {
            let trial = [c[0] + step * dir[0], c[1] + step * dir[1]];
            let v = objective(trial);
            if v < val {
                val = v;
                c = trial;
                moved = true;
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    (val, c)
}

/// `λ̂` and the Euler–Lagrange defect.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaReport {
    /// Arclength-weighted boundary mean of `ζ`.
    pub lambda_hat: f64,
    /// `max |ζ − λ̂|` over the nodes.
    pub el_residual: f64,
    /// `[(n−s)P_s/c_var + cε(n−α/2)∬|x−y|^(−α)] / (n|E|)`, which equals
    /// `λ` when `ζ ≡ λ`.
    pub lambda_cross: f64,
}

pub fn lambda_hat_and_residual(shape: &SetGeometry, p: &Params, opts: &EvalOptions) -> Result<LambdaReport> {
    let data = sample(shape, p, opts)?;
    lambda_of(shape, &data, p, opts)
}

fn lambda_of(shape: &SetGeometry, data: &Sampled, p: &Params, opts: &EvalOptions) -> Result<LambdaReport> {
    let lambda_hat = data.weighted_mean(&data.zeta);
    let el_residual = data.zeta.iter().map(|z| (z - lambda_hat).abs()).fold(0.0, f64::max);
    let n = p.n as f64;
    let (per, riesz) = match shape.resolve()? {
        Resolved::Line(set) => (line::frac_perimeter(&set, p.s), line::riesz_energy(&set, p.alpha)),
        Resolved::Plane(star) => {
            let mesh = CurveMesh::new(&star, opts.resolution)?;
            (plane::frac_perimeter(&mesh, p.s), plane::riesz_energy(&mesh, p.alpha))
        }
    };
    let lambda_cross =
        ((n - p.s) * per / p.c_var + p.c_coupling * p.eps * (n - 0.5 * p.alpha) * riesz) / (n * shape.volume());
    Ok(LambdaReport { lambda_hat, el_residual, lambda_cross })
}

/// What [`diagnose`] computes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseOptions {
    pub resolution: usize,
    /// Identity checks to run; `Au1` and `Lal` need area quadrature and
    /// are the slow ones.
    pub identities: Vec<IdentityKind>,
    /// Largest `μ` for which the tangential-gradient bound is considered
    /// in regime.
    pub mu_gate: f64,
}

impl Default for DiagnoseOptions {
    fn default() -> Self {
        DiagnoseOptions {
            resolution: DEFAULT_STAR_RESOLUTION,
            identities: vec![IdentityKind::Minkowski, IdentityKind::Au2],
            mu_gate: 0.25,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub delta_s: f64,
    /// `cε·sup|ΔV|/|Δx|`.
    pub delta_from_potential: f64,
    /// Size of `δ_s` explained by quadrature error alone.
    pub delta_tolerance: f64,
    pub eta_s: f64,
    /// `η_s / (diam^(2n+s+1) ε)`; absent for `ε = 0`.
    pub eta_implied_c: Option<f64>,
    /// Absent on the line.
    pub rho: Option<f64>,
    /// `ρ/η_s`, the constant an Alexandrov-type bound `ρ ≤ Cη_s` needs.
    pub rho_implied_c: Option<f64>,
    pub iso_ratio: f64,
    pub diameter: f64,
    /// `ε·diam^(2n+s+1)`.
    pub eps_diam_power: f64,
    /// `diam·ε^(1/(2n+s+1))`; absent for `ε = 0`.
    pub diam_implied_c_o: Option<f64>,
    pub lambda_hat: f64,
    pub lambda_cross: f64,
    pub el_residual: f64,
    pub identity_residuals: BTreeMap<String, f64>,
    pub mesh_resolution: usize,
    pub error_estimates: BTreeMap<String, f64>,
    /// `C¹` distance to the equal-area disk (planar sets).
    pub mu: Option<f64>,
    pub mu_in_regime: Option<bool>,
    /// `sup |∇V·τ|` over the nodes (planar sets with `α < 1`).
    pub tangential_sup: Option<f64>,
}

/// Full report for `shape`.
pub fn diagnose(shape: &SetGeometry, p: &Params, opts: &DiagnoseOptions) -> Result<DiagnosticsReport> {
    let eval = EvalOptions::with_resolution(opts.resolution);
    let data = sample(shape, p, &eval)?;
    let n = p.n as f64;
    let delta = delta_of(&data, p);
    let lambda = lambda_of(shape, &data, p, &eval)?;
    let diameter = shape.diameter();
    let power = 2.0 * n + p.s + 1.0;
    let eta_s = eta(diameter, p.n, p.s, delta.from_curvature);
    let eps_pos = p.eps > 0.0;

    let mut error_estimates = BTreeMap::new();
    let mut delta_tolerance = 0.0;
    let (mut rho, mut mu, mut tangential) = (None, None, None);
    if let Resolved::Plane(star) = shape.resolve()? {
        // nodes of the half-resolution mesh are the even nodes of the full one
        let half = Sampled::curve(&CurveMesh::new(&star, (opts.resolution / 2).max(4))?, p);
        let node_err = |full: &[f64], coarse: &[f64]| {
            coarse.iter().enumerate().map(|(i, c)| (full[2 * i] - c).abs()).fold(0.0, f64::max)
        };
        let k_err = node_err(&data.kappa, &half.kappa);
        let v_err = node_err(&data.potential, &half.potential);
        let mean_half = half.weighted_mean(&half.zeta);
        error_estimates.insert("kappa".into(), k_err);
        error_estimates.insert("potential".into(), v_err);
        error_estimates.insert("lambda_hat".into(), (lambda.lambda_hat - mean_half).abs());
        let spacing = data.weights.iter().copied().fold(f64::INFINITY, f64::min);
        delta_tolerance = 2.0 * (k_err + p.c_coupling * p.eps * v_err) / spacing;

        rho = Some(annulus_deficit_rho(shape, opts.resolution)?.rho);
        let m = ball_map_mu(&star, opts.resolution);
        mu = Some(m);
        if p.alpha < 1.0 {
            tangential = Some(tangential_sup(&star, p.alpha, opts.resolution)?);
        }
    }
    let mut identity_residuals = BTreeMap::new();
    for kind in &opts.identities {
        let r = identity_check(shape, p, *kind, opts.resolution)?;
        identity_residuals.insert(kind.to_string(), r.residual);
    }
    Ok(DiagnosticsReport {
        delta_s: delta.from_curvature,
        delta_from_potential: delta.from_potential,
        delta_tolerance,
        eta_s,
        eta_implied_c: eps_pos.then(|| eta_s / (diameter.powf(power) * p.eps)),
        rho,
        rho_implied_c: rho.filter(|_| eta_s > 0.0).map(|r| r / eta_s),
        iso_ratio: shape.isodiametric_ratio(),
        diameter,
        eps_diam_power: p.eps * diameter.powf(power),
        diam_implied_c_o: eps_pos.then(|| diameter * p.eps.powf(1.0 / power)),
        lambda_hat: lambda.lambda_hat,
        lambda_cross: lambda.lambda_cross,
        el_residual: lambda.el_residual,
        identity_residuals,
        mesh_resolution: opts.resolution,
        error_estimates,
        mu,
        mu_in_regime: mu.map(|m| m <= opts.mu_gate),
        tangential_sup: tangential,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::onedim::{solve_critical_d, two_interval_set, TwoIntervalConfig};
    use crate::sets::{Ball, StarShape2D};

    fn star(a: f64) -> SetGeometry {
        StarShape2D::from_modes([0.0, 0.0], 1.0, &[(3, a, 0.0)]).unwrap().into()
    }

    #[test]
    fn ball_is_a_fixed_point() {
        let p = Params::new(2, 0.5, 0.5, 1e-2).unwrap();
        let ball: SetGeometry = Ball::new(vec![0.2, -0.1], 0.6).unwrap().into();
        let opts = DiagnoseOptions { resolution: 128, ..Default::default() };
        let r = diagnose(&ball, &p, &opts).unwrap();
        assert!(r.delta_s < 1e-6, "{}", r.delta_s);
        assert!(r.delta_s <= r.delta_tolerance.max(1e-9));
        assert!(r.rho.unwrap() < 1e-12);
        assert!(r.el_residual < 1e-5);
        assert!(r.tangential_sup.unwrap() < 1e-8);
        assert!(((r.lambda_cross - r.lambda_hat) / r.lambda_hat).abs() < 1e-6);
        assert_eq!(r.eta_s, eta(r.diameter, 2, 0.5, r.delta_s));
    }

    #[test]
    fn eta_examples() {
        assert_eq!(eta(3.0, 2, 0.5, 0.0), 0.0);
        assert_eq!(eta(1.0, 1, 0.3, 0.7), 0.7);
    }

    #[test]
    fn rho_direct_bound_and_scale_invariance() {
        let s = star(0.1);
        let a = annulus_deficit_rho(&s, 512).unwrap();
        let direct = 0.2 / s.diameter();
        assert!(a.rho <= direct + 1e-12);
        assert!(a.rho > 0.5 * direct);
        let b = annulus_deficit_rho(&s.scaled(3.0).unwrap(), 512).unwrap();
        assert!((a.rho - b.rho).abs() < 1e-10);
        let line: SetGeometry = IntervalSet::new(vec![(0.0, 1.0)]).unwrap().into();
        assert!(annulus_deficit_rho(&line, 64).is_err());
    }

    #[test]
    fn delta_halves_with_the_perturbation() {
        let p = Params::new(2, 0.5, 0.5, 0.0).unwrap();
        let opts = EvalOptions::with_resolution(256);
        let d1 = lipschitz_defect_delta(&star(0.02), &p, &opts).unwrap().from_curvature;
        let d2 = lipschitz_defect_delta(&star(0.01), &p, &opts).unwrap().from_curvature;
        assert!((d2 / d1 - 0.5).abs() < 0.15, "{d1} {d2}");
    }

    #[test]
    fn two_interval_critical_set() {
        let p = Params::new(1, 0.5, 0.5, 1e-3).unwrap();
        let root = solve_critical_d(&p, 1e-10).unwrap();
        let e: SetGeometry = two_interval_set(&TwoIntervalConfig::new(root.d_star, p).unwrap()).unwrap().into();
        let d = lipschitz_defect_delta(&e, &p, &EvalOptions::default()).unwrap();
        assert!((d.from_curvature - d.from_potential).abs() < 1e-8);
        let l = lambda_hat_and_residual(&e, &p, &EvalOptions::default()).unwrap();
        assert!(l.el_residual < 1e-8);
    }

    #[test]
    fn lambda_without_repulsion_is_the_ball_curvature() {
        let p = Params::new(2, 0.3, 0.5, 0.0).unwrap();
        let disk: SetGeometry = Ball::new(vec![0.0, 0.0], 1.0).unwrap().into();
        let l = lambda_hat_and_residual(&disk, &p, &EvalOptions::with_resolution(256)).unwrap();
        let star = StarShape2D::disk([0.0, 0.0], 1.0).unwrap();
        let tol = crate::quad::QuadTolerance { rel_tol: 1e-9, abs_tol: 1e-12, max_subdivisions: 2000 };
        let oracle = crate::quad::line_oracle::curvature_oracle(&star, 0.4, 0.3, &tol).unwrap();
        assert!(((l.lambda_hat - oracle.estimate) / oracle.estimate).abs() < 1e-6);
    }
}
