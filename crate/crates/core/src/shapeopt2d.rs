//! Volume-constrained descent on planar star shapes.
//!
//! Each step moves the boundary with normal velocity `−(ζ − λ̂)`, where
//! `ζ = κ + cεV` and `λ̂` is the arclength mean of `ζ`, so the area is
//! preserved to first order. The velocity is converted to a radial
//! perturbation, high modes are cut off, the area is restored exactly by
//! a dilation, and the step is kept only if the energy did not go up.
//!
//! The energy monitored is `P_s + (c/2)ε∬_{E×E}|x−y|^(−α)`, whose first
//! variation is `ζ`; with the default `c = 2` it is `F_ε`.

use serde::{Deserialize, Serialize};

use crate::diagnostics::{self, DiagnoseOptions, DiagnosticsReport};
use crate::functionals::{plane, CurveFields};
use crate::sets::{CurveMesh, FourierRadius, Params, StarShape2D};
use crate::{Error, Result};

/// Relative energy increase still counted as "no increase": the size of
/// rounding in the double integrals, which is all that is left near a
/// critical point.
const ENERGY_SLACK: f64 = 64.0 * f64::EPSILON;

/// Discretization and step control.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerOptions {
    /// Boundary nodes.
    pub resolution: usize,
    /// Highest Fourier mode kept after each step.
    pub k_max: usize,
    pub initial_step: f64,
    /// Steps below this count as a stall.
    pub min_step: f64,
    /// Stop once `max |ζ − λ̂| ≤ tol`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions { resolution: 256, k_max: 12, initial_step: 1e-2, min_step: 1e-14, tol: 1e-3, max_iter: 500 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub shape: StarShape2D,
    pub step_size: f64,
    pub iteration: usize,
    /// `max |ζ − λ̂|` before each step, then at the final shape.
    pub residual_history: Vec<f64>,
    pub energy_history: Vec<f64>,
    /// `|area − 1|` after the last step.
    pub volume_drift: f64,
}

impl OptimizerState {
    pub fn new(shape: StarShape2D, step_size: f64) -> Self {
        let volume_drift = (shape.area() - 1.0).abs();
        OptimizerState {
            shape,
            step_size,
            iteration: 0,
            residual_history: Vec::new(),
            energy_history: Vec::new(),
            volume_drift,
        }
    }
}

/// `r(θ) = r₀ + Σ a_k cos kθ + b_k sin kθ` about the origin.
pub fn fourier_shape(coeffs: FourierRadius) -> Result<StarShape2D> {
    StarShape2D::new([0.0, 0.0], coeffs)
}

/// Dilate about the parameterization center to unit area.
pub fn volume_project(shape: &StarShape2D) -> Result<StarShape2D> {
    shape.scaled_about_center(shape.area().powf(-0.5))
}

/// `P_s + (c/2)ε·Riesz` on a mesh.
fn energy(mesh: &CurveMesh, p: &Params) -> f64 {
    plane::frac_perimeter(mesh, p.s) + 0.5 * p.c_coupling * p.eps * plane::riesz_energy(mesh, p.alpha)
}

/// Normal velocity `−(ζ − λ̂)` at the nodes and the residual `max|ζ − λ̂|`.
fn velocity(mesh: &CurveMesh, p: &Params) -> (Vec<f64>, f64) {
    let zeta = CurveFields::compute(mesh, p, false).zeta;
    let total: f64 = mesh.weights.iter().sum();
    let lambda = mesh.weights.iter().zip(&zeta).map(|(w, z)| w * z).sum::<f64>() / total;
    let v: Vec<f64> = zeta.iter().map(|z| lambda - z).collect();
    let residual = v.iter().map(|x| x.abs()).fold(0.0, f64::max);
    (v, residual)
}

/// Move every node radially by `step·v·|y′|/r`, keep modes up to `k_max`
/// and restore unit area.
fn displaced(shape: &StarShape2D, mesh: &CurveMesh, v: &[f64], step: f64, k_max: usize) -> Result<StarShape2D> {
    let samples: Vec<f64> =
        (0..mesh.len()).map(|i| mesh.radius[i] + step * v[i] * mesh.speed[i] / mesh.radius[i]).collect();
    if samples.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::InvalidGeometry("step produced a nonpositive radius".into()));
    }
    let radius = FourierRadius::interpolate(&samples).truncated(k_max);
    volume_project(&shape.with_radius(radius)?)
}

fn check(p: &Params, opts: &OptimizerOptions) -> Result<()> {
    p.validate()?;
    if p.n != 2 {
        return Err(Error::InvalidParams { key: "n", msg: format!("planar optimization needs n = 2, got {}", p.n) });
    }
    if opts.resolution < 8 || opts.k_max == 0 || 2 * opts.k_max >= opts.resolution {
        return Err(Error::InvalidParams {
            key: "modes",
            msg: format!("need 1 ≤ k_max < resolution/2, got k_max = {} at resolution {}", opts.k_max, opts.resolution),
        });
    }
    if !(opts.initial_step > 0.0 && opts.min_step > 0.0) {
        return Err(Error::InvalidParams { key: "step", msg: "step sizes must be positive".into() });
    }
    Ok(())
}

/// One accepted descent step with backtracking: the step is halved until
/// the energy does not increase (up to rounding), and grown by 1.5 for the
/// next call.
pub fn el_gradient_step(state: &OptimizerState, p: &Params, opts: &OptimizerOptions) -> Result<OptimizerState> {
    check(p, opts)?;
    let mesh = CurveMesh::new(&state.shape, opts.resolution)?;
    let (v, residual) = velocity(&mesh, p);
    let e0 = energy(&mesh, p);
    let mut step = state.step_size;
    loop {
        if step < opts.min_step {
            let mut stuck = state.clone();
            stuck.step_size = step;
            return Err(Error::Stalled { iteration: state.iteration, step, residual, state: Box::new(stuck) });
        }
        if let Ok(next) = displaced(&state.shape, &mesh, &v, step, opts.k_max) {
            let e1 = energy(&CurveMesh::new(&next, opts.resolution)?, p);
            if e1 <= e0 + ENERGY_SLACK * e0.abs() {
                let mut out = state.clone();
                out.volume_drift = (next.area() - 1.0).abs();
                out.shape = next;
                out.step_size = 1.5 * step;
                out.iteration += 1;
                out.residual_history.push(residual);
                out.energy_history.push(e0);
                return Ok(out);
            }
        }
        step *= 0.5;
    }
}

/// Result of [`find_critical_2d`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalSearch {
    pub shape: StarShape2D,
    pub report: DiagnosticsReport,
    pub state: OptimizerState,
    pub converged: bool,
}

/// Descend from `init` (unit area) until `max|ζ − λ̂| ≤ tol` or
/// `max_iter` steps, then run the diagnostics on the final shape.
pub fn find_critical_2d(init: &StarShape2D, p: &Params, opts: &OptimizerOptions) -> Result<CriticalSearch> {
    check(p, opts)?;
    if (init.area() - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidGeometry(format!("initial shape must have unit area, got {}", init.area())));
    }
    let mut state = OptimizerState::new(init.clone(), opts.initial_step);
    let mut converged = false;
    loop {
        let mesh = CurveMesh::new(&state.shape, opts.resolution)?;
        let (_, residual) = velocity(&mesh, p);
        if residual <= opts.tol {
            converged = true;
            state.residual_history.push(residual);
            state.energy_history.push(energy(&mesh, p));
            break;
        }
        if state.iteration >= opts.max_iter {
            state.residual_history.push(residual);
            state.energy_history.push(energy(&mesh, p));
            break;
        }
        state = el_gradient_step(&state, p, opts)?;
    }
    let diag = DiagnoseOptions { resolution: opts.resolution, ..DiagnoseOptions::default() };
    let report = diagnostics::diagnose(&state.shape.clone().into(), p, &diag)?;
    Ok(CriticalSearch { shape: state.shape.clone(), report, state, converged })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(eps: f64) -> Params {
        Params::new(2, 0.5, 0.5, eps).unwrap()
    }

    fn unit(a3: f64) -> StarShape2D {
        volume_project(&StarShape2D::from_modes([0.0, 0.0], 1.0, &[(3, a3, 0.0)]).unwrap()).unwrap()
    }

    #[test]
    fn fourier_shapes() {
        let d = fourier_shape(FourierRadius::constant(1.0)).unwrap();
        assert_eq!(d.radius_at(0.3), 1.0);
        let bad = FourierRadius { r0: 1.0, cos: vec![0.0, 0.0, 2.0], sin: vec![0.0; 3] };
        assert!(fourier_shape(bad).is_err());
    }

    #[test]
    fn projection_normalizes_area_only() {
        let d = volume_project(&StarShape2D::disk([0.0, 0.0], 2.0).unwrap()).unwrap();
        assert!((d.radius().r0 - 1.0 / std::f64::consts::PI.sqrt()).abs() < 1e-15);
        let s = unit(0.1);
        let again = volume_project(&s).unwrap();
        assert!((again.area() - 1.0).abs() < 1e-14);
        assert!((again.radius().r0 - s.radius().r0).abs() < 1e-14);
    }

    #[test]
    fn disk_is_a_fixed_point() {
        let disk = volume_project(&StarShape2D::disk([0.0, 0.0], 1.0).unwrap()).unwrap();
        let tol = 1e-6;
        let opts = OptimizerOptions { resolution: 64, tol, ..Default::default() };
        let mut state = OptimizerState::new(disk.clone(), opts.initial_step);
        for _ in 0..100 {
            state = el_gradient_step(&state, &params(1e-3), &opts).unwrap();
        }
        let r = state.shape.radius();
        assert!((r.r0 - disk.radius().r0).abs() < 10.0 * tol);
        assert!(r.cos.iter().chain(&r.sin).all(|c| c.abs() < 10.0 * tol), "{r:?}");
    }

    #[test]
    fn velocity_has_zero_mean() {
        let s = unit(0.05);
        let mesh = CurveMesh::new(&s, 128).unwrap();
        let (v, _) = velocity(&mesh, &params(0.1));
        let mean: f64 = v.iter().zip(&mesh.weights).map(|(v, w)| v * w).sum();
        assert!(mean.abs() < 1e-12);
    }

    #[test]
    fn energy_decreases_without_repulsion() {
        let opts = OptimizerOptions { resolution: 64, k_max: 8, ..Default::default() };
        let mut state = OptimizerState::new(unit(0.05), opts.initial_step);
        for _ in 0..15 {
            state = el_gradient_step(&state, &params(0.0), &opts).unwrap();
            assert!((state.shape.area() - 1.0).abs() < 1e-10);
        }
        assert!(state.energy_history.windows(2).all(|w| w[1] <= w[0] * (1.0 + ENERGY_SLACK)));
        let r = &state.residual_history;
        assert!(r.last().unwrap() < &(0.5 * r[0]));
    }

    #[test]
    fn infinite_tolerance_returns_the_input() {
        let s = unit(0.05);
        let opts = OptimizerOptions { resolution: 64, tol: f64::INFINITY, ..Default::default() };
        let out = find_critical_2d(&s, &params(1e-3), &opts).unwrap();
        assert_eq!(out.shape, s);
        assert_eq!(out.state.iteration, 0);
        assert!(out.converged);
    }

    #[test]
    fn rejects_non_unit_area() {
        let s = StarShape2D::disk([0.0, 0.0], 1.0).unwrap();
        assert!(find_critical_2d(&s, &params(0.0), &OptimizerOptions::default()).is_err());
    }
}
