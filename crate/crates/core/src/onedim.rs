//! The two-segment critical set `E = (0,½) ∪ (d,d+½)` on the line.
//!
//! By symmetry `ζ(0) = ζ(d+½)` and `ζ(½) = ζ(d)`, so `E` solves
//! `κ_E + cεV_E = λ` exactly when `f(d) = ζ(½) − ζ(0)` vanishes. For small
//! `ε` the root sits beyond `d_ε ~ ε^(−1/(1+s−α))`, which makes the
//! diameter of these critical sets blow up as `ε → 0`.

use serde::{Deserialize, Serialize};

use crate::quad::primitives::EndpointView;
use crate::sets::{IntervalSet, Params};
use crate::{par, Error, Result};

/// Below this `δ = 1/(2d)` second differences are summed as a series.
const SERIES_CUTOFF: f64 = 0.05;

/// Probes `d_ε·2^k`, `k = 1..=MAX_PROBES`, when bracketing the root.
const MAX_PROBES: u32 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoIntervalConfig {
    /// Start of the second segment.
    pub d: f64,
    pub params: Params,
}

impl TwoIntervalConfig {
    pub fn new(d: f64, params: Params) -> Result<Self> {
        let cfg = TwoIntervalConfig { d, params };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        check_d(self.d)?;
        check_params(&self.params)
    }
}

fn check_d(d: f64) -> Result<()> {
    if !(d > 0.5 && d.is_finite()) {
        return Err(Error::InvalidParams { key: "d", msg: format!("d > 1/2 required, got {d}") });
    }
    Ok(())
}

fn check_params(p: &Params) -> Result<()> {
    p.validate()?;
    if p.n != 1 {
        return Err(Error::InvalidParams {
            key: "n",
            msg: format!("the two-segment set lives on the line, got n = {}", p.n),
        });
    }
    if p.alpha >= 1.0 {
        return Err(Error::InvalidParams {
            key: "alpha",
            msg: format!("alpha ∈ (0,1) required on the line, got {}", p.alpha),
        });
    }
    Ok(())
}

/// `(0,½) ∪ (d,d+½)`.
pub fn two_interval_set(cfg: &TwoIntervalConfig) -> Result<IntervalSet> {
    cfg.validate()?;
    IntervalSet::new(vec![(0.0, 0.5), (cfg.d, cfg.d + 0.5)])
}

/// `ζ = κ + cεV` at `0, ½, d, d+½`.
///
/// The right pair is evaluated as the mirror image of the left pair, so
/// `ζ(0) = ζ(d+½)` and `ζ(½) = ζ(d)` hold bit for bit.
pub fn zeta_endpoints(cfg: &TwoIntervalConfig) -> Result<[f64; 4]> {
    let set = two_interval_set(cfg)?;
    let p = &cfg.params;
    let ce = p.c_coupling * p.eps;
    let zeta = |x: f64| -> Result<f64> {
        let view = EndpointView::new(&set, x)?;
        Ok(view.curvature(p.s) + ce * view.potential(p.alpha))
    };
    let outer = zeta(0.0)?;
    let inner = zeta(0.5)?;
    Ok([outer, inner, inner, outer])
}

/// `2 − (1−δ)^b − (1+δ)^b`, summed as `−2 Σ_{k even} C(b,k) δ^k` for small
/// `δ` where the direct form cancels.
pub fn second_difference(b: f64, delta: f64) -> f64 {
    if delta >= SERIES_CUTOFF {
        return 2.0 - (1.0 - delta).powf(b) - (1.0 + delta).powf(b);
    }
    let d2 = delta * delta;
    // C(b,k) δ^k, advanced two steps at a time
    let mut term = b * (b - 1.0) / 2.0 * d2;
    let mut sum = 0.0f64;
    let mut k = 2.0;
    while term.abs() > 1e-18 * sum.abs() && k < 200.0 {
        sum += term;
        term *= (b - k) * (b - k - 1.0) / ((k + 1.0) * (k + 2.0)) * d2;
        k += 2.0;
    }
    -2.0 * sum
}

/// `[2 − (1−δ)^b − (1+δ)^b] / (−b(b−1)δ²)`, evaluated directly; tends to 1.
pub fn taylor_ratio(b: f64, delta: f64) -> f64 {
    (2.0 - (1.0 - delta).powf(b) - (1.0 + delta).powf(b)) / (-b * (b - 1.0) * delta * delta)
}

/// `f(d) = (2/s)[2d^(−s) − (d−½)^(−s) − (d+½)^(−s)]
///       + (cε/(1−α))[2d^(1−α) − (d−½)^(1−α) − (d+½)^(1−α)]`.
pub fn f_closed_form(d: f64, p: &Params) -> Result<f64> {
    check_d(d)?;
    check_params(p)?;
    Ok(f_unchecked(d, p))
}

fn f_unchecked(d: f64, p: &Params) -> f64 {
    let delta = 0.5 / d;
    let s = p.s;
    let b = 1.0 - p.alpha;
    let attraction = 2.0 / s * d.powf(-s) * second_difference(-s, delta);
    let repulsion = p.c_coupling * p.eps / b * d.powf(b) * second_difference(b, delta);
    attraction + repulsion
}

/// Leading part of `d^(1+α) f(d)`: `g(d) = cαε/4 − (1+s)d^(−1−s+α)/2`.
pub fn g_leading(d: f64, p: &Params) -> f64 {
    p.c_coupling * p.alpha * p.eps / 4.0 - (1.0 + p.s) * d.powf(p.alpha - 1.0 - p.s) / 2.0
}

/// `d_ε = ((1+s)/(cαε))^(1/(1+s−α))`; needs `ε > 0`.
pub fn d_eps(p: &Params) -> Result<f64> {
    check_params(p)?;
    if p.eps <= 0.0 {
        return Err(Error::InvalidParams { key: "eps", msg: "d_ε needs ε > 0".into() });
    }
    Ok(((1.0 + p.s) / (p.c_coupling * p.alpha * p.eps)).powf(1.0 / (1.0 + p.s - p.alpha)))
}

/// A certified root of `f`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootReport {
    pub d_star: f64,
    pub d_eps: f64,
    pub f_at_root: f64,
    /// Final bracket, `f(lo) < 0 < f(hi)` or one endpoint an exact zero.
    pub bracket: (f64, f64),
    /// `max |ζ − mean ζ|` over the four endpoints of the resulting set.
    pub residual: f64,
}

/// Root of `f` beyond `d_ε`: probe `d_ε·2^k` until `f` turns positive, then
/// bisect down to adjacent floating-point numbers.
///
/// `tol` bounds `|f(d*)|`; failure to bracket or to meet `tol` is
/// reported as [`Error::NoRoot`].
pub fn solve_critical_d(p: &Params, tol: f64) -> Result<RootReport> {
    let d_e = d_eps(p)?;
    let no_root = || Error::NoRoot { eps: p.eps };
    let mut lo = d_e.max(0.5 * (1.0 + 1e-9));
    if !(lo > 0.5) || f_unchecked(lo, p) >= 0.0 {
        return Err(no_root());
    }
    let mut hi = None;
    for k in 1..=MAX_PROBES {
        let d = d_e * 2f64.powi(k as i32);
        if !d.is_finite() {
            break;
        }
        if f_unchecked(d, p) > 0.0 {
            hi = Some(d);
            break;
        }
        lo = d;
    }
    let mut hi = hi.ok_or_else(no_root)?;
    loop {
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            break;
        }
        let fm = f_unchecked(mid, p);
        if fm == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if fm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (flo, fhi) = (f_unchecked(lo, p), f_unchecked(hi, p));
    let (d_star, f_at_root) = if flo.abs() <= fhi.abs() { (lo, flo) } else { (hi, fhi) };
    if !(f_at_root.abs() <= tol) {
        return Err(no_root());
    }
    let z = zeta_endpoints(&TwoIntervalConfig::new(d_star, *p)?)?;
    Ok(RootReport { d_star, d_eps: d_e, f_at_root, bracket: (lo, hi), residual: el_residual(&z) })
}

fn el_residual(z: &[f64; 4]) -> f64 {
    let mean = z.iter().sum::<f64>() / 4.0;
    z.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max)
}

/// `10^e` for `e = start, start − step, …` down to `end` (inclusive).
pub fn geometric_grid(start_exp: f64, end_exp: f64, step: f64) -> Vec<f64> {
    let count = ((start_exp - end_exp) / step).round() as i64;
    (0..=count.max(0)).map(|k| 10f64.powf(start_exp - k as f64 * step)).collect()
}

/// `ε ∈ {1e−3, 1e−3.5, …, 1e−6}`.
pub fn default_eps_grid() -> Vec<f64> {
    geometric_grid(-3.0, -6.0, 0.5)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub eps: f64,
    pub d_star: f64,
    pub d_eps: f64,
    pub diameter: f64,
    pub f_at_root: f64,
    pub residual: f64,
    /// Solver failure; such rows carry NaN in the numeric fields.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl SweepRecord {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    /// Least-squares slope of `log diam` against `log(1/ε)`.
    pub slope: f64,
    pub target_slope: f64,
    pub rel_error: f64,
    /// `min diam·ε^(1/(1+s−α))` over the solved rows.
    pub c_o_implied: f64,
    /// Largest `ε` for which a root was still located, if searched.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_bar_estimate: Option<f64>,
    pub rows_used: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub records: Vec<SweepRecord>,
    pub summary: SweepSummary,
}

/// Solve for every `ε` of the grid (rows in grid order) and fit the
/// diameter exponent. At least four rows must succeed.
pub fn epsilon_sweep(p0: &Params, eps_grid: &[f64], tol: f64) -> Result<Sweep> {
    check_params(p0)?;
    let records = par::map_slice(eps_grid, |&eps| {
        let p = p0.with_eps(eps);
        match solve_critical_d(&p, tol) {
            Ok(r) => SweepRecord {
                eps,
                d_star: r.d_star,
                d_eps: r.d_eps,
                diameter: r.d_star + 0.5,
                f_at_root: r.f_at_root,
                residual: r.residual,
                error: None,
            },
            Err(e) => SweepRecord {
                eps,
                d_star: f64::NAN,
                d_eps: d_eps(&p).unwrap_or(f64::NAN),
                diameter: f64::NAN,
                f_at_root: f64::NAN,
                residual: f64::NAN,
                error: Some(e.to_string()),
            },
        }
    });
    let solved: Vec<&SweepRecord> = records.iter().filter(|r| r.ok()).collect();
    if solved.len() < 4 {
        return Err(Error::Unsupported(format!("scaling fit needs at least 4 solved rows, got {}", solved.len())));
    }
    let xs: Vec<f64> = solved.iter().map(|r| (1.0 / r.eps).ln()).collect();
    let ys: Vec<f64> = solved.iter().map(|r| r.diameter.ln()).collect();
    let slope = lsq_slope(&xs, &ys);
    let target = 1.0 / (1.0 + p0.s - p0.alpha);
    let c_o = solved.iter().map(|r| r.diameter * r.eps.powf(target)).fold(f64::INFINITY, f64::min);
    let summary = SweepSummary {
        slope,
        target_slope: target,
        rel_error: (slope - target).abs() / target,
        c_o_implied: c_o,
        eps_bar_estimate: estimate_eps_bar(p0),
        rows_used: solved.len(),
    };
    Ok(Sweep { records, summary })
}

fn lsq_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Largest `ε` (to 1e-3 in `log10 ε`) at which the root search still
/// succeeds, scanning up from `1e−6`. `None` when no root is found even
/// there or the scan never fails below `1e6`.
pub fn estimate_eps_bar(p: &Params) -> Option<f64> {
    let solvable = |eps: f64| solve_critical_d(&p.with_eps(eps), f64::INFINITY).is_ok();
    let mut lo = -6.0f64;
    if !solvable(10f64.powf(lo)) {
        return None;
    }
    let mut hi = lo;
    while solvable(10f64.powf(hi)) {
        lo = hi;
        hi += 1.0;
        if hi > 6.0 {
            return None;
        }
    }
    while hi - lo > 1e-3 {
        let mid = 0.5 * (lo + hi);
        if solvable(10f64.powf(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(10f64.powf(lo))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::line;

    fn params(s: f64, alpha: f64, eps: f64) -> Params {
        Params::new(1, s, alpha, eps).unwrap()
    }

    #[test]
    fn set_construction() {
        let p = params(0.5, 0.5, 1e-3);
        let e = two_interval_set(&TwoIntervalConfig { d: 1.0, params: p }).unwrap();
        assert_eq!(e.intervals(), &[(0.0, 0.5), (1.0, 1.5)]);
        assert_eq!(e.volume(), 1.0);
        let e = two_interval_set(&TwoIntervalConfig { d: 10.0, params: p }).unwrap();
        assert_eq!(e.diameter(), 10.5);
        assert!(TwoIntervalConfig::new(0.4, p).is_err());
    }

    #[test]
    fn zeta_symmetry_and_far_limit() {
        let p = params(0.3, 0.4, 0.0);
        let z = zeta_endpoints(&TwoIntervalConfig::new(1e9, p).unwrap()).unwrap();
        assert_eq!(z[0], z[3]);
        assert_eq!(z[1], z[2]);
        let isolated = 2.0 / 0.3 * 2f64.powf(0.3);
        assert!((z[0] - isolated).abs() < 1e-6 * isolated);
    }

    #[test]
    fn zeta_matches_functionals() {
        let p = params(0.6, 0.3, 0.2);
        let cfg = TwoIntervalConfig::new(1.7, p).unwrap();
        let e = two_interval_set(&cfg).unwrap();
        let z = zeta_endpoints(&cfg).unwrap();
        for (i, x) in [0.0, 0.5, 1.7, 2.2].into_iter().enumerate() {
            let want = line::frac_curvature(&e, x, 0.6).unwrap() + 2.0 * 0.2 * line::potential(&e, x, 0.3).unwrap();
            assert!((z[i] - want).abs() < 1e-13 * want.abs(), "{i}: {} vs {want}", z[i]);
        }
    }

    #[test]
    fn f_is_the_difference_of_zetas() {
        for &(s, a, eps) in &[(0.5, 0.5, 0.0), (0.2, 0.7, 1e-3), (0.8, 0.1, 0.3)] {
            let p = params(s, a, eps);
            for &d in &[0.55, 1.0, 3.0, 20.0] {
                let z = zeta_endpoints(&TwoIntervalConfig::new(d, p).unwrap()).unwrap();
                let f = f_closed_form(d, &p).unwrap();
                let diff = z[1] - z[0];
                assert!((f - diff).abs() < 1e-9 * f.abs().max(1e-12), "d={d}: {f} vs {diff}");
            }
        }
    }

    #[test]
    fn second_difference_branches_agree() {
        for &b in &[-0.5, 0.3, -0.9] {
            let delta = SERIES_CUTOFF * (1.0 - 1e-9);
            let series = second_difference(b, delta);
            let direct = 2.0 - (1.0 - delta).powf(b) - (1.0 + delta).powf(b);
            assert!((series - direct).abs() < 1e-12 * direct.abs());
        }
        assert!((taylor_ratio(-0.5, 1e-3) - 1.0).abs() < 1e-2);
        assert!((taylor_ratio(0.5, 1e-3) - 1.0).abs() < 1e-2);
    }

    #[test]
    fn f_without_repulsion_is_negative() {
        for &s in &[0.1, 0.5, 0.9] {
            for &d in &[0.51, 1.0, 10.0, 1e4, 1e8] {
                assert!(f_closed_form(d, &params(s, 0.5, 0.0)).unwrap() < 0.0);
            }
        }
    }

    #[test]
    fn large_d_limit_of_scaled_f() {
        let p = params(0.5, 0.5, 1e-3);
        let d = 1e9;
        let scaled = f_closed_form(d, &p).unwrap() * d.powf(1.5);
        let g = g_leading(d, &p);
        assert!((scaled - g).abs() < 1e-6 * g.abs(), "{scaled} vs {g}");
        assert!((g - 2.0 * 0.5 * 1e-3 / 4.0).abs() < 1e-7);
    }

    #[test]
    fn d_eps_and_leading_g() {
        let p = params(0.5, 0.5, 1e-3);
        let de = d_eps(&p).unwrap();
        assert!((de - 1500.0).abs() < 1e-9);
        let want = -2.0 * 0.5 * 1e-3 / 4.0;
        assert!((g_leading(de, &p) - want).abs() < 1e-15);
        assert!(d_eps(&params(0.5, 0.5, 0.0)).is_err());
    }

    #[test]
    fn root_example() {
        let p = params(0.5, 0.5, 1e-4);
        let r = solve_critical_d(&p, 1e-12).unwrap();
        assert!(r.d_star > 15000.0 && (r.d_eps - 15000.0).abs() < 1e-8);
        assert!(r.f_at_root.abs() < 1e-12);
        assert!(r.residual < 1e-9);
    }

    #[test]
    fn large_eps_has_no_root() {
        let p = params(0.5, 0.5, 1e3);
        assert!(matches!(solve_critical_d(&p, 1e-10), Err(Error::NoRoot { .. })));
    }

    #[test]
    fn default_grid() {
        let g = default_eps_grid();
        assert_eq!(g.len(), 7);
        assert!((g[0] - 1e-3).abs() < 1e-18 && (g[6] - 1e-6).abs() < 1e-21);
    }

    #[test]
    fn lsq_recovers_a_line() {
        let xs = [0.0, 1.0, 2.0, 5.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 0.25 * x).collect();
        assert!((lsq_slope(&xs, &ys) + 0.25).abs() < 1e-14);
    }
}
