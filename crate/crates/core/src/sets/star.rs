use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::Point2;
use crate::{par, Error, Result};

/// Truncated trigonometric series `r(θ) = r₀ + Σ_k a_k cos kθ + b_k sin kθ`.
///
/// `cos[k-1]` and `sin[k-1]` hold `a_k` and `b_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierRadius {
    pub r0: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl FourierRadius {
    pub fn constant(r0: f64) -> Self {
        FourierRadius { r0, cos: Vec::new(), sin: Vec::new() }
    }

    pub fn max_mode(&self) -> usize {
        self.cos.len().max(self.sin.len())
    }

    fn coeff(&self, k: usize) -> (f64, f64) {
        (self.cos.get(k - 1).copied().unwrap_or(0.0), self.sin.get(k - 1).copied().unwrap_or(0.0))
    }

    pub fn value(&self, theta: f64) -> f64 {
        self.derivatives(theta).0
    }

    /// `(r, r′, r″)` at `theta`.
    pub fn derivatives(&self, theta: f64) -> (f64, f64, f64) {
        let (r, d1, d2, _) = self.derivatives3(theta);
        (r, d1, d2)
    }

    /// `(r, r′, r″, r‴)` at `theta`.
    pub fn derivatives3(&self, theta: f64) -> (f64, f64, f64, f64) {
        let (mut r, mut d1, mut d2, mut d3) = (self.r0, 0.0, 0.0, 0.0);
        for k in 1..=self.max_mode() {
            let (a, b) = self.coeff(k);
            if a == 0.0 && b == 0.0 {
                continue;
            }
            let kf = k as f64;
            let (sn, cs) = (kf * theta).sin_cos();
            r += a * cs + b * sn;
            d1 += kf * (b * cs - a * sn);
            d2 -= kf * kf * (a * cs + b * sn);
            d3 -= kf * kf * kf * (b * cs - a * sn);
        }
        (r, d1, d2, d3)
    }

    /// Trigonometric interpolant of `samples` taken at `θ_j = 2πj/M`.
    pub fn interpolate(samples: &[f64]) -> Self {
        let m = samples.len();
        let mf = m as f64;
        let r0 = samples.iter().sum::<f64>() / mf;
        let kmax = m / 2;
        let mut cos = vec![0.0; kmax];
        let mut sin = vec![0.0; kmax];
        for k in 1..=kmax {
            let (mut a, mut b) = (0.0, 0.0);
            for (j, &r) in samples.iter().enumerate() {
                // reduce k·j mod M so the angle stays small
                let phase = TAU * ((k * j) % m) as f64 / mf;
                let (sn, cs) = phase.sin_cos();
                a += r * cs;
                b += r * sn;
            }
            if 2 * k == m {
                cos[k - 1] = a / mf;
                sin[k - 1] = 0.0;
            } else {
                cos[k - 1] = 2.0 * a / mf;
                sin[k - 1] = 2.0 * b / mf;
            }
        }
        let mut out = FourierRadius { r0, cos, sin };
        out.trim();
        out
    }

    fn trim(&mut self) {
        while self.cos.len() > self.sin.len() && self.cos.last() == Some(&0.0) {
            self.cos.pop();
        }
        while self.sin.len() > self.cos.len() && self.sin.last() == Some(&0.0) {
            self.sin.pop();
        }
        while !self.cos.is_empty()
            && self.cos.len() == self.sin.len()
            && self.cos.last() == Some(&0.0)
            && self.sin.last() == Some(&0.0)
        {
            self.cos.pop();
            self.sin.pop();
        }
    }

    /// Zero every mode above `kmax`.
    pub fn truncated(&self, kmax: usize) -> Self {
        let mut out = self.clone();
        out.cos.truncate(kmax);
        out.sin.truncate(kmax);
        out
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        FourierRadius {
            r0: lambda * self.r0,
            cos: self.cos.iter().map(|a| lambda * a).collect(),
            sin: self.sin.iter().map(|b| lambda * b).collect(),
        }
    }

    /// `½∫ r² dθ`, exact by Parseval.
    pub fn area(&self) -> f64 {
        let modes: f64 = self.cos.iter().chain(self.sin.iter()).map(|c| c * c).sum();
        PI * self.r0 * self.r0 + 0.5 * PI * modes
    }
}

/// Planar domain `{c + ρ(cos θ, sin θ) : 0 ≤ ρ < r(θ)}` with `r > 0`.
///
/// The coefficient representation is canonical; [`StarShape2D::samples`]
/// and [`StarShape2D::from_samples`] convert to and from uniform samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StarRaw", into = "StarRaw")]
pub struct StarShape2D {
    center: Point2,
    radius: FourierRadius,
}

#[derive(Serialize, Deserialize)]
struct StarRaw {
    center: Point2,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    r0: Option<f64>,
    #[serde(default)]
    cos: Vec<f64>,
    #[serde(default)]
    sin: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    samples: Option<Vec<f64>>,
}

impl TryFrom<StarRaw> for StarShape2D {
    type Error = Error;

    fn try_from(raw: StarRaw) -> Result<Self> {
        match (raw.r0, raw.samples) {
            (Some(r0), None) => StarShape2D::new(raw.center, FourierRadius { r0, cos: raw.cos, sin: raw.sin }),
            (None, Some(samples)) => StarShape2D::from_samples(raw.center, &samples),
            _ => Err(Error::InvalidGeometry(
                "star shape needs exactly one of `r0` (with `cos`/`sin`) or `samples`".into(),
            )),
        }
    }
}

impl From<StarShape2D> for StarRaw {
    fn from(s: StarShape2D) -> Self {
        StarRaw { center: s.center, r0: Some(s.radius.r0), cos: s.radius.cos, sin: s.radius.sin, samples: None }
    }
}

impl StarShape2D {
    pub fn new(center: Point2, radius: FourierRadius) -> Result<Self> {
        if !(center[0].is_finite() && center[1].is_finite()) {
            return Err(Error::InvalidGeometry("non-finite center".into()));
        }
        let all_finite = std::iter::once(radius.r0)
            .chain(radius.cos.iter().copied())
            .chain(radius.sin.iter().copied())
            .all(f64::is_finite);
        if !all_finite {
            return Err(Error::InvalidGeometry("non-finite radius coefficient".into()));
        }
        let probes = (16 * radius.max_mode()).max(64);
        let min_r = (0..probes).map(|j| radius.value(TAU * j as f64 / probes as f64)).fold(f64::INFINITY, f64::min);
        if !(min_r > 0.0) {
            return Err(Error::InvalidGeometry(format!(
                "radius function must be positive (minimum sampled value {min_r})"
            )));
        }
        Ok(StarShape2D { center, radius })
    }

    pub fn disk(center: Point2, r: f64) -> Result<Self> {
        StarShape2D::new(center, FourierRadius::constant(r))
    }

    /// Build from `(k, a_k, b_k)` triples on top of the constant `r0`.
    pub fn from_modes(center: Point2, r0: f64, modes: &[(usize, f64, f64)]) -> Result<Self> {
        let kmax = modes.iter().map(|m| m.0).max().unwrap_or(0);
        let mut radius = FourierRadius { r0, cos: vec![0.0; kmax], sin: vec![0.0; kmax] };
        for &(k, a, b) in modes {
            if k == 0 {
                return Err(Error::InvalidGeometry("mode index must be ≥ 1".into()));
            }
            radius.cos[k - 1] += a;
            radius.sin[k - 1] += b;
        }
        StarShape2D::new(center, radius)
    }

    pub fn from_samples(center: Point2, samples: &[f64]) -> Result<Self> {
        if samples.len() < 3 {
            return Err(Error::InvalidGeometry("need at least 3 radius samples".into()));
        }
        if samples.iter().any(|&r| !(r > 0.0)) {
            return Err(Error::InvalidGeometry("radius samples must be positive".into()));
        }
        StarShape2D::new(center, FourierRadius::interpolate(samples))
    }

    pub fn center(&self) -> Point2 {
        self.center
    }

    pub fn radius(&self) -> &FourierRadius {
        &self.radius
    }

    pub fn radius_at(&self, theta: f64) -> f64 {
        self.radius.value(theta)
    }

    pub fn point(&self, theta: f64) -> Point2 {
        let r = self.radius.value(theta);
        let (sn, cs) = theta.sin_cos();
        [self.center[0] + r * cs, self.center[1] + r * sn]
    }

    /// Radius samples at `θ_j = 2πj/M`.
    pub fn samples(&self, m: usize) -> Vec<f64> {
        (0..m).map(|j| self.radius.value(TAU * j as f64 / m as f64)).collect()
    }

    /// Round trip through `M` samples; drops modes the grid cannot carry.
    pub fn resample(&self, m: usize) -> Result<Self> {
        StarShape2D::from_samples(self.center, &self.samples(m))
    }

    pub fn area(&self) -> f64 {
        self.radius.area()
    }

    /// Largest distance between `m` boundary samples.
    pub fn diameter(&self, m: usize) -> f64 {
        let pts: Vec<Point2> = (0..m).map(|j| self.point(TAU * j as f64 / m as f64)).collect();
        let rows = par::map_range(m, |i| {
            let p = pts[i];
            pts[i + 1..].iter().map(|q| (p[0] - q[0]).hypot(p[1] - q[1])).fold(0.0, f64::max)
        });
        rows.into_iter().fold(0.0, f64::max)
    }

    /// Dilation about the origin.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidGeometry(format!("scale factor {lambda} must be positive")));
        }
        Ok(StarShape2D {
            center: [lambda * self.center[0], lambda * self.center[1]],
            radius: self.radius.scaled(lambda),
        })
    }

    /// Dilation about the center of the parameterization.
    pub fn scaled_about_center(&self, lambda: f64) -> Result<Self> {
        let mut out = self.scaled(lambda)?;
        out.center = self.center;
        Ok(out)
    }

    pub fn translated(&self, shift: Point2) -> Self {
        StarShape2D { center: [self.center[0] + shift[0], self.center[1] + shift[1]], radius: self.radius.clone() }
    }

    pub fn with_radius(&self, radius: FourierRadius) -> Result<Self> {
        StarShape2D::new(self.center, radius)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nonpositive_radius() {
        assert!(StarShape2D::from_modes([0.0, 0.0], 1.0, &[(3, 2.0, 0.0)]).is_err());
        assert!(StarShape2D::disk([0.0, 0.0], 0.0).is_err());
    }

    #[test]
    fn samples_and_coefficients_agree() {
        let s = StarShape2D::from_modes([0.0, 0.0], 1.0, &[(2, 0.1, -0.03), (5, 0.02, 0.01)]).unwrap();
        for m in [16, 17, 64] {
            let samples = s.samples(m);
            let back = StarShape2D::from_samples([0.0, 0.0], &samples).unwrap();
            for j in 0..m {
                let th = TAU * j as f64 / m as f64;
                assert!((back.radius_at(th) - samples[j]).abs() < 1e-13);
            }
            assert!((back.area() - s.area()).abs() < 1e-13);
        }
        // even M: the Nyquist mode is carried with half weight
        let samples: Vec<f64> = (0..8).map(|j| if j % 2 == 0 { 1.2 } else { 0.8 }).collect();
        let s = StarShape2D::from_samples([0.0, 0.0], &samples).unwrap();
        for (j, r) in samples.iter().enumerate() {
            assert!((s.radius_at(TAU * j as f64 / 8.0) - r).abs() < 1e-14);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let r = FourierRadius { r0: 1.0, cos: vec![0.0, 0.1, 0.0], sin: vec![0.05, 0.0, -0.02] };
        let h = 1e-5;
        for th in [0.0, 0.7, 2.9, 5.5] {
            let (_, d1, d2) = r.derivatives(th);
            let fd1 = (r.value(th + h) - r.value(th - h)) / (2.0 * h);
            let fd2 = (r.value(th + h) - 2.0 * r.value(th) + r.value(th - h)) / (h * h);
            assert!((d1 - fd1).abs() < 1e-8);
            assert!((d2 - fd2).abs() < 1e-4);
        }
    }
}
