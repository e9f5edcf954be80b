use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{IntervalSet, StarShape2D};
use crate::{Error, Result};

/// Euclidean ball in ℝⁿ; `n` is the length of `center`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BallRaw", into = "BallRaw")]
pub struct Ball {
    center: Vec<f64>,
    radius: f64,
}

#[derive(Serialize, Deserialize)]
struct BallRaw {
    center: Vec<f64>,
    radius: f64,
}

impl TryFrom<BallRaw> for Ball {
    type Error = Error;

    fn try_from(raw: BallRaw) -> Result<Self> {
        Ball::new(raw.center, raw.radius)
    }
}

impl From<Ball> for BallRaw {
    fn from(b: Ball) -> Self {
        BallRaw { center: b.center, radius: b.radius }
    }
}

/// Volume of the unit ball in ℝⁿ.
pub fn unit_ball_volume(n: usize) -> f64 {
    let nf = n as f64;
    PI.powf(0.5 * nf) / libm::tgamma(0.5 * nf + 1.0)
}

impl Ball {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.is_empty() {
            return Err(Error::InvalidGeometry("ball center must have dimension ≥ 1".into()));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidGeometry(format!("ball radius must be positive, got {radius}")));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidGeometry("non-finite ball center".into()));
        }
        Ok(Ball { center, radius })
    }

    /// Ball of volume `volume` centred at the origin of ℝⁿ.
    pub fn with_volume(n: usize, volume: f64) -> Result<Self> {
        let r = (volume / unit_ball_volume(n)).powf(1.0 / n as f64);
        Ball::new(vec![0.0; n], r)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn volume(&self) -> f64 {
        unit_ball_volume(self.dim()) * self.radius.powi(self.dim() as i32)
    }

    /// `V_B(center) = ∫_B |y − c|^(−α) dy = n ω_n r^(n−α) / (n−α)`.
    pub fn potential_at_center(&self, alpha: f64) -> Result<f64> {
        let n = self.dim() as f64;
        if !(alpha > 0.0 && alpha < n) {
            return Err(Error::InvalidParams { key: "alpha", msg: format!("alpha ∈ (0,{n}) required, got {alpha}") });
        }
        Ok(n * unit_ball_volume(self.dim()) * self.radius.powf(n - alpha) / (n - alpha))
    }

    pub fn to_interval(&self) -> Result<IntervalSet> {
        if self.dim() != 1 {
            return Err(Error::Unsupported(format!("{}-ball as an interval", self.dim())));
        }
        IntervalSet::new(vec![(self.center[0] - self.radius, self.center[0] + self.radius)])
    }

    pub fn to_disk(&self) -> Result<StarShape2D> {
        if self.dim() != 2 {
            return Err(Error::Unsupported(format!("{}-ball as a disk", self.dim())));
        }
        StarShape2D::disk([self.center[0], self.center[1]], self.radius)
    }

    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidGeometry(format!("scale factor {lambda} must be positive")));
        }
        Ball::new(self.center.iter().map(|c| lambda * c).collect(), lambda * self.radius)
    }

    pub fn translated(&self, shift: &[f64]) -> Self {
        Ball { center: self.center.iter().zip(shift).map(|(c, d)| c + d).collect(), radius: self.radius }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn volumes_in_low_dimensions() {
        assert!((unit_ball_volume(1) - 2.0).abs() < 1e-14);
        assert!((unit_ball_volume(2) - PI).abs() < 1e-14);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
    }

    #[test]
    fn center_potential_closed_form() {
        // n = 1: ∫_{-r}^{r} |y|^{-α} = 2 r^{1-α}/(1-α)
        let b = Ball::new(vec![0.0], 0.5).unwrap();
        let alpha: f64 = 0.3;
        let expected = 2.0 * 0.5f64.powf(1.0 - alpha) / (1.0 - alpha);
        assert!((b.potential_at_center(alpha).unwrap() - expected).abs() < 1e-14);
        // n = 2: 2π r^{2-α}/(2-α)
        let b = Ball::new(vec![1.0, 1.0], 2.0).unwrap();
        let expected = 2.0 * PI * 2.0f64.powf(1.5) / 1.5;
        assert!((b.potential_at_center(0.5).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn with_volume_inverts_volume() {
        for n in 1..5 {
            let b = Ball::with_volume(n, 1.7).unwrap();
            assert!((b.volume() - 1.7).abs() < 1e-13);
        }
    }
}
