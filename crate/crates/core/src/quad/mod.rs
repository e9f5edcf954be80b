//! Singular-integral engine.
//!
//! * [`primitives`]: closed-form antiderivatives of power-law kernels on
//!   the line and the principal value at an endpoint of an interval union.
//! * [`singular`]: Riemann zeta and the zeta-corrected punctured
//!   trapezoidal rule used for planar boundary integrals.
//! * [`oracle`]: deterministic adaptive Gauss–Kronrod quadrature, used only
//!   to validate the closed forms and the corrected rules.
//! * [`line_oracle`]: fractional curvature and Riesz potential of a planar
//!   star shape computed from the area integrals ray by ray.

pub mod gauss;
pub mod line_oracle;
pub mod oracle;
pub mod primitives;
pub mod singular;

use serde::{Deserialize, Serialize};

pub use oracle::{brute_oracle, Integrand, OracleReport, Region};
pub use primitives::{kernel_primitive, power_integral, pv_pair_integral};

use crate::{Error, Result};

/// Stopping rule for adaptive quadrature.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadTolerance {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadTolerance {
    fn default() -> Self {
        QuadTolerance { rel_tol: 1e-10, abs_tol: 1e-12, max_subdivisions: 4000 }
    }
}

impl QuadTolerance {
    pub fn new(rel_tol: f64, abs_tol: f64, max_subdivisions: usize) -> Result<Self> {
        let t = QuadTolerance { rel_tol, abs_tol, max_subdivisions };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidParams { key: "rel_tol", msg: "must be positive".into() });
        }
        if !(self.abs_tol > 0.0) {
            return Err(Error::InvalidParams { key: "abs_tol", msg: "must be positive".into() });
        }
        if self.max_subdivisions == 0 {
            return Err(Error::InvalidParams { key: "max_subdivisions", msg: "must be at least 1".into() });
        }
        Ok(())
    }

    pub(crate) fn target(&self, estimate: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * estimate.abs())
    }
}

/// Principal-value request: integrate symmetrically around
/// `singular_point`, pairing `y ↔ 2x − y` inside `pairing_radius`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PVSpec {
    pub singular_point: f64,
    pub pairing_radius: f64,
    pub cancellation: bool,
}

impl PVSpec {
    pub fn new(singular_point: f64, pairing_radius: f64) -> Result<Self> {
        if !(pairing_radius > 0.0 && pairing_radius.is_finite()) {
            return Err(Error::InvalidParams {
                key: "pairing_radius",
                msg: format!("must be positive, got {pairing_radius}"),
            });
        }
        Ok(PVSpec { singular_point, pairing_radius, cancellation: true })
    }
}
