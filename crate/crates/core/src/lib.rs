//! Nonlocal Ohta–Kawasaki energy toolkit.
//!
//! The energy of a set `E ⊂ ℝⁿ` is the fractional perimeter
//! `P_s(E) = ∬_{E×Eᶜ} |x−y|^{−n−s}` plus a Riesz self-interaction
//! `∬_{E×E} |x−y|^{−α}`. This crate evaluates both terms, their first
//! variations (fractional mean curvature `κ_E` and Riesz potential `V_E`),
//! a set of rigidity diagnostics for volume-constrained critical points,
//! and constructs critical points explicitly:
//!
//! * [`onedim`]: the two-segment critical set `(0,½) ∪ (d,d+½)` and the
//!   `ε`-sweep of its diameter;
//! * [`shapeopt2d`]: descent on star-shaped planar domains towards
//!   solutions of `κ_E + cεV_E = λ`.
//!
//! One-dimensional quantities are evaluated in closed form. Planar
//! quantities are reduced to boundary integrals and integrated with a
//! singularity-corrected periodic trapezoidal rule. Independent adaptive
//! quadrature oracles live in [`quad`].

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod diagnostics;
mod error;
pub mod functionals;
pub mod onedim;
pub mod par;
pub mod quad;
pub mod sets;
pub mod shapeopt2d;

pub use error::{Error, Result};
pub use sets::{Ball, IntervalSet, Params, SetGeometry, StarShape2D};
