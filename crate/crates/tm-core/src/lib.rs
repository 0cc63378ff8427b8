//! Numerics for maximization problems with critical exponential growth.
//!
//! The crate is organized around five subsystems:
//!
//! * [`special`] — constants, special functions, adaptive quadrature,
//!   double-double arithmetic and series fitting,
//! * [`soliton`] — the explicit soliton basis, its closed-form integral
//!   tables and a quadrature cross-check harness,
//! * [`sobolev`] — the sharp exponential radial Sobolev function `mu(j)`
//!   built on the Bessel potential of `1 - Laplace`,
//! * [`variational`] — the concentrating half-energy maximization on the
//!   plane and the disk, with asymptotic coefficient extraction,
//! * [`threshold`] — nonlinearity expressions, energy functionals on
//!   radial profiles, and the existence/non-existence classifier.

// `!(x > 0.0)`-style guards are used deliberately throughout: unlike
// `x <= 0.0` they also reject NaN inputs
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod profile;
pub mod soliton;
pub mod special;
pub mod sobolev;
pub mod threshold;
pub mod variational;

pub use error::{CoreError, Result};
pub use profile::{Domain, RadialProfile};
pub use sobolev::MuPoint;
pub use soliton::SolitonFrame;
pub use special::ConstantTable;
pub use threshold::{Nonlinearity, Outcome, Verdict};
pub use variational::{Precision, ProfileSolution, SolverConfig};

use serde::{Deserialize, Serialize};

/// Which of the two critical problems is being solved: the whole-plane
/// inequality with `s^{-1} e^s` growth, or the unit-disk inequality with
/// `e^s` growth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    PlaneCritical,
    DiskCritical,
}

impl Geometry {
    pub fn is_plane(self) -> bool {
        matches!(self, Geometry::PlaneCritical)
    }
}

impl std::fmt::Display for Geometry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Geometry::PlaneCritical => write!(f, "plane"),
            Geometry::DiskCritical => write!(f, "disk"),
        }
    }
}
