//! Metric Ehrenfeucht–Fraïssé games over finite-dimensional tracial *-algebras.
//!
//! The crate is organised bottom-up:
//!
//! * [`algebra`]: direct sums of matrix blocks with a normalized trace, the
//!   2-norm geometry, unitaries, polar decomposition and the two-unitary
//!   decomposition of contractions.
//! * [`banach`]: Banach-pair geometry over an algebra. Gauge norms,
//!   orthonormal subspaces, linear maps between them, ε-almost isometry checks
//!   and ε-nets of unit-ball slices.
//! * [`formula`]: the continuous-logic AST, its parser/printer and the
//!   `op`, unitary and quantifier-stripping transforms.
//! * [`eval`]: exact evaluation of quantifier-free formulas and heuristic
//!   minimax evaluation of sentences.
//! * [`games`]: engines, strategies and referees for the four games.
//! * [`verify`]: named, seeded property checks with pass/fail reports.

pub mod algebra;
pub mod banach;
pub mod error;
pub mod eval;
pub mod formula;
pub mod games;
pub mod rng;
pub mod verify;

pub use algebra::{AlgebraElement, TracialAlgebra, UnitaryCertificate, C64};
pub use error::{Error, Result};
