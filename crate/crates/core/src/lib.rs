//! Numerical tests for bipartite qudit universal entanglers.
//!
//! A gate on `C^m ⊗ C^n` is a universal entangler when it maps every product
//! state to an entangled state. This crate provides the pieces needed to probe
//! that property numerically: gate constructors, Schmidt/von Neumann
//! entanglement, minor-based separability residuals, a column prefilter, and a
//! seeded Differential Evolution search for counterexamples.

pub mod cli;
pub mod error;
pub mod gates;
pub mod linalg;
pub mod report;
pub mod sampling;
pub mod search;
pub mod separability;
pub mod states;

pub use error::{Error, Result};
pub use gates::UnitaryGate;
pub use linalg::ComplexMatrix;
pub use states::{BipartiteShape, ProductState, PureState};
