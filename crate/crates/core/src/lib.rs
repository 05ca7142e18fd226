//! Minimal shadows of randomly rotated cubes on complex lines.
//!
//! For `O ∈ O(2n)` and the cube `Q = [-1, 1]^{2n}`, this crate computes the
//! shadow of `OQ` on complex lines `span{e, Je}` exactly, searches for the
//! line of smallest shadow area or diameter, certifies diameter lower bounds
//! with ε-nets of `S^{2n-1} ∩ λ√n B₁^{2n}`, and checks the concentration
//! statements behind the `√n` scaling of the minimal shadow.

pub mod concentration;
pub mod error;
pub mod line_search;
pub mod linalg;
pub mod nets;
pub mod optimize;
pub mod stats;
pub mod zonogon;

pub use error::{Error, Result};
pub use line_search::{MinimizationResult, Objective};
pub use linalg::{ComplexStructure, Matrix, RngSeed, RotationMatrix};
pub use optimize::OptimizerConfig;
pub use zonogon::{ComplexLine, Zonogon};
