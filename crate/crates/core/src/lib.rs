//! Hierarchical solutions of the backward Kolmogorov equation for the
//! neutral multi-allele Wright-Fisher diffusion on the stratified simplex.
//!
//! The crate is organised bottom-up:
//!
//! * [`simplex`]: faces, points, charts and collapse projections;
//! * [`polyalg`]: exact polynomial and rational-function algebra;
//! * [`operators`]: the backward and forward operators;
//! * [`spectral`]: proper eigenbases and single-face solutions;
//! * [`extension`]: extensions of solutions from faces to larger faces;
//! * [`hierarchy`]: the layer-by-layer global solution and stationary theory;
//! * [`oracle`]: Monte Carlo and finite-difference cross-checks.

pub mod error;
pub mod extension;
pub mod hierarchy;
pub mod io;
pub mod operators;
pub mod oracle;
pub mod polyalg;
pub mod simplex;
pub mod spectral;

pub use error::{Error, Result};
pub use extension::{ExtensionStep, Mode, Piece, PiecewiseSolution};
pub use hierarchy::{GlobalSolution, StratifiedFinalCondition, Unspecified};
pub use oracle::{MCConfig, MCEstimate};
pub use polyalg::{Coeff, FaceFunction, MultiPoly, RationalFn};
pub use simplex::{Chart, Face, PathSpec, SimplexPoint};
pub use spectral::{EigenPair, ProperSolution};
