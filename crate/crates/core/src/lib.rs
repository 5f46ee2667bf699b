//! Engel continued fractions (ECF): digit expansion, cylinder geometry,
//! exact and enclosed digit distributions, deviation rate functions and
//! Monte Carlo checks of the digit limit theorems.
//!
//! Every `x ∈ (0, 1]` has an expansion
//! `x = 1/(b₁ + b₁/(b₂ + b₂/(b₃ + …)))` with non-decreasing digits `bₙ`,
//! produced by iterating `T(x) = (1/⌊1/x⌋)(1/x − ⌊1/x⌋)`.

pub mod acceptance;
pub mod combinatorics;
pub mod deviations;
pub mod error;
pub mod expansion;
pub mod measure;
pub mod montecarlo;
pub mod numerics;

pub use error::{Error, Result};
