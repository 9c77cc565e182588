//! Numerical laboratory for the principal-value oscillatory integral
//!
//! ```text
//! m(λ) = p.v. ∫_{-R}^{R} e^{iλψ(t)} dt/t
//! ```
//!
//! across regularity classes of the phase `ψ`: finite type, dyadic plateaus,
//! Gevrey and refined Gevrey flat phases, and Denjoy–Carleman classes beyond
//! Gevrey.
//!
//! Modules:
//! - [`phases`]: the phase catalog and substitution weights;
//! - [`quadrature`]: the two evaluators of `m(λ)` and shell diagnostics;
//! - [`plateau`]: exact odd-product ladders;
//! - [`carleman`]: weight sequences, tails and Legendre transforms;
//! - [`flatness`]: Bang and Taylor–Legendre flat-point bounds;
//! - [`derivlab`]: high-order derivatives and class membership;
//! - [`envelopes`]: iterated logarithms, growth envelopes and fits.

pub mod carleman;
pub mod derivlab;
pub mod envelopes;
pub mod error;
pub mod flatness;
pub mod magnitude;
pub mod phases;
pub mod plateau;
pub mod quadrature;
mod serde_big;
pub mod special;

pub use carleman::{CarlemanFamily, FamilySpec, Legendre, Quasianalytic, Tail, TailIndex};
pub use envelopes::{Envelope, Frequency, GrowthSeries, GrowthVerdict};
pub use error::{Error, Result};
pub use magnitude::Magnitude;
pub use num_bigint::BigUint;
pub use num_complex::Complex64;
pub use phases::{BumpSpec, Phase, PhaseSpec, SubstitutionWeight, WeightKind};
pub use plateau::OddProductLadder;
pub use quadrature::{QuadratureConfig, QuadratureReport, Strategy};
