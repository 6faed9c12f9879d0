//! Output purity `‖Φ‖_{q→p}` of completely positive maps, lower bounds on
//! potential output purity, and numerical checks of the bounds and equalities
//! that govern them.
//!
//! Layers, bottom to top:
//!
//! - [`matlin`]: dense complex matrices, Schatten norms and anti-norms, Hermitian
//!   spectral calculus, Kronecker/block structure.
//! - [`channels`]: completely positive maps stored by their Choi matrix, with
//!   Kraus forms, adjoints, tensor products and the named families.
//! - [`purity`]: multi-strategy optimization of `‖Φ‖_{q→p}` and of the
//!   potential purity ratio.
//! - [`verify`]: structured bound/equality checks returning [`verify::BoundReport`]s.
//! - [`semigroup`]: depolarizing-semigroup log-Sobolev constants.
//! - [`cli`]: the `puritylab` command line front end.

pub mod channels;
pub mod cli;
pub mod error;
pub mod matlin;
pub mod purity;
pub mod rng;
pub mod semigroup;
pub mod verify;

pub use channels::{CPMap, ChannelSpec};
pub use error::{Error, Result};
pub use matlin::{ComplexMatrix, HermitianMatrix, NormParams, C64};
pub use purity::{PotentialEstimate, PurityConfig, PurityEstimate};
pub use verify::{BoundReport, ClaimId, Verdict};
