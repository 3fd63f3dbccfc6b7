//! Numerical transference between spherical multipliers on compact symmetric
//! spaces `U/K` and Ad(K)-invariant Fourier multipliers on the flat space `p*`.
//!
//! The crate realizes both directions of a deLeeuw-type transference on
//! concrete models (spheres `S^d`, the group case `SU(2)`, and products of
//! these), together with the special functions, quadrature, and convergence
//! diagnostics needed to check the limits numerically.
//!
//! Module map:
//! * [`model`]: restricted root data, Weyl dimensions, polar density.
//! * [`special`]: Gegenbauer and Bessel functions, Gauss-Legendre rules.
//! * [`spherical`]: spherical functions and the generalized Bessel kernel.
//! * [`contraction`]: lattice floor, Jacobian of the exponential chart.
//! * [`fourier`]: radial Fourier transform and inversion on `p*`.
//! * [`transfer`]: forward and backward transference constructions.
//! * [`norms`]: multiplier norm diagnostics.
//! * [`cli`]: experiment driver behind the `transfer-cli` binary.

pub mod cli;
pub mod contraction;
pub mod error;
pub mod fourier;
pub mod model;
pub mod norms;
pub mod report;
pub mod special;
pub mod spherical;
pub mod transfer;

pub use error::{Error, Result};
pub use model::{CartanPoint, FlatPoint, SymmetricSpaceModel, WeightPoint};
