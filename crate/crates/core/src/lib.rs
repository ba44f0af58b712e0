//! Circle-method toolkit for counting weighted prime-power solutions of a
//! polynomial equation `b(x) = 0` and comparing the count with the predicted
//! main term `singular series x singular integral x N^{n-d}`.
//!
//! Modules, roughly bottom-up:
//!
//! - [`polycore`]: exact sparse polynomials, evaluators, substitution and
//!   the multilinear difference operator.
//! - [`hinvariant`]: decompositions witnessing the h-invariant and the exact
//!   value for quadratic forms.
//! - [`localdensity`]: complete exponential sums `B(q)`, solution counts
//!   modulo prime powers and the local factors `mu(p)`.
//! - [`archimedean`]: the oscillatory integral `I(eta)` and the singular
//!   integral `mu(infinity)`.
//! - [`weylarcs`]: arc dissection, rational approximation of frequencies and
//!   degeneracy counts from the difference operator.
//! - [`counting`]: von Mangoldt weights, the weighted count `M_b(N)` and the
//!   assembled prediction.

pub mod archimedean;
pub mod counting;
pub mod arith;
pub mod error;
pub mod hinvariant;
pub mod localdensity;
pub mod polycore;
pub mod weylarcs;

pub use error::{Error, Result};
pub use polycore::{IntPolynomial, Monomial, Polynomial, RatPolynomial};
