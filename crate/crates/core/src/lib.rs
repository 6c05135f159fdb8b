//! Action representations of groups acting on countable metric spaces, and
//! numerical machinery for the operator-norm estimates used in proofs of
//! C*-simplicity: conjugation averaging, ping-pong style disjointness, and the
//! canonical trace.
//!
//! The crate is organised bottom-up:
//!
//! - [`groups`]: free products of cyclic groups in reduced normal form.
//! - [`spaces`]: Cayley graphs carrying the left-multiplication action.
//! - [`operators`]: finitely supported vectors in `ℓ²(X)`, elements of the
//!   group algebra, and certified lower bounds on operator norms.
//! - [`dynamics`]: the averaging, trace, disjointness and growth checks.

pub mod dynamics;
pub mod error;
pub mod groups;
pub mod operators;
pub mod spaces;
pub mod verdict;

pub use error::{Error, Result};
pub use groups::{GroupElement, Order, Presentation, Syllable};
pub use operators::{FormalOperator, NormBudget, NormEstimate, StateVector};
pub use spaces::{ActionSpace, CayleySpace};
pub use verdict::Verdict;
