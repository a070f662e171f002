//! Embeddings of arbitrary mixed-state circuits into degradable and
//! antidegradable channels, with a certified diamond-norm solver and
//! semidefinite degradability tests to check them numerically.

// Negated float comparisons are deliberate: NaN must fail every check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod circuit;
pub mod degradability;
pub mod dnorm;
pub mod embed;
pub mod error;
pub mod io;
pub mod linalg;
pub mod random;
pub mod sdp;

pub use channel::{ChannelPair, ChoiMatrix};
pub use circuit::{Circuit, Gate, GateKind, StinespringRep, Wire};
pub use degradability::FeasibilityReport;
pub use dnorm::{Decision, DiamondNormResult, RepetitionBounds, TheoremParameters};
pub use embed::{EmbeddingResult, Flavor, VerificationReport};
pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, Limits};
