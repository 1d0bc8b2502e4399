//! Exact probabilities of finding a fixed pattern in uniformly random words
//! over `{0, .., L-1}`, and machinery to compare them across patterns.
//!
//! The probability `P_k` that a pattern occurs in a random word of length `k`
//! depends only on the pattern's bifix indicator. It can be computed by
//! recursions on the indicator ([`recursions`]) or as a hitting probability of
//! a small absorbing chain ([`markov`]). Both are checked against
//! brute-force oracles ([`oracle`]).
//!
//! Table code is generic over [`ProbScalar`]; the aliases below fix the
//! common choices.

pub mod markov;
pub mod numerics;
pub mod oracle;
pub mod patterns;
pub mod recursions;

pub use numerics::{Alphabet, ExactProb, NumericsError, ProbScalar};
pub use patterns::{BifixIndicator, Comparison, EnumBudget, PatternError, SWord, Word};
pub use recursions::{Method, ProbTable};

pub use num_rational::BigRational;

/// Tables in exact power-of-`L` arithmetic.
pub type ExactTable = recursions::ProbTable<ExactProb>;
/// Tables in general big-rational arithmetic.
pub type RationalTable = recursions::ProbTable<BigRational>;
/// Double-precision approximations.
pub type FloatTable = recursions::ProbTable<f64>;
pub type ExactReachTable = markov::ReachTable<ExactProb>;
pub type FloatReachTable = markov::ReachTable<f64>;
