//! Sum-of-squares feasibility with exact Newton-polytope reduction and
//! support splitting ahead of a semidefinite solve.

pub mod bench;
pub mod geometry;
pub mod parse;
pub mod poly;
pub mod reduce;
pub mod sdp;
pub mod split;

pub use parse::{parse_polynomial, parse_with_names, ParseError};
pub use poly::{Exponent, HalfSupport, Polynomial, RealPolynomial, SupportSet};
pub use reduce::{algexa, algpca, Basis, RefutationReason, RefutationReport};
pub use split::{decompose, DecomposeOptions, Decomposition, SplitNode};
