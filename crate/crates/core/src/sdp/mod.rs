//! Gram-matrix feasibility: building the linear system, SDPA interchange,
//! solving, and turning a solution into explicit squares.

pub mod certificate;
pub mod gram;
pub mod sdpa;
pub mod solver;

pub use certificate::{extract_certificate, verify_certificate, Certificate, CertificateError, Verification};
pub use gram::{build_gram_system, GramConstraint, GramError, GramProblem};
pub use sdpa::{
    emit_sdpa, parse_sdpa, parse_solution, write_sdpa, OutputConvention, SdpaEntry, SdpaError, SdpaProblem,
};
pub use solver::{solve_feasibility, SolveError, SolveOptions, SolveOutcome, SolveStatus, SolverMode};
