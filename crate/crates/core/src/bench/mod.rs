//! Benchmark generators, the end-to-end check and the pruning experiment.

pub mod gen;
pub mod pruning;
pub mod report;

pub use gen::{gen_bm, gen_named, gen_rn, gen_sqr, Family, GenError, GenSpec, SplitMix64};
pub use pruning::{compare_pruning, compare_pruning_with, PruningRow};
pub use report::{run_check, RunOptions, RunReport, SplitShape, Verdict};
