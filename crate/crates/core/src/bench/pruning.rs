//! PCA direction schedule against the same number of random directions.

use rayon::prelude::*;

use crate::geometry::Direction;
use crate::poly::HalfSupport;
use crate::reduce::{algpca_with_directions, direction_schedule, ReduceError};

use super::gen::{random_directions, Family, GenError, GenSpec, SplitMix64};

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct PruningRow {
    pub group: String,
    pub trials: usize,
    pub mean_pca: f64,
    pub mean_random: f64,
    /// Mean over instances of `random / pca`.
    pub mean_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PruningError {
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Reduce(#[from] ReduceError),
}

/// Seed of the `trial`-th instance of a group.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    let mut rng = SplitMix64::new(seed ^ (trial as u64).wrapping_mul(0xa076_1d64_78bd_642f));
    rng.next_u64()
}

/// For every group and trial, the candidate-basis size after pruning with the
/// PCA schedule and with `alternative(h, seed)`; both start from the same box.
pub fn compare_pruning_with<F>(
    groups: &[Family],
    trials: usize,
    seed: u64,
    alternative: F,
) -> Result<Vec<PruningRow>, PruningError>
where
    F: Fn(&HalfSupport, usize, u64) -> Vec<Direction> + Sync,
{
    assert!(trials >= 1);
    groups
        .iter()
        .map(|family| {
            let sizes = (0..trials)
                .into_par_iter()
                .map(|i| {
                    let s = trial_seed(seed, i);
                    let p = GenSpec::new(family.clone(), s).generate()?;
                    let h = HalfSupport::of(&p);
                    let pca = direction_schedule(&h);
                    let other = alternative(&h, pca.len(), s);
                    let a = algpca_with_directions(&p, &pca)?.len();
                    let b = algpca_with_directions(&p, &other)?.len();
                    Ok((a, b))
                })
                .collect::<Result<Vec<_>, PruningError>>()?;
            let n = sizes.len() as f64;
            Ok(PruningRow {
                group: family.to_string(),
                trials,
                mean_pca: sizes.iter().map(|s| s.0 as f64).sum::<f64>() / n,
                mean_random: sizes.iter().map(|s| s.1 as f64).sum::<f64>() / n,
                mean_ratio: sizes.iter().map(|&(a, b)| b as f64 / (a as f64).max(1.0)).sum::<f64>() / n,
            })
        })
        .collect()
}

/// Random unit directions, as many as the PCA schedule uses.
pub fn compare_pruning(groups: &[Family], trials: usize, seed: u64) -> Result<Vec<PruningRow>, PruningError> {
    compare_pruning_with(groups, trials, seed, |h, count, s| {
        let mut rng = SplitMix64::new(s ^ 0x5eed_d1c7);
        random_directions(&mut rng, h.nvars(), count)
    })
}
