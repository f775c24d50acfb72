use std::collections::HashMap;

use nalgebra::DMatrix;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::geometry::minkowski_sum;
use crate::poly::{rational_to_f64, Exponent, Polynomial};
use crate::reduce::Basis;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GramError {
    #[error("support exponent {0} is not a sum of two basis elements")]
    OutsideSumSet(Exponent),
}

/// One linear equation on the Gram matrix: the entries whose basis pair sums
/// to `target` must add up to `coefficient`, off-diagonal entries counted twice.
#[derive(Debug, Clone, PartialEq)]
pub struct GramConstraint {
    pub target: Exponent,
    pub coefficient: BigRational,
    pub entries: Vec<(usize, usize)>,
}

impl GramConstraint {
    /// `<A_k, M>` for the symmetric constraint matrix `A_k`.
    pub fn apply(&self, m: &DMatrix<f64>) -> f64 {
        self.entries
            .iter()
            .map(|&(i, j)| if i == j { m[(i, i)] } else { 2.0 * m[(i, j)] })
            .sum()
    }

    /// Squared Frobenius norm of `A_k`.
    pub fn norm_sq(&self) -> f64 {
        self.entries.iter().map(|&(i, j)| if i == j { 1.0 } else { 2.0 }).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GramProblem {
    pub basis: Vec<Exponent>,
    pub constraints: Vec<GramConstraint>,
}

impl GramProblem {
    pub fn size(&self) -> usize {
        self.basis.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn rhs(&self) -> Vec<f64> {
        self.constraints
            .iter()
            .map(|c| rational_to_f64(&c.coefficient))
            .collect()
    }

    /// A constraint that fixes a single diagonal entry to a negative value.
    pub fn pinned_negative(&self) -> Option<&GramConstraint> {
        self.constraints
            .iter()
            .find(|c| matches!(c.entries.as_slice(), [(i, j)] if i == j) && c.coefficient.is_negative())
    }

    /// Largest absolute constraint violation of `m`.
    pub fn residual(&self, m: &DMatrix<f64>) -> f64 {
        self.constraints
            .iter()
            .map(|c| (c.apply(m) - rational_to_f64(&c.coefficient)).abs())
            .fold(0.0, f64::max)
    }

    /// `index[i][j]` is the constraint owning entry `(i, j)`.
    pub fn entry_index(&self) -> Vec<Vec<usize>> {
        let n = self.size();
        let mut index = vec![vec![usize::MAX; n]; n];
        for (k, c) in self.constraints.iter().enumerate() {
            for &(i, j) in &c.entries {
                index[i][j] = k;
                index[j][i] = k;
            }
        }
        index
    }
}

/// Linear system whose PSD solutions are exactly the Gram matrices of `p`
/// over `g`. Constraints are sorted by target, entries by `(i, j)`.
pub fn build_gram_system(p: &Polynomial, g: &Basis) -> Result<GramProblem, GramError> {
    let basis = g.to_vec();
    let sums = minkowski_sum(&g.monomials, &g.monomials);
    if let Some((a, _)) = p.terms().find(|(a, _)| !sums.contains(a)) {
        return Err(GramError::OutsideSumSet(a.clone()));
    }
    let mut pairs: HashMap<Exponent, Vec<(usize, usize)>> = HashMap::new();
    for i in 0..basis.len() {
        for j in i..basis.len() {
            pairs.entry(&basis[i] + &basis[j]).or_default().push((i, j));
        }
    }
    let constraints = sums
        .iter()
        .map(|s| GramConstraint {
            target: s.clone(),
            coefficient: p.coeff(s).cloned().unwrap_or_else(BigRational::zero),
            entries: pairs.remove(s).unwrap_or_default(),
        })
        .collect();
    Ok(GramProblem { basis, constraints })
}
