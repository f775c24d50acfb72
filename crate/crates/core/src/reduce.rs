//! Candidate basis construction and shrinking, plus the exact pre-SDP
//! refutation checks.
//!
//! Every step preserves the support relation: if `p` is a sum of squares, the
//! squares can be chosen with supports inside the basis.

use std::collections::HashSet;

use num_traits::Signed;
use thiserror::Error;

use crate::geometry::{
    extreme_points, initial_candidates, pca_directions, prune_halfspace, CandidateSet, Direction, GeometryError,
    PRUNE_EPS,
};
use crate::poly::{Exponent, HalfSupport, Polynomial, SupportSet};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReduceError {
    #[error("the zero polynomial has no basis to reduce")]
    ZeroPolynomial,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// One entry of a basis' pruning log.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct PruneStep {
    pub step: String,
    pub removed: usize,
}

/// Candidate basis `G` for the squared polynomials.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    pub monomials: CandidateSet,
    pub provenance: Vec<PruneStep>,
}

impl Basis {
    pub fn from_set(monomials: CandidateSet) -> Self {
        Basis {
            monomials,
            provenance: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn nvars(&self) -> usize {
        self.monomials.nvars()
    }

    pub fn to_vec(&self) -> Vec<Exponent> {
        self.monomials.to_vec()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckVerdict {
    Refuted,
    Passed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RefutationReason {
    MissingSumExponent,
    NegativeDiagonal,
    VertexFace,
    None,
}

/// Outcome of an exact necessary-condition check.
///
/// `witness` is the offending exponent as the check sees it (a basis element for
/// the diagonal check); `support_point` is the exponent of `p` it concerns.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RefutationReport {
    pub verdict: CheckVerdict,
    pub reason: RefutationReason,
    pub witness: Option<Exponent>,
    pub support_point: Option<Exponent>,
}

impl RefutationReport {
    pub fn passed() -> Self {
        RefutationReport {
            verdict: CheckVerdict::Passed,
            reason: RefutationReason::None,
            witness: None,
            support_point: None,
        }
    }

    pub fn refuted(reason: RefutationReason, witness: Exponent, support_point: Exponent) -> Self {
        debug_assert!(reason != RefutationReason::None);
        RefutationReport {
            verdict: CheckVerdict::Refuted,
            reason,
            witness: Some(witness),
            support_point: Some(support_point),
        }
    }

    pub fn is_refuted(&self) -> bool {
        self.verdict == CheckVerdict::Refuted
    }
}

/// PCA eigenvectors of the half support, then coordinate axes, then the
/// all-ones degree direction. Each is meant to be applied two-sided.
pub fn direction_schedule(h: &HalfSupport) -> Vec<Direction> {
    let n = h.nvars();
    let mut dirs = match pca_directions(h) {
        Ok(model) => model.directions(),
        Err(_) => Vec::new(),
    };
    dirs.extend((0..n).map(|k| Direction::coordinate(n, k)));
    dirs.push(Direction::degree(n));
    dirs
}

/// Initial basis from the candidate box pruned along `dirs`.
pub fn algpca_with_directions(p: &Polynomial, dirs: &[Direction]) -> Result<Basis, ReduceError> {
    if p.is_zero() {
        return Err(ReduceError::ZeroPolynomial);
    }
    let h = HalfSupport::of(p);
    if h.is_empty() {
        return Ok(Basis::from_set(SupportSet::new(p.nvars())));
    }
    let mut g = initial_candidates(&h)?;
    let mut provenance = vec![PruneStep {
        step: "box".into(),
        removed: 0,
    }];
    for d in dirs {
        let before = g.len();
        g = prune_halfspace(&g, d, &h, PRUNE_EPS);
        provenance.push(PruneStep {
            step: format!("{:?}", d.source()).to_lowercase(),
            removed: before - g.len(),
        });
    }
    Ok(Basis {
        monomials: g,
        provenance,
    })
}

pub fn algpca(p: &Polynomial) -> Result<Basis, ReduceError> {
    let h = HalfSupport::of(p);
    algpca_with_directions(p, &direction_schedule(&h))
}

pub fn algexa(p: &Polynomial) -> Result<Basis, ReduceError> {
    let mut basis = algpca(p)?;
    let removed = map_deletion(&mut basis.monomials, &p.even_support());
    basis.provenance.push(PruneStep {
        step: "map_deletion".into(),
        removed,
    });
    Ok(basis)
}

/// Every monomial in `nvars` variables of total degree at most `half_degree`.
pub fn dense_basis(nvars: usize, half_degree: u32) -> Basis {
    fn fill(left: u32, cur: &mut Vec<u32>, nvars: usize, out: &mut CandidateSet) {
        if cur.len() == nvars {
            out.insert(Exponent::new(cur.clone()));
            return;
        }
        for v in 0..=left {
            cur.push(v);
            fill(left - v, cur, nvars, out);
            cur.pop();
        }
    }
    let mut out = CandidateSet::new(nvars);
    fill(half_degree, &mut Vec::with_capacity(nvars), nvars, &mut out);
    Basis::from_set(out)
}

/// True when some `b ≠ a` in `g` pairs with another element of `g` to sum to `2a`.
fn has_partner(g: &HashSet<Exponent>, ordered: &[Exponent], a: &Exponent) -> bool {
    let n = a.nvars();
    let twice = a.double();
    // Interior points almost always have a short symmetric neighbour pair.
    let mut probe = a.coords().to_vec();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            if probe[j] == 0 {
                continue;
            }
            probe[i] += 1;
            probe[j] -= 1;
            let up = Exponent::new(probe.clone());
            probe[i] -= 1;
            probe[j] += 1;
            if g.contains(&up) {
                if let Some(down) = twice.checked_sub(&up) {
                    if g.contains(&down) {
                        return true;
                    }
                }
            }
        }
        if probe[i] > 0 {
            let mut up = probe.clone();
            up[i] += 1;
            let mut down = probe.clone();
            down[i] -= 1;
            if g.contains(&Exponent::new(up)) && g.contains(&Exponent::new(down)) {
                return true;
            }
        }
    }
    ordered
        .iter()
        .filter(|b| *b != a && g.contains(*b))
        .any(|b| twice.checked_sub(b).is_some_and(|r| g.contains(&r)))
}

/// Repeatedly deletes every `a` with `2a ∉ Λ_E` whose doubled exponent has no
/// decomposition other than `a + a`. Returns the number of deleted points.
pub fn map_deletion(g: &mut CandidateSet, even_support: &SupportSet) -> usize {
    let ordered: Vec<Exponent> = g.to_vec();
    let mut live: HashSet<Exponent> = ordered.iter().cloned().collect();
    let mut removed = 0;
    loop {
        let mut changed = false;
        for a in &ordered {
            if !live.contains(a) || even_support.contains(&a.double()) {
                continue;
            }
            if !has_partner(&live, &ordered, a) {
                live.remove(a);
                removed += 1;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    g.retain(|a| live.contains(a));
    removed
}

fn in_sumset(g: &HashSet<Exponent>, ordered: &[Exponent], a: &Exponent) -> bool {
    ordered.iter().any(|b| a.checked_sub(b).is_some_and(|r| g.contains(&r)))
}

/// Every support point of an SOS polynomial must lie in `G + G`.
pub fn necessary_sum_check(p: &Polynomial, g: &Basis) -> RefutationReport {
    let ordered = g.to_vec();
    let set: HashSet<Exponent> = ordered.iter().cloned().collect();
    for (a, _) in p.terms() {
        if !in_sumset(&set, &ordered, a) {
            return RefutationReport::refuted(RefutationReason::MissingSumExponent, a.clone(), a.clone());
        }
    }
    RefutationReport::passed()
}

/// A basis element whose doubled exponent decomposes only as `a + a` pins a
/// Gram diagonal entry to the coefficient of `x^{2a}`; a negative value refutes.
pub fn diagonal_check(p: &Polynomial, g: &Basis) -> RefutationReport {
    let ordered = g.to_vec();
    let set: HashSet<Exponent> = ordered.iter().cloned().collect();
    for a in &ordered {
        let twice = a.double();
        let Some(c) = p.coeff(&twice) else { continue };
        if c.is_negative() && !has_partner(&set, &ordered, a) {
            return RefutationReport::refuted(RefutationReason::NegativeDiagonal, a.clone(), twice);
        }
    }
    RefutationReport::passed()
}

/// Each detected vertex `a` of the Newton polytope is a face whose projection
/// `c_a x^a` must itself be a square: `a` even and `c_a > 0`.
pub fn vertex_face_check(p: &Polynomial) -> RefutationReport {
    if p.is_zero() {
        return RefutationReport::passed();
    }
    let dirs: Vec<Direction> = direction_schedule(&HalfSupport::of(p))
        .into_iter()
        .flat_map(|d| {
            let neg = d.negated();
            [d, neg]
        })
        .collect();
    for a in extreme_points(&p.support(), &dirs) {
        let c = p.coeff(&a).expect("vertex is a support point");
        if !a.is_even() || c.is_negative() {
            return RefutationReport::refuted(RefutationReason::VertexFace, a.clone(), a);
        }
    }
    RefutationReport::passed()
}
