//! Split detection and the recursive decomposition driver.
//!
//! `V(p,G)` holds the basis points whose doubled exponent only decomposes as
//! `a + a`. The relation map attributes every exponent of `G + G` to the set
//! of those pinned points it ultimately depends on; a polynomial splits when
//! its support partitions along these classes.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use thiserror::Error;

use crate::poly::{Exponent, Polynomial, SupportSet};
use crate::reduce::{
    algexa, diagonal_check, necessary_sum_check, vertex_face_check, Basis, ReduceError, RefutationReport,
};

pub const MAX_DEPTH: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SplitError {
    #[error("split recursion exceeded depth {MAX_DEPTH}")]
    DepthExceeded,
    #[error(transparent)]
    Reduce(#[from] ReduceError),
}

/// Fixed-width bit set over indices of `V(p,G)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VSet(Vec<u64>);

impl VSet {
    fn empty(len: usize) -> Self {
        VSet(vec![0; len.div_ceil(64)])
    }

    fn insert(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn is_subset(&self, other: &VSet) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a & !b == 0)
    }

    fn is_empty(&self) -> bool {
        self.0.iter().all(|w| *w == 0)
    }

    fn intersects(&self, other: &VSet) -> bool {
        self.0.iter().zip(&other.0).any(|(a, b)| a & b != 0)
    }

    fn union_with(&mut self, other: &VSet) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a |= b;
        }
    }

    fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .flat_map(|(w, bits)| (0..64).filter(move |b| bits & (1 << b) != 0).map(move |b| w * 64 + b))
    }
}

/// Basis points `a` with `MAP_G(2a) = {a}`.
pub fn vertex_set(g: &Basis) -> BTreeSet<Exponent> {
    let set: HashSet<&Exponent> = g.monomials.iter().collect();
    g.monomials
        .iter()
        .filter(|a| {
            let twice = a.double();
            !g.monomials
                .iter()
                .any(|b| b != *a && twice.checked_sub(b).is_some_and(|r| set.contains(&r)))
        })
        .cloned()
        .collect()
}

/// Least fixpoint of the relation map over `G + G`.
#[derive(Debug, Clone)]
pub struct RelatMap {
    vertices: Vec<Exponent>,
    vindex: HashMap<Exponent, usize>,
    entries: HashMap<Exponent, VSet>,
}

impl RelatMap {
    pub fn vertices(&self) -> &[Exponent] {
        &self.vertices
    }

    /// `RELAT(a)`; empty outside `G + G`.
    pub fn get(&self, a: &Exponent) -> BTreeSet<Exponent> {
        self.entries.get(a).map(|s| self.to_points(s)).unwrap_or_default()
    }

    /// Every exponent with a nonempty value.
    pub fn domain(&self) -> impl Iterator<Item = &Exponent> + '_ {
        self.entries.iter().filter(|(_, v)| !v.is_empty()).map(|(k, _)| k)
    }

    fn bits(&self, a: &Exponent) -> VSet {
        self.entries
            .get(a)
            .cloned()
            .unwrap_or_else(|| VSet::empty(self.vertices.len()))
    }

    fn to_points(&self, s: &VSet) -> BTreeSet<Exponent> {
        s.indices().map(|i| self.vertices[i].clone()).collect()
    }

    /// Bit set of `t`, or `None` if `t` leaves `V(p,G)`.
    fn encode(&self, t: &BTreeSet<Exponent>) -> Option<VSet> {
        let mut s = VSet::empty(self.vertices.len());
        for a in t {
            s.insert(*self.vindex.get(a)?);
        }
        Some(s)
    }
}

/// Worklist propagation: seed `RELAT(2a) = {a}` on `V(p,G)` and push each
/// `RELAT(2a)` into every `RELAT(a + b)`, re-queuing `(a + b)/2` whenever its
/// doubled value grows.
pub fn compute_relat(g: &Basis) -> RelatMap {
    let basis = g.to_vec();
    let gidx: HashMap<Exponent, usize> = basis.iter().cloned().enumerate().map(|(i, a)| (a, i)).collect();
    let vertices: Vec<Exponent> = vertex_set(g).into_iter().collect();
    let vindex: HashMap<Exponent, usize> = vertices.iter().cloned().enumerate().map(|(i, a)| (a, i)).collect();
    let width = vertices.len();
    let mut entries: HashMap<Exponent, VSet> = HashMap::new();

    let mut queued = vec![false; basis.len()];
    let mut queue = VecDeque::new();
    for (i, a) in vertices.iter().enumerate() {
        let mut s = VSet::empty(width);
        s.insert(i);
        entries.insert(a.double(), s);
        let gi = gidx[a];
        queued[gi] = true;
        queue.push_back(gi);
    }

    while let Some(ai) = queue.pop_front() {
        queued[ai] = false;
        let a = &basis[ai];
        let src = match entries.get(&a.double()) {
            Some(s) => s.clone(),
            None => continue,
        };
        for b in &basis {
            let s = a + b;
            let entry = entries.entry(s.clone()).or_insert_with(|| VSet::empty(width));
            if src.is_subset(entry) {
                continue;
            }
            entry.union_with(&src);
            if let Some(half) = s.halve() {
                if let Some(&hi) = gidx.get(&half) {
                    if !queued[hi] {
                        queued[hi] = true;
                        queue.push_back(hi);
                    }
                }
            }
        }
    }

    RelatMap {
        vertices,
        vindex,
        entries,
    }
}

/// `{r ∈ G : RELAT(2r) ⊆ T}`.
pub fn sigma(g: &Basis, r: &RelatMap, t: &BTreeSet<Exponent>) -> BTreeSet<Exponent> {
    match r.encode(t) {
        Some(tb) => sigma_bits(g, r, &tb).into_iter().collect(),
        None => g
            .monomials
            .iter()
            .filter(|a| r.get(&a.double()).is_subset(t))
            .cloned()
            .collect(),
    }
}

fn sigma_bits(g: &Basis, r: &RelatMap, t: &VSet) -> Vec<Exponent> {
    g.monomials
        .iter()
        .filter(|a| r.bits(&a.double()).is_subset(t))
        .cloned()
        .collect()
}

fn closed_under_sums(points: &[Exponent], r: &RelatMap, t: &VSet) -> bool {
    for (i, a) in points.iter().enumerate() {
        for b in &points[i..] {
            if !r.bits(&(a + b)).is_subset(t) {
                return false;
            }
        }
    }
    true
}

/// Bipartition of `p` along `T` and the union `T2` of the relation values not
/// inside `T`. Both parts must satisfy the closure condition of a split and
/// the parts must be disjoint; otherwise returns `None`.
pub fn try_split(p: &Polynomial, g: &Basis, r: &RelatMap, t: &BTreeSet<Exponent>) -> Option<(Polynomial, Polynomial)> {
    if t.is_empty() {
        return None;
    }
    let tb = r.encode(t)?;
    let mut first = Vec::new();
    let mut t2 = VSet::empty(r.vertices.len());
    for (a, _) in p.terms() {
        let ra = r.bits(a);
        if ra.is_empty() {
            // would sit inside every class at once
            return None;
        }
        if ra.is_subset(&tb) {
            first.push(a.clone());
        } else {
            t2.union_with(&ra);
        }
    }
    if first.is_empty() || first.len() == p.len() {
        return None;
    }
    if tb.intersects(&t2) {
        return None;
    }
    if !closed_under_sums(&sigma_bits(g, r, &tb), r, &tb) {
        return None;
    }
    if !closed_under_sums(&sigma_bits(g, r, &t2), r, &t2) {
        return None;
    }
    let s1: HashSet<Exponent> = first.into_iter().collect();
    let p1 = p.filter_terms(|e| s1.contains(e));
    let p2 = p - &p1;
    debug_assert!(p2.terms().all(|(a, _)| r.bits(a).is_subset(&t2)));
    Some((p1, p2))
}

/// Smallest union of support relation values that contains `seed` and
/// overlaps no other value partially.
fn overlap_closure(values: &[VSet], seed: &VSet) -> VSet {
    let mut t = seed.clone();
    loop {
        let mut grown = false;
        for v in values {
            if v.intersects(&t) && !v.is_subset(&t) {
                t.union_with(v);
                grown = true;
            }
        }
        if !grown {
            return t;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitNode {
    pub polynomial: Polynomial,
    pub basis: Basis,
    pub children: Vec<SplitNode>,
    pub split_witness: Option<BTreeSet<Exponent>>,
}

impl SplitNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    pub fn leaves(&self) -> Vec<&SplitNode> {
        if self.is_leaf() {
            return vec![self];
        }
        self.children.iter().flat_map(|c| c.leaves()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Decomposition {
    Refuted(RefutationReport),
    Tree(SplitNode),
}

#[derive(Debug, Clone, Copy)]
pub struct DecomposeOptions {
    pub split: bool,
    pub prechecks: bool,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        DecomposeOptions {
            split: true,
            prechecks: true,
        }
    }
}

/// Exact pre-SDP checks in order: sum membership, pinned diagonals, vertex faces.
pub fn prechecks(p: &Polynomial, g: &Basis) -> Option<RefutationReport> {
    [necessary_sum_check(p, g), diagonal_check(p, g), vertex_face_check(p)]
        .into_iter()
        .find(RefutationReport::is_refuted)
}

pub fn decompose(p: &Polynomial, opts: &DecomposeOptions) -> Result<Decomposition, SplitError> {
    decompose_at(p, None, opts, 0)
}

/// Same as [`decompose`], reusing an already computed root basis.
pub fn decompose_with_basis(p: &Polynomial, g: Basis, opts: &DecomposeOptions) -> Result<Decomposition, SplitError> {
    decompose_at(p, Some(g), opts, 0)
}

fn decompose_at(
    p: &Polynomial,
    basis: Option<Basis>,
    opts: &DecomposeOptions,
    depth: usize,
) -> Result<Decomposition, SplitError> {
    if depth > MAX_DEPTH {
        return Err(SplitError::DepthExceeded);
    }
    if p.is_zero() {
        return Ok(Decomposition::Tree(SplitNode {
            polynomial: p.clone(),
            basis: Basis::from_set(SupportSet::new(p.nvars())),
            children: Vec::new(),
            split_witness: None,
        }));
    }
    let g = match basis {
        Some(g) => g,
        None => algexa(p)?,
    };
    if opts.prechecks {
        if let Some(report) = prechecks(p, &g) {
            return Ok(Decomposition::Refuted(report));
        }
    }
    if opts.split {
        let relat = compute_relat(&g);
        let mut tried: HashSet<VSet> = HashSet::new();
        let values: Vec<VSet> = p.terms().map(|(a, _)| relat.bits(a)).collect();
        let candidates = values
            .iter()
            .filter(|tb| !tb.is_empty())
            .flat_map(|tb| [tb.clone(), overlap_closure(&values, tb)]);
        for tb in candidates {
            if !tried.insert(tb.clone()) {
                continue;
            }
            let t = relat.to_points(&tb);
            if let Some((p1, p2)) = try_split(p, &g, &relat, &t) {
                let (left, right) = rayon::join(
                    || decompose_at(&p1, None, opts, depth + 1),
                    || decompose_at(&p2, None, opts, depth + 1),
                );
                let (left, right) = (left?, right?);
                let children = match (left, right) {
                    (Decomposition::Refuted(r), _) | (_, Decomposition::Refuted(r)) => {
                        return Ok(Decomposition::Refuted(r));
                    }
                    (Decomposition::Tree(l), Decomposition::Tree(r)) => vec![l, r],
                };
                return Ok(Decomposition::Tree(SplitNode {
                    polynomial: p.clone(),
                    basis: g,
                    children,
                    split_witness: Some(t),
                }));
            }
        }
    }
    Ok(Decomposition::Tree(SplitNode {
        polynomial: p.clone(),
        basis: g,
        children: Vec::new(),
        split_witness: None,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{map_set, minkowski_sum};
    use crate::reduce::RefutationReason;
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    fn pts<const N: usize>(list: &[[u32; N]]) -> BTreeSet<Exponent> {
        list.iter().map(|p| Exponent::from(*p)).collect()
    }

    fn sextic() -> Polynomial {
        Polynomial::from_int_terms(2, [(1, [6, 0]), (1, [0, 6]), (1, [4, 0]), (-2, [2, 2]), (1, [0, 4])])
    }

    fn motzkin() -> Polynomial {
        Polynomial::from_int_terms(2, [(1, [4, 2]), (1, [2, 4]), (-3, [2, 2]), (1, [0, 0])])
    }

    fn split_not_cover() -> Polynomial {
        Polynomial::from_int_terms(
            3,
            [
                (1, [4, 2, 2]),
                (1, [2, 4, 2]),
                (-2, [2, 2, 2]),
                (1, [0, 0, 2]),
                (1, [2, 2, 0]),
                (1, [2, 2, 4]),
            ],
        )
    }

    /// Naive least fixpoint of the defining recursion over all of `G + G`.
    fn brute_relat(g: &Basis) -> BTreeMap<Exponent, BTreeSet<Exponent>> {
        let gg = minkowski_sum(&g.monomials, &g.monomials);
        let mut r: BTreeMap<Exponent, BTreeSet<Exponent>> = gg.iter().map(|a| (a.clone(), BTreeSet::new())).collect();
        loop {
            let mut next = r.clone();
            for a in gg.iter() {
                let m = map_set(&g.monomials, a);
                let half = a.halve();
                if m.len() == 1 && half.as_ref() == m.iter().next() {
                    next.insert(a.clone(), m);
                    continue;
                }
                let mut acc = BTreeSet::new();
                for b in &m {
                    let rr = a.checked_sub(b).unwrap();
                    if *b != rr {
                        acc.extend(r[&b.double()].iter().cloned());
                        acc.extend(r[&rr.double()].iter().cloned());
                    }
                }
                next.insert(a.clone(), acc);
            }
            if next == r {
                return r;
            }
            r = next;
        }
    }

    #[test]
    fn vertex_set_examples() {
        let g = algexa(&sextic()).unwrap();
        assert_eq!(vertex_set(&g), pts(&[[0, 2], [0, 3], [2, 0], [3, 0]]));
        let g = algexa(&motzkin()).unwrap();
        assert_eq!(vertex_set(&g), pts(&[[0, 0], [1, 1], [2, 1], [1, 2]]));
        let g = Basis::from_set(SupportSet::from_points(2, [[1, 3]]));
        assert_eq!(vertex_set(&g), pts(&[[1, 3]]));
    }

    #[test]
    fn relat_sextic() {
        let g = algexa(&sextic()).unwrap();
        let r = compute_relat(&g);
        assert_eq!(r.get(&Exponent::from([0, 4])), pts(&[[0, 2]]));
        assert_eq!(r.get(&Exponent::from([0, 6])), pts(&[[0, 3]]));
        assert_eq!(r.get(&Exponent::from([4, 0])), pts(&[[2, 0]]));
        assert_eq!(r.get(&Exponent::from([6, 0])), pts(&[[3, 0]]));
        assert_eq!(r.get(&Exponent::from([2, 2])), pts(&[[0, 2], [2, 0]]));
        assert_eq!(r.get(&Exponent::from([4, 2])), pts(&[[3, 0], [0, 3]]));
        assert_eq!(r.get(&Exponent::from([2, 4])), pts(&[[3, 0], [0, 3]]));
        assert!(r.get(&Exponent::from([9, 9])).is_empty());
    }

    #[test]
    fn relat_motzkin() {
        let g = algexa(&motzkin()).unwrap();
        let r = compute_relat(&g);
        assert_eq!(r.get(&Exponent::from([2, 2])), pts(&[[1, 1]]));
        assert_eq!(r.get(&Exponent::from([0, 0])), pts(&[[0, 0]]));
        assert_eq!(r.get(&Exponent::from([4, 2])), pts(&[[2, 1]]));
        assert_eq!(r.get(&Exponent::from([2, 4])), pts(&[[1, 2]]));
    }

    #[test]
    fn sigma_examples() {
        let g = algexa(&sextic()).unwrap();
        let r = compute_relat(&g);
        assert_eq!(sigma(&g, &r, &pts(&[[2, 0], [0, 2]])), pts(&[[1, 1], [2, 0], [0, 2]]));
        let v = vertex_set(&g);
        assert_eq!(sigma(&g, &r, &v), g.monomials.points().clone());
        assert!(sigma(&g, &r, &BTreeSet::new()).is_empty());
    }

    #[test]
    fn split_sextic() {
        let p = sextic();
        let g = algexa(&p).unwrap();
        let r = compute_relat(&g);
        let t = r.get(&Exponent::from([2, 2]));
        let (p1, p2) = try_split(&p, &g, &r, &t).unwrap();
        assert_eq!(
            p1,
            Polynomial::from_int_terms(2, [(1, [4, 0]), (-2, [2, 2]), (1, [0, 4])])
        );
        assert_eq!(p2, Polynomial::from_int_terms(2, [(1, [6, 0]), (1, [0, 6])]));

        let g2 = algexa(&p2).unwrap();
        let r2 = compute_relat(&g2);
        let t2 = r2.get(&Exponent::from([0, 6]));
        let (a, b) = try_split(&p2, &g2, &r2, &t2).unwrap();
        assert_eq!(a, Polynomial::from_int_terms(2, [(1, [0, 6])]));
        assert_eq!(b, Polynomial::from_int_terms(2, [(1, [6, 0])]));
    }

    #[test]
    fn split_without_convex_cover() {
        let p = split_not_cover();
        let g = algexa(&p).unwrap();
        let r = compute_relat(&g);
        assert_eq!(r.get(&Exponent::from([2, 2, 2])), pts(&[[1, 1, 0], [1, 1, 2]]));
        let t = pts(&[[2, 1, 1], [1, 2, 1], [0, 0, 1]]);
        let (p1, p2) = try_split(&p, &g, &r, &t).unwrap();
        assert_eq!(
            p1,
            Polynomial::from_int_terms(3, [(1, [4, 2, 2]), (1, [2, 4, 2]), (1, [0, 0, 2])])
        );
        assert_eq!(
            p2,
            Polynomial::from_int_terms(3, [(1, [2, 2, 0]), (-2, [2, 2, 2]), (1, [2, 2, 4])])
        );
    }

    #[test]
    fn decompose_examples() {
        let Decomposition::Tree(root) = decompose(&sextic(), &DecomposeOptions::default()).unwrap() else {
            panic!("the sextic must not be refuted");
        };
        let mut sizes: Vec<usize> = root.leaves().iter().map(|l| l.basis.len()).collect();
        sizes.sort();
        assert_eq!(sizes, vec![1, 1, 3]);

        let Decomposition::Refuted(r) = decompose(&motzkin(), &DecomposeOptions::default()).unwrap() else {
            panic!("motzkin must be refuted");
        };
        assert_eq!(r.reason, RefutationReason::NegativeDiagonal);
        assert_eq!(r.support_point, Some(Exponent::from([2, 2])));

        let mono = Polynomial::from_int_terms(2, [(5, [2, 4])]);
        let Decomposition::Tree(root) = decompose(&mono, &DecomposeOptions::default()).unwrap() else {
            panic!()
        };
        assert!(root.is_leaf());
        assert_eq!(root.basis.monomials, SupportSet::from_points(2, [[1, 2]]));
    }

    fn check_tree(node: &SplitNode) {
        if node.is_leaf() {
            return;
        }
        let sum = node
            .children
            .iter()
            .fold(Polynomial::zero(node.polynomial.nvars()), |acc, c| &acc + &c.polynomial);
        assert_eq!(sum, node.polynomial);
        let a = node.children[0].polynomial.support();
        assert!(node.children[1].polynomial.support().iter().all(|e| !a.contains(e)));
        node.children.iter().for_each(check_tree);
    }

    fn arb_small_poly() -> impl Strategy<Value = Polynomial> {
        proptest::collection::vec(
            proptest::collection::vec((-4i64..5, proptest::collection::vec(0u32..4, 2)), 1..4),
            1..4,
        )
        .prop_map(|qs| {
            qs.into_iter().fold(Polynomial::zero(2), |acc, q| {
                let q = Polynomial::from_int_terms(2, q.into_iter().map(|(c, e)| (c, Exponent::new(e))));
                &acc + &q.square()
            })
        })
    }

    proptest! {
        #[test]
        fn relat_matches_brute_force(pts in proptest::collection::vec(proptest::collection::vec(0u32..4, 2), 1..12)) {
            let g = Basis::from_set(SupportSet::from_points(2, pts.into_iter().map(Exponent::new)));
            let r = compute_relat(&g);
            let brute = brute_relat(&g);
            for (a, want) in &brute {
                prop_assert_eq!(&r.get(a), want, "at {}", a);
            }
            for a in r.domain() {
                prop_assert!(brute.contains_key(a));
            }
            let v = vertex_set(&g);
            for a in &v {
                prop_assert_eq!(r.get(&a.double()), BTreeSet::from([a.clone()]));
            }
        }

        #[test]
        fn relat_matches_brute_force_3d(pts in proptest::collection::vec(proptest::collection::vec(0u32..3, 3), 1..12)) {
            let g = Basis::from_set(SupportSet::from_points(3, pts.into_iter().map(Exponent::new)));
            let r = compute_relat(&g);
            for (a, want) in &brute_relat(&g) {
                prop_assert_eq!(&r.get(a), want);
            }
        }

        #[test]
        fn decomposition_tree_sums_to_root(p in arb_small_poly()) {
            if let Decomposition::Tree(root) = decompose(&p, &DecomposeOptions::default()).unwrap() {
                check_tree(&root);
            }
        }
    }
}
