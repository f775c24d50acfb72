mod common;

use std::collections::BTreeSet;

use sossplit_core::bench::{Family, GenSpec, SplitMix64};
use sossplit_core::reduce::dense_basis;
use sossplit_core::split::{compute_relat, prechecks, try_split};
use sossplit_core::{algexa, algpca, decompose, DecomposeOptions, Decomposition, Exponent, Polynomial, SplitNode};

fn check_tree(node: &SplitNode, root: &BTreeSet<Exponent>) {
    let basis: BTreeSet<Exponent> = node.basis.to_vec().into_iter().collect();
    assert!(basis.is_subset(root), "child basis leaves the root basis");
    if node.is_leaf() {
        return;
    }
    let mut sum = Polynomial::zero(node.polynomial.nvars());
    let mut seen = BTreeSet::new();
    for c in &node.children {
        for (e, _) in c.polynomial.terms() {
            assert!(seen.insert(e.clone()), "support point {e} in two parts");
        }
        sum = &sum + &c.polynomial;
        check_tree(c, root);
    }
    assert_eq!(sum, node.polynomial, "parts do not add up");
}

/// Every leaf of a sum of squares must survive the exact checks.
fn assert_sound_tree(p: &Polynomial, label: &str) -> usize {
    let tree = match decompose(p, &DecomposeOptions::default()).unwrap() {
        Decomposition::Tree(t) => t,
        Decomposition::Refuted(r) => panic!("{label}: refuted a sum of squares: {r:?}"),
    };
    let root: BTreeSet<Exponent> = tree.basis.to_vec().into_iter().collect();
    check_tree(&tree, &root);
    for leaf in tree.leaves() {
        assert!(
            prechecks(&leaf.polynomial, &leaf.basis).is_none(),
            "{label}: leaf {:?} refuted",
            leaf.polynomial
        );
    }
    tree.leaves().len()
}

#[test]
fn squares_stay_inside_the_reduced_bases() {
    let mut rng = SplitMix64::new(5);
    for trial in 0..200 {
        let (p, squares) = common::random_sos(&mut rng, 3, 3);
        if p.is_zero() {
            continue;
        }
        let g0: BTreeSet<Exponent> = algpca(&p).unwrap().to_vec().into_iter().collect();
        let g: BTreeSet<Exponent> = algexa(&p).unwrap().to_vec().into_iter().collect();
        assert!(g.is_subset(&g0), "trial {trial}");
        for q in &squares {
            for (e, _) in q.terms() {
                assert!(g.contains(e), "trial {trial}: {e} of a square dropped from {p:?}");
            }
        }
    }
}

#[test]
fn sums_of_squares_split_into_sums_of_squares() {
    let mut rng = SplitMix64::new(8);
    let mut split = 0;
    for trial in 0..200 {
        let (p, _) = common::random_sos(&mut rng, 3, 3);
        if p.is_zero() {
            continue;
        }
        if assert_sound_tree(&p, &format!("trial {trial}")) > 1 {
            split += 1;
        }
    }
    assert!(split > 0, "no instance split");
}

#[test]
fn sqr_instances_are_never_refuted() {
    let mut count = 0;
    for d in 3..=6 {
        for n in [3, 4, 5] {
            for seed in 0..9u64 {
                let fam = Family::Sqr { k: 4, n, d, t: 3 };
                let p = GenSpec::new(fam.clone(), seed).generate().unwrap();
                assert_sound_tree(&p, &format!("{fam}#{seed}"));
                count += 1;
            }
        }
    }
    assert!(count >= 100);
}

#[test]
fn gram_polynomials_are_never_refuted() {
    let mut rng = SplitMix64::new(3);
    for trial in 0..60 {
        let n = 1 + rng.below(2) as usize;
        let basis = common::dense_basis(n, 1 + rng.below(3) as u32).to_vec();
        let rank = 1 + rng.below(basis.len() as u64) as usize;
        let m = common::random_psd(&mut rng, basis.len(), rank);
        let p = common::gram_polynomial(&basis, &m);
        if !p.is_zero() {
            assert_sound_tree(&p, &format!("trial {trial}"));
        }
    }
}

fn dense_verdict(p: &Polynomial) -> Option<bool> {
    common::gram_verdict(p, &dense_basis(p.nvars(), (p.total_degree() / 2) as u32))
}

#[test]
fn reduced_basis_agrees_with_dense_basis() {
    let mut rng = SplitMix64::new(21);
    let (mut compared, mut sos) = (0, 0);
    for trial in 0..150 {
        let p = common::mixed_bivariate(&mut rng, 3);
        let Ok(g) = algexa(&p) else { continue };
        let (Some(dense), Some(reduced)) = (dense_verdict(&p), common::gram_verdict(&p, &g)) else {
            continue;
        };
        assert_eq!(dense, reduced, "trial {trial}: {p:?}");
        compared += 1;
        sos += usize::from(dense);
    }
    assert!(
        compared >= 100 && sos >= 20 && compared - sos >= 20,
        "{compared} compared, {sos} sos"
    );
}

#[test]
fn split_parts_agree_with_dense_solves() {
    let mut rng = SplitMix64::new(34);
    let mut compared = 0;
    for trial in 0..400 {
        let p = common::mixed_bivariate(&mut rng, 4);
        let Ok(g) = algexa(&p) else { continue };
        let r = compute_relat(&g);
        let candidates: BTreeSet<BTreeSet<Exponent>> = p.terms().map(|(a, _)| r.get(a)).collect();
        for t in candidates {
            let Some((p1, p2)) = try_split(&p, &g, &r, &t) else {
                continue;
            };
            let whole = dense_verdict(&p);
            let parts = match (dense_verdict(&p1), dense_verdict(&p2)) {
                (Some(false), _) | (_, Some(false)) => Some(false),
                (Some(true), Some(true)) => Some(true),
                _ => None,
            };
            if let (Some(w), Some(ps)) = (whole, parts) {
                assert_eq!(w, ps, "trial {trial}: {p:?} = {p1:?} + {p2:?}");
                compared += 1;
            }
        }
    }
    assert!(compared >= 30, "only {compared} splits compared");
}
