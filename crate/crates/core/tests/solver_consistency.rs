//! Gram systems built from known PSD matrices must come back feasible with a
//! verified certificate; systems with a negative pinned diagonal never do.

mod common;

use sossplit_core::bench::SplitMix64;
use sossplit_core::poly::integer;
use sossplit_core::sdp::{
    build_gram_system, extract_certificate, solve_feasibility, verify_certificate, SolveOptions, SolveStatus,
};
use sossplit_core::split::vertex_set;
use sossplit_core::{Basis, Exponent, Polynomial, SupportSet};

use common::{dense_basis, gram_polynomial, random_psd};

fn random_basis(rng: &mut SplitMix64, n: usize, size: usize) -> Basis {
    let mut pts = SupportSet::new(n);
    while pts.len() < size {
        pts.insert(Exponent::new((0..n).map(|_| rng.below(4) as u32).collect()));
    }
    Basis::from_set(pts)
}

#[test]
fn random_psd_round_trip() {
    let mut rng = SplitMix64::new(20_240_611);
    let mut trials = 0;
    let mut deficient = 0;
    while trials < 120 {
        let n = 1 + rng.below(3) as usize;
        let size = 1 + rng.below(8) as usize;
        if size > 4usize.pow(n as u32) {
            continue;
        }
        let rank = 1 + rng.below(size as u64) as usize;
        let basis = random_basis(&mut rng, n, size);
        let m0 = random_psd(&mut rng, size, rank);
        let p = gram_polynomial(&basis.to_vec(), &m0);
        if p.is_zero() {
            continue;
        }
        trials += 1;
        deficient += usize::from(rank < size);
        let prob = build_gram_system(&p, &basis).unwrap();
        let out = solve_feasibility(&prob, &SolveOptions::default()).unwrap();
        assert_eq!(out.status, SolveStatus::Feasible, "trial {trials}: {p}");
        let cert = extract_certificate(&out.matrix.unwrap(), &prob.basis, 1e-7).unwrap();
        let v = verify_certificate(&p, &cert, 1e-6);
        assert!(v.ok, "trial {trials}: residual {} for {p}", v.residual);
    }
    assert!(deficient >= 30, "only {deficient} rank-deficient trials");
}

#[test]
fn negative_pinned_diagonal_is_never_feasible() {
    let mut rng = SplitMix64::new(77);
    let mut trials = 0;
    while trials < 60 {
        let n = 1 + rng.below(2) as usize;
        let size = 1 + rng.below(6) as usize;
        if size > 4usize.pow(n as u32) {
            continue;
        }
        let basis = random_basis(&mut rng, n, size);
        let m0 = random_psd(&mut rng, size, size);
        let mut p = gram_polynomial(&basis.to_vec(), &m0);
        let Some(v) = vertex_set(&basis).into_iter().next() else {
            continue;
        };
        let twice = v.double();
        let c = p.coeff(&twice).cloned().unwrap_or_else(|| integer(0));
        p.add_term(twice, -c - integer(1 + rng.below(5) as i64));
        trials += 1;
        let prob = build_gram_system(&p, &basis).unwrap();
        assert!(prob.pinned_negative().is_some());
        let out = solve_feasibility(&prob, &SolveOptions::default()).unwrap();
        assert_eq!(out.status, SolveStatus::NumericallyInfeasible, "{p}");
        assert!(out.matrix.is_none());
    }
}

#[test]
fn infeasible_without_pinned_entries() {
    // Motzkin and x1^2 times Motzkin over dense bases, where no diagonal is pinned
    let motzkin = Polynomial::from_int_terms(2, [(1, [4, 2]), (1, [2, 4]), (-3, [2, 2]), (1, [0, 0])]);
    let shifted = Polynomial::from_int_terms(2, [(1, [6, 2]), (1, [4, 4]), (-3, [4, 2]), (1, [2, 0])]);
    for (p, d) in [(motzkin, 3), (shifted, 4)] {
        let prob = build_gram_system(&p, &dense_basis(2, d)).unwrap();
        assert!(prob.pinned_negative().is_none());
        let out = solve_feasibility(&prob, &SolveOptions::default()).unwrap();
        assert_ne!(out.status, SolveStatus::Feasible, "{p}");
    }
}

#[test]
fn status_serializes_in_snake_case() {
    let text = serde_json::to_string(&SolveStatus::NumericallyInfeasible).unwrap();
    assert_eq!(text, "\"numerically_infeasible\"");
}
