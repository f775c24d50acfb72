//! Brute-force oracles shared by the integration tests.

#![allow(dead_code)]

use nalgebra::DMatrix;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use sossplit_core::bench::SplitMix64;
use sossplit_core::poly::integer;
use sossplit_core::sdp::{
    build_gram_system, extract_certificate, solve_feasibility, verify_certificate, GramProblem, SolveOptions,
    SolveStatus,
};
use sossplit_core::{Basis, Exponent, Polynomial, SupportSet};

fn q(v: i64) -> BigRational {
    integer(v)
}

/// Solves `A λ = rhs` exactly; `None` when inconsistent. Free variables are 0.
#[allow(clippy::needless_range_loop)]
fn solve_exact(mut a: Vec<Vec<BigRational>>, mut rhs: Vec<BigRational>) -> Option<Vec<BigRational>> {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        rhs.swap(r, p);
        let inv = a[r][c].recip();
        for k in c..cols {
            a[r][k] = &a[r][k] * &inv;
        }
        rhs[r] = &rhs[r] * &inv;
        for i in 0..rows {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for k in c..cols {
                    let t = &f * &a[r][k];
                    a[i][k] -= t;
                }
                let t = &f * &rhs[r];
                rhs[i] -= t;
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows {
            break;
        }
    }
    if rhs[r..].iter().any(|v| !v.is_zero()) {
        return None;
    }
    let mut x = vec![BigRational::zero(); cols];
    for (row, &c) in pivots.iter().enumerate() {
        x[c] = rhs[row].clone();
    }
    Some(x)
}

fn subsets(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut dyn FnMut(&[usize]) -> bool) -> bool {
    if cur.len() == k {
        return out(cur);
    }
    for i in start..n {
        cur.push(i);
        if subsets(n, k, i + 1, cur, out) {
            return true;
        }
        cur.pop();
    }
    false
}

/// Exact membership of `x` in `conv(points)` by searching barycentric
/// coordinates over every subset of at most `dim + 1` points.
pub fn in_hull(points: &[Vec<i64>], x: &[BigRational]) -> bool {
    let dim = x.len();
    for k in 1..=(dim + 1).min(points.len()) {
        let found = subsets(points.len(), k, 0, &mut Vec::new(), &mut |idx| {
            let mut a: Vec<Vec<BigRational>> = (0..dim)
                .map(|r| idx.iter().map(|&i| q(points[i][r])).collect())
                .collect();
            a.push(vec![BigRational::one(); k]);
            let mut rhs = x.to_vec();
            rhs.push(BigRational::one());
            solve_exact(a, rhs).is_some_and(|l| l.iter().all(|v| !v.is_negative()))
        });
        if found {
            return true;
        }
    }
    false
}

pub fn coords(e: &Exponent) -> Vec<i64> {
    e.coords().iter().map(|&c| c as i64).collect()
}

/// `x` is interior when `x ± δ e_k` all lie in the hull.
pub fn is_interior(points: &[Vec<i64>], x: &[i64], delta: &BigRational) -> bool {
    (0..x.len()).all(|k| {
        [delta.clone(), -delta.clone()].iter().all(|d| {
            let mut y: Vec<BigRational> = x.iter().map(|&v| q(v)).collect();
            y[k] += d;
            in_hull(points, &y)
        })
    })
}

/// Lattice points of `½ conv(even)`.
pub fn half_hull_lattice(even: &[Exponent]) -> Vec<Exponent> {
    let pts: Vec<Vec<i64>> = even.iter().map(coords).collect();
    let n = even[0].nvars();
    let hi: Vec<u32> = (0..n).map(|k| even.iter().map(|e| e[k] / 2).max().unwrap()).collect();
    let mut out = Vec::new();
    let mut cur = vec![0u32; n];
    loop {
        let twice: Vec<BigRational> = cur.iter().map(|&c| q(2 * c as i64)).collect();
        if in_hull(&pts, &twice) {
            out.push(Exponent::new(cur.clone()));
        }
        let mut k = 0;
        while k < n && cur[k] == hi[k] {
            cur[k] = 0;
            k += 1;
        }
        if k == n {
            return out;
        }
        cur[k] += 1;
    }
}

/// All exponents of total degree at most `d`.
pub fn dense_basis(n: usize, d: u32) -> Basis {
    fn rec(n: usize, left: u32, cur: &mut Vec<u32>, out: &mut SupportSet) {
        if cur.len() == n {
            out.insert(Exponent::new(cur.clone()));
            return;
        }
        for v in 0..=left {
            cur.push(v);
            rec(n, left - v, cur, out);
            cur.pop();
        }
    }
    let mut out = SupportSet::new(n);
    rec(n, d, &mut Vec::new(), &mut out);
    Basis::from_set(out)
}

/// Random PSD matrix `V V^T` of the given rank with small integer `V`.
pub fn random_psd(rng: &mut SplitMix64, n: usize, rank: usize) -> DMatrix<f64> {
    let v = DMatrix::from_fn(n, rank, |_, _| rng.below(7) as f64 - 3.0);
    &v * v.transpose()
}

/// Exact `G(x)^T M G(x)` for an integer matrix `M`.
pub fn gram_polynomial(basis: &[Exponent], m: &DMatrix<f64>) -> Polynomial {
    let n = basis[0].nvars();
    let mut p = Polynomial::zero(n);
    for i in 0..basis.len() {
        for j in 0..basis.len() {
            let c = m[(i, j)];
            assert_eq!(c, c.round());
            if c != 0.0 {
                p.add_term(&basis[i] + &basis[j], integer(c as i64));
            }
        }
    }
    p
}

/// Random Gram problem over a random basis in `n` variables.
pub fn random_problem(rng: &mut SplitMix64, n: usize, size: usize) -> GramProblem {
    let mut pts = SupportSet::new(n);
    while pts.len() < size {
        pts.insert(Exponent::new((0..n).map(|_| rng.below(4) as u32).collect()));
    }
    let basis = Basis::from_set(pts);
    let mut p = Polynomial::zero(n);
    let g = basis.to_vec();
    for a in &g {
        for b in &g {
            if rng.below(3) == 0 {
                let num = rng.coefficient();
                let den = 1 + rng.below(9) as i64;
                p.add_term(a + b, sossplit_core::poly::rational(num, den));
            }
        }
    }
    build_gram_system(&p, &basis).expect("support inside G+G")
}

/// Random polynomial with at most `terms` monomials of degree at most `deg`.
pub fn random_poly(rng: &mut SplitMix64, n: usize, deg: u32, terms: usize) -> Polynomial {
    let mut p = Polynomial::zero(n);
    for _ in 0..terms {
        let mut left = deg;
        let mut e = vec![0u32; n];
        for c in e.iter_mut() {
            *c = rng.below(left as u64 + 1) as u32;
            left -= *c;
        }
        let c = rng.below(7) as i64 - 3;
        if c != 0 {
            p.add_term(Exponent::new(e), q(c));
        }
    }
    p
}

/// `Σ q_i²` over at most `max_vars` variables with `deg(q_i) ≤ max_half`,
/// together with the `q_i`.
pub fn random_sos(rng: &mut SplitMix64, max_vars: usize, max_half: u32) -> (Polynomial, Vec<Polynomial>) {
    let n = 1 + rng.below(max_vars as u64) as usize;
    let deg = 1 + rng.below(max_half as u64) as u32;
    let count = 1 + rng.below(3) as usize;
    let squares: Vec<Polynomial> = (0..count)
        .map(|_| {
            let terms = 1 + rng.below(4) as usize;
            random_poly(rng, n, deg, terms)
        })
        .filter(|q| !q.is_zero())
        .collect();
    let mut p = Polynomial::zero(n);
    for s in &squares {
        p = &p + &s.square();
    }
    (p, squares)
}

/// Bivariate polynomial of degree at most `2 * max_half`: a sum of squares,
/// a perturbed one, or a random one, in equal shares.
pub fn mixed_bivariate(rng: &mut SplitMix64, max_half: u32) -> Polynomial {
    loop {
        let deg = 1 + rng.below(max_half as u64) as u32;
        let count = 1 + rng.below(3) as usize;
        let mut p = Polynomial::zero(2);
        for _ in 0..count {
            let terms = 1 + rng.below(4) as usize;
            p = &p + &random_poly(rng, 2, deg, terms).square();
        }
        match rng.below(3) {
            0 => {}
            1 => {
                let terms = 1 + rng.below(2) as usize;
                p = &p + &random_poly(rng, 2, 2 * deg, terms);
            }
            _ => {
                let terms = 2 + rng.below(6) as usize;
                p = random_poly(rng, 2, 2 * deg, terms);
            }
        }
        if !p.is_zero() {
            return p;
        }
    }
}

/// Direct Gram solve of `p` over `basis`: `Some(false)` for an exact
/// refutation, `Some(true)` for a verified certificate, `None` otherwise.
pub fn gram_verdict(p: &Polynomial, basis: &Basis) -> Option<bool> {
    if p.is_zero() {
        return Some(true);
    }
    let prob = match build_gram_system(p, basis) {
        Ok(prob) => prob,
        Err(_) => return Some(false),
    };
    if prob.pinned_negative().is_some() {
        return Some(false);
    }
    let out = solve_feasibility(&prob, &SolveOptions::default()).ok()?;
    if out.status != SolveStatus::Feasible {
        return None;
    }
    let cert = extract_certificate(out.matrix.as_ref()?, &prob.basis, 1e-7).ok()?;
    verify_certificate(p, &cert, 1e-6).ok.then_some(true)
}
