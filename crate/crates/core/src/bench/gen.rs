//! Seeded benchmark families.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::geometry::{Direction, DirectionSource};
use crate::poly::{integer, Exponent, Polynomial};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("unknown named polynomial `{0}`")]
    UnknownName(String),
    #[error("degree {0} is below the minimum of 4")]
    DegreeTooSmall(u32),
    #[error("parameter {name} must be at least 1")]
    ZeroParameter { name: &'static str },
    #[error("{t} distinct monomials requested but only {available} exist")]
    TooManyTerms { t: usize, available: u128 },
}

/// splitmix64 stream.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in `0..n` by rejection.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        let zone = u64::MAX - u64::MAX % n;
        loop {
            let v = self.next_u64();
            if v < zone {
                return v % n;
            }
        }
    }

    /// Uniform in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box-Muller.
    pub fn gaussian(&mut self) -> f64 {
        let u1 = 1.0 - self.unit();
        let u2 = self.unit();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Nonzero integer uniform in `[-99, 99]`.
    pub fn coefficient(&mut self) -> i64 {
        let v = self.below(198) as i64 - 99;
        if v >= 0 {
            v + 1
        } else {
            v
        }
    }
}

fn binomial(n: u64, k: u64) -> u128 {
    let k = k.min(n - k.min(n));
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Uniform composition of `total` into `parts` nonnegative parts.
fn composition(rng: &mut SplitMix64, total: u32, parts: usize) -> Vec<u32> {
    let slots = total as usize + parts - 1;
    let mut bars: BTreeSet<usize> = BTreeSet::new();
    // Floyd's sampling of parts-1 distinct bar positions.
    for j in (slots - (parts - 1))..slots {
        let t = rng.below(j as u64 + 1) as usize;
        if !bars.insert(t) {
            bars.insert(j);
        }
    }
    let mut out = Vec::with_capacity(parts);
    let mut prev = 0usize;
    for &b in &bars {
        out.push((b - prev) as u32);
        prev = b + 1;
    }
    out.push((slots - prev) as u32);
    out
}

/// `t` distinct monomials in `n` variables of degree at most `d`, the first of
/// degree exactly `d`, each with a nonzero coefficient in `[-99, 99]`.
pub fn random_polynomial(rng: &mut SplitMix64, n: usize, d: u32, t: usize) -> Result<Polynomial, GenError> {
    if n == 0 {
        return Err(GenError::ZeroParameter { name: "n" });
    }
    if t == 0 {
        return Err(GenError::ZeroParameter { name: "t" });
    }
    let available = binomial(n as u64 + d as u64, d as u64);
    if t as u128 > available {
        return Err(GenError::TooManyTerms { t, available });
    }
    let mut seen = BTreeSet::new();
    let top = Exponent::new(composition(rng, d, n));
    seen.insert(top.clone());
    let mut order = vec![top];
    while order.len() < t {
        let mut c = composition(rng, d, n + 1);
        c.pop();
        let e = Exponent::new(c);
        if seen.insert(e.clone()) {
            order.push(e);
        }
    }
    Ok(Polynomial::from_terms(
        n,
        order.into_iter().map(|e| (e, integer(rng.coefficient()))),
    ))
}

/// Sum of `k` squares of random polynomials; returns the expansion and the
/// squared polynomials.
pub fn gen_sqr(k: usize, n: usize, d: u32, t: usize, seed: u64) -> Result<(Polynomial, Vec<Polynomial>), GenError> {
    if d == 0 {
        return Err(GenError::ZeroParameter { name: "d" });
    }
    let mut rng = SplitMix64::new(seed);
    let gs = (0..k)
        .map(|_| random_polynomial(&mut rng, n, d, t))
        .collect::<Result<Vec<_>, _>>()?;
    let p = gs.iter().fold(Polynomial::zero(n), |acc, g| &acc + &g.square());
    Ok((p, gs))
}

/// `g1^2 + g2 * (x1 + ... + xn) + 100 g3^2 + 100` with `deg g1 = d`,
/// `deg g2 = d - 3`, `deg g3 = d - 2`.
pub fn gen_rn(n: usize, d: u32, seed: u64) -> Result<Polynomial, GenError> {
    if d < 4 {
        return Err(GenError::DegreeTooSmall(d));
    }
    let mut rng = SplitMix64::new(seed);
    let mut draw = |deg: u32| {
        let all = binomial(n as u64 + deg as u64, deg as u64);
        random_polynomial(&mut rng, n, deg, all.min(20) as usize)
    };
    let g1 = draw(d)?;
    let g2 = draw(d - 3)?;
    let g3 = draw(d - 2)?;
    let linear = Polynomial::from_terms(n, (0..n).map(|k| (Exponent::unit(n, k, 1), integer(1))));
    let hundred = integer(100);
    let mut p = &g1.square() + &(&g2 * &linear);
    p = &p + &g3.square().scale(&hundred);
    p = &p + &Polynomial::constant(n, hundred);
    Ok(p)
}

/// `(x1^2 + ... + xN^2)^2 - 2 sum_i x_i^2 sum_{j=1..m} x_{i+3j+1}^2` with
/// `N = 3m + 2` and indices taken cyclically.
pub fn gen_bm(m: usize) -> Result<Polynomial, GenError> {
    if m == 0 {
        return Err(GenError::ZeroParameter { name: "m" });
    }
    let n = 3 * m + 2;
    let squares = Polynomial::from_terms(n, (0..n).map(|k| (Exponent::unit(n, k, 2), integer(1))));
    let mut p = squares.square();
    for i in 0..n {
        for j in 1..=m {
            let other = (i + 3 * j + 1) % n;
            let e = &Exponent::unit(n, i, 2) + &Exponent::unit(n, other, 2);
            p.add_term(e, integer(-2));
        }
    }
    Ok(p)
}

pub const NAMED: [&str; 5] = ["motzkin", "choilam", "ex3", "ex5", "splitnotcover"];

pub fn gen_named(name: &str) -> Result<Polynomial, GenError> {
    let p = match name {
        "motzkin" => Polynomial::from_int_terms(2, [(1, [4, 2]), (1, [2, 4]), (-3, [2, 2]), (1, [0, 0])]),
        "choilam" => Polynomial::from_int_terms(
            3,
            [
                (1, [0, 0, 0]),
                (1, [2, 2, 0]),
                (1, [0, 2, 2]),
                (1, [2, 0, 2]),
                (-4, [1, 1, 1]),
            ],
        ),
        "ex3" => Polynomial::from_int_terms(3, [(1, [4, 0, 0]), (1, [0, 4, 0]), (1, [0, 0, 4]), (-1, [0, 0, 0])]),
        "ex5" => Polynomial::from_int_terms(2, [(1, [6, 0]), (1, [0, 6]), (1, [4, 0]), (-2, [2, 2]), (1, [0, 4])]),
        "splitnotcover" => Polynomial::from_int_terms(
            3,
            [
                (1, [4, 2, 2]),
                (1, [2, 4, 2]),
                (-2, [2, 2, 2]),
                (1, [0, 0, 2]),
                (1, [2, 2, 0]),
                (1, [2, 2, 4]),
            ],
        ),
        other => return Err(GenError::UnknownName(other.to_string())),
    };
    Ok(p)
}

/// `count` uniformly random unit directions in `n` dimensions.
pub fn random_directions(rng: &mut SplitMix64, n: usize, count: usize) -> Vec<Direction> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let v: Vec<f64> = (0..n).map(|_| rng.gaussian()).collect();
        if let Ok(d) = Direction::new(v, DirectionSource::Random) {
            out.push(d);
        }
    }
    out
}

/// A benchmark family with its parameters, without a seed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Family {
    Bm { m: usize },
    Sqr { k: usize, n: usize, d: u32, t: usize },
    Rn { n: usize, d: u32 },
    Named { name: String },
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Bm { m } => write!(f, "bm({m})"),
            Family::Sqr { k, n, d, t } => write!(f, "sqr({k},{n},{d},{t})"),
            Family::Rn { n, d } => write!(f, "rn({n},{d})"),
            Family::Named { name } => write!(f, "{name}"),
        }
    }
}

impl std::str::FromStr for Family {
    type Err = String;

    /// Parses the `Display` form, e.g. `sqr(4,5,10,3)`, `rn(5,6)`, `bm(2)`, `motzkin`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let Some((head, rest)) = s.split_once('(') else {
            return Ok(Family::Named { name: s.to_string() });
        };
        let args = rest
            .strip_suffix(')')
            .ok_or_else(|| format!("missing `)` in `{s}`"))?
            .split(',')
            .map(|a| {
                a.trim()
                    .parse::<u64>()
                    .map_err(|_| format!("bad number `{a}` in `{s}`"))
            })
            .collect::<Result<Vec<_>, _>>()?;
        match (head.trim(), args.as_slice()) {
            ("bm", [m]) => Ok(Family::Bm { m: *m as usize }),
            ("sqr", [k, n, d, t]) => Ok(Family::Sqr {
                k: *k as usize,
                n: *n as usize,
                d: *d as u32,
                t: *t as usize,
            }),
            ("rn", [n, d]) => Ok(Family::Rn {
                n: *n as usize,
                d: *d as u32,
            }),
            _ => Err(format!("unrecognised family `{s}`")),
        }
    }
}

/// A family together with the seed that makes it a single instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenSpec {
    pub family: Family,
    pub seed: u64,
}

impl GenSpec {
    pub fn new(family: Family, seed: u64) -> Self {
        GenSpec { family, seed }
    }

    pub fn generate(&self) -> Result<Polynomial, GenError> {
        match &self.family {
            Family::Bm { m } => gen_bm(*m),
            Family::Sqr { k, n, d, t } => gen_sqr(*k, *n, *d, *t, self.seed).map(|(p, _)| p),
            Family::Rn { n, d } => gen_rn(*n, *d, self.seed),
            Family::Named { name } => gen_named(name),
        }
    }

    pub fn id(&self) -> String {
        match self.family {
            Family::Bm { .. } | Family::Named { .. } => self.family.to_string(),
            _ => format!("{}#{}", self.family, self.seed),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::SupportSet;
    use proptest::prelude::*;

    #[test]
    fn splitmix_reference_values() {
        let mut r = SplitMix64::new(1234567);
        assert_eq!(r.next_u64(), 6457827717110365317);
        assert_eq!(r.next_u64(), 3203168211198807973);
    }

    #[test]
    fn bm1_expansion() {
        let p = gen_bm(1).unwrap();
        assert_eq!(p.nvars(), 5);
        assert_eq!(p.len(), 10);
        for k in 0..5 {
            assert_eq!(p.coeff(&Exponent::unit(5, k, 4)), Some(&integer(1)));
        }
        for (a, b) in [(0, 2), (0, 3), (1, 3), (1, 4), (2, 4)] {
            let e = &Exponent::unit(5, a, 2) + &Exponent::unit(5, b, 2);
            assert_eq!(p.coeff(&e), Some(&integer(2)), "x{}^2*x{}^2", a + 1, b + 1);
        }
        assert_eq!(gen_bm(2).unwrap().nvars(), 8);
        assert_eq!(gen_bm(3).unwrap().nvars(), 11);
    }

    #[test]
    fn named_polynomials() {
        assert_eq!(
            gen_named("motzkin").unwrap().support(),
            SupportSet::from_points(2, [[4, 2], [2, 4], [2, 2], [0, 0]])
        );
        assert_eq!(gen_named("choilam").unwrap().len(), 5);
        assert_eq!(gen_named("splitnotcover").unwrap().len(), 6);
        assert_eq!(gen_named("nope"), Err(GenError::UnknownName("nope".into())));
    }

    #[test]
    fn sqr_shape_and_determinism() {
        let (p, gs) = gen_sqr(4, 5, 10, 3, 7).unwrap();
        assert_eq!(gs.len(), 4);
        for g in &gs {
            assert_eq!(g.len(), 3);
            assert_eq!(g.total_degree(), 10);
            assert!(g.terms().all(|(_, c)| {
                let v = crate::poly::rational_to_f64(c);
                v != 0.0 && v.abs() <= 99.0
            }));
        }
        assert_eq!(gen_sqr(4, 5, 10, 3, 7).unwrap().0, p);
        assert_ne!(gen_sqr(4, 5, 10, 3, 8).unwrap().0, p);
        assert!(matches!(gen_sqr(1, 1, 2, 4, 0), Err(GenError::TooManyTerms { .. })));
    }

    #[test]
    fn rn_shape() {
        assert_eq!(gen_rn(5, 3, 0), Err(GenError::DegreeTooSmall(3)));
        let p = gen_rn(5, 6, 11).unwrap();
        assert_eq!(p.total_degree(), 12);
        assert_eq!(p, gen_rn(5, 6, 11).unwrap());
    }

    #[test]
    fn family_text_round_trip() {
        for f in ["bm(2)", "sqr(4,5,10,3)", "rn(5,6)", "motzkin"] {
            assert_eq!(f.parse::<Family>().unwrap().to_string(), f);
        }
        assert!("sqr(1,2)".parse::<Family>().is_err());
    }

    proptest! {
        #[test]
        fn compositions_sum_to_total(seed in any::<u64>(), total in 0u32..12, parts in 1usize..6) {
            let mut rng = SplitMix64::new(seed);
            let c = composition(&mut rng, total, parts);
            prop_assert_eq!(c.len(), parts);
            prop_assert_eq!(c.iter().sum::<u32>(), total);
        }

        #[test]
        fn coefficients_in_range(seed in any::<u64>()) {
            let mut rng = SplitMix64::new(seed);
            for _ in 0..50 {
                let c = rng.coefficient();
                prop_assert!(c != 0 && (-99..=99).contains(&c));
            }
        }
    }
}
