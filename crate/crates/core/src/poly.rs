//! Exact sparse multivariate polynomials over the rationals.
//!
//! Exponents are lattice points in the non-negative orthant and are ordered
//! graded-lexicographically everywhere so that every iteration in the crate is
//! deterministic.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Index, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Lattice point of a single monomial.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Exponent(Vec<u32>);

impl Exponent {
    pub fn new(coords: Vec<u32>) -> Self {
        Exponent(coords)
    }

    pub fn zero(nvars: usize) -> Self {
        Exponent(vec![0; nvars])
    }

    /// Unit vector along coordinate `k`, scaled by `power`.
    pub fn unit(nvars: usize, k: usize, power: u32) -> Self {
        let mut coords = vec![0; nvars];
        coords[k] = power;
        Exponent(coords)
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> u64 {
        self.0.iter().map(|&c| c as u64).sum()
    }

    pub fn is_even(&self) -> bool {
        self.0.iter().all(|c| c % 2 == 0)
    }

    pub fn double(&self) -> Exponent {
        Exponent(self.0.iter().map(|c| c * 2).collect())
    }

    /// `self / 2` when every coordinate is even.
    pub fn halve(&self) -> Option<Exponent> {
        if self.is_even() {
            Some(Exponent(self.0.iter().map(|c| c / 2).collect()))
        } else {
            None
        }
    }

    /// `self - other` when the difference stays in the orthant.
    pub fn checked_sub(&self, other: &Exponent) -> Option<Exponent> {
        debug_assert_eq!(self.nvars(), other.nvars());
        let mut out = Vec::with_capacity(self.0.len());
        for (a, b) in self.0.iter().zip(&other.0) {
            out.push(a.checked_sub(*b)?);
        }
        Some(Exponent(out))
    }

    pub fn dot(&self, direction: &[f64]) -> f64 {
        self.0.iter().zip(direction).map(|(&c, &d)| c as f64 * d).sum()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&c| c as f64).collect()
    }
}

impl From<Vec<u32>> for Exponent {
    fn from(coords: Vec<u32>) -> Self {
        Exponent(coords)
    }
}

impl<const N: usize> From<[u32; N]> for Exponent {
    fn from(coords: [u32; N]) -> Self {
        Exponent(coords.to_vec())
    }
}

impl Index<usize> for Exponent {
    type Output = u32;

    fn index(&self, k: usize) -> &u32 {
        &self.0[k]
    }
}

impl Add for &Exponent {
    type Output = Exponent;

    fn add(self, rhs: &Exponent) -> Exponent {
        debug_assert_eq!(self.nvars(), rhs.nvars());
        Exponent(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Ord for Exponent {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Exponent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, c) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl serde::Serialize for Exponent {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.0.serialize(serializer)
    }
}

/// Duplicate-free set of lattice points sharing one ambient dimension.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupportSet {
    nvars: usize,
    points: BTreeSet<Exponent>,
}

impl SupportSet {
    pub fn new(nvars: usize) -> Self {
        SupportSet {
            nvars,
            points: BTreeSet::new(),
        }
    }

    pub fn from_points<I>(nvars: usize, points: I) -> Self
    where
        I: IntoIterator,
        I::Item: Into<Exponent>,
    {
        let mut set = SupportSet::new(nvars);
        for p in points {
            set.insert(p.into());
        }
        set
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn insert(&mut self, point: Exponent) -> bool {
        assert_eq!(point.nvars(), self.nvars, "point dimension mismatch");
        self.points.insert(point)
    }

    pub fn remove(&mut self, point: &Exponent) -> bool {
        self.points.remove(point)
    }

    pub fn contains(&self, point: &Exponent) -> bool {
        self.points.contains(point)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Exponent> + '_ {
        self.points.iter()
    }

    pub fn points(&self) -> &BTreeSet<Exponent> {
        &self.points
    }

    pub fn retain(&mut self, f: impl FnMut(&Exponent) -> bool) {
        self.points.retain(f);
    }

    pub fn is_subset(&self, other: &SupportSet) -> bool {
        self.points.is_subset(&other.points)
    }

    pub fn to_vec(&self) -> Vec<Exponent> {
        self.points.iter().cloned().collect()
    }
}

impl<'a> IntoIterator for &'a SupportSet {
    type Item = &'a Exponent;
    type IntoIter = std::collections::btree_set::Iter<'a, Exponent>;

    fn into_iter(self) -> Self::IntoIter {
        self.points.iter()
    }
}

/// The even support `Λ_E`, viewed as the half-support `½Λ_E`.
///
/// Points are stored doubled (exactly the even exponents of the polynomial) so
/// that all coordinates stay integral; [`HalfSupport::halves`] recovers the
/// half points, which are integral because every stored coordinate is even.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HalfSupport {
    doubled: SupportSet,
}

impl HalfSupport {
    pub fn from_even(even: SupportSet) -> Self {
        debug_assert!(even.iter().all(Exponent::is_even));
        HalfSupport { doubled: even }
    }

    pub fn of(p: &Polynomial) -> Self {
        HalfSupport::from_even(p.even_support())
    }

    pub fn nvars(&self) -> usize {
        self.doubled.nvars()
    }

    pub fn doubled(&self) -> &SupportSet {
        &self.doubled
    }

    pub fn halves(&self) -> Vec<Exponent> {
        self.doubled
            .iter()
            .map(|a| a.halve().expect("even support point"))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.doubled.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doubled.is_empty()
    }
}

/// Sparse polynomial with exact rational coefficients. No stored coefficient
/// is ever zero.
#[derive(Clone, PartialEq, Eq)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<Exponent, BigRational>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Polynomial {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: BigRational) -> Self {
        Polynomial::monomial(c, Exponent::zero(nvars))
    }

    pub fn monomial(c: BigRational, exponent: Exponent) -> Self {
        let mut p = Polynomial::zero(exponent.nvars());
        p.add_term(exponent, c);
        p
    }

    pub fn from_terms<I>(nvars: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (Exponent, BigRational)>,
    {
        let mut p = Polynomial::zero(nvars);
        for (e, c) in terms {
            p.add_term(e, c);
        }
        p
    }

    /// Convenience constructor from integer coefficients.
    pub fn from_int_terms<I, E>(nvars: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (i64, E)>,
        E: Into<Exponent>,
    {
        Polynomial::from_terms(
            nvars,
            terms
                .into_iter()
                .map(|(c, e)| (e.into(), BigRational::from_integer(BigInt::from(c)))),
        )
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Exponent, &BigRational)> + '_ {
        self.terms.iter()
    }

    pub fn coeff(&self, e: &Exponent) -> Option<&BigRational> {
        self.terms.get(e)
    }

    pub fn total_degree(&self) -> u64 {
        self.terms.keys().map(Exponent::degree).max().unwrap_or(0)
    }

    /// Adds `c * x^e` in place, dropping the term if it cancels.
    pub fn add_term(&mut self, e: Exponent, c: BigRational) {
        assert_eq!(e.nvars(), self.nvars, "exponent dimension mismatch");
        if c.is_zero() {
            return;
        }
        match self.terms.entry(e) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn support(&self) -> SupportSet {
        SupportSet {
            nvars: self.nvars,
            points: self.terms.keys().cloned().collect(),
        }
    }

    /// Support points whose coordinates are all even.
    pub fn even_support(&self) -> SupportSet {
        SupportSet {
            nvars: self.nvars,
            points: self.terms.keys().filter(|e| e.is_even()).cloned().collect(),
        }
    }

    /// Keeps only the terms whose exponents lie in `t`.
    pub fn proj(&self, t: &SupportSet) -> Polynomial {
        assert_eq!(t.nvars(), self.nvars, "projection dimension mismatch");
        Polynomial {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| t.contains(e))
                .map(|(e, c)| (e.clone(), c.clone()))
                .collect(),
        }
    }

    /// Keeps the terms selected by `keep`.
    pub fn filter_terms(&self, mut keep: impl FnMut(&Exponent) -> bool) -> Polynomial {
        Polynomial {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| keep(e))
                .map(|(e, c)| (e.clone(), c.clone()))
                .collect(),
        }
    }

    pub fn scale(&self, k: &BigRational) -> Polynomial {
        if k.is_zero() {
            return Polynomial::zero(self.nvars);
        }
        Polynomial {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c * k)).collect(),
        }
    }

    pub fn linear_combine(k1: &BigRational, f: &Polynomial, k2: &BigRational, g: &Polynomial) -> Polynomial {
        assert_eq!(f.nvars, g.nvars, "operand dimension mismatch");
        let mut out = f.scale(k1);
        if !k2.is_zero() {
            for (e, c) in &g.terms {
                out.add_term(e.clone(), c * k2);
            }
        }
        out
    }

    pub fn multiply(&self, other: &Polynomial) -> Polynomial {
        assert_eq!(self.nvars, other.nvars, "operand dimension mismatch");
        let mut out = Polynomial::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                out.add_term(ea + eb, ca * cb);
            }
        }
        out
    }

    pub fn square(&self) -> Polynomial {
        self.multiply(self)
    }

    /// Largest absolute coefficient, as a float.
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms
            .values()
            .map(|c| rational_to_f64(c).abs())
            .fold(0.0, f64::max)
    }

    /// Renders with the given variable names (falls back to `x1..xn`).
    pub fn display_with<'a>(&'a self, names: &'a [String]) -> impl fmt::Display + 'a {
        PolyDisplay { poly: self, names }
    }
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        PolyDisplay { poly: self, names: &[] }.fmt(f)
    }
}

struct PolyDisplay<'a> {
    poly: &'a Polynomial,
    names: &'a [String],
}

impl fmt::Display for PolyDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.poly.is_zero() {
            return write!(f, "0");
        }
        // highest graded-lex term first
        for (idx, (e, c)) in self.poly.terms.iter().rev().enumerate() {
            let negative = c.is_negative();
            let mag = c.abs();
            if idx == 0 {
                if negative {
                    write!(f, "-")?;
                }
            } else if negative {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let factors = monomial_factors(e, self.names);
            if factors.is_empty() {
                write!(f, "{}", format_rational(&mag))?;
            } else if mag.is_one() {
                write!(f, "{}", factors.join("*"))?;
            } else {
                write!(f, "{}*{}", format_rational(&mag), factors.join("*"))?;
            }
        }
        Ok(())
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;

    fn add(self, rhs: &Polynomial) -> Polynomial {
        Polynomial::linear_combine(&BigRational::one(), self, &BigRational::one(), rhs)
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;

    fn sub(self, rhs: &Polynomial) -> Polynomial {
        Polynomial::linear_combine(&BigRational::one(), self, &-BigRational::one(), rhs)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;

    fn mul(self, rhs: &Polynomial) -> Polynomial {
        self.multiply(rhs)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;

    fn neg(self) -> Polynomial {
        self.scale(&-BigRational::one())
    }
}

/// `n/d` or `n` when the denominator is one.
pub fn format_rational(c: &BigRational) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

pub fn rational_to_f64(c: &BigRational) -> f64 {
    c.to_f64().unwrap_or_else(|| {
        let n = c.numer().to_f64().unwrap_or(f64::NAN);
        let d = c.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

pub fn rational(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn integer(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Polynomial with floating-point coefficients, used for certificates.
#[derive(Clone, Debug, PartialEq)]
pub struct RealPolynomial {
    pub nvars: usize,
    pub terms: BTreeMap<Exponent, f64>,
}

impl RealPolynomial {
    pub fn zero(nvars: usize) -> Self {
        RealPolynomial {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn from_exact(p: &Polynomial) -> Self {
        RealPolynomial {
            nvars: p.nvars(),
            terms: p.terms().map(|(e, c)| (e.clone(), rational_to_f64(c))).collect(),
        }
    }

    pub fn coeff(&self, e: &Exponent) -> f64 {
        self.terms.get(e).copied().unwrap_or(0.0)
    }

    pub fn add_term(&mut self, e: Exponent, c: f64) {
        *self.terms.entry(e).or_insert(0.0) += c;
    }

    pub fn square(&self) -> RealPolynomial {
        let mut out = RealPolynomial::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &self.terms {
                out.add_term(ea + eb, ca * cb);
            }
        }
        out
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.abs()).fold(0.0, f64::max)
    }
}

/// Serialized as a list of `[exponent, coefficient]` pairs.
impl serde::Serialize for RealPolynomial {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.terms.iter())
    }
}

impl RealPolynomial {
    /// Renders with the given variable names and, optionally, a fixed number
    /// of decimals.
    pub fn display_with<'a>(&'a self, names: &'a [String], decimals: Option<usize>) -> impl fmt::Display + 'a {
        RealDisplay {
            poly: self,
            names,
            decimals,
        }
    }
}

impl fmt::Display for RealPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.display_with(&[], None).fmt(f)
    }
}

struct RealDisplay<'a> {
    poly: &'a RealPolynomial,
    names: &'a [String],
    decimals: Option<usize>,
}

impl fmt::Display for RealDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // terms that would print as zero are left out
        let shown: Vec<(&Exponent, &f64)> = match self.decimals {
            Some(d) => {
                let cut = 0.5 * 10f64.powi(-(d as i32));
                self.poly.terms.iter().filter(|(_, c)| c.abs() >= cut).collect()
            }
            None => self.poly.terms.iter().collect(),
        };
        if shown.is_empty() {
            return write!(f, "0");
        }
        for (idx, (e, c)) in shown.into_iter().rev().enumerate() {
            if idx == 0 {
                if *c < 0.0 {
                    write!(f, "-")?;
                }
            } else if *c < 0.0 {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            match self.decimals {
                Some(d) => write!(f, "{:.*}", d, c.abs())?,
                None => write!(f, "{}", c.abs())?,
            }
            for factor in monomial_factors(e, self.names) {
                write!(f, "*{factor}")?;
            }
        }
        Ok(())
    }
}

fn monomial_factors(e: &Exponent, names: &[String]) -> Vec<String> {
    e.coords()
        .iter()
        .enumerate()
        .filter(|(_, &pow)| pow > 0)
        .map(|(k, &pow)| {
            let name = names.get(k).cloned().unwrap_or_else(|| format!("x{}", k + 1));
            if pow == 1 {
                name
            } else {
                format!("{name}^{pow}")
            }
        })
        .collect()
}
