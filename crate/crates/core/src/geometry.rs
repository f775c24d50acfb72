//! Lattice and direction geometry for basis selection.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::poly::{Exponent, HalfSupport, SupportSet};

/// Candidate basis monomials.
pub type CandidateSet = SupportSet;

/// Hard cap on the size of the candidate box.
pub const MAX_CANDIDATES: u128 = 100_000_000;

/// Ties within this margin are kept when pruning.
pub const PRUNE_EPS: f64 = 1e-9;

const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_OFF_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("candidate box holds {count} points, above the limit of {MAX_CANDIDATES}")]
    CandidateOverflow { count: u128 },
    #[error("Jacobi iteration did not converge after {sweeps} sweeps")]
    JacobiNoConvergence { sweeps: usize },
    #[error("direction vector is zero")]
    ZeroDirection,
    #[error("half support is empty")]
    EmptyHalfSupport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionSource {
    Coordinate,
    Degree,
    Pca,
    Random,
}

/// Unit normal of a pruning hyperplane.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction {
    normal: Vec<f64>,
    source: DirectionSource,
}

impl Direction {
    pub fn new(normal: Vec<f64>, source: DirectionSource) -> Result<Self, GeometryError> {
        let norm = normal.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !norm.is_finite() || norm <= 0.0 {
            return Err(GeometryError::ZeroDirection);
        }
        Ok(Direction {
            normal: normal.into_iter().map(|x| x / norm).collect(),
            source,
        })
    }

    pub fn coordinate(nvars: usize, k: usize) -> Self {
        let mut v = vec![0.0; nvars];
        v[k] = 1.0;
        Direction::new(v, DirectionSource::Coordinate).expect("unit vector")
    }

    pub fn degree(nvars: usize) -> Self {
        Direction::new(vec![1.0; nvars], DirectionSource::Degree).expect("nonzero")
    }

    pub fn normal(&self) -> &[f64] {
        &self.normal
    }

    pub fn source(&self) -> DirectionSource {
        self.source
    }

    pub fn negated(&self) -> Direction {
        Direction {
            normal: self.normal.iter().map(|x| -x).collect(),
            source: self.source,
        }
    }
}

/// Eigen-structure of `B Bᵀ`, where the columns of `B` are the half-support points.
#[derive(Debug, Clone)]
pub struct PcaModel {
    pub matrix: Vec<Vec<f64>>,
    /// `(eigenvalue, unit eigenvector)`, eigenvalues descending.
    pub eigenpairs: Vec<(f64, Vec<f64>)>,
}

impl PcaModel {
    pub fn directions(&self) -> Vec<Direction> {
        self.eigenpairs
            .iter()
            .filter_map(|(_, v)| Direction::new(v.clone(), DirectionSource::Pca).ok())
            .collect()
    }
}

pub fn minkowski_sum(a: &SupportSet, b: &SupportSet) -> SupportSet {
    assert_eq!(a.nvars(), b.nvars());
    let mut out = SupportSet::new(a.nvars());
    for x in a {
        for y in b {
            out.insert(x + y);
        }
    }
    out
}

/// `{b ∈ G : a - b ∈ G}`.
pub fn map_set(g: &CandidateSet, a: &Exponent) -> BTreeSet<Exponent> {
    g.iter()
        .filter(|b| a.checked_sub(b).is_some_and(|r| g.contains(&r)))
        .cloned()
        .collect()
}

/// Integer points in the bounding box of the half support, restricted to the
/// band of total degrees the half support spans. Always a superset of the
/// lattice points of `conv(½Λ_E)`.
pub fn initial_candidates(h: &HalfSupport) -> Result<CandidateSet, GeometryError> {
    let halves = h.halves();
    if halves.is_empty() {
        return Err(GeometryError::EmptyHalfSupport);
    }
    let n = h.nvars();
    let mut lo = vec![u32::MAX; n];
    let mut hi = vec![0u32; n];
    let mut deg_lo = u64::MAX;
    let mut deg_hi = 0u64;
    for p in &halves {
        for k in 0..n {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
        deg_lo = deg_lo.min(p.degree());
        deg_hi = deg_hi.max(p.degree());
    }
    let count = (0..n).try_fold(1u128, |acc, k| acc.checked_mul((hi[k] - lo[k] + 1) as u128));
    match count {
        Some(c) if c <= MAX_CANDIDATES => {}
        Some(c) => return Err(GeometryError::CandidateOverflow { count: c }),
        None => return Err(GeometryError::CandidateOverflow { count: u128::MAX }),
    }

    // remaining[k] = minimal / maximal degree still reachable from coordinates k..n
    let mut min_tail = vec![0u64; n + 1];
    let mut max_tail = vec![0u64; n + 1];
    for k in (0..n).rev() {
        min_tail[k] = min_tail[k + 1] + lo[k] as u64;
        max_tail[k] = max_tail[k + 1] + hi[k] as u64;
    }

    let mut out = SupportSet::new(n);
    let mut cur = vec![0u32; n];
    fn rec(
        k: usize,
        deg: u64,
        cur: &mut Vec<u32>,
        bounds: (&[u32], &[u32], &[u64], &[u64]),
        band: (u64, u64),
        out: &mut SupportSet,
    ) {
        let (lo, hi, min_tail, max_tail) = bounds;
        if k == cur.len() {
            if deg >= band.0 && deg <= band.1 {
                out.insert(Exponent::new(cur.clone()));
            }
            return;
        }
        for v in lo[k]..=hi[k] {
            let d = deg + v as u64;
            if d + min_tail[k + 1] > band.1 {
                break;
            }
            if d + max_tail[k + 1] < band.0 {
                continue;
            }
            cur[k] = v;
            rec(k + 1, d, cur, bounds, band, out);
        }
    }
    rec(
        0,
        0,
        &mut cur,
        (&lo, &hi, &min_tail, &max_tail),
        (deg_lo, deg_hi),
        &mut out,
    );
    Ok(out)
}

/// Removes candidates strictly outside the slab `c⁻ ≤ r·b ≤ c⁺` spanned by the
/// half support along `r` (ties within `eps` are kept).
pub fn prune_halfspace(c: &CandidateSet, r: &Direction, h: &HalfSupport, eps: f64) -> CandidateSet {
    let halves = h.halves();
    if halves.is_empty() {
        return c.clone();
    }
    let dots: Vec<f64> = halves.iter().map(|a| a.dot(r.normal())).collect();
    let c_plus = dots.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let c_minus = dots.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut out = c.clone();
    out.retain(|b| {
        let v = b.dot(r.normal());
        v <= c_plus + eps && v >= c_minus - eps
    });
    out
}

pub fn pca_directions(h: &HalfSupport) -> Result<PcaModel, GeometryError> {
    let halves = h.halves();
    if halves.is_empty() {
        return Err(GeometryError::EmptyHalfSupport);
    }
    let n = h.nvars();
    let mut m = vec![vec![0.0; n]; n];
    for p in &halves {
        let v = p.to_f64();
        for i in 0..n {
            for j in 0..n {
                m[i][j] += v[i] * v[j];
            }
        }
    }
    let (values, vectors) = jacobi_eigen(&m)?;
    let mut eigenpairs: Vec<(f64, Vec<f64>)> = values
        .into_iter()
        .zip(vectors)
        .map(|(lambda, mut v)| {
            let mut lead = 0;
            for k in 1..v.len() {
                if v[k].abs() > v[lead].abs() + 1e-12 {
                    lead = k;
                }
            }
            if v[lead] < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            (lambda, v)
        })
        .collect();
    eigenpairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    Ok(PcaModel { matrix: m, eigenpairs })
}

/// Cyclic Jacobi rotations on a symmetric matrix. Returns eigenvalues and the
/// matching unit eigenvectors (unsorted).
#[allow(clippy::needless_range_loop)]
pub fn jacobi_eigen(matrix: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<Vec<f64>>), GeometryError> {
    let n = matrix.len();
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
        .max(1.0);

    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += 2.0 * a[p][q] * a[p][q];
            }
        }
        if off.sqrt() <= JACOBI_OFF_TOL * scale {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = if theta == 0.0 {
                    1.0
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let (akp, akq) = (row[p], row[q]);
                    row[p] = c * akp - s * akq;
                    row[q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vkp, vkq) = (row[p], row[q]);
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        return Err(GeometryError::JacobiNoConvergence {
            sweeps: JACOBI_MAX_SWEEPS,
        });
    }
    let values = (0..n).map(|i| a[i][i]).collect();
    let vectors = (0..n).map(|j| (0..n).map(|i| v[i][j]).collect()).collect();
    Ok((values, vectors))
}

/// Points of `s` that are the unique maximizer of some direction in `dirs`
/// by a margin of 1e-9. Every returned point is a vertex of `conv(s)`; vertices
/// no direction isolates are missed.
pub fn extreme_points(s: &SupportSet, dirs: &[Direction]) -> BTreeSet<Exponent> {
    let mut out = BTreeSet::new();
    if s.len() == 1 {
        out.extend(s.iter().cloned());
        return out;
    }
    for d in dirs {
        let mut best: Option<(&Exponent, f64)> = None;
        let mut second = f64::NEG_INFINITY;
        for p in s {
            let v = p.dot(d.normal());
            match best {
                Some((_, bv)) if v <= bv => second = second.max(v),
                Some((_, bv)) => {
                    second = second.max(bv);
                    best = Some((p, v));
                }
                None => best = Some((p, v)),
            }
        }
        if let Some((p, v)) = best {
            if v > second + 1e-9 {
                out.insert(p.clone());
            }
        }
    }
    out
}
