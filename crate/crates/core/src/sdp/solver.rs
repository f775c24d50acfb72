//! PSD feasibility for Gram systems.
//!
//! The embedded method alternates between the affine constraint set and the
//! PSD cone with Dykstra's correction. Entry sets of distinct constraints are
//! disjoint, so the affine projection is exact and per-constraint. When the
//! solution sits on the cone boundary the projections creep, so near-feasible
//! iterates are finished with a Gauss-Newton solve on a factor `M = L L^T`.

use std::path::PathBuf;
use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

use super::gram::GramProblem;
use super::sdpa::{emit_sdpa, parse_solution, OutputConvention, SdpaError};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum SolverMode {
    #[default]
    Embedded,
    External {
        command: String,
        convention: OutputConvention,
        workdir: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    /// Constraint tolerance, relative to `1 + max |b|`.
    pub feas_tol: f64,
    pub psd_tol: f64,
    pub max_iter: usize,
    pub stagnation_window: usize,
    pub mode: SolverMode,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            feas_tol: 1e-8,
            psd_tol: 1e-9,
            max_iter: 20_000,
            stagnation_window: 500,
            mode: SolverMode::Embedded,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Feasible,
    InfeasibleCertifiedUpstream,
    NumericallyInfeasible,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub matrix: Option<DMatrix<f64>>,
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("external solver i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("external solver command is empty")]
    EmptyCommand,
    #[error("external solver exited with {status}: {stderr}")]
    ExternalFailed { status: String, stderr: String },
    #[error("unreadable external solver output: {0}")]
    Unparsable(#[from] SdpaError),
}

pub fn solve_feasibility(prob: &GramProblem, opts: &SolveOptions) -> Result<SolveOutcome, SolveError> {
    match &opts.mode {
        SolverMode::Embedded => Ok(solve_embedded(prob, opts)),
        SolverMode::External {
            command,
            convention,
            workdir,
        } => solve_external(prob, opts, command, *convention, workdir.as_ref()),
    }
}

/// Size cap for the dense normal equations of the factor polish.
const MAX_FACTOR_PARAMS: usize = 1500;
/// Low ranks tried by the factor polish before the spectral-gap guesses.
const SMALL_RANKS: usize = 8;
/// The factor polish must gain a factor 10 over this many steps.
const LM_WINDOW: usize = 10;
/// Eigenvalue ratio at which the gap rank is tried before the small ranks.
const DECISIVE_GAP: f64 = 1e6;

struct System {
    n: usize,
    b: Vec<f64>,
    norm_sq: Vec<f64>,
    entries: Vec<Vec<(usize, usize)>>,
    index: Vec<Vec<usize>>,
    scale: f64,
    tol: f64,
}

impl System {
    fn new(prob: &GramProblem, feas_tol: f64) -> Self {
        let b = prob.rhs();
        let scale = 1.0 + b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        System {
            n: prob.size(),
            norm_sq: prob.constraints.iter().map(|c| c.norm_sq()).collect(),
            entries: prob.constraints.iter().map(|c| c.entries.clone()).collect(),
            index: prob.entry_index(),
            b,
            scale,
            tol: feas_tol * scale,
        }
    }

    fn violations(&self, m: &DMatrix<f64>) -> Vec<f64> {
        self.entries
            .iter()
            .zip(&self.b)
            .map(|(es, b)| {
                let lhs: f64 = es
                    .iter()
                    .map(|&(i, j)| if i == j { m[(i, i)] } else { m[(i, j)] + m[(j, i)] })
                    .sum();
                lhs - b
            })
            .collect()
    }

    fn residual(&self, m: &DMatrix<f64>) -> f64 {
        self.violations(m).iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    fn project_affine(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = m.clone();
        for ((es, v), nsq) in self.entries.iter().zip(self.violations(m)).zip(&self.norm_sq) {
            let t = v / nsq;
            for &(i, j) in es {
                out[(i, j)] -= t;
                if i != j {
                    out[(j, i)] -= t;
                }
            }
        }
        out
    }

    /// Low-rank Levenberg-Marquardt first, then the full-rank Gauss-Newton.
    fn polish(&self, start: &DMatrix<f64>, steps: usize) -> Option<DMatrix<f64>> {
        let eig = SymmetricEigen::new(start.clone());
        let mut order: Vec<usize> = (0..self.n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let lams: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k].max(0.0)).collect();
        let mut best: Option<(f64, DMatrix<f64>)> = None;
        let gaps = gap_ranks(&lams, 3);
        // a sharp spectral cliff almost always marks the solution rank
        let mut ranks: Vec<usize> = gaps
            .first()
            .filter(|&&r| lams[r - 1] > DECISIVE_GAP * lams.get(r).copied().unwrap_or(0.0))
            .into_iter()
            .copied()
            .collect();
        for r in (1..=SMALL_RANKS).chain(gaps) {
            if !ranks.contains(&r) {
                ranks.push(r);
            }
        }
        ranks.retain(|&r| r < self.n && r * self.n <= MAX_FACTOR_PARAMS);
        for rank in ranks {
            let mut l = DMatrix::<f64>::zeros(self.n, rank);
            for (c, &k) in order[..rank].iter().enumerate() {
                l.set_column(c, &(eig.eigenvectors.column(k) * lams[c].sqrt()));
            }
            if let Some(m) = self.polish_factor(l, steps) {
                let res = self.residual(&m);
                if res <= 1e-12 * self.scale {
                    return Some(m);
                }
                if best.as_ref().is_none_or(|(r, _)| res < *r) {
                    best = Some((res, m));
                }
            }
        }
        if let Some((_, m)) = best {
            return Some(m);
        }
        self.polish_full(start, steps)
    }

    /// Levenberg-Marquardt on the entries of an `n x r` factor. With `r` at
    /// the rank of a solution the system is overdetermined but consistent.
    fn polish_factor(&self, mut l: DMatrix<f64>, steps: usize) -> Option<DMatrix<f64>> {
        let (n, r) = l.shape();
        let m = self.b.len();
        let floor = 1e-15 * self.scale;
        let mut gram = &l * l.transpose();
        let mut res = DVector::from_vec(self.violations(&gram));
        let mut mu = 0.0;
        let mut history = vec![res.norm()];
        for step in 0..steps {
            if res.amax() <= floor {
                break;
            }
            // a wrong rank shows up as linear crawl; give up on it early
            if step >= LM_WINDOW && history[step] > 0.1 * history[step - LM_WINDOW] {
                break;
            }
            let mut jac = DMatrix::<f64>::zeros(m, n * r);
            for (k, es) in self.entries.iter().enumerate() {
                for &(i, j) in es {
                    for q in 0..r {
                        jac[(k, i + q * n)] += 2.0 * l[(j, q)];
                        if i != j {
                            jac[(k, j + q * n)] += 2.0 * l[(i, q)];
                        }
                    }
                }
            }
            let jt = jac.transpose();
            // same step either way; factor whichever Gram side is smaller
            let wide = m < n * r;
            let normal = if wide { &jac * &jt } else { &jt * &jac };
            let grad = if wide { res.clone() } else { &jt * &res };
            if mu == 0.0 {
                let diag = jac.column_iter().map(|c| c.norm_squared()).fold(0.0, f64::max);
                mu = 1e-6 * diag.max(1e-300);
            }
            let rn = res.norm();
            let mut improved = false;
            for _ in 0..10 {
                let mut a = normal.clone();
                for d in 0..a.nrows() {
                    a[(d, d)] += mu;
                }
                let Some(ch) = a.cholesky() else {
                    mu *= 10.0;
                    continue;
                };
                let solved = ch.solve(&grad);
                let delta = if wide { &jt * solved } else { solved };
                let cand = &l - DMatrix::from_column_slice(n, r, delta.as_slice());
                let cgram = &cand * cand.transpose();
                let cres = DVector::from_vec(self.violations(&cgram));
                let cn = cres.norm();
                if cn < rn {
                    improved = cn < (1.0 - 1e-3) * rn;
                    l = cand;
                    gram = cgram;
                    res = cres;
                    mu = (mu / 3.0).max(1e-300);
                    break;
                }
                mu *= 4.0;
            }
            if !improved {
                break;
            }
            history.push(res.norm());
        }
        (res.amax() <= self.tol).then_some(gram)
    }

    /// Gauss-Newton on `r(L) = A(L L^T) - b` with minimum-norm steps, run
    /// until the residual stops improving. Returns `L L^T` when it meets the
    /// tolerance.
    fn polish_full(&self, start: &DMatrix<f64>, steps: usize) -> Option<DMatrix<f64>> {
        let n = self.n;
        let m = self.b.len();
        let eig = SymmetricEigen::new(start.clone());
        let mut l = eig.eigenvectors.clone();
        for (k, lam) in eig.eigenvalues.iter().enumerate() {
            l.column_mut(k).scale_mut(lam.max(0.0).sqrt());
        }
        let mut gram = &l * l.transpose();
        let mut r = self.violations(&gram);
        let mut rnorm = norm2(&r);
        let floor = 1e-15 * self.scale;
        let mut slow = 0;
        for _ in 0..steps {
            if rnorm <= floor {
                break;
            }
            let mut h = DMatrix::<f64>::zeros(m, m);
            for i in 0..n {
                let row = &self.index[i];
                for j in 0..n {
                    let k = row[j];
                    for jj in 0..n {
                        h[(k, row[jj])] += 4.0 * gram[(j, jj)];
                    }
                }
            }
            let rhs = DVector::from_column_slice(&r);
            let mut y = None;
            let mut damp = 1e-12 * (h.trace() / m as f64 + 1.0);
            for _ in 0..6 {
                let mut hd = h.clone();
                for d in 0..m {
                    hd[(d, d)] += damp;
                }
                if let Some(ch) = hd.cholesky() {
                    y = Some(ch.solve(&rhs));
                    break;
                }
                damp *= 100.0;
            }
            let Some(y) = y else { break };
            let mut ymat = DMatrix::<f64>::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    ymat[(i, j)] = y[self.index[i][j]];
                }
            }
            let step = -2.0 * &ymat * &l;
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..12 {
                let cand = &l + alpha * &step;
                let cgram = &cand * cand.transpose();
                let cr = self.violations(&cgram);
                let cn = norm2(&cr);
                if cn < rnorm {
                    // repeated weak gains mean we are at rounding level
                    slow = if cn < 0.5 * rnorm { 0 } else { slow + 1 };
                    accepted = slow < 4;
                    l = cand;
                    gram = cgram;
                    r = cr;
                    rnorm = cn;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        r.iter().all(|v| v.abs() <= self.tol).then_some(gram)
    }
}

/// Up to `count` ranks at the largest relative drops of a descending spectrum.
fn gap_ranks(lams: &[f64], count: usize) -> Vec<usize> {
    let top = lams.first().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return Vec::new();
    }
    let ratio = |r: usize| lams[r - 1] / lams.get(r).copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
    let mut ranks: Vec<usize> = (1..=lams.len()).filter(|&r| lams[r - 1] > 1e-12 * top).collect();
    ranks.sort_by(|&a, &b| ratio(b).total_cmp(&ratio(a)));
    ranks.truncate(count);
    ranks
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn project_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let mut v = eig.eigenvectors.clone();
    for (k, lam) in eig.eigenvalues.iter().enumerate() {
        v.column_mut(k).scale_mut(lam.max(0.0).sqrt());
    }
    &v * v.transpose()
}

fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    SymmetricEigen::new(m.clone()).eigenvalues.min()
}

fn outcome(status: SolveStatus, matrix: Option<DMatrix<f64>>, residual: f64, iterations: usize) -> SolveOutcome {
    SolveOutcome {
        status,
        matrix,
        residual,
        iterations,
    }
}

fn solve_embedded(prob: &GramProblem, opts: &SolveOptions) -> SolveOutcome {
    let sys = System::new(prob, opts.feas_tol);
    let n = sys.n;
    if n == 0 {
        let res = sys.b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let status = if res <= sys.tol {
            SolveStatus::Feasible
        } else {
            SolveStatus::NumericallyInfeasible
        };
        return outcome(status, Some(DMatrix::zeros(0, 0)), res, 0);
    }
    let polish_steps = 100;
    let mut y = DMatrix::<f64>::zeros(n, n);
    let mut q = DMatrix::<f64>::zeros(n, n);
    let mut window_gap = f64::INFINITY;
    let mut residual = f64::INFINITY;
    let mut last_polish_res = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let x = sys.project_affine(&y);
        let z = &x + &q;
        y = project_psd(&z);
        q = z - &y;
        residual = sys.residual(&y);
        if residual <= sys.tol {
            let m = sys.polish(&y, polish_steps).unwrap_or(y);
            let res = sys.residual(&m);
            return outcome(SolveStatus::Feasible, Some(m), res, it);
        }
        // Try the Newton finish when close, but only after a tenfold gain.
        if it % 25 == 0 && residual < 1e-3 * sys.scale && residual < 0.1 * last_polish_res {
            last_polish_res = residual;
            if let Some(m) = sys.polish(&y, polish_steps) {
                let res = sys.residual(&m);
                return outcome(SolveStatus::Feasible, Some(m), res, it);
            }
        }
        if it % opts.stagnation_window == 0 {
            let gap = (&x - &y).norm();
            if gap > 10.0 * sys.tol {
                let rate = gap / window_gap;
                let stalled = rate > 0.99;
                // windows still needed at the current rate, against what is left
                let needed = (10.0 * sys.tol / gap).ln() / rate.ln();
                let hopeless = needed * opts.stagnation_window as f64 > 2.0 * (opts.max_iter - it) as f64;
                if stalled || hopeless {
                    if let Some(m) = sys.polish(&y, polish_steps) {
                        let res = sys.residual(&m);
                        return outcome(SolveStatus::Feasible, Some(m), res, it);
                    }
                    let status = if stalled {
                        SolveStatus::NumericallyInfeasible
                    } else {
                        SolveStatus::Inconclusive
                    };
                    return outcome(status, None, residual, it);
                }
            }
            window_gap = gap;
        }
    }
    if let Some(m) = sys.polish(&y, polish_steps) {
        let res = sys.residual(&m);
        return outcome(SolveStatus::Feasible, Some(m), res, opts.max_iter);
    }
    outcome(SolveStatus::Inconclusive, None, residual, opts.max_iter)
}

static SCRATCH_COUNTER: AtomicUsize = AtomicUsize::new(0);

fn solve_external(
    prob: &GramProblem,
    opts: &SolveOptions,
    command: &str,
    convention: OutputConvention,
    workdir: Option<&PathBuf>,
) -> Result<SolveOutcome, SolveError> {
    let mut parts = command.split_whitespace();
    let program = parts.next().ok_or(SolveError::EmptyCommand)?;
    let dir = workdir.cloned().unwrap_or_else(std::env::temp_dir);
    std::fs::create_dir_all(&dir)?;
    let stem = format!(
        "gram-{}-{}",
        std::process::id(),
        SCRATCH_COUNTER.fetch_add(1, Ordering::Relaxed)
    );
    let input = dir.join(format!("{stem}.dat-s"));
    let output = dir.join(format!("{stem}.sol"));
    std::fs::write(&input, emit_sdpa(prob))?;
    let result = Command::new(program).args(parts).arg(&input).arg(&output).output()?;
    if !result.status.success() {
        return Err(SolveError::ExternalFailed {
            status: result.status.to_string(),
            stderr: String::from_utf8_lossy(&result.stderr).trim().to_string(),
        });
    }
    let text = std::fs::read_to_string(&output)?;
    let m = parse_solution(&text, prob.size(), convention)?;
    if workdir.is_none() {
        let _ = std::fs::remove_file(&input);
        let _ = std::fs::remove_file(&output);
    }
    let sys = System::new(prob, opts.feas_tol);
    let residual = sys.residual(&m);
    let trusted = residual <= sys.tol && min_eigenvalue(&m) >= -opts.psd_tol;
    Ok(if trusted {
        outcome(SolveStatus::Feasible, Some(m), residual, 0)
    } else {
        outcome(SolveStatus::Inconclusive, None, residual, 0)
    })
}
