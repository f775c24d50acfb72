//! The end-to-end check and its machine-readable report.

use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;

use crate::poly::{Exponent, Polynomial};
use crate::reduce::{algpca, dense_basis, map_deletion, PruneStep, RefutationReason, RefutationReport};
use crate::sdp::{
    build_gram_system, emit_sdpa, extract_certificate, solve_feasibility, verify_certificate, Certificate, GramError,
    SolveOptions, SolveStatus,
};
use crate::split::{decompose_with_basis, DecomposeOptions, Decomposition, SplitNode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Sos,
    NotSos,
    Inconclusive,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Sos => 0,
            Verdict::NotSos => 1,
            Verdict::Inconclusive => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Sos => "sos",
            Verdict::NotSos => "not_sos",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub input_id: String,
    /// `false` skips splitting and solves over the dense basis of half the degree.
    pub split: bool,
    pub prechecks: bool,
    pub solve: SolveOptions,
    pub clip_tol: f64,
    pub residual_tol: f64,
    /// Write each leaf's `.dat-s` file here.
    pub sdpa_dir: Option<PathBuf>,
    pub keep_certificate: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            input_id: "input".into(),
            split: true,
            prechecks: true,
            solve: SolveOptions::default(),
            clip_tol: 1e-7,
            residual_tol: 1e-6,
            sdpa_dir: None,
            keep_certificate: true,
        }
    }
}

/// `b` leaves, the largest of basis size `s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct SplitShape {
    pub b: usize,
    pub s: usize,
}

#[derive(Debug, Clone, Default, PartialEq, serde::Serialize)]
pub struct Timings {
    pub algpca: f64,
    pub algexa: f64,
    pub decompose: f64,
    pub sdp: f64,
    pub verify: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct LeafReport {
    pub basis_size: usize,
    pub terms: usize,
    pub status: SolveStatus,
    pub residual: Option<f64>,
    pub iterations: usize,
    /// Whether a numerical solve was attempted for this leaf.
    pub solved: bool,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RunReport {
    pub input_id: String,
    pub nvars: usize,
    pub degree: u64,
    pub g0_size: Option<usize>,
    pub g_size: Option<usize>,
    pub split_shape: SplitShape,
    pub verdict: Verdict,
    pub refutation_reason: RefutationReason,
    pub refutation_witness: Option<Exponent>,
    pub refutation_support_point: Option<Exponent>,
    pub residual: Option<f64>,
    pub sdp_solves: usize,
    pub leaves: Vec<LeafReport>,
    pub timings_ms: Timings,
    pub certificate: Option<Certificate>,
    pub note: Option<String>,
}

fn millis(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

enum LeafResult {
    Certified(Certificate, LeafReport),
    Refuted(RefutationReport, LeafReport),
    Open(LeafReport, Option<String>),
}

fn solve_leaf(leaf: &SplitNode, idx: usize, opts: &RunOptions) -> LeafResult {
    let mut report = LeafReport {
        basis_size: leaf.basis.len(),
        terms: leaf.polynomial.len(),
        status: SolveStatus::Inconclusive,
        residual: None,
        iterations: 0,
        solved: false,
    };
    if leaf.polynomial.is_zero() {
        report.status = SolveStatus::Feasible;
        report.residual = Some(0.0);
        return LeafResult::Certified(Certificate::empty(), report);
    }
    let prob = match build_gram_system(&leaf.polynomial, &leaf.basis) {
        Ok(prob) => prob,
        Err(GramError::OutsideSumSet(a)) => {
            report.status = SolveStatus::InfeasibleCertifiedUpstream;
            let r = RefutationReport::refuted(RefutationReason::MissingSumExponent, a.clone(), a);
            return LeafResult::Refuted(r, report);
        }
    };
    if let Some(c) = prob.pinned_negative() {
        report.status = SolveStatus::InfeasibleCertifiedUpstream;
        let (i, _) = c.entries[0];
        let r = RefutationReport::refuted(
            RefutationReason::NegativeDiagonal,
            prob.basis[i].clone(),
            c.target.clone(),
        );
        return LeafResult::Refuted(r, report);
    }
    if let Some(dir) = &opts.sdpa_dir {
        let path = dir.join(format!("{}-leaf{idx}.dat-s", sanitize(&opts.input_id)));
        if let Err(e) = std::fs::create_dir_all(dir).and_then(|_| std::fs::write(&path, emit_sdpa(&prob))) {
            return LeafResult::Open(report, Some(format!("could not write {}: {e}", path.display())));
        }
    }
    report.solved = true;
    let out = match solve_feasibility(&prob, &opts.solve) {
        Ok(out) => out,
        Err(e) => return LeafResult::Open(report, Some(e.to_string())),
    };
    report.status = out.status;
    report.residual = Some(out.residual);
    report.iterations = out.iterations;
    match (out.status, out.matrix) {
        (SolveStatus::Feasible, Some(m)) => match extract_certificate(&m, &prob.basis, opts.clip_tol) {
            Ok(cert) => LeafResult::Certified(cert, report),
            Err(e) => LeafResult::Open(report, Some(e.to_string())),
        },
        _ => LeafResult::Open(report, None),
    }
}

fn sanitize(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Reduction, exact refutation checks, splitting, one SDP per leaf and a
/// final verification against the exact input. Every failure becomes part of
/// the report.
pub fn run_check(p: &Polynomial, opts: &RunOptions) -> RunReport {
    let start = Instant::now();
    let mut report = RunReport {
        input_id: opts.input_id.clone(),
        nvars: p.nvars(),
        degree: p.total_degree(),
        g0_size: None,
        g_size: None,
        split_shape: SplitShape { b: 1, s: 0 },
        verdict: Verdict::Inconclusive,
        refutation_reason: RefutationReason::None,
        refutation_witness: None,
        refutation_support_point: None,
        residual: None,
        sdp_solves: 0,
        leaves: Vec::new(),
        timings_ms: Timings::default(),
        certificate: None,
        note: None,
    };
    let finish = |mut r: RunReport| {
        r.timings_ms.total = millis(start);
        r
    };
    if p.is_zero() {
        report.verdict = Verdict::Sos;
        report.g0_size = Some(0);
        report.g_size = Some(0);
        report.residual = Some(0.0);
        report.certificate = opts.keep_certificate.then(Certificate::empty);
        return finish(report);
    }

    let t = Instant::now();
    let mut g = match algpca(p) {
        Ok(g0) => g0,
        Err(e) => {
            report.note = Some(e.to_string());
            return finish(report);
        }
    };
    report.g0_size = Some(g.len());
    report.timings_ms.algpca = millis(t);
    let t = Instant::now();
    let removed = map_deletion(&mut g.monomials, &p.even_support());
    g.provenance.push(PruneStep {
        step: "map_deletion".into(),
        removed,
    });
    report.timings_ms.algexa = millis(t);
    report.g_size = Some(g.len());
    if !opts.split {
        // one Gram solve over every monomial of half the degree
        g = dense_basis(p.nvars(), (p.total_degree() / 2) as u32);
    }
    report.split_shape.s = g.len();

    let t = Instant::now();
    let dopts = DecomposeOptions {
        split: opts.split,
        prechecks: opts.prechecks,
    };
    let tree = match decompose_with_basis(p, g, &dopts) {
        Ok(Decomposition::Tree(root)) => root,
        Ok(Decomposition::Refuted(r)) => {
            report.timings_ms.decompose = millis(t);
            report.verdict = Verdict::NotSos;
            report.refutation_reason = r.reason;
            report.refutation_witness = r.witness;
            report.refutation_support_point = r.support_point;
            return finish(report);
        }
        Err(e) => {
            report.note = Some(e.to_string());
            return finish(report);
        }
    };
    report.timings_ms.decompose = millis(t);
    let leaves = tree.leaves();
    report.split_shape = SplitShape {
        b: leaves.len(),
        s: leaves.iter().map(|l| l.basis.len()).max().unwrap_or(0),
    };

    let t = Instant::now();
    let results: Vec<LeafResult> = leaves
        .par_iter()
        .enumerate()
        .map(|(k, leaf)| solve_leaf(leaf, k, opts))
        .collect();
    report.timings_ms.sdp = millis(t);

    let mut certs = Vec::new();
    let mut refuted = None;
    let mut open = false;
    let mut notes = Vec::new();
    for r in results {
        let leaf = match r {
            LeafResult::Certified(c, leaf) => {
                certs.push(c);
                leaf
            }
            LeafResult::Refuted(rep, leaf) => {
                refuted.get_or_insert(rep);
                leaf
            }
            LeafResult::Open(leaf, note) => {
                open = true;
                notes.extend(note);
                leaf
            }
        };
        report.sdp_solves += usize::from(leaf.solved);
        report.leaves.push(leaf);
    }
    if !notes.is_empty() {
        report.note = Some(notes.join("; "));
    }
    if let Some(r) = refuted {
        report.verdict = Verdict::NotSos;
        report.refutation_reason = r.reason;
        report.refutation_witness = r.witness;
        report.refutation_support_point = r.support_point;
        return finish(report);
    }
    if open {
        return finish(report);
    }

    let t = Instant::now();
    let mut cert = Certificate::merge(certs);
    let check = verify_certificate(p, &cert, opts.residual_tol);
    report.timings_ms.verify = millis(t);
    cert.residual_inf_norm = Some(check.residual);
    report.residual = Some(check.residual);
    if check.ok {
        report.verdict = Verdict::Sos;
    } else {
        report.note = Some(format!("certificate residual {:e} above tolerance", check.residual));
    }
    if opts.keep_certificate {
        report.certificate = Some(cert);
    }
    finish(report)
}
