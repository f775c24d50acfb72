use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use thiserror::Error;

use crate::poly::{rational_to_f64, Exponent, Polynomial, RealPolynomial};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CertificateError {
    #[error("matrix has eigenvalue {eigenvalue} below the allowed {bound}")]
    NotPsd { eigenvalue: f64, bound: f64 },
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Certificate {
    pub squares: Vec<RealPolynomial>,
    pub residual_inf_norm: Option<f64>,
    pub basis_used: Vec<Exponent>,
}

impl Certificate {
    pub fn empty() -> Self {
        Certificate {
            squares: Vec::new(),
            residual_inf_norm: None,
            basis_used: Vec::new(),
        }
    }

    /// Concatenates the squares of per-leaf certificates.
    pub fn merge(parts: impl IntoIterator<Item = Certificate>) -> Certificate {
        let mut out = Certificate::empty();
        for c in parts {
            out.squares.extend(c.squares);
            out.basis_used.extend(c.basis_used);
        }
        out.basis_used.sort();
        out.basis_used.dedup();
        out
    }
}

/// Splits a PSD Gram matrix into squares `sqrt(lambda_k) * (v_k . G)`,
/// largest eigenvalue first. Eigenvalues at or below `clip_tol * ||M||_2`
/// are dropped.
pub fn extract_certificate(
    m: &DMatrix<f64>,
    basis: &[Exponent],
    clip_tol: f64,
) -> Result<Certificate, CertificateError> {
    assert_eq!(m.nrows(), basis.len());
    let nvars = basis.first().map(Exponent::nvars).unwrap_or(0);
    if basis.is_empty() {
        return Ok(Certificate::empty());
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let norm = eig.eigenvalues.iter().fold(0.0f64, |a, l| a.max(l.abs()));
    let bound = -clip_tol * (1.0 + norm);
    let lowest = eig.eigenvalues.min();
    if lowest < bound {
        return Err(CertificateError::NotPsd {
            eigenvalue: lowest,
            bound,
        });
    }
    let mut order: Vec<usize> = (0..basis.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut squares = Vec::new();
    for k in order {
        let lam = eig.eigenvalues[k];
        if lam <= clip_tol * norm {
            continue;
        }
        let s = lam.sqrt();
        let mut q = RealPolynomial::zero(nvars);
        for (i, e) in basis.iter().enumerate() {
            let c = s * eig.eigenvectors[(i, k)];
            if c != 0.0 {
                q.add_term(e.clone(), c);
            }
        }
        squares.push(q);
    }
    Ok(Certificate {
        squares,
        residual_inf_norm: None,
        basis_used: basis.to_vec(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verification {
    pub ok: bool,
    pub residual: f64,
}

/// `max |coeff(p - sum q_i^2)|`, accumulated in floats from the exact `p`.
pub fn certificate_residual(p: &Polynomial, cert: &Certificate) -> f64 {
    let mut diff: BTreeMap<Exponent, f64> = p.terms().map(|(e, c)| (e.clone(), rational_to_f64(c))).collect();
    for q in &cert.squares {
        for (e, c) in q.square().terms {
            *diff.entry(e).or_insert(0.0) -= c;
        }
    }
    diff.values().fold(0.0, |a, v| a.max(v.abs()))
}

pub fn verify_certificate(p: &Polynomial, cert: &Certificate, tol: f64) -> Verification {
    let residual = certificate_residual(p, cert);
    Verification {
        ok: residual <= tol * (1.0 + p.max_abs_coeff()),
        residual,
    }
}
