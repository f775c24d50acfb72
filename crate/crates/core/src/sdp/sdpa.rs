//! SDPA sparse (`.dat-s`) interchange for Gram feasibility problems.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use thiserror::Error;

use super::gram::GramProblem;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SdpaError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("unexpected end of file: {0}")]
    Truncated(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdpaEntry {
    pub matrix: usize,
    pub block: usize,
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

/// Contents of a `.dat-s` file. Matrix 0 is the objective, matrix `k` the
/// `k`-th constraint; indices are 1-based as in the file.
#[derive(Debug, Clone, PartialEq)]
pub struct SdpaProblem {
    pub m: usize,
    pub block_sizes: Vec<i64>,
    pub rhs: Vec<f64>,
    pub entries: Vec<SdpaEntry>,
}

impl GramProblem {
    pub fn to_sdpa(&self) -> SdpaProblem {
        let mut entries = Vec::new();
        for (k, c) in self.constraints.iter().enumerate() {
            for &(i, j) in &c.entries {
                entries.push(SdpaEntry {
                    matrix: k + 1,
                    block: 1,
                    i: i + 1,
                    j: j + 1,
                    value: 1.0,
                });
            }
        }
        SdpaProblem {
            m: self.num_constraints(),
            block_sizes: vec![self.size() as i64],
            rhs: self.rhs(),
            entries,
        }
    }
}

pub fn write_sdpa(prob: &SdpaProblem) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", prob.m);
    let _ = writeln!(out, "{}", prob.block_sizes.len());
    let sizes: Vec<String> = prob.block_sizes.iter().map(|b| b.to_string()).collect();
    let _ = writeln!(out, "{}", sizes.join(" "));
    let rhs: Vec<String> = prob.rhs.iter().map(|v| format!("{v}")).collect();
    let _ = writeln!(out, "{}", rhs.join(" "));
    for e in &prob.entries {
        let _ = writeln!(out, "{} {} {} {} {:?}", e.matrix, e.block, e.i, e.j, e.value);
    }
    out
}

pub fn emit_sdpa(prob: &GramProblem) -> String {
    write_sdpa(&prob.to_sdpa())
}

fn is_comment(line: &str) -> bool {
    let t = line.trim_start();
    t.is_empty() || t.starts_with('*') || t.starts_with('"')
}

fn tokens(line: &str) -> Vec<&str> {
    line.split(|c: char| c.is_whitespace() || matches!(c, ',' | '{' | '}' | '(' | ')'))
        .filter(|t| !t.is_empty())
        .collect()
}

fn number<T: std::str::FromStr>(tok: &str, line: usize) -> Result<T, SdpaError> {
    tok.parse().map_err(|_| SdpaError::Malformed {
        line,
        message: format!("bad number `{tok}`"),
    })
}

pub fn parse_sdpa(text: &str) -> Result<SdpaProblem, SdpaError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l))
        .filter(|(_, l)| !is_comment(l));
    let mut header = |what: &'static str| lines.next().ok_or(SdpaError::Truncated(what));

    let (ln, l) = header("constraint count")?;
    let m: usize = number(tokens(l).first().copied().unwrap_or(""), ln)?;
    let (ln, l) = header("block count")?;
    let nblocks: usize = number(tokens(l).first().copied().unwrap_or(""), ln)?;
    let (ln, l) = header("block sizes")?;
    let block_sizes = tokens(l)
        .into_iter()
        .take(nblocks)
        .map(|t| number::<i64>(t, ln))
        .collect::<Result<Vec<_>, _>>()?;
    if block_sizes.len() != nblocks {
        return Err(SdpaError::Malformed {
            line: ln,
            message: format!("expected {nblocks} block sizes"),
        });
    }
    let (ln, l) = header("right-hand side")?;
    let rhs = tokens(l)
        .into_iter()
        .take(m)
        .map(|t| number::<f64>(t, ln))
        .collect::<Result<Vec<_>, _>>()?;
    if rhs.len() != m {
        return Err(SdpaError::Malformed {
            line: ln,
            message: format!("expected {m} right-hand side values"),
        });
    }

    let mut entries = Vec::new();
    for (ln, l) in lines {
        let t = tokens(l);
        if t.len() < 5 {
            return Err(SdpaError::Malformed {
                line: ln,
                message: "entry needs five fields".into(),
            });
        }
        let e = SdpaEntry {
            matrix: number(t[0], ln)?,
            block: number(t[1], ln)?,
            i: number(t[2], ln)?,
            j: number(t[3], ln)?,
            value: number(t[4], ln)?,
        };
        if e.matrix > m || e.block == 0 || e.block > nblocks || e.i == 0 || e.j == 0 {
            return Err(SdpaError::Malformed {
                line: ln,
                message: "entry index out of range".into(),
            });
        }
        entries.push(e);
    }
    Ok(SdpaProblem {
        m,
        block_sizes,
        rhs,
        entries,
    })
}

/// Which matrix of a solver's solution file holds the Gram matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputConvention {
    /// Matrix number 2 (the primal `X` of the standard-form problem).
    #[default]
    Primal,
    /// Matrix number 1.
    Dual,
}

impl OutputConvention {
    fn matrix_number(self) -> usize {
        match self {
            OutputConvention::Primal => 2,
            OutputConvention::Dual => 1,
        }
    }
}

/// Reads block 1 of the selected matrix from a sparse solution file: a first
/// line holding the dual vector, then lines `matno block i j value`. Entries
/// given once for `i <= j` are mirrored.
pub fn parse_solution(text: &str, n: usize, convention: OutputConvention) -> Result<DMatrix<f64>, SdpaError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l))
        .filter(|(_, l)| !is_comment(l));
    lines.next().ok_or(SdpaError::Truncated("dual vector"))?;
    let wanted = convention.matrix_number();
    let mut m = DMatrix::zeros(n, n);
    let mut seen = false;
    for (ln, l) in lines {
        let t = tokens(l);
        if t.len() != 5 {
            return Err(SdpaError::Malformed {
                line: ln,
                message: "solution entry needs five fields".into(),
            });
        }
        let matno: usize = number(t[0], ln)?;
        let block: usize = number(t[1], ln)?;
        if matno != wanted || block != 1 {
            continue;
        }
        let i: usize = number(t[2], ln)?;
        let j: usize = number(t[3], ln)?;
        let v: f64 = number(t[4], ln)?;
        if i == 0 || j == 0 || i > n || j > n {
            return Err(SdpaError::Malformed {
                line: ln,
                message: format!("index ({i},{j}) outside a {n}x{n} block"),
            });
        }
        m[(i - 1, j - 1)] = v;
        m[(j - 1, i - 1)] = v;
        seen = true;
    }
    if !seen && n > 0 {
        return Err(SdpaError::Truncated("no entries for the selected matrix"));
    }
    Ok(m)
}
