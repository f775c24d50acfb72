//! Text format for polynomials.
//!
//! ```text
//! poly   := ['+'|'-'] term (('+'|'-') term)*
//! term   := item ('*' item)*
//! item   := coef | var ['^' int]
//! coef   := int | int '/' int | decimal
//! ```
//!
//! Variables are numbered by declaration order when a list is given, otherwise
//! by first appearance. Printing (see [`Polynomial`]'s `Display`) emits the
//! same grammar, so output can be fed back in.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::poly::{Exponent, Polynomial};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("unknown variable `{name}` at byte {pos}")]
    UnknownVariable { name: String, pos: usize },
    #[error("zero denominator at byte {pos}")]
    ZeroDenominator { pos: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num { text: String },
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                out.push((
                    start,
                    Tok::Num {
                        text: text[start..i].to_string(),
                    },
                ));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((start, Tok::Ident(text[start..i].to_string())));
                continue;
            }
            _ => {
                let ch = text[start..].chars().next().unwrap_or('?');
                return Err(ParseError::Syntax {
                    pos: start,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        };
        out.push((start, tok));
        i += 1;
    }
    Ok(out)
}

fn parse_decimal(text: &str, pos: usize) -> Result<BigRational, ParseError> {
    let bad = || ParseError::Syntax {
        pos,
        message: format!("malformed number `{text}`"),
    };
    let (int_part, frac_part) = match text.split_once('.') {
        Some((a, b)) => (a, b),
        None => (text, ""),
    };
    if frac_part.contains('.') || (int_part.is_empty() && frac_part.is_empty()) {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = digits.parse().map_err(|_| bad())?;
    let denom = num_traits::pow(BigInt::from(10), frac_part.len());
    Ok(BigRational::new(numer, denom))
}

struct Parser<'a> {
    toks: &'a [(usize, Tok)],
    idx: usize,
    end: usize,
    vars: Vec<String>,
    fixed: bool,
    terms: Vec<(Vec<(usize, u32)>, BigRational)>,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.idx).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.idx).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            pos: self.pos(),
            message: message.into(),
        })
    }

    fn var_index(&mut self, name: &str, pos: usize) -> Result<usize, ParseError> {
        if let Some(k) = self.vars.iter().position(|v| v == name) {
            return Ok(k);
        }
        if self.fixed {
            return Err(ParseError::UnknownVariable {
                name: name.to_string(),
                pos,
            });
        }
        self.vars.push(name.to_string());
        Ok(self.vars.len() - 1)
    }

    fn poly(&mut self) -> Result<(), ParseError> {
        if self.toks.is_empty() {
            return self.err("empty input");
        }
        let mut sign = BigRational::one();
        match self.peek() {
            Some(Tok::Minus) => {
                sign = -sign;
                self.idx += 1;
            }
            Some(Tok::Plus) => self.idx += 1,
            _ => {}
        }
        self.term(sign)?;
        while let Some(tok) = self.peek() {
            let sign = match tok {
                Tok::Plus => BigRational::one(),
                Tok::Minus => -BigRational::one(),
                _ => return self.err("expected `+` or `-`"),
            };
            self.idx += 1;
            self.term(sign)?;
        }
        Ok(())
    }

    fn term(&mut self, sign: BigRational) -> Result<(), ParseError> {
        let mut coef = sign;
        let mut powers: Vec<(usize, u32)> = Vec::new();
        self.item(&mut coef, &mut powers)?;
        while let Some(Tok::Star) = self.peek() {
            self.idx += 1;
            self.item(&mut coef, &mut powers)?;
        }
        self.terms.push((powers, coef));
        Ok(())
    }

    fn item(&mut self, coef: &mut BigRational, powers: &mut Vec<(usize, u32)>) -> Result<(), ParseError> {
        let Some((pos, tok)) = self.toks.get(self.idx).cloned() else {
            return self.err("unexpected end of input");
        };
        match tok {
            Tok::Num { text } => {
                self.idx += 1;
                let mut value = parse_decimal(&text, pos)?;
                if let Some(Tok::Slash) = self.peek() {
                    if text.contains('.') {
                        return self.err("a fraction needs an integer numerator");
                    }
                    self.idx += 1;
                    let dpos = self.pos();
                    let denom = match self.toks.get(self.idx) {
                        Some((_, Tok::Num { text })) if !text.contains('.') => {
                            self.idx += 1;
                            text.parse::<BigInt>().map_err(|_| ParseError::Syntax {
                                pos: dpos,
                                message: format!("malformed denominator `{text}`"),
                            })?
                        }
                        _ => return self.err("expected integer denominator"),
                    };
                    if denom.is_zero() {
                        return Err(ParseError::ZeroDenominator { pos: dpos });
                    }
                    value /= BigRational::from_integer(denom);
                }
                *coef *= value;
            }
            Tok::Ident(name) => {
                self.idx += 1;
                let k = self.var_index(&name, pos)?;
                let mut power = 1u32;
                if let Some(Tok::Caret) = self.peek() {
                    self.idx += 1;
                    let ppos = self.pos();
                    power = match self.toks.get(self.idx) {
                        Some((_, Tok::Num { text })) if !text.contains('.') => {
                            self.idx += 1;
                            text.parse::<u32>().map_err(|_| ParseError::Syntax {
                                pos: ppos,
                                message: format!("exponent `{text}` out of range"),
                            })?
                        }
                        _ => return self.err("expected integer exponent"),
                    };
                }
                powers.push((k, power));
            }
            _ => return self.err("expected a coefficient or a variable"),
        }
        Ok(())
    }
}

/// Parses `text` and returns the polynomial together with its variable names.
pub fn parse_with_names(text: &str, declared_vars: Option<&[String]>) -> Result<(Polynomial, Vec<String>), ParseError> {
    let toks = tokenize(text)?;
    let mut parser = Parser {
        toks: &toks,
        idx: 0,
        end: text.len(),
        vars: declared_vars.map(|v| v.to_vec()).unwrap_or_default(),
        fixed: declared_vars.is_some(),
        terms: Vec::new(),
    };
    parser.poly()?;
    let nvars = parser.vars.len().max(1);
    let mut p = Polynomial::zero(nvars);
    for (powers, coef) in parser.terms {
        let mut coords = vec![0u32; nvars];
        for (k, pw) in powers {
            coords[k] = coords[k].checked_add(pw).ok_or(ParseError::Syntax {
                pos: 0,
                message: "exponent overflow".into(),
            })?;
        }
        p.add_term(Exponent::new(coords), coef);
    }
    Ok((p, parser.vars))
}

pub fn parse_polynomial(text: &str, declared_vars: Option<&[String]>) -> Result<Polynomial, ParseError> {
    parse_with_names(text, declared_vars).map(|(p, _)| p)
}
