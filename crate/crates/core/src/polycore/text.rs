//! Line-oriented text format.
//!
//! ```text
//! # x1*x2 - x3^2
//! n=3
//! 1 1 1 0
//! -1 0 0 2
//! ```
//!
//! The header gives the variable count; every other non-blank line holds a
//! coefficient followed by `n` exponents. `#` starts a comment. Rational
//! coefficients are written `p/q`. The canonical output lists terms in
//! descending graded lexicographic order, so equal polynomials serialize
//! identically and [`Polynomial::content_hash`] is stable.

use std::fmt::{Debug, Display};
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use sha2::{Digest, Sha256};

use super::{Monomial, Polynomial};
use crate::error::{Error, Result};

/// Ring operations plus the text hooks needed by [`Polynomial`].
pub trait Coefficient:
    Clone
    + PartialEq
    + Debug
    + Display
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
{
    fn from_u64(k: u64) -> Self;
    /// `(is_negative, |self|)`.
    fn sign_and_abs(&self) -> (bool, Self);
    fn parse_coefficient(s: &str) -> Option<Self>;
}

impl Coefficient for BigInt {
    fn from_u64(k: u64) -> Self {
        BigInt::from(k)
    }
    fn sign_and_abs(&self) -> (bool, Self) {
        (self.is_negative(), self.abs())
    }
    fn parse_coefficient(s: &str) -> Option<Self> {
        BigInt::from_str(s).ok()
    }
}

impl Coefficient for BigRational {
    fn from_u64(k: u64) -> Self {
        BigRational::from_integer(BigInt::from(k))
    }
    fn sign_and_abs(&self) -> (bool, Self) {
        (self.is_negative(), self.abs())
    }
    fn parse_coefficient(s: &str) -> Option<Self> {
        match s.split_once('/') {
            Some((p, q)) => {
                let p = BigInt::from_str(p).ok()?;
                let q = BigInt::from_str(q).ok()?;
                (!q.is_zero()).then(|| BigRational::new(p, q))
            }
            None => BigInt::from_str(s).ok().map(BigRational::from_integer),
        }
    }
}

fn parse_term<C: Coefficient>(line: &str, nvars: usize, lineno: usize) -> Result<(Monomial, C)> {
    let mut fields = line.split_whitespace();
    let perr = |msg: String| Error::Parse { line: lineno, msg };
    let c = fields
        .next()
        .ok_or_else(|| perr("empty term".into()))?;
    let coef = C::parse_coefficient(c).ok_or_else(|| perr(format!("bad coefficient `{c}`")))?;
    let exps: Vec<u32> = fields
        .map(|f| {
            f.parse::<u32>()
                .map_err(|_| perr(format!("bad exponent `{f}`")))
        })
        .collect::<Result<_>>()?;
    if exps.len() != nvars {
        return Err(perr(format!(
            "expected {nvars} exponents, found {}",
            exps.len()
        )));
    }
    Ok((Monomial(exps), coef))
}

/// Parses the single-line form `c k1 .. kn, c k1 .. kn, ...` used inside
/// decomposition files. An empty string is the zero polynomial.
pub fn parse_inline<C: Coefficient>(s: &str, nvars: usize, lineno: usize) -> Result<Polynomial<C>> {
    let mut terms = Vec::new();
    for part in s.split(',') {
        if part.trim().is_empty() {
            continue;
        }
        terms.push(parse_term(part, nvars, lineno)?);
    }
    Ok(Polynomial::from_terms(nvars, terms))
}

impl<C: Coefficient> Polynomial<C> {
    pub fn parse(text: &str) -> Result<Self> {
        let mut nvars: Option<usize> = None;
        let mut terms = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let lineno = k + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            match nvars {
                None => {
                    let rest = line
                        .strip_prefix("n=")
                        .or_else(|| line.strip_prefix("n ="))
                        .ok_or_else(|| Error::Parse {
                            line: lineno,
                            msg: "expected header `n=<count>`".into(),
                        })?;
                    nvars = Some(rest.trim().parse().map_err(|_| Error::Parse {
                        line: lineno,
                        msg: format!("bad variable count `{}`", rest.trim()),
                    })?);
                }
                Some(n) => terms.push(parse_term(line, n, lineno)?),
            }
        }
        let n = nvars.ok_or(Error::Parse {
            line: 0,
            msg: "missing header `n=<count>`".into(),
        })?;
        Ok(Self::from_terms(n, terms))
    }

    /// Canonical serialization, terms in descending graded lex order.
    pub fn to_text(&self) -> String {
        let mut out = format!("n={}\n", self.nvars());
        for (m, c) in self.terms().rev() {
            out.push_str(&c.to_string());
            for e in m.exponents() {
                out.push(' ');
                out.push_str(&e.to_string());
            }
            out.push('\n');
        }
        out
    }

    /// Same terms as [`to_text`](Self::to_text) on one line, comma separated.
    pub fn to_inline(&self) -> String {
        self.terms()
            .rev()
            .map(|(m, c)| {
                let mut s = c.to_string();
                for e in m.exponents() {
                    s.push(' ');
                    s.push_str(&e.to_string());
                }
                s
            })
            .collect::<Vec<_>>()
            .join(", ")
    }

    /// Hex SHA-256 of the canonical text.
    pub fn content_hash(&self) -> String {
        let digest = Sha256::digest(self.to_text().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polycore::{IntPolynomial, RatPolynomial};

    #[test]
    fn parse_with_comments_and_duplicates() {
        let text = "# a quadric\nn=3\n1 1 1 0\n\n-1 0 0 2 # square\n2 0 0 2\n";
        let p = IntPolynomial::parse(text).unwrap();
        assert_eq!(p.to_string(), "x1*x2 + x3^2");
        assert_eq!(p.to_text(), "n=3\n1 1 1 0\n1 0 0 2\n");
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = IntPolynomial::parse("n=2\n1 1 1 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = IntPolynomial::parse("1 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        assert!(IntPolynomial::parse("n=1\nx 1\n").is_err());
    }

    #[test]
    fn rational_coefficients() {
        let p = RatPolynomial::parse("n=1\n1/2 1\n-3/6 0\n").unwrap();
        assert_eq!(p.to_text(), "n=1\n1/2 1\n-1/2 0\n");
    }

    #[test]
    fn inline_form() {
        let p: IntPolynomial = parse_inline("1 1 0, -4 0 0", 2, 1).unwrap();
        assert_eq!(p.to_inline(), "1 1 0, -4 0 0");
        let z: IntPolynomial = parse_inline("", 2, 1).unwrap();
        assert!(z.is_zero());
    }

    #[test]
    fn hash_ignores_term_order() {
        let a = IntPolynomial::parse("n=2\n1 2 0\n1 0 2\n").unwrap();
        let b = IntPolynomial::parse("n=2\n1 0 2\n1 2 0\n").unwrap();
        assert_eq!(a.content_hash(), b.content_hash());
        assert_eq!(a.content_hash().len(), 64);
    }
}
