//! The h-invariant: certified upper bounds from explicit decompositions
//! `f = sum U_i V_i`, the exact value for quadratic forms, and the
//! `g_M / f_M` split attached to a decomposition in echelon shape.
//!
//! Exact values are only computed in degree 2. In higher degree a verified
//! decomposition with `k` pairs certifies `h(f) <= k` and nothing more.

mod quadratic;
mod squareclass;

pub use quadratic::{
    diagonalize, form_from_gram, gram_matrix, quadratic_h, quadratic_h_rational, QuadraticFormData,
};
pub use squareclass::{factor_big, hilbert, hilbert_infinity, SquareClass};

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::polycore::{
    parse_inline, Assignment, IntPolynomial, LinearForm, Monomial, RatPolynomial, SubstitutionMap,
};

#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition {
    pub target: RatPolynomial,
    pub pairs: Vec<(RatPolynomial, RatPolynomial)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verification {
    pub valid: bool,
    pub claimed_h: usize,
    pub diagnostic: Option<String>,
}

impl Decomposition {
    pub fn new(target: RatPolynomial, pairs: Vec<(RatPolynomial, RatPolynomial)>) -> Self {
        Decomposition { target, pairs }
    }

    pub fn claimed_h(&self) -> usize {
        self.pairs.len()
    }

    /// Checks degrees and the identity `sum U_i V_i = f` exactly.
    pub fn verify(&self) -> Result<Verification> {
        let f = &self.target;
        if !f.is_homogeneous() {
            return Err(Error::NotHomogeneous);
        }
        let d = f.degree().unwrap_or(0);
        let fail = |msg: String| {
            Ok(Verification {
                valid: false,
                claimed_h: self.claimed_h(),
                diagnostic: Some(msg),
            })
        };
        let mut sum = RatPolynomial::zero(f.nvars());
        for (k, (u, v)) in self.pairs.iter().enumerate() {
            if u.nvars() != f.nvars() || v.nvars() != f.nvars() {
                return fail(format!("pair {}: wrong variable count", k + 1));
            }
            for (name, w) in [("U", u), ("V", v)] {
                if !w.is_homogeneous() {
                    return fail(format!("pair {}: {name} is not homogeneous", k + 1));
                }
                if w.degree().unwrap_or(0) == 0 {
                    return fail(format!("pair {}: {name} has degree 0", k + 1));
                }
            }
            let du = u.degree().unwrap();
            let dv = v.degree().unwrap();
            if du + dv != d {
                return fail(format!(
                    "pair {}: degrees {du} + {dv} do not add up to {d}",
                    k + 1
                ));
            }
            sum = &sum + &(u * v);
        }
        let diff = &sum - f;
        if let Some((m, c)) = diff.terms().next_back() {
            return fail(format!(
                "sum differs from target at monomial {:?} by {c}",
                m.exponents()
            ));
        }
        Ok(Verification {
            valid: true,
            claimed_h: self.claimed_h(),
            diagnostic: None,
        })
    }

    /// Pairs whose lower-degree factor is linear: a lower bound witness for
    /// the linear count `h*`.
    pub fn linear_count(&self) -> Result<usize> {
        let v = self.verify()?;
        if !v.valid {
            return Err(Error::InvalidDecomposition(v.diagnostic.unwrap_or_default()));
        }
        Ok(self
            .pairs
            .iter()
            .filter(|(u, v)| u.degree().unwrap().min(v.degree().unwrap()) == 1)
            .count())
    }
}

/// Parses a decomposition file:
///
/// ```text
/// M=1
/// U: 1 1 0 0 ; V: 1 0 1 0
/// U: 1 0 0 1 ; V: 1 0 0 1
/// ```
///
/// Each side is a comma-separated list of `c k1 .. kn` terms. Returns `M`
/// and the pairs.
pub fn parse_decomposition(
    text: &str,
    nvars: usize,
) -> Result<(usize, Vec<(RatPolynomial, RatPolynomial)>)> {
    let mut m: Option<usize> = None;
    let mut pairs = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let lineno = k + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let perr = |msg: &str| Error::Parse {
            line: lineno,
            msg: msg.to_string(),
        };
        if m.is_none() {
            let rest = line
                .strip_prefix("M=")
                .ok_or_else(|| perr("expected header `M=<count>`"))?;
            m = Some(rest.trim().parse().map_err(|_| perr("bad M"))?);
            continue;
        }
        let (u, v) = line
            .split_once(';')
            .ok_or_else(|| perr("expected `U: ... ; V: ...`"))?;
        let u = u
            .trim()
            .strip_prefix("U:")
            .ok_or_else(|| perr("missing `U:`"))?;
        let v = v
            .trim()
            .strip_prefix("V:")
            .ok_or_else(|| perr("missing `V:`"))?;
        pairs.push((
            parse_inline(u, nvars, lineno)?,
            parse_inline(v, nvars, lineno)?,
        ));
    }
    let m = m.ok_or(Error::Parse {
        line: 0,
        msg: "missing header `M=<count>`".into(),
    })?;
    if m > pairs.len() || m > nvars {
        return Err(Error::InvalidDecomposition(format!(
            "M={m} exceeds the number of pairs or variables"
        )));
    }
    Ok((m, pairs))
}

pub fn write_decomposition(m: usize, pairs: &[(RatPolynomial, RatPolynomial)]) -> String {
    let mut out = format!("M={m}\n");
    for (u, v) in pairs {
        out.push_str(&format!("U: {} ; V: {}\n", u.to_inline(), v.to_inline()));
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct GmSplit {
    pub m: usize,
    /// `ell_i` with `U_i = x_i + ell_i`, for `i < M`.
    pub ells: Vec<LinearForm>,
    pub g_m: RatPolynomial,
    pub f_m: RatPolynomial,
}

/// Reads `U_i = x_i + ell_i` off the first `M` pairs, with `ell_i`
/// supported on `x_{M+1}..x_n`.
fn echelon_ells(
    pairs: &[(RatPolynomial, RatPolynomial)],
    m: usize,
    nvars: usize,
) -> Result<Vec<LinearForm>> {
    let mut ells = Vec::with_capacity(m);
    for (i, (u, _)) in pairs.iter().take(m).enumerate() {
        let bad = |msg: String| Error::InvalidDecomposition(format!("pair {}: {msg}", i + 1));
        if u.degree() != Some(1) || !u.is_homogeneous() {
            return Err(bad("U is not a linear form".into()));
        }
        let mut coeffs = vec![BigRational::zero(); nvars];
        for (mono, c) in u.terms() {
            let j = mono.support().next().unwrap();
            if j < m && j != i {
                return Err(bad(format!("U involves x{}", j + 1)));
            }
            if j == i {
                if !c.is_one() {
                    return Err(bad(format!("coefficient of x{} is {c}, expected 1", i + 1)));
                }
            } else {
                coeffs[j] = c.clone();
            }
        }
        if u.coefficient(&Monomial::var(nvars, i)).is_zero() {
            return Err(bad(format!("U does not contain x{}", i + 1)));
        }
        ells.push(LinearForm::new(coeffs));
    }
    Ok(ells)
}

/// `f_M = f(-ell_1, .., -ell_M, x_{M+1}, .., x_n)` and `g_M = f - f_M`.
/// Fails if the echelon shape is violated or if `g_M` does not vanish on the
/// substitution.
pub fn build_gm_fm(
    f: &RatPolynomial,
    pairs: &[(RatPolynomial, RatPolynomial)],
    m: usize,
) -> Result<GmSplit> {
    let n = f.nvars();
    if m > pairs.len() || m > n {
        return Err(Error::InvalidDecomposition(format!("M={m} too large")));
    }
    let ells = echelon_ells(pairs, m, n)?;
    let mut map = SubstitutionMap::new();
    for (i, l) in ells.iter().enumerate() {
        let neg = LinearForm::new(l.coeffs.iter().map(|c| -c.clone()).collect());
        map.assign(i, Assignment::Linear(neg));
    }
    let f_m = f.substitute(&map)?;
    let g_m = f - &f_m;
    if !g_m.substitute(&map)?.is_zero() {
        return Err(Error::InvalidDecomposition(
            "g_M does not vanish on the substitution".into(),
        ));
    }
    Ok(GmSplit { m, ells, g_m, f_m })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RestrictionCheck {
    /// 1-based variable index.
    pub index: usize,
    pub h_restricted: usize,
    pub within_bounds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Lemma21Report {
    pub h: usize,
    pub restrictions: Vec<RestrictionCheck>,
    pub all_within_bounds: bool,
}

fn h_or_zero(f: &IntPolynomial) -> Result<usize> {
    if f.is_zero() {
        return Ok(0);
    }
    Ok(quadratic_h(f, |c| BigRational::from_integer(c.clone()))?.h_value)
}

/// Checks `h(f) - 1 <= h(f|_{x_i = 0}) <= h(f)` for every `i`, with `h(0) = 0`.
pub fn lemma21_check(f: &IntPolynomial) -> Result<Lemma21Report> {
    let h = quadratic_h(f, |c| BigRational::from_integer(c.clone()))?.h_value;
    let mut restrictions = Vec::new();
    for i in 0..f.nvars() {
        let hr = h_or_zero(&f.restrict_zero(i)?)?;
        restrictions.push(RestrictionCheck {
            index: i + 1,
            h_restricted: hr,
            within_bounds: hr + 1 >= h && hr <= h,
        });
    }
    let all_within_bounds = restrictions.iter().all(|r| r.within_bounds);
    Ok(Lemma21Report {
        h,
        restrictions,
        all_within_bounds,
    })
}

/// The explicit, computable part of the threshold on `h`:
/// `5 * 2^{d-1} (d-1) d! / (ln 2)^d + 5d`. The full threshold also involves
/// regularization constants that are not effective, so this is reported as a
/// lower bound only.
pub fn a_d_lower(d: u32) -> f64 {
    let fact: f64 = (1..=d).map(|k| k as f64).product();
    let d_f = d as f64;
    5.0 * 2f64.powi(d as i32 - 1) * (d_f - 1.0) * fact / std::f64::consts::LN_2.powi(d as i32)
        + 5.0 * d_f
}
