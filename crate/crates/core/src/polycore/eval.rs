//! Fixed-width evaluators for inner loops.
//!
//! Each evaluator is compiled once from an [`IntPolynomial`] and then
//! evaluated many times without allocation. They can be restricted to a
//! subset of the variables, in which case the input slice holds only those
//! coordinates, in the order given.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;

use super::IntPolynomial;
use crate::arith::mulmod;
use crate::error::{Error, Result};

type SparseExps = Vec<(usize, u32)>;

fn compile<T>(
    poly: &IntPolynomial,
    vars: &[usize],
    include_constant: bool,
    mut coef: impl FnMut(&BigInt) -> Result<T>,
) -> Result<Vec<(T, SparseExps)>> {
    let mut out = Vec::new();
    for (m, c) in poly.terms() {
        if m.degree() == 0 && !include_constant {
            continue;
        }
        let mut exps = Vec::new();
        for (i, &e) in m.exponents().iter().enumerate() {
            if e == 0 {
                continue;
            }
            let pos = vars.iter().position(|&v| v == i).ok_or_else(|| {
                Error::InvalidArgument(format!("term uses x{} outside the variable subset", i + 1))
            })?;
            exps.push((pos, e));
        }
        out.push((coef(c)?, exps));
    }
    Ok(out)
}

/// Evaluation modulo a fixed `q < 2^63`.
#[derive(Clone, Debug)]
pub struct ModEvaluator {
    q: u64,
    arity: usize,
    terms: Vec<(u64, SparseExps)>,
}

impl ModEvaluator {
    pub fn new(poly: &IntPolynomial, q: u64) -> Result<Self> {
        let vars: Vec<usize> = (0..poly.nvars()).collect();
        Self::restricted(poly, &vars, q, true)
    }

    /// Evaluator for the terms of `poly` in the variables `vars`.
    pub fn restricted(
        poly: &IntPolynomial,
        vars: &[usize],
        q: u64,
        include_constant: bool,
    ) -> Result<Self> {
        if q == 0 {
            return Err(Error::ZeroModulus);
        }
        let qb = BigInt::from(q);
        let terms = compile(poly, vars, include_constant, |c| {
            Ok(c.mod_floor(&qb).to_u64().expect("reduced coefficient fits"))
        })?;
        Ok(ModEvaluator {
            q,
            arity: vars.len(),
            terms,
        })
    }

    pub fn modulus(&self) -> u64 {
        self.q
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Coordinates must already be reduced mod `q`.
    #[inline]
    pub fn eval(&self, x: &[u64]) -> u64 {
        debug_assert_eq!(x.len(), self.arity);
        let q = self.q;
        let mut acc = 0u64;
        for (c, exps) in &self.terms {
            let mut t = *c;
            for &(i, e) in exps {
                for _ in 0..e {
                    t = mulmod(t, x[i], q);
                }
            }
            acc += t;
            if acc >= q {
                acc -= q;
            }
        }
        acc
    }
}

/// Exact evaluation in `i128`, reporting overflow instead of wrapping.
#[derive(Clone, Debug)]
pub struct I128Evaluator {
    arity: usize,
    terms: Vec<(i128, SparseExps)>,
}

impl I128Evaluator {
    pub fn new(poly: &IntPolynomial) -> Result<Self> {
        let vars: Vec<usize> = (0..poly.nvars()).collect();
        Self::restricted(poly, &vars, true)
    }

    pub fn restricted(poly: &IntPolynomial, vars: &[usize], include_constant: bool) -> Result<Self> {
        let terms = compile(poly, vars, include_constant, |c| {
            c.to_i128().ok_or(Error::Overflow("coefficient exceeds i128"))
        })?;
        Ok(I128Evaluator {
            arity: vars.len(),
            terms,
        })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    #[inline]
    pub fn eval(&self, x: &[i64]) -> Result<i128> {
        debug_assert_eq!(x.len(), self.arity);
        let overflow = || Error::Overflow("polynomial value exceeds i128");
        let mut acc: i128 = 0;
        for (c, exps) in &self.terms {
            let mut t = *c;
            for &(i, e) in exps {
                for _ in 0..e {
                    t = t.checked_mul(x[i] as i128).ok_or_else(overflow)?;
                }
            }
            acc = acc.checked_add(t).ok_or_else(overflow)?;
        }
        Ok(acc)
    }
}

/// Floating-point copy of a polynomial for the real-variable computations.
#[derive(Clone, Debug)]
pub struct RealPolynomial {
    nvars: usize,
    terms: Vec<(f64, Vec<u32>)>,
}

impl RealPolynomial {
    pub fn from_int(poly: &IntPolynomial) -> Self {
        RealPolynomial {
            nvars: poly.nvars(),
            terms: poly
                .terms()
                .map(|(m, c)| (c.to_f64().unwrap_or(f64::NAN), m.exponents().to_vec()))
                .collect(),
        }
    }

    pub fn from_terms(nvars: usize, terms: Vec<(f64, Vec<u32>)>) -> Self {
        assert!(terms.iter().all(|(_, e)| e.len() == nvars));
        RealPolynomial { nvars, terms }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &[(f64, Vec<u32>)] {
        &self.terms
    }

    pub fn degree(&self) -> usize {
        self.terms
            .iter()
            .map(|(_, e)| e.iter().sum::<u32>() as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn degree_in(&self, var: usize) -> usize {
        self.terms
            .iter()
            .map(|(_, e)| e[var] as usize)
            .max()
            .unwrap_or(0)
    }

    /// Sum of absolute coefficients, an upper bound for `|f|` on `[0,1]^n`.
    pub fn abs_coefficient_sum(&self) -> f64 {
        self.terms.iter().map(|(c, _)| c.abs()).sum()
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (c, e) in &self.terms {
            let mut t = *c;
            for (xi, &k) in x.iter().zip(e) {
                if k > 0 {
                    t *= xi.powi(k as i32);
                }
            }
            acc += t;
        }
        acc
    }

    /// Coefficients `a_0..a_k` of `f` as a polynomial in `x[var]`, with the
    /// other coordinates fixed at `x` (the entry `x[var]` is ignored).
    pub fn univariate_in(&self, var: usize, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.resize(self.degree_in(var) + 1, 0.0);
        for (c, e) in &self.terms {
            let mut t = *c;
            for (j, (xj, &k)) in x.iter().zip(e).enumerate() {
                if j != var && k > 0 {
                    t *= xj.powi(k as i32);
                }
            }
            out[e[var] as usize] += t;
        }
    }

    /// `N^{-d} f(N xi)` where `d` is the total degree of `f`.
    pub fn rescaled(&self, n: f64) -> Self {
        let d = self.degree() as i32;
        RealPolynomial {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(c, e)| {
                    let k = e.iter().sum::<u32>() as i32;
                    (c * n.powi(k - d), e.clone())
                })
                .collect(),
        }
    }

    pub fn derivative(&self, var: usize) -> Self {
        RealPolynomial {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .filter(|(_, e)| e[var] > 0)
                .map(|(c, e)| {
                    let mut e2 = e.clone();
                    e2[var] -= 1;
                    (c * e[var] as f64, e2)
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polycore::IntPolynomial;

    fn sample() -> IntPolynomial {
        IntPolynomial::parse("n=3\n3 2 1 0\n-5 0 0 3\n7 0 0 0\n").unwrap()
    }

    #[test]
    fn mod_evaluator_matches_bigint() {
        let p = sample();
        let q = 97u64;
        let ev = ModEvaluator::new(&p, q).unwrap();
        for x in [[0u64, 0, 0], [1, 2, 3], [96, 50, 13]] {
            let big: Vec<BigInt> = x.iter().map(|&v| BigInt::from(v)).collect();
            let expect = p.evaluate_mod(&big, &BigInt::from(q)).unwrap();
            assert_eq!(BigInt::from(ev.eval(&x)), expect);
        }
    }

    #[test]
    fn restricted_evaluator_sees_only_block() {
        let p = sample();
        let ev = I128Evaluator::restricted(&p.block_part(&[2]), &[2], false).unwrap();
        assert_eq!(ev.eval(&[2]).unwrap(), -40);
        assert!(I128Evaluator::restricted(&p, &[2], false).is_err());
    }

    #[test]
    fn i128_overflow_is_reported() {
        let p = IntPolynomial::parse("n=1\n1 5\n").unwrap();
        let ev = I128Evaluator::new(&p).unwrap();
        assert!(ev.eval(&[i64::MAX]).is_err());
        assert_eq!(ev.eval(&[-3]).unwrap(), -243);
    }

    #[test]
    fn real_univariate_slice() {
        let f = RealPolynomial::from_int(&sample());
        let mut a = Vec::new();
        f.univariate_in(2, &[2.0, 0.5, 99.0], &mut a);
        assert_eq!(a, vec![3.0 * 4.0 * 0.5 + 7.0, 0.0, 0.0, -5.0]);
        assert_eq!(f.eval(&[2.0, 0.5, 1.0]), 6.0 - 5.0 + 7.0);
    }
}
