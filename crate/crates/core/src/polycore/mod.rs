//! Exact sparse multivariate polynomials.
//!
//! A [`Polynomial`] is a map from [`Monomial`] (an exponent vector) to a
//! nonzero coefficient. Terms are kept in a `BTreeMap` under graded
//! lexicographic order, which makes iteration and the text serialization
//! deterministic and puts the top-degree terms at the end of the map.
//!
//! Two coefficient rings are used throughout: [`IntPolynomial`] over
//! arbitrary-precision integers for the objects being counted, and
//! [`RatPolynomial`] for the results of rational linear substitutions.
//! A rational polynomial can always be brought back to the pair
//! (integer polynomial, common denominator) with
//! [`RatPolynomial::common_denominator_form`].
//!
//! Variables are `x1..xn` in all user-facing text; the Rust API indexes them
//! from 0.

mod eval;
mod subst;
mod text;
mod weyl;

pub use eval::{I128Evaluator, ModEvaluator, RealPolynomial};
pub use subst::{Assignment, LinearForm, SubstitutionMap};
pub use text::{parse_inline, Coefficient};
pub use weyl::{weyl_difference, weyl_difference_symbolic};

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponent vector of a monomial; one entry per ambient variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Monomial(pub Vec<u32>);

impl Monomial {
    pub fn one(nvars: usize) -> Self {
        Monomial(vec![0; nvars])
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Monomial(e)
    }

    pub fn degree(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Variables with positive exponent.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > 0)
            .map(|(i, _)| i)
    }
}

impl Ord for Monomial {
    /// Graded lexicographic: total degree first, then the exponent of `x1`,
    /// then `x2`, and so on.
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Polynomial<C> {
    nvars: usize,
    terms: BTreeMap<Monomial, C>,
}

pub type IntPolynomial = Polynomial<BigInt>;
pub type RatPolynomial = Polynomial<BigRational>;

impl<C: Coefficient> Polynomial<C> {
    pub fn zero(nvars: usize) -> Self {
        Polynomial {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: C) -> Self {
        Self::from_terms(nvars, [(Monomial::one(nvars), c)])
    }

    /// The variable `x_{i+1}`.
    pub fn var(nvars: usize, i: usize) -> Self {
        Self::from_terms(nvars, [(Monomial::var(nvars, i), C::one())])
    }

    /// Builds a polynomial, summing repeated monomials and dropping zeros.
    ///
    /// Panics if an exponent vector has the wrong length.
    pub fn from_terms<I>(nvars: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (Monomial, C)>,
    {
        let mut map: BTreeMap<Monomial, C> = BTreeMap::new();
        for (m, c) in terms {
            assert_eq!(m.nvars(), nvars, "exponent vector length");
            if c.is_zero() {
                continue;
            }
            match map.get_mut(&m) {
                Some(existing) => {
                    let sum = existing.clone() + c;
                    if sum.is_zero() {
                        map.remove(&m);
                    } else {
                        *existing = sum;
                    }
                }
                None => {
                    map.insert(m, c);
                }
            }
        }
        Polynomial { nvars, terms: map }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Terms in ascending graded lexicographic order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &C)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, m: &Monomial) -> C {
        self.terms.get(m).cloned().unwrap_or_else(C::zero)
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.terms.keys().next_back().map(Monomial::degree)
    }

    pub fn is_homogeneous(&self) -> bool {
        let mut degrees = self.terms.keys().map(Monomial::degree);
        match degrees.next() {
            Some(d) => degrees.all(|e| e == d),
            None => true,
        }
    }

    pub fn constant_term(&self) -> C {
        self.coefficient(&Monomial::one(self.nvars))
    }

    /// Sum of the terms of total degree exactly `k`.
    pub fn homogeneous_part(&self, k: usize) -> Self {
        Polynomial {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.degree() == k)
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    /// The degree-`deg(p)` portion of `p`.
    pub fn top_degree_part(&self) -> Result<Self> {
        let d = self.degree().ok_or(Error::ZeroPolynomial)?;
        Ok(self.homogeneous_part(d))
    }

    /// `p(x1, .., x_{i-1}, 0, x_{i+1}, .., xn)`; the variable count is kept.
    pub fn restrict_zero(&self, i: usize) -> Result<Self> {
        self.check_var(i)?;
        Ok(Polynomial {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.0[i] == 0)
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        })
    }

    pub fn derivative(&self, i: usize) -> Result<Self> {
        self.check_var(i)?;
        Ok(Self::from_terms(
            self.nvars,
            self.terms.iter().filter(|(m, _)| m.0[i] > 0).map(|(m, c)| {
                let mut e = m.0.clone();
                let k = e[i];
                e[i] -= 1;
                (Monomial(e), c.clone() * C::from_u64(k as u64))
            }),
        ))
    }

    pub fn scale(&self, c: &C) -> Self {
        Self::from_terms(
            self.nvars,
            self.terms.iter().map(|(m, a)| (m.clone(), a.clone() * c.clone())),
        )
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::constant(self.nvars, C::one());
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Evaluates at a point with coordinates in the coefficient ring.
    pub fn evaluate(&self, point: &[C]) -> Result<C> {
        self.check_point(point.len())?;
        let mut acc = C::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (x, &e) in point.iter().zip(&m.0) {
                for _ in 0..e {
                    t = t * x.clone();
                }
            }
            acc = acc + t;
        }
        Ok(acc)
    }

    /// Substitutes `x_i -> images[i]`; the result lives in the ring of the
    /// images (all images must share a variable count).
    pub fn compose(&self, images: &[Polynomial<C>]) -> Result<Polynomial<C>> {
        self.check_point(images.len())?;
        let target = images.first().map(|p| p.nvars).unwrap_or(0);
        let mut acc = Polynomial::zero(target);
        let mut powers: Vec<Vec<Polynomial<C>>> = images
            .iter()
            .map(|p| vec![Polynomial::constant(target, C::one()), p.clone()])
            .collect();
        for (m, c) in &self.terms {
            let mut t = Polynomial::constant(target, c.clone());
            for (i, &e) in m.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                while powers[i].len() <= e as usize {
                    let next = powers[i].last().unwrap() * &images[i];
                    powers[i].push(next);
                }
                t = &t * &powers[i][e as usize];
            }
            acc = &acc + &t;
        }
        Ok(acc)
    }

    /// Same polynomial viewed in a ring with more variables (new ones appended).
    pub fn extend_vars(&self, nvars: usize) -> Self {
        assert!(nvars >= self.nvars);
        Polynomial {
            nvars,
            terms: self
                .terms
                .iter()
                .map(|(m, c)| {
                    let mut e = m.0.clone();
                    e.resize(nvars, 0);
                    (Monomial(e), c.clone())
                })
                .collect(),
        }
    }

    /// Variables that occur in at least one term.
    pub fn used_vars(&self) -> Vec<usize> {
        let mut used = vec![false; self.nvars];
        for m in self.terms.keys() {
            for i in m.support() {
                used[i] = true;
            }
        }
        (0..self.nvars).filter(|&i| used[i]).collect()
    }

    /// Partition of the used variables into groups linked by shared
    /// monomials. A polynomial is a sum of polynomials in disjoint variable
    /// sets, one per block, plus its constant term.
    pub fn variable_blocks(&self) -> Vec<Vec<usize>> {
        let mut parent: Vec<usize> = (0..self.nvars).collect();
        fn find(parent: &mut [usize], i: usize) -> usize {
            let mut r = i;
            while parent[r] != r {
                r = parent[r];
            }
            let mut j = i;
            while parent[j] != r {
                let next = parent[j];
                parent[j] = r;
                j = next;
            }
            r
        }
        for m in self.terms.keys() {
            let vars: Vec<usize> = m.support().collect();
            for w in vars.windows(2) {
                let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        let mut blocks: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in self.used_vars() {
            let r = find(&mut parent, i);
            blocks.entry(r).or_default().push(i);
        }
        blocks.into_values().collect()
    }

    /// Terms supported inside `vars` (constant term excluded).
    pub fn block_part(&self, vars: &[usize]) -> Self {
        Polynomial {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.degree() > 0 && m.support().all(|i| vars.contains(&i)))
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    /// True when no monomial mixes `x_1..x_split` with `x_{split+1}..x_n`.
    pub fn is_separable_at(&self, split: usize) -> bool {
        self.terms.keys().all(|m| {
            let left = m.0[..split].iter().any(|&e| e > 0);
            let right = m.0[split..].iter().any(|&e| e > 0);
            !(left && right)
        })
    }

    pub fn map_coefficients<D: Coefficient>(&self, f: impl Fn(&C) -> D) -> Polynomial<D> {
        Polynomial::from_terms(
            self.nvars,
            self.terms.iter().map(|(m, c)| (m.clone(), f(c))),
        )
    }

    fn check_var(&self, i: usize) -> Result<()> {
        if i >= self.nvars {
            Err(Error::VariableOutOfRange {
                index: i + 1,
                nvars: self.nvars,
            })
        } else {
            Ok(())
        }
    }

    fn check_point(&self, len: usize) -> Result<()> {
        if len != self.nvars {
            Err(Error::DimensionMismatch {
                expected: self.nvars,
                got: len,
            })
        } else {
            Ok(())
        }
    }
}

impl IntPolynomial {
    /// Exact value at an integer point.
    pub fn evaluate_int(&self, point: &[BigInt]) -> Result<BigInt> {
        self.evaluate(point)
    }

    /// `p(point) mod q` in `[0, q)`.
    pub fn evaluate_mod(&self, point: &[BigInt], q: &BigInt) -> Result<BigInt> {
        if !q.is_positive() {
            return Err(Error::ZeroModulus);
        }
        self.check_point(point.len())?;
        let reduced: Vec<BigInt> = point.iter().map(|x| x.mod_floor(q)).collect();
        let mut acc = BigInt::zero();
        for (m, c) in &self.terms {
            let mut t = c.mod_floor(q);
            for (x, &e) in reduced.iter().zip(&m.0) {
                if e > 0 {
                    t = (t * x.modpow(&BigInt::from(e), q)).mod_floor(q);
                }
            }
            acc = (acc + t).mod_floor(q);
        }
        Ok(acc)
    }

    pub fn to_rational(&self) -> RatPolynomial {
        self.map_coefficients(|c| BigRational::from_integer(c.clone()))
    }

    /// Largest absolute coefficient (0 for the zero polynomial).
    pub fn height(&self) -> BigInt {
        self.terms
            .values()
            .map(|c| c.abs())
            .max()
            .unwrap_or_else(BigInt::zero)
    }
}

impl RatPolynomial {
    /// `(P, D)` with `self = P / D`, `D > 0` the least common denominator.
    pub fn common_denominator_form(&self) -> (IntPolynomial, BigInt) {
        let den = self
            .terms
            .values()
            .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let num = self.map_coefficients(|c| (c * BigRational::from_integer(den.clone())).to_integer());
        (num, den)
    }

    /// The integer polynomial, when every coefficient is integral.
    pub fn to_integer(&self) -> Option<IntPolynomial> {
        self.terms
            .values()
            .all(|c| c.is_integer())
            .then(|| self.map_coefficients(|c| c.to_integer()))
    }
}

impl<C: Coefficient> Add for &Polynomial<C> {
    type Output = Polynomial<C>;
    fn add(self, rhs: &Polynomial<C>) -> Polynomial<C> {
        assert_eq!(self.nvars, rhs.nvars);
        Polynomial::from_terms(
            self.nvars,
            self.terms
                .iter()
                .chain(rhs.terms.iter())
                .map(|(m, c)| (m.clone(), c.clone())),
        )
    }
}

impl<C: Coefficient> Sub for &Polynomial<C> {
    type Output = Polynomial<C>;
    fn sub(self, rhs: &Polynomial<C>) -> Polynomial<C> {
        self + &(-rhs)
    }
}

impl<C: Coefficient> Neg for &Polynomial<C> {
    type Output = Polynomial<C>;
    fn neg(self) -> Polynomial<C> {
        Polynomial {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), -c.clone()))
                .collect(),
        }
    }
}

impl<C: Coefficient> Mul for &Polynomial<C> {
    type Output = Polynomial<C>;
    fn mul(self, rhs: &Polynomial<C>) -> Polynomial<C> {
        assert_eq!(self.nvars, rhs.nvars);
        let mut out: BTreeMap<Monomial, C> = BTreeMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                let m = ma.mul(mb);
                let c = ca.clone() * cb.clone();
                let slot = out.entry(m).or_insert_with(C::zero);
                *slot = slot.clone() + c;
            }
        }
        out.retain(|_, c| !c.is_zero());
        Polynomial {
            nvars: self.nvars,
            terms: out,
        }
    }
}

impl<C: Coefficient> fmt::Display for Polynomial<C> {
    /// Human-readable form, highest terms first: `x1^2 - 3*x1*x2 + 7`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms.iter().rev().enumerate() {
            let (neg, mag) = c.sign_and_abs();
            if k == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { "-" } else { "+" })?;
            }
            let vars: Vec<String> = m
                .0
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(i, &e)| {
                    if e == 1 {
                        format!("x{}", i + 1)
                    } else {
                        format!("x{}^{}", i + 1, e)
                    }
                })
                .collect();
            if vars.is_empty() {
                write!(f, "{}", mag)?;
            } else if mag.is_one() {
                write!(f, "{}", vars.join("*"))?;
            } else {
                write!(f, "{}*{}", mag, vars.join("*"))?;
            }
        }
        Ok(())
    }
}

impl<C: Coefficient> fmt::Debug for Polynomial<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Polynomial[n={}]({})", self.nvars, self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn poly(nvars: usize, terms: &[(i64, &[u32])]) -> IntPolynomial {
        IntPolynomial::from_terms(
            nvars,
            terms
                .iter()
                .map(|(c, e)| (Monomial(e.to_vec()), BigInt::from(*c))),
        )
    }

    fn pt(xs: &[i64]) -> Vec<BigInt> {
        xs.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn evaluate_int_examples() {
        let p = poly(2, &[(1, &[1, 1]), (-4, &[0, 0])]);
        assert_eq!(p.evaluate_int(&pt(&[2, 2])).unwrap(), BigInt::zero());
        let q = poly(2, &[(1, &[2, 0]), (1, &[0, 2]), (-5, &[0, 0])]);
        assert_eq!(q.evaluate_int(&pt(&[1, 2])).unwrap(), BigInt::zero());
        let c = poly(1, &[(1, &[3])]);
        assert_eq!(c.evaluate_int(&pt(&[-3])).unwrap(), BigInt::from(-27));
        assert!(matches!(
            c.evaluate_int(&pt(&[1, 2])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn evaluate_mod_examples() {
        let p = poly(2, &[(1, &[1, 0]), (1, &[0, 1])]);
        assert_eq!(
            p.evaluate_mod(&pt(&[3, 4]), &BigInt::from(5)).unwrap(),
            BigInt::from(2)
        );
        assert_eq!(
            p.evaluate_mod(&pt(&[3, 4]), &BigInt::from(1)).unwrap(),
            BigInt::zero()
        );
        let sq = poly(1, &[(1, &[2])]);
        assert_eq!(
            sq.evaluate_mod(&pt(&[5]), &BigInt::from(7)).unwrap(),
            BigInt::from(4)
        );
        assert_eq!(
            sq.evaluate_mod(&pt(&[5]), &BigInt::zero()),
            Err(Error::ZeroModulus)
        );
    }

    #[test]
    fn top_degree_examples() {
        let p = poly(1, &[(1, &[2]), (3, &[1]), (7, &[0])]);
        assert_eq!(p.top_degree_part().unwrap(), poly(1, &[(1, &[2])]));
        let q = poly(
            3,
            &[(1, &[1, 1, 0]), (-1, &[0, 0, 2]), (1, &[1, 0, 0]), (-9, &[0, 0, 0])],
        );
        let top = poly(3, &[(1, &[1, 1, 0]), (-1, &[0, 0, 2])]);
        assert_eq!(q.top_degree_part().unwrap(), top);
        assert_eq!(top.top_degree_part().unwrap(), top);
        assert_eq!(
            IntPolynomial::zero(2).top_degree_part(),
            Err(Error::ZeroPolynomial)
        );
    }

    #[test]
    fn restrict_zero_examples() {
        let p = poly(2, &[(1, &[1, 1]), (1, &[0, 2])]);
        assert_eq!(p.restrict_zero(0).unwrap(), poly(2, &[(1, &[0, 2])]));
        let q = poly(2, &[(1, &[0, 2])]);
        assert_eq!(q.restrict_zero(0).unwrap(), q);
        let r = poly(2, &[(1, &[2, 0])]);
        assert!(r.restrict_zero(0).unwrap().is_zero());
        assert_eq!(r.restrict_zero(0).unwrap().nvars(), 2);
        assert!(matches!(
            r.restrict_zero(2),
            Err(Error::VariableOutOfRange { .. })
        ));
    }

    #[test]
    fn grlex_order_puts_top_terms_last() {
        let p = poly(2, &[(1, &[0, 3]), (1, &[2, 0]), (1, &[1, 2])]);
        let order: Vec<Vec<u32>> = p.terms().map(|(m, _)| m.0.clone()).collect();
        assert_eq!(order, vec![vec![2, 0], vec![0, 3], vec![1, 2]]);
    }

    #[test]
    fn blocks_and_separability() {
        // x1^2 + x2*x3 + x4 - 1
        let p = poly(
            4,
            &[(1, &[2, 0, 0, 0]), (1, &[0, 1, 1, 0]), (1, &[0, 0, 0, 1]), (-1, &[0, 0, 0, 0])],
        );
        assert_eq!(p.variable_blocks(), vec![vec![0], vec![1, 2], vec![3]]);
        assert!(p.is_separable_at(1));
        assert!(!p.is_separable_at(2));
        assert!(p.is_separable_at(3));
    }

    #[test]
    fn derivative_and_compose() {
        let p = poly(2, &[(1, &[2, 1]), (3, &[0, 1])]);
        assert_eq!(
            p.derivative(0).unwrap(),
            poly(2, &[(2, &[1, 1])])
        );
        // p(x2, x1)
        let swapped = p
            .compose(&[IntPolynomial::var(2, 1), IntPolynomial::var(2, 0)])
            .unwrap();
        assert_eq!(swapped, poly(2, &[(1, &[1, 2]), (3, &[1, 0])]));
    }

    #[test]
    fn common_denominator_roundtrip() {
        let half = BigRational::new(BigInt::from(1), BigInt::from(2));
        let third = BigRational::new(BigInt::from(-1), BigInt::from(3));
        let p = RatPolynomial::from_terms(
            2,
            [(Monomial(vec![1, 0]), half), (Monomial(vec![0, 1]), third)],
        );
        let (num, den) = p.common_denominator_form();
        assert_eq!(den, BigInt::from(6));
        assert_eq!(num, poly(2, &[(3, &[1, 0]), (-2, &[0, 1])]));
        assert!(p.to_integer().is_none());
    }

    #[test]
    fn display_is_readable() {
        let p = poly(2, &[(1, &[2, 0]), (-3, &[1, 1]), (7, &[0, 0])]);
        assert_eq!(p.to_string(), "x1^2 - 3*x1*x2 + 7");
    }
}
