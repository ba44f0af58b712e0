use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use super::{Coefficient, IntPolynomial, Monomial, Polynomial, RatPolynomial};
use crate::error::{Error, Result};

/// `sum_j c_j x_j` over the rationals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearForm {
    pub coeffs: Vec<BigRational>,
}

impl LinearForm {
    pub fn new(coeffs: Vec<BigRational>) -> Self {
        LinearForm { coeffs }
    }

    pub fn from_ints(coeffs: &[i64]) -> Self {
        LinearForm {
            coeffs: coeffs
                .iter()
                .map(|&c| BigRational::from_integer(BigInt::from(c)))
                .collect(),
        }
    }

    pub fn nvars(&self) -> usize {
        self.coeffs.len()
    }

    pub fn to_polynomial(&self) -> RatPolynomial {
        let n = self.nvars();
        RatPolynomial::from_terms(
            n,
            self.coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| (Monomial::var(n, i), c.clone())),
        )
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, _)| i)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Assignment {
    Linear(LinearForm),
    Constant(BigInt),
}

/// Partial substitution `x_i -> assignment`; unassigned variables stay.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SubstitutionMap {
    assignments: BTreeMap<usize, Assignment>,
}

impl SubstitutionMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn assign(&mut self, var: usize, a: Assignment) -> &mut Self {
        self.assignments.insert(var, a);
        self
    }

    pub fn get(&self, var: usize) -> Option<&Assignment> {
        self.assignments.get(&var)
    }

    pub fn assigned(&self) -> impl Iterator<Item = usize> + '_ {
        self.assignments.keys().copied()
    }

    /// Linear forms may only refer to unassigned variables, so one pass of
    /// substitution is final.
    pub fn validate(&self, nvars: usize) -> Result<()> {
        for (&var, a) in &self.assignments {
            if var >= nvars {
                return Err(Error::VariableOutOfRange {
                    index: var + 1,
                    nvars,
                });
            }
            if let Assignment::Linear(l) = a {
                if l.nvars() != nvars {
                    return Err(Error::DimensionMismatch {
                        expected: nvars,
                        got: l.nvars(),
                    });
                }
                if let Some(r) = l.support().find(|j| self.assignments.contains_key(j)) {
                    return Err(Error::BadSubstitution {
                        var: var + 1,
                        refers: r + 1,
                    });
                }
            }
        }
        Ok(())
    }

    fn images(&self, nvars: usize) -> Vec<RatPolynomial> {
        (0..nvars)
            .map(|i| match self.assignments.get(&i) {
                None => RatPolynomial::var(nvars, i),
                Some(Assignment::Linear(l)) => l.to_polynomial(),
                Some(Assignment::Constant(c)) => {
                    RatPolynomial::constant(nvars, BigRational::from_integer(c.clone()))
                }
            })
            .collect()
    }
}

impl<C: Coefficient> Polynomial<C> {
    /// Applies the substitution; coefficients are lifted to the rationals.
    pub fn substitute_linear(
        &self,
        map: &SubstitutionMap,
        to_rat: impl Fn(&C) -> BigRational,
    ) -> Result<RatPolynomial> {
        map.validate(self.nvars())?;
        self.map_coefficients(to_rat).compose(&map.images(self.nvars()))
    }
}

impl IntPolynomial {
    pub fn substitute(&self, map: &SubstitutionMap) -> Result<RatPolynomial> {
        self.substitute_linear(map, |c| BigRational::from_integer(c.clone()))
    }
}

impl RatPolynomial {
    pub fn substitute(&self, map: &SubstitutionMap) -> Result<RatPolynomial> {
        self.substitute_linear(map, |c| c.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substitution_examples() {
        // x1*x2 - x3^2 with x1 -> x3, x2 -> 2
        let p = IntPolynomial::parse("n=3\n1 1 1 0\n-1 0 0 2\n").unwrap();
        let mut map = SubstitutionMap::new();
        map.assign(0, Assignment::Linear(LinearForm::from_ints(&[0, 0, 1])))
            .assign(1, Assignment::Constant(BigInt::from(2)));
        let out = p.substitute(&map).unwrap().to_integer().unwrap();
        assert_eq!(out.to_string(), "-x3^2 + 2*x3");
    }

    #[test]
    fn chained_assignment_is_rejected() {
        let p = IntPolynomial::parse("n=2\n1 1 1\n").unwrap();
        let mut map = SubstitutionMap::new();
        map.assign(0, Assignment::Linear(LinearForm::from_ints(&[0, 1])))
            .assign(1, Assignment::Constant(BigInt::from(1)));
        assert_eq!(
            p.substitute(&map),
            Err(Error::BadSubstitution { var: 1, refers: 2 })
        );
    }
}
