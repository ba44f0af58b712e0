//! Exact h-invariant of a rational quadratic form.
//!
//! For a quadratic form every optimal decomposition uses linear factors, and
//! `h = rank - (Witt index)`. The Witt index over `Q` is the minimum of the
//! local Witt indices over `R` and the `Q_p` (induction on Hasse-Minkowski
//! with Witt cancellation). Locally the index is read off from the rank, the
//! discriminant and the Hasse invariant by repeatedly splitting off
//! hyperbolic planes. Only `p = 2` and primes dividing a diagonal entry can
//! lower the index below its generic value, so those are the places checked.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::Serialize;

use super::squareclass::{hilbert, SquareClass};
use crate::error::{Error, Result};
use crate::polycore::{Coefficient, Monomial, Polynomial, RatPolynomial};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuadraticFormData {
    /// Symmetric `A` with `f(x) = x^T A x`; off-diagonal entries are half the
    /// mixed coefficients. Entries are written `p/q`.
    pub gram: Vec<Vec<String>>,
    pub gram_convention: &'static str,
    pub rank: usize,
    /// `(positives, negatives)` of a diagonalization.
    pub signature: (usize, usize),
    pub witt_index: usize,
    pub h_value: usize,
    /// Local Witt index at each place examined; `0` stands for infinity.
    pub local_witt_indices: Vec<(u64, usize)>,
}

/// Gram matrix under the `x^T A x` convention.
pub fn gram_matrix<C: Coefficient>(
    f: &Polynomial<C>,
    to_rat: impl Fn(&C) -> BigRational,
) -> Result<Vec<Vec<BigRational>>> {
    match f.degree() {
        Some(2) => {}
        Some(d) => return Err(Error::WrongDegree { expected: 2, got: d }),
        None => return Err(Error::ZeroPolynomial),
    }
    if !f.is_homogeneous() {
        return Err(Error::NotHomogeneous);
    }
    let n = f.nvars();
    let half = BigRational::new(BigInt::from(1), BigInt::from(2));
    let mut a = vec![vec![BigRational::zero(); n]; n];
    for (m, c) in f.terms() {
        let c = to_rat(c);
        let vars: Vec<usize> = m.support().collect();
        match vars.as_slice() {
            [i] => a[*i][*i] = c,
            [i, j] => {
                a[*i][*j] = &c * &half;
                a[*j][*i] = &c * &half;
            }
            _ => unreachable!("degree-2 monomial"),
        }
    }
    Ok(a)
}

/// Rebuilds `x^T A x`.
pub fn form_from_gram(a: &[Vec<BigRational>]) -> RatPolynomial {
    let n = a.len();
    let mut terms = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let mut e = vec![0u32; n];
            e[i] += 1;
            e[j] += 1;
            terms.push((Monomial(e), a[i][j].clone()));
        }
    }
    RatPolynomial::from_terms(n, terms)
}

/// Nonzero diagonal entries of a congruent diagonal form.
pub fn diagonalize(gram: &[Vec<BigRational>]) -> Vec<BigRational> {
    let n = gram.len();
    let mut a: Vec<Vec<BigRational>> = gram.to_vec();
    let mut diag = Vec::new();
    for k in 0..n {
        let pivot = (k..n).find(|&i| !a[i][i].is_zero());
        let pivot = match pivot {
            Some(p) => p,
            None => {
                let pair = (k..n)
                    .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                    .find(|&(i, j)| !a[i][j].is_zero());
                let Some((i, j)) = pair else { break };
                // e_i -> e_i + e_j makes the diagonal entry 2 a_ij
                for c in 0..n {
                    let v = a[j][c].clone();
                    a[i][c] += v;
                }
                for r in 0..n {
                    let v = a[r][j].clone();
                    a[r][i] += v;
                }
                i
            }
        };
        a.swap(k, pivot);
        for row in a.iter_mut() {
            row.swap(k, pivot);
        }
        let akk = a[k][k].clone();
        for i in k + 1..n {
            if a[i][k].is_zero() {
                continue;
            }
            let factor = &a[i][k] / &akk;
            for c in k..n {
                let v = &factor * &a[k][c];
                a[i][c] -= v;
            }
            for r in k..n {
                let v = &factor * &a[r][k];
                a[r][i] -= v;
            }
        }
        diag.push(akk);
    }
    diag
}

/// Local Witt index over `Q_p` of a nondegenerate form given by rank,
/// discriminant class and Hasse invariant `prod_{i<j} (a_i, a_j)_p`.
fn local_witt_index(mut r: usize, mut d: SquareClass, mut eps: i8, p: u64) -> usize {
    let minus_one = SquareClass::minus_one();
    let mut idx = 0;
    loop {
        let isotropic = match r {
            0 | 1 => false,
            2 => d.neg().is_square_at(p),
            3 => hilbert(&minus_one, &d.neg(), p) == eps,
            4 => !d.is_square_at(p) || eps == hilbert(&minus_one, &minus_one, p),
            _ => true,
        };
        if !isotropic {
            return idx;
        }
        idx += 1;
        r -= 2;
        d = d.neg();
        eps *= hilbert(&minus_one, &d, p);
    }
}

pub fn quadratic_h_rational(f: &RatPolynomial) -> Result<QuadraticFormData> {
    quadratic_h_with(f, |c| c.clone())
}

pub fn quadratic_h<C: Coefficient>(
    f: &Polynomial<C>,
    to_rat: impl Fn(&C) -> BigRational,
) -> Result<QuadraticFormData> {
    quadratic_h_with(f, to_rat)
}

fn quadratic_h_with<C: Coefficient>(
    f: &Polynomial<C>,
    to_rat: impl Fn(&C) -> BigRational,
) -> Result<QuadraticFormData> {
    let gram = gram_matrix(f, to_rat)?;
    let diag = diagonalize(&gram);
    let rank = diag.len();
    let pos = diag.iter().filter(|a| a.is_positive()).count();
    let signature = (pos, rank - pos);
    let classes: Vec<SquareClass> = diag
        .iter()
        .map(SquareClass::of_rational)
        .collect::<Result<_>>()?;
    let disc = classes.iter().fold(SquareClass::one(), |acc, c| acc.mul(c));

    let mut places: Vec<u64> = vec![2];
    for c in &classes {
        places.extend_from_slice(c.support());
    }
    places.sort_unstable();
    places.dedup();

    let mut local = vec![(0u64, pos.min(rank - pos))];
    for &p in &places {
        let mut eps = 1i8;
        for i in 0..rank {
            for j in i + 1..rank {
                eps *= hilbert(&classes[i], &classes[j], p);
            }
        }
        local.push((p, local_witt_index(rank, disc.clone(), eps, p)));
    }
    let witt_index = local.iter().map(|&(_, w)| w).min().unwrap_or(0);
    Ok(QuadraticFormData {
        gram: gram
            .iter()
            .map(|row| row.iter().map(|x| x.to_string()).collect())
            .collect(),
        gram_convention: "f(x) = x^T A x",
        rank,
        signature,
        witt_index,
        h_value: rank - witt_index,
        local_witt_indices: local,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polycore::IntPolynomial;

    fn h(text: &str) -> usize {
        let f = IntPolynomial::parse(text).unwrap();
        quadratic_h(&f, |c| BigRational::from_integer(c.clone()))
            .unwrap()
            .h_value
    }

    #[test]
    fn small_forms() {
        assert_eq!(h("n=4\n1 1 1 0 0\n1 0 0 1 1\n"), 2);
        assert_eq!(h("n=3\n1 2 0 0\n1 0 2 0\n1 0 0 2\n"), 3);
        assert_eq!(h("n=3\n1 2 0 0\n-1 0 2 0\n1 0 0 2\n"), 2);
        // x^2 - 2y^2 is anisotropic over Q
        assert_eq!(h("n=2\n1 2 0\n-2 0 2\n"), 2);
        // x^2 - 4y^2 = (x - 2y)(x + 2y)
        assert_eq!(h("n=2\n1 2 0\n-4 0 2\n"), 1);
        // x^2 + y^2 - 3z^2 has no rational zero (obstruction at 3)
        assert_eq!(h("n=3\n1 2 0 0\n1 0 2 0\n-3 0 0 2\n"), 3);
        // x^2 + y^2 - 2z^2 has the zero (1,1,1)
        assert_eq!(h("n=3\n1 2 0 0\n1 0 2 0\n-2 0 0 2\n"), 2);
        // x1*x2 in 3 variables, rank 2
        assert_eq!(h("n=3\n1 1 1 0\n"), 1);
    }

    #[test]
    fn witt_index_matches_isotropic_search() {
        use num_traits::ToPrimitive;
        use rand::{Rng, SeedableRng};
        use rand_chacha::ChaCha8Rng;
        // Cassels: an isotropic form has a zero with max |x_i| <= (3H)^{(n-1)/2},
        // H the largest entry of the integral matrix 2A. Here H <= 4 and n <= 3.
        const BOX: i64 = 12;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut checked = 0;
        while checked < 60 {
            let n = rng.gen_range(2..=3usize);
            let mut terms = Vec::new();
            for i in 0..n {
                for j in i..n {
                    let mut e = vec![0u32; n];
                    e[i] += 1;
                    e[j] += 1;
                    terms.push((Monomial(e), BigInt::from(rng.gen_range(-2..=2))));
                }
            }
            let f = IntPolynomial::from_terms(n, terms);
            if f.is_zero() {
                continue;
            }
            let data = quadratic_h(&f, |c| BigRational::from_integer(c.clone())).unwrap();
            if data.rank < n {
                continue;
            }
            let coeffs: Vec<(Vec<u32>, i64)> = f
                .terms()
                .map(|(m, c)| (m.exponents().to_vec(), c.to_i64().unwrap()))
                .collect();
            let eval = |x: &[i64]| -> i64 {
                coeffs
                    .iter()
                    .map(|(e, c)| c * e.iter().zip(x).map(|(&k, &v)| v.pow(k)).product::<i64>())
                    .sum()
            };
            let side = (2 * BOX + 1) as usize;
            let isotropic = (0..side.pow(n as u32)).any(|mut k| {
                let x: Vec<i64> = (0..n)
                    .map(|_| {
                        let v = (k % side) as i64 - BOX;
                        k /= side;
                        v
                    })
                    .collect();
                x.iter().any(|&v| v != 0) && eval(&x) == 0
            });
            assert_eq!(data.witt_index >= 1, isotropic, "{}", f.to_inline());
            checked += 1;
        }
    }

    #[test]
    fn diagonalize_handles_zero_diagonal() {
        let f = IntPolynomial::parse("n=2\n1 1 1\n").unwrap();
        let g = gram_matrix(&f, |c| BigRational::from_integer(c.clone())).unwrap();
        let d = diagonalize(&g);
        assert_eq!(d.len(), 2);
        assert!(d[0].is_positive() != d[1].is_positive());
    }

    #[test]
    fn gram_roundtrip() {
        let f = IntPolynomial::parse("n=3\n3 2 0 0\n-5 1 1 0\n7 0 1 1\n").unwrap();
        let g = gram_matrix(&f, |c| BigRational::from_integer(c.clone())).unwrap();
        assert_eq!(form_from_gram(&g), f.to_rational());
    }

    #[test]
    fn wrong_degree_rejected() {
        let f = IntPolynomial::parse("n=1\n1 3\n").unwrap();
        assert!(matches!(
            quadratic_h(&f, |c| BigRational::from_integer(c.clone())),
            Err(Error::WrongDegree { expected: 2, got: 3 })
        ));
    }
}
