//! The multilinear difference operator
//!
//! `Gamma_{d,G}(x_1, .., x_d) = sum_{t in {0,1}^d} (-1)^{|t|} G(t_1 x_1 + .. + t_d x_d)`.
//!
//! Note the sign convention: the empty subset contributes `+G(0)`, the full
//! subset `(-1)^d G(x_1 + .. + x_d)`. For a form of degree `d` the result is
//! `(-1)^d` times the full polarization, e.g. `2uv` for `G(x) = x^2` and
//! `-6uvw` for `G(x) = x^3`.

use super::{Coefficient, Polynomial};
use crate::error::{Error, Result};

fn subset_sum<C: Coefficient>(args: &[Vec<C>], mask: u64, n: usize) -> Vec<C> {
    let mut y = vec![C::zero(); n];
    for (i, a) in args.iter().enumerate() {
        if mask >> i & 1 == 1 {
            for (yj, aj) in y.iter_mut().zip(a) {
                *yj = yj.clone() + aj.clone();
            }
        }
    }
    y
}

/// Numeric mode: `Gamma_{d,G}` at the given `d = args.len()` points.
pub fn weyl_difference<C: Coefficient>(g: &Polynomial<C>, args: &[Vec<C>]) -> Result<C> {
    let d = args.len();
    if d == 0 || d > 40 {
        return Err(Error::InvalidArgument(format!("difference order {d}")));
    }
    let n = g.nvars();
    if let Some(a) = args.iter().find(|a| a.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.len(),
        });
    }
    let mut acc = C::zero();
    for mask in 0..(1u64 << d) {
        let v = g.evaluate(&subset_sum(args, mask, n))?;
        if mask.count_ones() % 2 == 0 {
            acc = acc + v;
        } else {
            acc = acc - v;
        }
    }
    Ok(acc)
}

/// Symbolic mode: `Gamma_{d,G}` as a polynomial in `n*d` variables, where
/// argument `k` occupies variables `k*n .. (k+1)*n`.
pub fn weyl_difference_symbolic<C: Coefficient>(
    g: &Polynomial<C>,
    d: usize,
) -> Result<Polynomial<C>> {
    if d == 0 || d > 16 {
        return Err(Error::InvalidArgument(format!("difference order {d}")));
    }
    let n = g.nvars();
    let total = n * d;
    let args: Vec<Vec<Polynomial<C>>> = (0..d)
        .map(|k| (0..n).map(|j| Polynomial::var(total, k * n + j)).collect())
        .collect();
    let mut acc = Polynomial::zero(total);
    for mask in 0..(1u64 << d) {
        let mut images = vec![Polynomial::zero(total); n];
        for (k, a) in args.iter().enumerate() {
            if mask >> k & 1 == 1 {
                for (img, v) in images.iter_mut().zip(a) {
                    *img = &*img + v;
                }
            }
        }
        let term = g.compose(&images)?;
        acc = if mask.count_ones() % 2 == 0 {
            &acc + &term
        } else {
            &acc - &term
        };
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polycore::IntPolynomial;
    use num_bigint::BigInt;

    fn big(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn square_gives_twice_product() {
        let g = IntPolynomial::parse("n=1\n1 2\n").unwrap();
        let sym = weyl_difference_symbolic(&g, 2).unwrap();
        assert_eq!(sym.to_string(), "2*x1*x2");
        let v = weyl_difference(&g, &[big(&[3]), big(&[5])]).unwrap();
        assert_eq!(v, BigInt::from(30));
    }

    #[test]
    fn cube_gives_six_product_up_to_sign() {
        let g = IntPolynomial::parse("n=1\n1 3\n").unwrap();
        let sym = weyl_difference_symbolic(&g, 3).unwrap();
        assert_eq!(sym.to_string(), "-6*x1*x2*x3");
    }

    #[test]
    fn lower_degree_terms_vanish() {
        // x^2 + 5x + 1 differenced three times
        let g = IntPolynomial::parse("n=1\n1 2\n5 1\n1 0\n").unwrap();
        assert!(weyl_difference_symbolic(&g, 3).unwrap().is_zero());
    }
}
