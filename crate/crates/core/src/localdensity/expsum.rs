//! Complete exponential sums over unit residues.
//!
//! Both `S~_{m,q}` and `B(q)` only depend on how often each residue
//! `b(k) mod q` occurs as `k` runs over `U_q^n`. That histogram is exact
//! (integer counts) and is assembled block by block: variables that never
//! share a monomial are enumerated independently and the block histograms
//! are combined by cyclic convolution.

use num_complex::Complex64;
use num_integer::Integer;
use num_traits::ToPrimitive;
use rayon::prelude::*;

use crate::arith::{gcd, roots_of_unity, totient, ComplexSum};
use crate::error::{Error, Result};
use crate::polycore::{IntPolynomial, ModEvaluator};

/// `U_q`, with the convention `U_1 = {0}`.
pub fn units(q: u64) -> Vec<u64> {
    if q == 1 {
        return vec![0];
    }
    (1..q).filter(|&k| gcd(k, q) == 1).collect()
}

fn checked_pow(base: u128, exp: usize) -> Result<u128> {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc
            .checked_mul(base)
            .ok_or(Error::Overflow("unit count"))?;
    }
    Ok(acc)
}

/// Visits every tuple of `values^k` in lexicographic order.
pub(crate) fn for_each_tuple(values: &[u64], k: usize, mut f: impl FnMut(&[u64])) {
    if values.is_empty() && k > 0 {
        return;
    }
    let mut idx = vec![0usize; k];
    let mut x: Vec<u64> = vec![values.first().copied().unwrap_or(0); k];
    loop {
        f(&x);
        let mut j = k;
        loop {
            if j == 0 {
                return;
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] < values.len() {
                x[j] = values[idx[j]];
                break;
            }
            idx[j] = 0;
            x[j] = values[0];
        }
    }
}

/// `hist[v] = #{k in U_q^n : b(k) = v mod q}`.
///
/// `budget` caps the number of block evaluations.
pub fn unit_value_histogram(b: &IntPolynomial, q: u64, budget: u128) -> Result<Vec<u128>> {
    if q == 0 {
        return Err(Error::ZeroModulus);
    }
    let us = units(q);
    let blocks = b.variable_blocks();
    let needed: u128 = blocks
        .iter()
        .map(|bl| checked_pow(us.len() as u128, bl.len()))
        .sum::<Result<u128>>()?;
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let qs = q as usize;
    let mut hist = vec![0u128; qs];
    let c0 = b
        .constant_term()
        .mod_floor(&num_bigint::BigInt::from(q))
        .to_u64()
        .unwrap();
    hist[c0 as usize] = 1;
    for block in &blocks {
        let ev = ModEvaluator::restricted(&b.block_part(block), block, q, false)?;
        let mut bh = vec![0u128; qs];
        for_each_tuple(&us, block.len(), |x| bh[ev.eval(x) as usize] += 1);
        hist = cyclic_convolve(&hist, &bh)?;
    }
    let unused = b.nvars() - blocks.iter().map(Vec::len).sum::<usize>();
    let mult = checked_pow(us.len() as u128, unused)?;
    for h in hist.iter_mut() {
        *h = h.checked_mul(mult).ok_or(Error::Overflow("unit count"))?;
    }
    Ok(hist)
}

fn cyclic_convolve(a: &[u128], b: &[u128]) -> Result<Vec<u128>> {
    let q = a.len();
    let mut out = vec![0u128; q];
    let nz: Vec<(usize, u128)> = b
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(i, &c)| (i, c))
        .collect();
    for (i, &ca) in a.iter().enumerate() {
        if ca == 0 {
            continue;
        }
        for &(j, cb) in &nz {
            let k = if i + j >= q { i + j - q } else { i + j };
            let prod = ca.checked_mul(cb).ok_or(Error::Overflow("histogram"))?;
            out[k] = out[k].checked_add(prod).ok_or(Error::Overflow("histogram"))?;
        }
    }
    Ok(out)
}

/// `sum_v w[v] e(m v / q)` with the angle reduced exactly.
fn twisted_sum(w: &[f64], m: u64, roots: &[Complex64]) -> Complex64 {
    let q = roots.len() as u64;
    let mut acc = ComplexSum::new();
    for (v, &wv) in w.iter().enumerate() {
        if wv != 0.0 {
            let j = ((m as u128 * v as u128) % q as u128) as usize;
            acc.add(roots[j] * wv);
        }
    }
    acc.value()
}

/// `S~_{m,q} = sum_{k in U_q^n} e(b(k) m / q)`.
pub fn unit_exp_sum(b: &IntPolynomial, m: u64, q: u64, budget: u128) -> Result<Complex64> {
    if q == 0 {
        return Err(Error::ZeroModulus);
    }
    if gcd(m % q, q) != 1 && q != 1 {
        return Err(Error::NotCoprime { m, q });
    }
    let hist = unit_value_histogram(b, q, budget)?;
    let w: Vec<f64> = hist.iter().map(|&h| h as f64).collect();
    Ok(twisted_sum(&w, m % q, &roots_of_unity(q)))
}

/// `B(q) = phi(q)^{-n} sum_{m in U_q} S~_{m,q}`. The imaginary part cancels
/// in exact arithmetic and is returned so callers can check it.
pub fn b_of_q(b: &IntPolynomial, q: u64, budget: u128) -> Result<Complex64> {
    let hist = unit_value_histogram(b, q, budget)?;
    let total = (totient(q) as f64).powi(b.nvars() as i32);
    let w: Vec<f64> = hist.iter().map(|&h| h as f64 / total).collect();
    let roots = roots_of_unity(q);
    let terms: Vec<Complex64> = units(q)
        .par_iter()
        .map(|&m| twisted_sum(&w, m, &roots))
        .collect();
    let mut acc = ComplexSum::new();
    for t in terms {
        acc.add(t);
    }
    Ok(acc.value())
}

#[cfg(test)]
mod tests {
    use super::*;

    const BUDGET: u128 = 100_000_000;

    fn p(text: &str) -> IntPolynomial {
        IntPolynomial::parse(text).unwrap()
    }

    #[test]
    fn unit_sum_examples() {
        let x = p("n=1\n1 1\n");
        assert!((unit_exp_sum(&x, 0, 1, BUDGET).unwrap() - 1.0).norm() < 1e-15);
        assert!((unit_exp_sum(&x, 1, 2, BUDGET).unwrap() + 1.0).norm() < 1e-15);
        assert!(unit_exp_sum(&x, 1, 4, BUDGET).unwrap().norm() < 1e-15);
        assert_eq!(
            unit_exp_sum(&x, 2, 4, BUDGET),
            Err(Error::NotCoprime { m: 2, q: 4 })
        );
    }

    #[test]
    fn b_examples() {
        let x = p("n=1\n1 1\n");
        assert_eq!(b_of_q(&x, 1, BUDGET).unwrap(), Complex64::new(1.0, 0.0));
        assert!((b_of_q(&x, 2, BUDGET).unwrap() + 1.0).norm() < 1e-15);
        assert!(b_of_q(&x, 4, BUDGET).unwrap().norm() < 1e-15);
    }

    #[test]
    fn histogram_matches_direct_enumeration() {
        // x1*x2 + x3^2 + 3 over U_9^3
        let b = p("n=3\n1 1 1 0\n1 0 0 2\n3 0 0 0\n");
        let q = 9u64;
        let hist = unit_value_histogram(&b, q, BUDGET).unwrap();
        let ev = ModEvaluator::new(&b, q).unwrap();
        let mut direct = vec![0u128; q as usize];
        for_each_tuple(&units(q), 3, |x| direct[ev.eval(x) as usize] += 1);
        assert_eq!(hist, direct);
    }

    #[test]
    fn unused_variables_multiply_counts() {
        let b = p("n=3\n1 1 0 0\n");
        let hist = unit_value_histogram(&b, 5, BUDGET).unwrap();
        assert_eq!(hist.iter().sum::<u128>(), 4 * 4 * 4);
        assert_eq!(hist[0], 0);
    }

    #[test]
    fn budget_is_enforced() {
        let b = p("n=2\n1 1 1\n");
        assert!(matches!(
            unit_value_histogram(&b, 1009, 1000),
            Err(Error::BudgetExceeded { .. })
        ));
    }
}
