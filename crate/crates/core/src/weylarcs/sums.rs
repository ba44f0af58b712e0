use num_complex::Complex64;
use num_traits::ToPrimitive;
use rayon::prelude::*;

use crate::arith::{e, gcd, roots_of_unity, CompensatedSum, ComplexSum};
use crate::counting::MangoldtTable;
use crate::error::{Error, Result};
use crate::localdensity::for_each_tuple;
use crate::polycore::{I128Evaluator, IntPolynomial, ModEvaluator};

/// Default cap on the number of terms in an exponential sum.
pub const SUM_BUDGET: u128 = 200_000_000;

const DIGIT_BITS: u32 = 20;

/// `frac(alpha * v)` without forming the product: `v` is split into 20-bit
/// digits and each digit multiplies `frac(alpha 2^{20k})`, which is exact in
/// floating point. The error stays near `2^20` ulps however large `v` is.
pub fn frac_mul(alpha: f64, v: i128) -> f64 {
    let mut scale = alpha.rem_euclid(1.0);
    let mut u = v.unsigned_abs();
    let mask = (1u128 << DIGIT_BITS) - 1;
    let mut acc = 0.0f64;
    while u > 0 {
        let digit = (u & mask) as f64;
        acc = (acc + digit * scale).rem_euclid(1.0);
        u >>= DIGIT_BITS;
        scale = (scale * (1u64 << DIGIT_BITS) as f64).rem_euclid(1.0);
    }
    if v < 0 {
        (1.0 - acc).rem_euclid(1.0)
    } else {
        acc
    }
}

/// Visits the tuples of `values^k` in lexicographic order.
pub(crate) fn for_each_i64_tuple(values: &[i64], k: usize, mut f: impl FnMut(&[i64])) {
    if values.is_empty() && k > 0 {
        return;
    }
    let mut idx = vec![0usize; k];
    let mut x: Vec<i64> = vec![values.first().copied().unwrap_or(0); k];
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

fn check_budget(len: usize, n: usize, budget: u128) -> Result<()> {
    let needed = (len as u128)
        .checked_pow(n as u32)
        .ok_or(Error::Overflow("term count"))?;
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    Ok(())
}

/// `T(b; alpha) = sum_{x in [0,N]^n} Lambda(x) e(alpha b(x))`, where
/// `Lambda(x)` is the product of the coordinate weights. Only prime-power
/// coordinates are visited. A polynomial whose variables never share a
/// monomial factors into one-dimensional sums.
pub fn t_sum(b: &IntPolynomial, alpha: f64, n: u64, table: &MangoldtTable) -> Result<Complex64> {
    table.ensure_covers(n)?;
    let support: Vec<i64> = table.support(n).into_iter().map(|k| k as i64).collect();
    let weights: Vec<f64> = support.iter().map(|&k| table.value(k as u64)).collect();
    let nv = b.nvars();
    let c0 = b
        .constant_term()
        .to_i128()
        .ok_or(Error::Overflow("constant term exceeds i128"))?;
    if nv == 0 {
        return Ok(e(frac_mul(alpha, c0)));
    }
    let blocks = b.variable_blocks();

    if blocks.iter().all(|bl| bl.len() == 1) {
        let mut total = e(frac_mul(alpha, c0));
        let psi: CompensatedSum = weights.iter().copied().collect();
        for _ in blocks.len()..nv {
            total *= psi.value();
        }
        for bl in &blocks {
            let ev = I128Evaluator::restricted(&b.block_part(bl), bl, false)?;
            let mut acc = ComplexSum::new();
            for (&k, &w) in support.iter().zip(&weights) {
                acc.add(e(frac_mul(alpha, ev.eval(&[k])?)) * w);
            }
            total *= acc.value();
        }
        return Ok(total);
    }

    check_budget(support.len(), nv, SUM_BUDGET)?;
    let ev = I128Evaluator::new(b)?;
    let indices: Vec<i64> = (0..support.len() as i64).collect();
    let partials: Vec<Result<Complex64>> = (0..support.len())
        .into_par_iter()
        .map(|i0| {
            let mut acc = ComplexSum::new();
            let mut x = vec![support[i0]; nv];
            let mut err = None;
            for_each_i64_tuple(&indices, nv - 1, |rest| {
                if err.is_some() {
                    return;
                }
                let mut w = weights[i0];
                for (xj, &r) in x[1..].iter_mut().zip(rest) {
                    *xj = support[r as usize];
                    w *= weights[r as usize];
                }
                match ev.eval(&x) {
                    Ok(v) => acc.add(e(frac_mul(alpha, v)) * w),
                    Err(e) => err = Some(e),
                }
            });
            err.map_or(Ok(acc.value()), Err)
        })
        .collect();
    let mut total = ComplexSum::new();
    for p in partials {
        total.add(p?);
    }
    Ok(total.value())
}

/// `S(alpha) = sum_{x in P B, x integral} e(alpha psi(x))` for the box
/// `B = prod [lo_i, hi_i]` with sides at most 1.
pub fn s_sum(psi: &IntPolynomial, alpha: f64, bx: &[(f64, f64)], p: f64) -> Result<Complex64> {
    let n = psi.nvars();
    if bx.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: bx.len(),
        });
    }
    if let Some((lo, hi)) = bx.iter().find(|(lo, hi)| !(hi >= lo && hi - lo <= 1.0)) {
        return Err(Error::InvalidArgument(format!(
            "box side [{lo}, {hi}] must have length in [0, 1]"
        )));
    }
    let ranges: Vec<(i64, i64)> = bx
        .iter()
        .map(|&(lo, hi)| ((p * lo).ceil() as i64, (p * hi).floor() as i64))
        .collect();
    if ranges.iter().any(|(a, b)| a > b) {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let needed = ranges
        .iter()
        .try_fold(1u128, |acc, (a, b)| acc.checked_mul((b - a + 1) as u128))
        .ok_or(Error::Overflow("lattice point count"))?;
    if needed > SUM_BUDGET {
        return Err(Error::BudgetExceeded {
            needed,
            budget: SUM_BUDGET,
        });
    }
    let ev = I128Evaluator::new(psi)?;
    let mut acc = ComplexSum::new();
    let mut x: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    loop {
        acc.add(e(frac_mul(alpha, ev.eval(&x)?)));
        let mut j = n;
        loop {
            if j == 0 {
                return Ok(acc.value());
            }
            j -= 1;
            if x[j] < ranges[j].1 {
                x[j] += 1;
                break;
            }
            x[j] = ranges[j].0;
        }
    }
}

/// `E(m/q) = q^{-n} sum_{x mod q} e(m psi(x) / q)`, over all residues.
pub fn e_normalized(psi: &IntPolynomial, q: u64, m: u64) -> Result<Complex64> {
    if q == 0 {
        return Err(Error::ZeroModulus);
    }
    if q > 1 && gcd(m % q, q) != 1 {
        return Err(Error::NotCoprime { m, q });
    }
    let n = psi.nvars();
    check_budget(q as usize, n, SUM_BUDGET)?;
    let ev = ModEvaluator::new(psi, q)?;
    let residues: Vec<u64> = (0..q).collect();
    let mut hist = vec![0u64; q as usize];
    for_each_tuple(&residues, n, |x| hist[ev.eval(x) as usize] += 1);
    let roots = roots_of_unity(q);
    let mut acc = ComplexSum::new();
    for (v, &c) in hist.iter().enumerate() {
        if c > 0 {
            let j = (m as u128 * v as u128 % q as u128) as usize;
            acc.add(roots[j] * c as f64);
        }
    }
    Ok(acc.value() / (q as f64).powi(n as i32))
}
