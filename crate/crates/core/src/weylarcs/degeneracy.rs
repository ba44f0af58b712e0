use std::sync::atomic::{AtomicU64, Ordering};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::linear_fit;
use crate::error::{Error, Result};
use crate::polycore::{weyl_difference_symbolic, I128Evaluator, IntPolynomial};

/// Default cap on visited points in `z_count`.
pub const Z_BUDGET: u64 = 500_000_000;

/// Integer form of the reduced row echelon form of `M y = 0`: each pivot
/// row reads `den * y_pivot + sum_f num_f * y_f = 0` over the free columns.
struct Kernel {
    free: Vec<usize>,
    rows: Vec<(usize, i128, Vec<i128>)>,
}

fn kernel(m: &[Vec<i128>]) -> Result<Kernel> {
    let nrows = m.len();
    let ncols = m.first().map_or(0, Vec::len);
    let mut a: Vec<Vec<BigRational>> = m
        .iter()
        .map(|r| r.iter().map(|&v| BigRational::from_integer(BigInt::from(v))).collect())
        .collect();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..ncols {
        if row == nrows {
            break;
        }
        let Some(sel) = (row..nrows).find(|&r| !a[r][col].is_zero()) else {
            continue;
        };
        a.swap(row, sel);
        let inv = a[row][col].recip();
        for v in a[row].iter_mut() {
            *v = &*v * &inv;
        }
        for r in 0..nrows {
            if r != row && !a[r][col].is_zero() {
                let factor = a[r][col].clone();
                for c in 0..ncols {
                    let sub = &factor * &a[row][c];
                    a[r][c] = &a[r][c] - sub;
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    let free: Vec<usize> = (0..ncols).filter(|c| !pivots.contains(c)).collect();
    let overflow = || Error::Overflow("kernel coefficients exceed i128");
    let rows = pivots
        .iter()
        .enumerate()
        .map(|(r, &pc)| {
            let den = free
                .iter()
                .fold(BigInt::one(), |acc, &f| num_integer::lcm(acc, a[r][f].denom().clone()));
            let nums = free
                .iter()
                .map(|&f| (&a[r][f] * BigRational::from_integer(den.clone())).to_integer().to_i128().ok_or_else(overflow))
                .collect::<Result<Vec<i128>>>()?;
            Ok((pc, den.to_i128().ok_or_else(overflow)?, nums))
        })
        .collect::<Result<_>>()?;
    Ok(Kernel { free, rows })
}

/// `#{y in [-R, R]^n : M y = 0}` by enumerating the free coordinates.
fn count_kernel_points(m: &[Vec<i128>], r: i64, spent: &AtomicU64, budget: u64) -> Result<u128> {
    let k = kernel(m)?;
    let side = (2 * r + 1) as u64;
    let work = side
        .checked_pow(k.free.len() as u32)
        .ok_or(Error::Overflow("kernel enumeration size"))?;
    let before = spent.fetch_add(work, Ordering::Relaxed);
    if before.saturating_add(work) > budget {
        return Err(Error::BudgetExceeded {
            needed: before as u128 + work as u128,
            budget: budget as u128,
        });
    }
    let mut y = vec![-r; k.free.len()];
    let mut count = 0u128;
    loop {
        let ok = k.rows.iter().all(|(_, den, nums)| {
            let s: i128 = nums.iter().zip(&y).map(|(&c, &v)| c * v as i128).sum();
            s % den == 0 && (s / den).abs() <= r as i128
        });
        count += ok as u128;
        let mut j = y.len();
        loop {
            if j == 0 {
                return Ok(count);
            }
            j -= 1;
            if y[j] < r {
                y[j] += 1;
                break;
            }
            y[j] = -r;
        }
    }
}

/// The `n x n` matrix of `y -> (Gamma_{d,f}(x_1, .., x_{d-2}, y, e_i))_i`
/// as polynomials in the first `d - 2` argument blocks.
fn coefficient_matrix(f: &IntPolynomial, d: usize) -> Result<Vec<Vec<I128Evaluator>>> {
    let n = f.nvars();
    let gamma = weyl_difference_symbolic(f, d)?;
    let outer: Vec<usize> = (0..n * (d - 2)).collect();
    (0..n)
        .map(|i| {
            let entry = gamma.derivative((d - 1) * n + i)?;
            (0..n)
                .map(|j| {
                    let c = entry.derivative((d - 2) * n + j)?;
                    I128Evaluator::restricted(&c, &outer, true)
                })
                .collect()
        })
        .collect()
}

/// `z_R`: the number of `(x_1, .., x_{d-1})` in `[-R, R]^{n(d-1)}` at which
/// `Gamma_{d,f}(x_1, .., x_{d-1}, e_i)` vanishes for every `i`.
///
/// The entries are linear in `x_{d-1}`, so the outer `d - 2` arguments are
/// enumerated and the last one is counted as lattice points of a kernel.
pub fn z_count(f: &IntPolynomial, d: usize, r: i64, budget: u64) -> Result<u128> {
    if f.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    let deg = f.degree().unwrap_or(0);
    if deg > d {
        return Err(Error::WrongDegree {
            expected: d,
            got: deg,
        });
    }
    if d == 0 || r < 0 {
        return Err(Error::InvalidArgument(format!("z_count needs d >= 1, R >= 0")));
    }
    let n = f.nvars();
    if d == 1 {
        // (d-1)-tuples: just the empty one
        let gamma = weyl_difference_symbolic(f, 1)?;
        let all_zero = (0..n).all(|i| gamma.derivative(i).map_or(false, |g| g.is_zero()));
        return Ok(all_zero as u128);
    }
    let matrix = coefficient_matrix(f, d)?;
    let outer_dim = n * (d - 2);
    let side = (2 * r + 1) as u64;
    let outer_total = side
        .checked_pow(outer_dim as u32)
        .ok_or(Error::Overflow("outer tuple count"))?;
    if outer_total > budget {
        return Err(Error::BudgetExceeded {
            needed: outer_total as u128,
            budget: budget as u128,
        });
    }
    let spent = AtomicU64::new(outer_total);
    let counts: Vec<u128> = (0..outer_total)
        .into_par_iter()
        .map(|idx| -> Result<u128> {
            let mut rem = idx;
            let x: Vec<i64> = (0..outer_dim)
                .map(|_| {
                    let v = (rem % side) as i64 - r;
                    rem /= side;
                    v
                })
                .collect();
            let m = matrix
                .iter()
                .map(|row| row.iter().map(|c| c.eval(&x)).collect::<Result<Vec<i128>>>())
                .collect::<Result<Vec<_>>>()?;
            count_kernel_points(&m, r, &spent, budget)
        })
        .collect::<Result<_>>()?;
    counts
        .into_iter()
        .try_fold(0u128, |a, c| a.checked_add(c))
        .ok_or(Error::Overflow("z count"))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeylReport {
    /// Largest box size used.
    pub p: i64,
    pub r_values: Vec<i64>,
    pub z_counts: Vec<u128>,
    /// Fitted growth exponent of `z_R`.
    pub slope: f64,
    /// `n(d-1) - slope`, clamped at 0.
    pub fitted_gd: f64,
    /// `2^{d-1} (d-1) / g_d`; absent when the fitted `g_d` is 0.
    pub gamma_d: Option<f64>,
    /// `2^{d-1} / g_d`.
    pub gamma_d_prime: Option<f64>,
}

/// Fits `log z_R` against `log(2R+1)`, the log of the box side, so a
/// kernel of dimension `k` gives slope exactly `k`.
pub fn estimate_gd(f: &IntPolynomial, d: usize, r_list: &[i64], budget: u64) -> Result<WeylReport> {
    if r_list.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "need at least 3 values of R, got {}",
            r_list.len()
        )));
    }
    let z_counts = r_list
        .iter()
        .map(|&r| z_count(f, d, r, budget))
        .collect::<Result<Vec<u128>>>()?;
    let xs: Vec<f64> = r_list.iter().map(|&r| ((2 * r + 1) as f64).ln()).collect();
    let ys: Vec<f64> = z_counts.iter().map(|&z| (z.max(1) as f64).ln()).collect();
    let (_, slope) = linear_fit(&xs, &ys);
    let fitted_gd = ((f.nvars() * (d - 1)) as f64 - slope).max(0.0);
    let two = 2f64.powi(d as i32 - 1);
    let positive = fitted_gd > 1e-12;
    Ok(WeylReport {
        p: r_list.iter().copied().max().unwrap_or(0),
        r_values: r_list.to_vec(),
        z_counts,
        slope,
        fitted_gd,
        gamma_d: positive.then(|| two * (d as f64 - 1.0) / fitted_gd),
        gamma_d_prime: positive.then(|| two / fitted_gd),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polycore::weyl_difference;

    fn poly(text: &str) -> IntPolynomial {
        IntPolynomial::parse(text).unwrap()
    }

    /// Every (d-1)-tuple in the box, each tested against all `n` entries.
    fn brute(f: &IntPolynomial, d: usize, r: i64) -> u128 {
        let n = f.nvars();
        let dim = n * (d - 1);
        let side = (2 * r + 1) as u64;
        let mut count = 0;
        for idx in 0..side.pow(dim as u32) {
            let mut rem = idx;
            let flat: Vec<BigInt> = (0..dim)
                .map(|_| {
                    let v = (rem % side) as i64 - r;
                    rem /= side;
                    BigInt::from(v)
                })
                .collect();
            let mut args: Vec<Vec<BigInt>> = flat.chunks(n).map(|c| c.to_vec()).collect();
            let zero = (0..n).all(|i| {
                let mut e = vec![BigInt::zero(); n];
                e[i] = BigInt::one();
                args.push(e);
                let v = weyl_difference(f, &args).unwrap();
                args.pop();
                v.is_zero()
            });
            count += zero as u128;
        }
        count
    }

    #[test]
    fn quadratic_examples() {
        let x1sq = poly("n=2\n1 2 0\n");
        for r in [5, 10, 20] {
            assert_eq!(z_count(&x1sq, 2, r, Z_BUDGET).unwrap(), 2 * r as u128 + 1);
        }
        let sum = poly("n=2\n1 2 0\n1 0 2\n");
        assert_eq!(z_count(&sum, 2, 7, Z_BUDGET).unwrap(), 1);
        // x1^2 - 2 x1 x2 + x2^2 = (x1 - x2)^2: kernel is the diagonal
        let sq = poly("n=2\n1 2 0\n-2 1 1\n1 0 2\n");
        assert_eq!(z_count(&sq, 2, 4, Z_BUDGET).unwrap(), 9);
    }

    #[test]
    fn matches_brute_force() {
        for (text, d, r) in [
            ("n=3\n1 1 1 1\n", 3, 2),
            ("n=2\n1 3 0\n1 2 1\n", 3, 3),
            ("n=3\n2 1 1 0\n-1 0 0 2\n", 2, 3),
            ("n=2\n1 1 1\n", 2, 4),
            ("n=2\n3 2 1\n-1 0 3\n", 3, 2),
        ] {
            let f = poly(text);
            assert_eq!(z_count(&f, d, r, Z_BUDGET).unwrap(), brute(&f, d, r), "{text}");
        }
    }

    #[test]
    fn scaling_invariance_and_monotonicity() {
        let f = poly("n=3\n1 1 1 1\n");
        let g = poly("n=3\n-7 1 1 1\n");
        let zs: Vec<u128> = (0..4).map(|r| z_count(&f, 3, r, Z_BUDGET).unwrap()).collect();
        assert!(zs.windows(2).all(|w| w[0] <= w[1]));
        for r in 0..4 {
            assert_eq!(zs[r as usize], z_count(&g, 3, r, Z_BUDGET).unwrap());
        }
    }

    #[test]
    fn gd_recovers_rank() {
        for (text, rank) in [
            ("n=2\n1 2 0\n1 0 2\n", 2.0),
            ("n=2\n1 2 0\n", 1.0),
            ("n=4\n1 2 0 0 0\n3 0 2 0 0\n", 2.0),
            ("n=3\n1 2 0 0\n-1 0 2 0\n5 0 0 2\n", 3.0),
        ] {
            let rep = estimate_gd(&poly(text), 2, &[3, 6, 12], Z_BUDGET).unwrap();
            assert!((rep.fitted_gd - rank).abs() < 1e-9, "{text}: {rep:?}");
        }
        assert!(estimate_gd(&poly("n=1\n1 2\n"), 2, &[1, 2], Z_BUDGET).is_err());
    }

    #[test]
    fn budget_is_enforced() {
        let f = poly("n=3\n1 1 1 1\n");
        assert!(matches!(z_count(&f, 3, 50, 1000), Err(Error::BudgetExceeded { .. })));
    }
}
