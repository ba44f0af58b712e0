use rayon::prelude::*;
use serde::Serialize;

use crate::arith::linear_fit;
use crate::error::{Error, Result};
use crate::polycore::{I128Evaluator, IntPolynomial};
use crate::weylarcs::for_each_i64_tuple;

/// Slack allowed above `n - D` before a system is flagged.
pub const REGULARITY_SLACK: f64 = 0.25;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegularityReport {
    pub n_values: Vec<i64>,
    /// `#{x in [-N, N]^n : psi_j(x) = 0 for all j}`.
    pub counts: Vec<u128>,
    /// Slope of `log count` against `log(2N+1)`.
    pub fitted_exponent: f64,
    /// `D = sum of the degrees`.
    pub degree_sum: usize,
    /// `n - D`.
    pub expected_exponent: f64,
    pub excess: f64,
    /// True when the fitted exponent exceeds `n - D` by more than the slack.
    pub flagged: bool,
}

fn zero_count(system: &[I128Evaluator], nv: usize, n: i64) -> Result<u128> {
    let values: Vec<i64> = (-n..=n).collect();
    let parts: Vec<Result<u128>> = values
        .par_iter()
        .map(|&x0| {
            let mut x = vec![x0; nv];
            let mut count = 0u128;
            let mut err = None;
            for_each_i64_tuple(&values, nv - 1, |rest| {
                if err.is_some() {
                    return;
                }
                x[1..].copy_from_slice(rest);
                let mut all = true;
                for ev in system {
                    match ev.eval(&x) {
                        Ok(0) => {}
                        Ok(_) => {
                            all = false;
                            break;
                        }
                        Err(e) => {
                            err = Some(e);
                            return;
                        }
                    }
                }
                count += all as u128;
            });
            err.map_or(Ok(count), Err)
        })
        .collect();
    parts.into_iter().sum()
}

/// Growth exponent of the integer zero count of a system against the
/// `n - D` expected of a regular system.
pub fn regularity_exponent(system: &[IntPolynomial], n_list: &[i64], budget: u128) -> Result<RegularityReport> {
    if n_list.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "need at least 3 scales, got {}",
            n_list.len()
        )));
    }
    let nv = system.first().map(IntPolynomial::nvars).unwrap_or(0);
    if nv == 0 || system.iter().any(|p| p.nvars() != nv) {
        return Err(Error::InvalidArgument(
            "system must be nonempty with a common positive variable count".into(),
        ));
    }
    let evs = system
        .iter()
        .map(I128Evaluator::new)
        .collect::<Result<Vec<_>>>()?;
    let counts = n_list
        .iter()
        .map(|&n| {
            let needed = ((2 * n + 1) as u128)
                .checked_pow(nv as u32)
                .ok_or(Error::Overflow("box size"))?;
            if needed > budget {
                return Err(Error::BudgetExceeded { needed, budget });
            }
            zero_count(&evs, nv, n)
        })
        .collect::<Result<Vec<u128>>>()?;
    let xs: Vec<f64> = n_list.iter().map(|&n| ((2 * n + 1) as f64).ln()).collect();
    let ys: Vec<f64> = counts.iter().map(|&c| (c.max(1) as f64).ln()).collect();
    let (_, fitted_exponent) = linear_fit(&xs, &ys);
    let degree_sum: usize = system.iter().map(|p| p.degree().unwrap_or(0)).sum();
    let expected_exponent = nv as f64 - degree_sum as f64;
    let excess = fitted_exponent - expected_exponent;
    Ok(RegularityReport {
        n_values: n_list.to_vec(),
        counts,
        fitted_exponent,
        degree_sum,
        expected_exponent,
        excess,
        flagged: excess > REGULARITY_SLACK,
    })
}
