use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::expsum::units;
use super::nu::{nu_table, NuStrategy};
use super::{de_biguints, de_rational, de_rationals, ser_biguints, ser_rational, ser_rationals};
use crate::arith::{linear_fit, primes_up_to, valuation_capped};
use crate::error::Result;
use crate::polycore::{IntPolynomial, ModEvaluator};

/// Default cap on points visited by the witness search.
pub const WITNESS_BUDGET: u64 = 10_000_000;

/// A unit residue `x mod modulus` with `b(x) = 0 mod p^{2k+1}` where
/// `k = v_p(grad b(x))`; by Hensel's lemma it lifts to a unit zero in `Z_p`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PadicWitness {
    pub p: u64,
    pub point: Vec<u64>,
    pub modulus: u64,
    pub gradient_valuation: u32,
}

/// Searches `U_p^n` (`U_8^n` for `p = 2`) in lexicographic order and stops
/// at the first witness or after `budget` points. `None` therefore means
/// "not found within budget" when the space is larger than the budget.
pub fn padic_nonsingular_witness(b: &IntPolynomial, p: u64, budget: u64) -> Option<PadicWitness> {
    let (modulus, max_k) = if p == 2 { (8u64, 1u32) } else { (p, 0u32) };
    let n = b.nvars();
    let value = ModEvaluator::new(b, modulus).ok()?;
    let grad: Vec<ModEvaluator> = (0..n)
        .map(|i| ModEvaluator::new(&b.derivative(i).ok()?, modulus).ok())
        .collect::<Option<_>>()?;
    let us = units(modulus);
    let mut idx = vec![0usize; n];
    let mut x: Vec<u64> = vec![us[0]; n];
    let mut visited = 0u64;
    loop {
        visited += 1;
        if visited > budget {
            return None;
        }
        let k = grad
            .iter()
            .map(|g| valuation_capped(g.eval(&x), p, max_k + 1))
            .min()
            .unwrap_or(max_k + 1);
        if k <= max_k && valuation_capped(value.eval(&x), p, 2 * k + 1) == 2 * k + 1 {
            return Some(PadicWitness {
                p,
                point: x,
                modulus,
                gradient_valuation: k,
            });
        }
        let mut j = n;
        loop {
            if j == 0 {
                return None;
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] < us.len() {
                x[j] = us[idx[j]];
                break;
            }
            idx[j] = 0;
            x[j] = us[0];
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalFactor {
    pub p: u64,
    pub t_max: u32,
    #[serde(serialize_with = "ser_biguints", deserialize_with = "de_biguints")]
    pub nu: Vec<BigUint>,
    /// `p^t nu_t / phi(p^t)^n` for `t = 1..=t_max`.
    #[serde(serialize_with = "ser_rationals", deserialize_with = "de_rationals")]
    pub partial_sums: Vec<BigRational>,
    #[serde(serialize_with = "ser_rational", deserialize_with = "de_rational")]
    pub mu_p: BigRational,
    pub mu_p_value: f64,
    pub stabilized_at: Option<u32>,
    pub witness: Option<PadicWitness>,
    pub strategy: NuStrategy,
    pub warning: Option<String>,
}

impl LocalFactor {
    pub fn value(&self) -> f64 {
        self.mu_p_value
    }
}

fn ratio_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Local factor through the exact identity
/// `1 + sum_{j<=t} B(p^j) = p^t nu_t(p) / phi(p^t)^n`.
///
/// The value is declared stable when two consecutive partial sums agree and
/// a Hensel witness exists, or as soon as some `nu_t` vanishes (then every
/// later level vanishes too). Otherwise the last partial sum is returned
/// with a warning.
pub fn mu_p(
    b: &IntPolynomial,
    p: u64,
    t_max: u32,
    strategy: NuStrategy,
    budget: u128,
) -> Result<LocalFactor> {
    let n = b.nvars() as u32;
    let (nu, strategy) = nu_table(b, p, t_max, strategy, budget)?;
    let pb = BigInt::from(p);
    let partial_sums: Vec<BigRational> = nu
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let t = i as u32 + 1;
            let phi = (&pb - 1u32) * pb.pow(t - 1);
            BigRational::new(pb.pow(t) * BigInt::from(v.clone()), phi.pow(n))
        })
        .collect();
    let witness = padic_nonsingular_witness(b, p, WITNESS_BUDGET);

    let first_zero = nu.iter().position(Zero::is_zero);
    let first_repeat = (1..partial_sums.len()).find(|&i| partial_sums[i] == partial_sums[i - 1]);
    let (mu, stabilized_at, warning) = if let Some(i) = first_zero {
        (BigRational::zero(), Some(i as u32 + 1), None)
    } else {
        let last = partial_sums.last().cloned().unwrap_or_else(BigRational::zero);
        match (first_repeat, &witness) {
            (Some(i), Some(_)) => (partial_sums[i - 1].clone(), Some(i as u32), None),
            (Some(_), None) => (
                last,
                None,
                Some("partial sums repeat but no Hensel witness was found".to_string()),
            ),
            (None, _) => (
                last,
                None,
                Some(format!("partial sums not stable by level {t_max}")),
            ),
        }
    };
    Ok(LocalFactor {
        p,
        t_max,
        nu,
        mu_p_value: ratio_to_f64(&mu),
        partial_sums,
        mu_p: mu,
        stabilized_at,
        witness,
        strategy,
        warning,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesEstimate {
    pub prime_bound: u64,
    pub t_max: u32,
    /// `prod_{p <= P} mu(p)`; exactly 0 when some factor vanishes.
    pub product: f64,
    /// `delta'` in the fit `|mu(p) - 1| ~ C p^{-1-delta'}` over `p >= 5`.
    pub tail_exponent: Option<f64>,
    pub tail_constant: Option<f64>,
    /// Estimate of `sum_{p > P} |mu(p) - 1|` from the fit, when `delta' > 0`.
    pub tail_bound: Option<f64>,
    /// `max_{5 <= p <= P} p |mu(p) - 1|`.
    pub max_scaled_deviation: f64,
    pub unstable_primes: Vec<u64>,
    pub factors: Vec<LocalFactor>,
}

/// Largest level whose lifting moduli stay below `2^62`.
fn level_cap(p: u64) -> u32 {
    let mut t = 1;
    while (p as f64).powi(2 * (t as i32 + 1) - 1) < (1u64 << 62) as f64 {
        t += 1;
    }
    t
}

pub fn singular_series(
    b: &IntPolynomial,
    prime_bound: u64,
    t_max: u32,
    strategy: NuStrategy,
    budget: u128,
) -> Result<SeriesEstimate> {
    let primes = primes_up_to(prime_bound);
    let factors: Vec<LocalFactor> = primes
        .par_iter()
        .map(|&p| mu_p(b, p, t_max.min(level_cap(p)), strategy, budget))
        .collect::<Result<_>>()?;

    let product = if factors.iter().any(|f| f.mu_p.is_zero()) {
        0.0
    } else {
        factors.iter().map(LocalFactor::value).product()
    };
    let tail: Vec<(f64, f64)> = factors
        .iter()
        .filter(|f| f.p >= 5)
        .map(|f| (f.p as f64, (f.value() - 1.0).abs()))
        .collect();
    let max_scaled_deviation = tail.iter().map(|(p, d)| p * d).fold(0.0, f64::max);
    let fit_points: Vec<(f64, f64)> = tail
        .iter()
        .filter(|(_, d)| *d > 0.0)
        .map(|(p, d)| (p.ln(), d.ln()))
        .collect();
    let (tail_exponent, tail_constant, tail_bound) = if fit_points.len() >= 3 {
        let xs: Vec<f64> = fit_points.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = fit_points.iter().map(|p| p.1).collect();
        let (a, slope) = linear_fit(&xs, &ys);
        let delta = -1.0 - slope;
        let c = a.exp();
        let pb = prime_bound as f64;
        let bound = (delta > 0.0).then(|| c * pb.powf(-delta) / (delta * pb.ln()));
        (Some(delta), Some(c), bound)
    } else {
        (None, None, None)
    };
    Ok(SeriesEstimate {
        prime_bound,
        t_max,
        product,
        tail_exponent,
        tail_constant,
        tail_bound,
        max_scaled_deviation,
        unstable_primes: factors
            .iter()
            .filter(|f| f.stabilized_at.is_none())
            .map(|f| f.p)
            .collect(),
        factors,
    })
}

/// `p,t,nu,partial_sum` rows, partial sums as exact fractions.
pub fn local_factors_csv(factors: &[LocalFactor]) -> String {
    let mut out = String::from("p,t,nu,partial_sum\n");
    for f in factors {
        for (i, (nu, s)) in f.nu.iter().zip(&f.partial_sums).enumerate() {
            out.push_str(&format!("{},{},{},{}\n", f.p, i + 1, nu, s));
        }
    }
    out
}
