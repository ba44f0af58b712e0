//! Exact counts `nu_t(p) = #{x in U_{p^t}^n : b(x) = 0 mod p^t}`.
//!
//! Two independent methods:
//!
//! * direct enumeration of `U_{p^t}^n`;
//! * level-by-level lifting. A residue class `x0 mod p^s` whose gradient has
//!   valuation `k < s` is resolved in closed form: writing
//!   `b(x0 + p^s y) = p^s (c + grad . y + p^s R(y))`, the number of lifts to
//!   level `t = s + m` that vanish is `p^{nm} [v >= m]` when `m <= k` and
//!   `p^{(n-1)m + k} [v >= k]` when `m > k`, where `v = min(v_p(c), k)`.
//!   Only classes with gradient `0 mod p^s` are refined further.
//!
//! The lifting works per variable block. A block node carries its value
//! modulo `p^{s + min(k, s-1)}` (well defined for the class) and its capped
//! gradient valuation; block histograms are merged with `k = min`.

use std::collections::HashMap;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::expsum::{for_each_tuple, units};
use crate::arith::{is_prime, valuation_capped};
use crate::error::{Error, Result};
use crate::polycore::{IntPolynomial, ModEvaluator};

pub const DEFAULT_BUDGET: u128 = 100_000_000;
/// Above this many points `Auto` switches from enumeration to lifting.
pub const ENUMERATION_THRESHOLD: u128 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NuStrategy {
    Auto,
    Enumerate,
    Lift,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitSolutionCount {
    pub p: u64,
    pub t: u32,
    #[serde(
        serialize_with = "crate::localdensity::ser_biguint",
        deserialize_with = "crate::localdensity::de_biguint"
    )]
    pub nu: BigUint,
    pub strategy: NuStrategy,
}

fn check_prime(p: u64) -> Result<()> {
    if is_prime(p) {
        Ok(())
    } else {
        Err(Error::NotPrime(p))
    }
}

fn pow_checked(p: u64, e: u32) -> Result<u64> {
    p.checked_pow(e)
        .filter(|&q| q < 1 << 62)
        .ok_or(Error::Overflow("prime power modulus"))
}

fn unit_space_size(p: u64, t: u32, n: usize) -> u128 {
    let phi = (p as u128 - 1) * (p as u128).pow(t - 1);
    phi.checked_pow(n as u32).unwrap_or(u128::MAX)
}

/// Counts by enumerating `U_{p^t}^n`, split over the first coordinate.
pub fn nu_enumerate(b: &IntPolynomial, p: u64, t: u32, budget: u128) -> Result<BigUint> {
    check_prime(p)?;
    let n = b.nvars();
    let needed = unit_space_size(p, t, n);
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let q = pow_checked(p, t)?;
    let ev = ModEvaluator::new(b, q)?;
    let us = units(q);
    if n == 0 {
        return Ok(BigUint::from((ev.eval(&[]) == 0) as u8));
    }
    let count: u64 = us
        .par_iter()
        .map(|&x0| {
            let mut local = 0u64;
            let mut x = vec![0u64; n];
            x[0] = x0;
            for_each_tuple(&us, n - 1, |rest| {
                x[1..].copy_from_slice(rest);
                if ev.eval(&x) == 0 {
                    local += 1;
                }
            });
            local
        })
        .sum();
    Ok(BigUint::from(count))
}

/// Histogram key: (capped gradient valuation, value mod p^{s + min(k, s-1)}).
type Hist = HashMap<(u32, u64), u128>;

struct BlockLifter {
    len: usize,
    value: ModEvaluator,
    grad: Vec<ModEvaluator>,
    /// Block nodes at the previous level with gradient 0 mod p^{level}.
    open: Vec<Vec<u64>>,
}

/// Result of the lifting pass: resolved classes and unresolved zero counts.
struct LiftTable {
    n: usize,
    /// (level s, k, v, count)
    resolved: Vec<(u32, u32, u32, u128)>,
    /// `unresolved[s-1]`: zero classes mod p^s with gradient 0 mod p^s.
    unresolved: Vec<u128>,
}

fn closed_form(p: u64, n: usize, m: u32, k: u32, v: u32) -> BigUint {
    let pb = BigUint::from(p);
    if m <= k {
        if v >= m {
            pb.pow(n as u32 * m)
        } else {
            BigUint::zero()
        }
    } else if v >= k {
        pb.pow((n as u32 - 1) * m + k)
    } else {
        BigUint::zero()
    }
}

impl LiftTable {
    fn nu(&self, p: u64, t: u32) -> BigUint {
        let mut acc = BigUint::from(self.unresolved[t as usize - 1]);
        for &(s, k, v, cnt) in &self.resolved {
            if s <= t {
                acc += closed_form(p, self.n, t - s, k, v) * BigUint::from(cnt);
            }
        }
        acc
    }
}

fn merge(a: &Hist, b: &Hist, p: u64, s: u32) -> Result<Hist> {
    let mut out = Hist::new();
    for (&(k1, v1), &c1) in a {
        for (&(k2, v2), &c2) in b {
            let k = k1.min(k2);
            let modulus = p.pow(s + k.min(s - 1));
            let v = ((v1 % modulus) + (v2 % modulus)) % modulus;
            let c = c1.checked_mul(c2).ok_or(Error::Overflow("lift count"))?;
            let slot = out.entry((k, v)).or_insert(0);
            *slot = slot.checked_add(c).ok_or(Error::Overflow("lift count"))?;
        }
    }
    Ok(out)
}

fn lift_table(b: &IntPolynomial, p: u64, t_max: u32, budget: u128) -> Result<LiftTable> {
    check_prime(p)?;
    let n = b.nvars();
    let hi = pow_checked(p, 2 * t_max - 1)?;
    let blocks = b.variable_blocks();
    let mut lifters = Vec::new();
    for block in &blocks {
        let part = b.block_part(block);
        let grad = block
            .iter()
            .map(|&i| ModEvaluator::restricted(&part.derivative(i)?, block, hi, true))
            .collect::<Result<Vec<_>>>()?;
        lifters.push(BlockLifter {
            len: block.len(),
            value: ModEvaluator::restricted(&part, block, hi, false)?,
            grad,
            open: Vec::new(),
        });
    }
    let unused = n - blocks.iter().map(Vec::len).sum::<usize>();
    let constant = b.constant_term();
    let mut spent: u128 = 0;
    let mut table = LiftTable {
        n,
        resolved: Vec::new(),
        unresolved: Vec::new(),
    };

    for s in 1..=t_max {
        let ps = p.pow(s);
        let cap_mod = p.pow(2 * s - 1);
        let mut global: Hist = Hist::new();
        let c = constant
            .mod_floor(&BigInt::from(cap_mod))
            .to_u64()
            .unwrap();
        global.insert((s, c), 1);

        for lf in lifters.iter_mut() {
            let nodes: Vec<Vec<u64>> = if s == 1 {
                let mut v = Vec::new();
                for_each_tuple(&units(p), lf.len, |x| v.push(x.to_vec()));
                v
            } else {
                let step = p.pow(s - 1);
                let digits: Vec<u64> = (0..p).collect();
                let mut v = Vec::new();
                for parent in &lf.open {
                    for_each_tuple(&digits, lf.len, |z| {
                        v.push(parent.iter().zip(z).map(|(x, d)| x + d * step).collect());
                    });
                }
                v
            };
            spent += nodes.len() as u128;
            if spent > budget {
                return Err(Error::BudgetExceeded {
                    needed: spent,
                    budget,
                });
            }
            let mut hist = Hist::new();
            let mut open = Vec::new();
            for x in nodes {
                let k = lf
                    .grad
                    .iter()
                    .map(|g| valuation_capped(g.eval(&x) % ps, p, s))
                    .min()
                    .unwrap_or(s);
                let modulus = p.pow(s + k.min(s - 1));
                let val = lf.value.eval(&x) % modulus;
                *hist.entry((k, val)).or_insert(0) += 1;
                if k == s {
                    open.push(x);
                }
            }
            lf.open = open;
            global = merge(&global, &hist, p, s)?;
        }
        if unused > 0 {
            let phi = (p - 1) as u128 * p.pow(s - 1) as u128;
            let mult = phi
                .checked_pow(unused as u32)
                .ok_or(Error::Overflow("lift count"))?;
            let mut h = Hist::new();
            h.insert((s, 0), mult);
            global = merge(&global, &h, p, s)?;
        }

        let mut unresolved = 0u128;
        for (&(k, v), &cnt) in &global {
            if v % ps != 0 {
                continue;
            }
            if k >= s {
                unresolved += cnt;
            } else {
                let val = valuation_capped(v, p, s + k);
                table.resolved.push((s, k, (val - s).min(k), cnt));
            }
        }
        table.unresolved.push(unresolved);
    }
    table.resolved.sort_unstable();
    Ok(table)
}

/// `nu_1..nu_{t_max}` by lifting.
pub fn nu_lift_all(b: &IntPolynomial, p: u64, t_max: u32, budget: u128) -> Result<Vec<BigUint>> {
    if t_max == 0 {
        return Err(Error::InvalidArgument("level must be at least 1".into()));
    }
    let table = lift_table(b, p, t_max, budget)?;
    Ok((1..=t_max).map(|t| table.nu(p, t)).collect())
}

fn resolve_strategy(b: &IntPolynomial, p: u64, t: u32, strategy: NuStrategy) -> NuStrategy {
    match strategy {
        NuStrategy::Auto if unit_space_size(p, t, b.nvars()) <= ENUMERATION_THRESHOLD => {
            NuStrategy::Enumerate
        }
        NuStrategy::Auto => NuStrategy::Lift,
        s => s,
    }
}

pub fn nu_count(
    b: &IntPolynomial,
    p: u64,
    t: u32,
    strategy: NuStrategy,
    budget: u128,
) -> Result<UnitSolutionCount> {
    if t == 0 {
        return Err(Error::InvalidArgument("level must be at least 1".into()));
    }
    let strategy = resolve_strategy(b, p, t, strategy);
    let nu = match strategy {
        NuStrategy::Enumerate => nu_enumerate(b, p, t, budget)?,
        _ => nu_lift_all(b, p, t, budget)?.pop().unwrap(),
    };
    Ok(UnitSolutionCount { p, t, nu, strategy })
}

/// `nu_t` for `t = 1..=t_max`, sharing one lifting pass when lifting is used.
pub fn nu_table(
    b: &IntPolynomial,
    p: u64,
    t_max: u32,
    strategy: NuStrategy,
    budget: u128,
) -> Result<(Vec<BigUint>, NuStrategy)> {
    let strategy = resolve_strategy(b, p, t_max, strategy);
    match strategy {
        NuStrategy::Enumerate => Ok((
            (1..=t_max)
                .map(|t| nu_enumerate(b, p, t, budget))
                .collect::<Result<_>>()?,
            strategy,
        )),
        _ => Ok((nu_lift_all(b, p, t_max, budget)?, strategy)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(text: &str) -> IntPolynomial {
        IntPolynomial::parse(text).unwrap()
    }

    #[test]
    fn nu_examples() {
        let x = poly("n=1\n1 1\n");
        assert_eq!(nu_enumerate(&x, 2, 1, DEFAULT_BUDGET).unwrap(), BigUint::zero());
        let xm1 = poly("n=1\n1 1\n-1 0\n");
        assert_eq!(nu_enumerate(&xm1, 5, 1, DEFAULT_BUDGET).unwrap(), BigUint::from(1u8));
        let q = poly("n=2\n1 2 0\n1 0 2\n-5 0 0\n");
        assert_eq!(nu_enumerate(&q, 3, 1, DEFAULT_BUDGET).unwrap(), BigUint::from(4u8));
    }

    #[test]
    fn lifting_agrees_with_enumeration() {
        let polys = [
            "n=2\n1 2 0\n1 0 2\n-5 0 0\n",
            "n=2\n1 1 0\n1 0 1\n-6 0 0\n",
            "n=3\n1 1 1 0\n-1 0 0 2\n",
            "n=3\n1 2 0 0\n1 0 2 0\n-1 0 0 2\n-8 0 0 0\n",
            "n=2\n1 3 0\n-1 0 2\n4 0 0\n",
            "n=3\n1 2 0 0\n",
            "n=2\n1 4 0\n1 0 4\n-2 0 0\n",
        ];
        for text in polys {
            let b = poly(text);
            for p in [2u64, 3, 5] {
                let tmax = if p == 2 { 5 } else { 3 };
                let lifted = nu_lift_all(&b, p, tmax, DEFAULT_BUDGET).unwrap();
                for t in 1..=tmax {
                    if unit_space_size(p, t, b.nvars()) > 2_000_000 {
                        continue;
                    }
                    let direct = nu_enumerate(&b, p, t, DEFAULT_BUDGET).unwrap();
                    assert_eq!(lifted[t as usize - 1], direct, "{text} p={p} t={t}");
                }
            }
        }
    }

    #[test]
    fn waring_two_adic_counts() {
        let b = poly("n=5\n1 2 0 0 0 0\n1 0 2 0 0 0\n1 0 0 2 0 0\n1 0 0 0 2 0\n1 0 0 0 0 2\n-12005 0 0 0 0 0\n");
        let nu = nu_lift_all(&b, 2, 4, DEFAULT_BUDGET).unwrap();
        assert_eq!(nu[2], BigUint::from(1024u32));
        assert_eq!(nu[3], BigUint::from(16384u32));
    }

    #[test]
    fn not_prime_rejected() {
        let x = poly("n=1\n1 1\n");
        assert_eq!(
            nu_count(&x, 4, 1, NuStrategy::Auto, DEFAULT_BUDGET),
            Err(Error::NotPrime(4))
        );
    }
}
