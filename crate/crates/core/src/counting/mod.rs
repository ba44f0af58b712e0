//! Ground truth and prediction.
//!
//! Weighted counts are assembled from exact integer tallies keyed by the
//! sorted primes underlying a solution: `M_b(N) = sum_sig count(sig) *
//! prod_{p in sig} ln p`. Every traversal (direct, meet-in-the-middle,
//! value histogram) produces the same tally, so the floating-point results
//! agree bit for bit regardless of enumeration order or thread count.

mod mangoldt;
mod predict;
mod regularity;

pub use mangoldt::{MangoldtTable, MAX_TABLE};
pub use predict::{predict, predict_with, PredictOptions, PredictParameters, PredictionReport};
pub use regularity::{regularity_exponent, RegularityReport, REGULARITY_SLACK};

use std::collections::{BTreeMap, HashMap};

use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::CompensatedSum;
use crate::error::{Error, Result};
use crate::polycore::{I128Evaluator, IntPolynomial};
use crate::weylarcs::for_each_i64_tuple;

/// Default cap on enumerated tuples.
pub const COUNT_BUDGET: u128 = 2_000_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CountStrategy {
    Direct,
    Mitm,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CountResult {
    #[serde(rename = "N")]
    pub n: u64,
    /// `M_b(N)`.
    pub value: f64,
    /// Number of prime-power tuples with `b(x) = 0`.
    pub solution_count: u128,
    pub strategy: CountStrategy,
    pub primes_only: bool,
}

/// Solution counts keyed by the sorted underlying primes.
pub type Tally = BTreeMap<Vec<u32>, u128>;

fn merge_into(acc: &mut Tally, other: Tally) {
    for (k, v) in other {
        *acc.entry(k).or_insert(0) += v;
    }
}

/// `sum_sig count * prod ln p`, in key order.
pub fn tally_value(tally: &Tally) -> f64 {
    let mut acc = CompensatedSum::new();
    for (sig, &count) in tally {
        let w: f64 = sig.iter().map(|&p| (p as f64).ln()).product();
        acc.add(count as f64 * w);
    }
    acc.value()
}

fn signature(primes: impl IntoIterator<Item = u32>) -> Vec<u32> {
    let mut s: Vec<u32> = primes.into_iter().collect();
    s.sort_unstable();
    s
}

struct Support {
    values: Vec<i64>,
    primes: Vec<u32>,
}

fn support(table: &MangoldtTable, n: u64) -> Result<Support> {
    table.ensure_covers(n)?;
    let values: Vec<i64> = table.support(n).into_iter().map(|k| k as i64).collect();
    let primes = values.iter().map(|&k| table.prime_of(k as u64)).collect();
    Ok(Support { values, primes })
}

fn check_budget(len: usize, k: usize) -> Result<()> {
    let needed = (len as u128)
        .checked_pow(k as u32)
        .ok_or(Error::Overflow("tuple count"))?;
    if needed > COUNT_BUDGET {
        return Err(Error::BudgetExceeded {
            needed,
            budget: COUNT_BUDGET,
        });
    }
    Ok(())
}

/// Runs `visit(index tuple, value)` over all support tuples, in parallel
/// over the leading coordinate, and merges the per-worker results in order.
fn traverse<T: Send>(
    b: &IntPolynomial,
    sup: &Support,
    init: impl Fn() -> T + Sync,
    visit: impl Fn(&mut T, &[i64], i128) + Sync,
) -> Result<Vec<T>> {
    let nv = b.nvars();
    let ev = I128Evaluator::new(b)?;
    if nv == 0 {
        let mut t = init();
        visit(&mut t, &[], ev.eval(&[])?);
        return Ok(vec![t]);
    }
    check_budget(sup.values.len(), nv)?;
    let idx: Vec<i64> = (0..sup.values.len() as i64).collect();
    (0..sup.values.len())
        .into_par_iter()
        .map(|i0| {
            let mut t = init();
            let mut x = vec![sup.values[i0]; nv];
            let mut ix = vec![i0 as i64; nv];
            let mut err = None;
            for_each_i64_tuple(&idx, nv - 1, |rest| {
                if err.is_some() {
                    return;
                }
                for j in 1..nv {
                    ix[j] = rest[j - 1];
                    x[j] = sup.values[rest[j - 1] as usize];
                }
                match ev.eval(&x) {
                    Ok(v) => visit(&mut t, &ix, v),
                    Err(e) => err = Some(e),
                }
            });
            err.map_or(Ok(t), Err)
        })
        .collect()
}

fn finish(n: u64, tally: Tally, strategy: CountStrategy, table: &MangoldtTable) -> CountResult {
    CountResult {
        n,
        value: tally_value(&tally),
        solution_count: tally.values().sum(),
        strategy,
        primes_only: table.is_primes_only(),
    }
}

/// Exact `M_b(N)` over the prime-power support, testing `b(x) = 0` in exact
/// integer arithmetic.
pub fn count_direct(b: &IntPolynomial, n: u64, table: &MangoldtTable) -> Result<CountResult> {
    Ok(finish(n, direct_tally(b, n, table)?, CountStrategy::Direct, table))
}

pub fn direct_tally(b: &IntPolynomial, n: u64, table: &MangoldtTable) -> Result<Tally> {
    let sup = support(table, n)?;
    let parts = traverse(b, &sup, Tally::new, |t, ix, v| {
        if v == 0 {
            let sig = signature(ix.iter().map(|&i| sup.primes[i as usize]));
            *t.entry(sig).or_insert(0) += 1;
        }
    })?;
    let mut tally = Tally::new();
    for p in parts {
        merge_into(&mut tally, p);
    }
    Ok(tally)
}

/// Meet in the middle for `b = g(x_1..x_k) + h(x_{k+1}..x_n)`: values of
/// `g` over left tuples are hashed, then each right tuple looks up
/// `-h(x_R)`.
pub fn count_mitm(b: &IntPolynomial, n: u64, table: &MangoldtTable, split: usize) -> Result<CountResult> {
    Ok(finish(n, mitm_tally(b, n, table, split)?, CountStrategy::Mitm, table))
}

pub fn mitm_tally(b: &IntPolynomial, n: u64, table: &MangoldtTable, split: usize) -> Result<Tally> {
    let nv = b.nvars();
    if split > nv {
        return Err(Error::VariableOutOfRange {
            index: split,
            nvars: nv,
        });
    }
    if !b.is_separable_at(split) {
        return Err(Error::NotSeparable { split });
    }
    let sup = support(table, n)?;
    let left_vars: Vec<usize> = (0..split).collect();
    let right_vars: Vec<usize> = (split..nv).collect();
    let g = I128Evaluator::restricted(&b.block_part(&left_vars), &left_vars, false)?;
    let h = I128Evaluator::restricted(&b.block_part(&right_vars), &right_vars, false)?;
    let c0 = b
        .constant_term()
        .to_i128()
        .ok_or(Error::Overflow("constant term exceeds i128"))?;
    check_budget(sup.values.len(), split)?;
    check_budget(sup.values.len(), nv - split)?;

    let mut left: HashMap<i128, Tally> = HashMap::new();
    let mut err = None;
    let mut x = vec![0i64; split];
    let idx: Vec<i64> = (0..sup.values.len() as i64).collect();
    for_each_i64_tuple(&idx, split, |ix| {
        if err.is_some() {
            return;
        }
        for (xj, &i) in x.iter_mut().zip(ix) {
            *xj = sup.values[i as usize];
        }
        match g.eval(&x) {
            Ok(v) => {
                let sig = signature(ix.iter().map(|&i| sup.primes[i as usize]));
                *left.entry(v).or_default().entry(sig).or_insert(0) += 1;
            }
            Err(e) => err = Some(e),
        }
    });
    if let Some(e) = err {
        return Err(e);
    }

    let right_poly_vars = nv - split;
    let parts: Vec<Result<Tally>> = if right_poly_vars == 0 {
        vec![Ok(left.get(&(-c0)).cloned().unwrap_or_default())]
    } else if sup.values.is_empty() {
        Vec::new()
    } else {
        (0..sup.values.len())
            .into_par_iter()
            .map(|i0| {
                let mut t = Tally::new();
                let mut xr = vec![sup.values[i0]; right_poly_vars];
                let mut ir = vec![i0 as i64; right_poly_vars];
                let mut err = None;
                for_each_i64_tuple(&idx, right_poly_vars - 1, |rest| {
                    if err.is_some() {
                        return;
                    }
                    for j in 1..right_poly_vars {
                        ir[j] = rest[j - 1];
                        xr[j] = sup.values[rest[j - 1] as usize];
                    }
                    let hv = match h.eval(&xr) {
                        Ok(v) => v,
                        Err(e) => {
                            err = Some(e);
                            return;
                        }
                    };
                    let Some(key) = hv.checked_add(c0).and_then(i128::checked_neg) else {
                        err = Some(Error::Overflow("polynomial value exceeds i128"));
                        return;
                    };
                    if let Some(matches) = left.get(&key) {
                        for (lsig, &cnt) in matches {
                            let sig = signature(
                                lsig.iter()
                                    .copied()
                                    .chain(ir.iter().map(|&i| sup.primes[i as usize])),
                            );
                            *t.entry(sig).or_insert(0) += cnt;
                        }
                    }
                });
                err.map_or(Ok(t), Err)
            })
            .collect()
    };
    let mut tally = Tally::new();
    for p in parts {
        merge_into(&mut tally, p?);
    }
    Ok(tally)
}

/// A separable split with the two halves as even as possible, if any.
pub fn best_split(b: &IntPolynomial) -> Option<usize> {
    let n = b.nvars();
    (1..n)
        .filter(|&k| b.is_separable_at(k))
        .min_by_key(|&k| (2 * k as i64 - n as i64).abs())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HistogramBucket {
    pub count: u128,
    pub value: f64,
}

/// Every support tuple bucketed by the value of `b`: per bucket, the number
/// of tuples and their total weight. The bucket at 0 is `M_b(N)`.
pub fn value_histogram(b: &IntPolynomial, n: u64, table: &MangoldtTable) -> Result<BTreeMap<i128, HistogramBucket>> {
    let sup = support(table, n)?;
    let parts = traverse(b, &sup, BTreeMap::<i128, Tally>::new, |t, ix, v| {
        let sig = signature(ix.iter().map(|&i| sup.primes[i as usize]));
        *t.entry(v).or_default().entry(sig).or_insert(0) += 1;
    })?;
    let mut merged: BTreeMap<i128, Tally> = BTreeMap::new();
    for p in parts {
        for (v, t) in p {
            merge_into(merged.entry(v).or_default(), t);
        }
    }
    Ok(merged
        .into_iter()
        .map(|(v, t)| {
            (
                v,
                HistogramBucket {
                    count: t.values().sum(),
                    value: tally_value(&t),
                },
            )
        })
        .collect())
}

/// `N,solution_count,value` rows.
pub fn counts_csv(rows: &[CountResult]) -> String {
    let mut out = String::from("N,solution_count,value\n");
    for r in rows {
        out.push_str(&format!("{},{},{:.10e}\n", r.n, r.solution_count, r.value));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(text: &str) -> IntPolynomial {
        IntPolynomial::parse(text).unwrap()
    }

    #[test]
    fn hand_examples() {
        let t = MangoldtTable::new(10).unwrap();
        let b = poly("n=2\n1 1 0\n1 0 1\n-6 0 0\n");
        let l2 = 2f64.ln();
        let l3 = 3f64.ln();
        let exact = 2.0 * l2 * l2 + l3 * l3;
        for r in [count_direct(&b, 5, &t).unwrap(), count_mitm(&b, 5, &t, 1).unwrap()] {
            assert_eq!(r.solution_count, 3);
            assert!((r.value - exact).abs() < 1e-12);
        }
        let none = count_direct(&poly("n=1\n1 1\n1 0\n"), 10, &t).unwrap();
        assert_eq!((none.value, none.solution_count), (0.0, 0));
        let four = count_direct(&poly("n=1\n1 1\n-4 0\n"), 5, &t).unwrap();
        assert_eq!(four.value, l2);
        assert!(count_direct(&b, 11, &t).is_err());
    }

    #[test]
    fn mitm_equals_direct() {
        let t = MangoldtTable::new(30).unwrap();
        let b = poly("n=4\n1 2 0 0 0\n1 0 2 0 0\n-1 0 0 2 0\n2 0 0 0 1\n-7 0 0 0 0\n");
        let d = count_direct(&b, 30, &t).unwrap();
        assert!(d.solution_count > 0);
        for split in 0..=4 {
            let m = count_mitm(&b, 30, &t, split).unwrap();
            assert_eq!((m.value, m.solution_count), (d.value, d.solution_count));
        }
        let mixed = poly("n=2\n1 1 1\n-6 0 0\n");
        assert_eq!(count_mitm(&mixed, 10, &t, 1), Err(Error::NotSeparable { split: 1 }));
        let empty = MangoldtTable::new(1).unwrap();
        assert_eq!(count_mitm(&b, 1, &empty, 2).unwrap().value, 0.0);
    }

    #[test]
    fn histogram_bucket_zero_is_the_count() {
        let t = MangoldtTable::new(20).unwrap();
        let b = poly("n=3\n1 1 1 0\n-1 0 0 2\n1 0 0 1\n-2 0 0 0\n");
        let d = count_direct(&b, 20, &t).unwrap();
        let h = value_histogram(&b, 20, &t).unwrap();
        let zero = &h[&0];
        assert_eq!((zero.count, zero.value), (d.solution_count, d.value));
        let total: u128 = h.values().map(|b| b.count).sum();
        assert_eq!(total, (t.support(20).len() as u128).pow(3));
    }

    #[test]
    fn primes_only_variant() {
        let t = MangoldtTable::new(10).unwrap().primes_only();
        let b = poly("n=2\n1 1 0\n1 0 1\n-6 0 0\n");
        let r = count_direct(&b, 5, &t).unwrap();
        assert_eq!(r.solution_count, 1);
        assert!(r.primes_only);
    }

    #[test]
    fn split_choice() {
        let b = poly("n=5\n1 2 0 0 0 0\n1 0 2 0 0 0\n1 0 0 2 0 0\n1 0 0 0 2 0\n1 0 0 0 0 2\n-1 0 0 0 0 0\n");
        assert_eq!(best_split(&b), Some(2));
        assert_eq!(best_split(&poly("n=2\n1 1 1\n")), None);
    }
}
