use serde::Serialize;

use crate::error::{Error, Result};

/// Tables larger than this are refused.
pub const MAX_TABLE: u64 = 1 << 32;

/// `Lambda(k)` for `0 <= k <= N`, stored as the underlying prime (0 when
/// `k` is not a prime power) with `ln p` derived from it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MangoldtTable {
    bound: u64,
    #[serde(skip)]
    base: Vec<u32>,
    primes_only: bool,
}

impl MangoldtTable {
    /// Sieve of Eratosthenes, then every power of each prime is marked.
    pub fn new(bound: u64) -> Result<Self> {
        if bound >= MAX_TABLE {
            return Err(Error::BudgetExceeded {
                needed: bound as u128 + 1,
                budget: MAX_TABLE as u128,
            });
        }
        let len = bound as usize + 1;
        let mut composite = vec![false; len];
        let mut base = vec![0u32; len];
        for p in 2..len {
            if composite[p] {
                continue;
            }
            let mut m = p * p;
            while m < len {
                composite[m] = true;
                m += p;
            }
            let mut pk = p;
            loop {
                base[pk] = p as u32;
                match pk.checked_mul(p) {
                    Some(next) if next < len => pk = next,
                    _ => break,
                }
            }
        }
        Ok(MangoldtTable {
            bound,
            base,
            primes_only: false,
        })
    }

    /// Copy of the table with `Lambda` restricted to primes (weight 0 on
    /// `p^t`, `t >= 2`). This is a variant for comparison, not the
    /// weighting of the counted quantity.
    pub fn primes_only(&self) -> Self {
        let base = self
            .base
            .iter()
            .enumerate()
            .map(|(k, &p)| if p as usize == k { p } else { 0 })
            .collect();
        MangoldtTable {
            bound: self.bound,
            base,
            primes_only: true,
        }
    }

    pub fn bound(&self) -> u64 {
        self.bound
    }

    pub fn is_primes_only(&self) -> bool {
        self.primes_only
    }

    /// Prime `p` with `k = p^t`, or 0.
    pub fn prime_of(&self, k: u64) -> u32 {
        self.base.get(k as usize).copied().unwrap_or(0)
    }

    pub fn value(&self, k: u64) -> f64 {
        match self.prime_of(k) {
            0 => 0.0,
            p => (p as f64).ln(),
        }
    }

    /// The `k <= limit` with `Lambda(k) > 0`, ascending.
    pub fn support(&self, limit: u64) -> Vec<u64> {
        let top = limit.min(self.bound) as usize;
        (0..=top)
            .filter(|&k| self.base[k] != 0)
            .map(|k| k as u64)
            .collect()
    }

    /// `psi(limit) = sum_{k <= limit} Lambda(k)`.
    pub fn chebyshev_psi(&self, limit: u64) -> f64 {
        self.support(limit)
            .into_iter()
            .map(|k| self.value(k))
            .collect::<crate::arith::CompensatedSum>()
            .value()
    }

    pub fn ensure_covers(&self, n: u64) -> Result<()> {
        if n > self.bound {
            return Err(Error::InvalidArgument(format!(
                "von Mangoldt table covers [0, {}], need [0, {n}]",
                self.bound
            )));
        }
        Ok(())
    }

    /// Little-endian `bound` followed by one `u32` prime per entry.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(9 + 4 * self.base.len());
        out.extend_from_slice(&self.bound.to_le_bytes());
        out.push(self.primes_only as u8);
        for p in &self.base {
            out.extend_from_slice(&p.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = || Error::InvalidArgument("corrupt von Mangoldt table".into());
        if bytes.len() < 9 {
            return Err(bad());
        }
        let bound = u64::from_le_bytes(bytes[..8].try_into().unwrap());
        let primes_only = bytes[8] == 1;
        let body = &bytes[9..];
        if body.len() as u64 != 4 * (bound + 1) {
            return Err(bad());
        }
        let base = body
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(MangoldtTable {
            bound,
            base,
            primes_only,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::factor;

    #[test]
    fn small_table() {
        let t = MangoldtTable::new(10).unwrap();
        assert_eq!(t.support(10), vec![2, 3, 4, 5, 7, 8, 9]);
        assert_eq!(t.value(8), 2f64.ln());
        assert_eq!(t.value(9), 3f64.ln());
        assert_eq!(t.value(0), 0.0);
        assert_eq!(t.value(1), 0.0);
        assert_eq!(t.value(6), 0.0);
    }

    #[test]
    fn agrees_with_factorization() {
        let t = MangoldtTable::new(5000).unwrap();
        for k in 2..=5000u64 {
            let f = factor(k);
            let expect = if f.len() == 1 { f[0].0 as u32 } else { 0 };
            assert_eq!(t.prime_of(k), expect, "k = {k}");
        }
    }

    #[test]
    fn psi_100() {
        let t = MangoldtTable::new(100).unwrap();
        let direct: f64 = (2..=100u64)
            .filter_map(|k| {
                let f = factor(k);
                (f.len() == 1).then(|| (f[0].0 as f64).ln())
            })
            .sum();
        assert!((t.chebyshev_psi(100) - direct).abs() < 1e-12);
        assert!((t.chebyshev_psi(100) - 94.045).abs() < 1e-3);
    }

    #[test]
    fn primes_only_and_roundtrip() {
        let t = MangoldtTable::new(30).unwrap();
        let p = t.primes_only();
        assert_eq!(p.support(30), vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
        assert_eq!(MangoldtTable::from_bytes(&t.to_bytes()).unwrap(), t);
        assert_eq!(MangoldtTable::from_bytes(&p.to_bytes()).unwrap(), p);
        assert!(MangoldtTable::from_bytes(&[1, 2, 3]).is_err());
    }
}
