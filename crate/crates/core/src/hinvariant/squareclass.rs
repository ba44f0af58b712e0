//! Square classes of `Q^*` and Hilbert symbols.

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::arith::{is_prime, powmod};
use crate::error::{Error, Result};

const TRIAL_LIMIT: u64 = 1_000_000;

/// Prime factorization with multiplicity. Trial division to `10^6`; a
/// cofactor above that must be a `u64` prime (or below `10^12`).
pub fn factor_big(n: &BigUint) -> Result<Vec<(u64, u32)>> {
    let mut n = n.clone();
    let mut out = Vec::new();
    if n.is_zero() {
        return Err(Error::Factorization("0".into()));
    }
    let mut p = 2u64;
    while p <= TRIAL_LIMIT {
        let pb = BigUint::from(p);
        if &pb * &pb > n {
            break;
        }
        let mut e = 0;
        while (&n % &pb).is_zero() {
            n /= &pb;
            e += 1;
        }
        if e > 0 {
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if !n.is_one() {
        match n.to_u64() {
            Some(r) if r < TRIAL_LIMIT * TRIAL_LIMIT || is_prime(r) => out.push((r, 1)),
            _ => return Err(Error::Factorization(n.to_string())),
        }
    }
    Ok(out)
}

/// An element of `Q^* / (Q^*)^2`: a sign and a squarefree set of primes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SquareClass {
    pub negative: bool,
    pub primes: Vec<u64>,
}

impl SquareClass {
    pub fn one() -> Self {
        SquareClass {
            negative: false,
            primes: Vec::new(),
        }
    }

    pub fn minus_one() -> Self {
        SquareClass {
            negative: true,
            primes: Vec::new(),
        }
    }

    pub fn of_rational(r: &BigRational) -> Result<Self> {
        if r.is_zero() {
            return Err(Error::InvalidArgument("zero has no square class".into()));
        }
        // a/b and a*b differ by the square b^2
        let prod: BigInt = r.numer() * r.denom();
        let (sign, mag) = prod.into_parts();
        let primes = factor_big(&mag)?
            .into_iter()
            .filter(|(_, e)| e % 2 == 1)
            .map(|(p, _)| p)
            .collect();
        Ok(SquareClass {
            negative: sign == Sign::Minus,
            primes,
        })
    }

    pub fn of_int(k: i64) -> Result<Self> {
        Self::of_rational(&BigRational::from_integer(BigInt::from(k)))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.primes, &other.primes);
        let mut primes = Vec::new();
        while i < a.len() || j < b.len() {
            if j == b.len() || (i < a.len() && a[i] < b[j]) {
                primes.push(a[i]);
                i += 1;
            } else if i == a.len() || b[j] < a[i] {
                primes.push(b[j]);
                j += 1;
            } else {
                i += 1;
                j += 1;
            }
        }
        SquareClass {
            negative: self.negative != other.negative,
            primes,
        }
    }

    pub fn neg(&self) -> Self {
        SquareClass {
            negative: !self.negative,
            primes: self.primes.clone(),
        }
    }

    pub fn is_one(&self) -> bool {
        !self.negative && self.primes.is_empty()
    }

    fn valuation(&self, p: u64) -> u32 {
        self.primes.binary_search(&p).is_ok() as u32
    }

    /// The representative with `p` removed, reduced mod `m`.
    fn unit_part_mod(&self, p: u64, m: u64) -> u64 {
        let mut u = 1u64;
        for &q in &self.primes {
            if q != p {
                u = (u as u128 * (q % m) as u128 % m as u128) as u64;
            }
        }
        if self.negative {
            (m - u) % m
        } else {
            u
        }
    }

    pub fn is_square_at(&self, p: u64) -> bool {
        if self.valuation(p) == 1 {
            return false;
        }
        if p == 2 {
            self.unit_part_mod(2, 8) == 1
        } else {
            legendre(self.unit_part_mod(p, p), p) == 1
        }
    }

    /// Square in `R`.
    pub fn is_square_at_infinity(&self) -> bool {
        !self.negative
    }

    /// All primes where this class can fail to be a local unit.
    pub fn support(&self) -> &[u64] {
        &self.primes
    }
}

fn legendre(u: u64, p: u64) -> i8 {
    match powmod(u % p, (p - 1) / 2, p) {
        1 => 1,
        0 => 0,
        _ => -1,
    }
}

/// Hilbert symbol `(a, b)_p` for a prime `p`.
pub fn hilbert(a: &SquareClass, b: &SquareClass, p: u64) -> i8 {
    let (alpha, beta) = (a.valuation(p), b.valuation(p));
    if p == 2 {
        let u = a.unit_part_mod(2, 8);
        let v = b.unit_part_mod(2, 8);
        let eps = |x: u64| ((x - 1) / 2) % 2;
        let omega = |x: u64| ((x * x - 1) / 8) % 2;
        let e = eps(u) * eps(v) + alpha as u64 * omega(v) + beta as u64 * omega(u);
        if e % 2 == 0 {
            1
        } else {
            -1
        }
    } else {
        let mut s: i8 = if (alpha * beta) as u64 * ((p - 1) / 2) % 2 == 0 {
            1
        } else {
            -1
        };
        if beta == 1 {
            s *= legendre(a.unit_part_mod(p, p), p);
        }
        if alpha == 1 {
            s *= legendre(b.unit_part_mod(p, p), p);
        }
        s
    }
}

/// `(a, b)_infinity`: -1 iff both are negative.
pub fn hilbert_infinity(a: &SquareClass, b: &SquareClass) -> i8 {
    if a.negative && b.negative {
        -1
    } else {
        1
    }
}
