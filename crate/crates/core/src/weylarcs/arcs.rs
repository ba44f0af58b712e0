use std::cmp::Ordering;
use std::fmt;

use serde::Serialize;

use crate::arith::{dist_to_int, gcd};
use crate::error::{Error, Result};

/// A reduced fraction `m/q` in `[0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct RationalFreq {
    pub m: u64,
    pub q: u64,
}

impl RationalFreq {
    pub fn new(m: u64, q: u64) -> Result<Self> {
        if q == 0 {
            return Err(Error::ZeroModulus);
        }
        let m = m % q;
        let g = gcd(m, q);
        Ok(RationalFreq { m: m / g, q: q / g })
    }

    pub fn value(&self) -> f64 {
        self.m as f64 / self.q as f64
    }

    /// Distance from `alpha` to this point on the circle `R/Z`.
    pub fn distance(&self, alpha: f64) -> f64 {
        dist_to_int(alpha - self.value())
    }
}

impl Ord for RationalFreq {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.m as u128 * other.q as u128).cmp(&(other.m as u128 * self.q as u128))
    }
}

impl PartialOrd for RationalFreq {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for RationalFreq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.m, self.q)
    }
}

/// Major arcs: closed intervals of radius `N^{-d} (ln N)^C` around every
/// `m/q` with `q <= (ln N)^C`, taken on the circle so the arc at 0 wraps.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ArcDissection {
    pub n: f64,
    pub c: f64,
    pub d: u32,
    pub q_max: u64,
    pub radius: f64,
    /// Centers in increasing order.
    pub arcs: Vec<RationalFreq>,
    pub total_measure: f64,
}

impl ArcDissection {
    /// The arc containing `alpha`, if any.
    pub fn locate(&self, alpha: f64) -> Option<RationalFreq> {
        let a = alpha.rem_euclid(1.0);
        let i = self.arcs.partition_point(|f| f.value() <= a);
        let below = if i == 0 { self.arcs.last() } else { self.arcs.get(i - 1) };
        let above = self.arcs.get(i).or(self.arcs.first());
        [below, above]
            .into_iter()
            .flatten()
            .find(|f| f.distance(a) <= self.radius)
            .copied()
    }

    pub fn is_major(&self, alpha: f64) -> bool {
        self.locate(alpha).is_some()
    }
}

pub fn build_arcs(n: f64, c: f64, d: u32) -> Result<ArcDissection> {
    if !(n >= 3.0) || !(c > 0.0) || d == 0 {
        return Err(Error::InvalidArgument(format!(
            "arcs need N >= 3, C > 0, d >= 1 (got N = {n}, C = {c}, d = {d})"
        )));
    }
    let log_c = n.ln().powf(c);
    let q_max = log_c.floor() as u64;
    let radius = n.powi(-(d as i32)) * log_c;
    let mut arcs: Vec<RationalFreq> = (1..=q_max)
        .flat_map(|q| {
            (0..q)
                .filter(move |&m| gcd(m, q) == 1)
                .map(move |m| RationalFreq { m, q })
        })
        .collect();
    arcs.sort();
    let mut pairs: Vec<(RationalFreq, RationalFreq, f64)> = arcs
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let num = b.m as u128 * a.q as u128 - a.m as u128 * b.q as u128;
            (a, b, num as f64 / (a.q as f64 * b.q as f64))
        })
        .collect();
    if let (Some(&last), Some(&first)) = (arcs.last(), arcs.first()) {
        if arcs.len() > 1 {
            pairs.push((last, first, (last.q - last.m) as f64 / last.q as f64));
        } else if 2.0 * radius >= 1.0 {
            pairs.push((last, first, 0.0));
        }
    }
    if let Some((a, b, _)) = pairs.iter().find(|(_, _, gap)| *gap <= 2.0 * radius) {
        return Err(Error::ArcsOverlap {
            left: a.to_string(),
            right: b.to_string(),
        });
    }
    Ok(ArcDissection {
        n,
        c,
        d,
        q_max,
        radius,
        total_measure: arcs.len() as f64 * 2.0 * radius,
        arcs,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Classification {
    /// `q <= P^Delta` with `||q alpha|| <= P^{-d+Delta}`; `a/q` is the
    /// approximation and `distance = ||q alpha||`.
    Rational { q: u64, a: u64, distance: f64 },
    Minor,
}

/// Smallest `q <= P^Delta` with `||q alpha|| <= P^{-d+Delta}`.
///
/// If some `q` qualifies, the first continued-fraction convergent that
/// qualifies is the smallest one: every `q' < q_k` has
/// `||q' alpha|| >= ||q_{k-1} alpha||`.
pub fn classify_alpha(alpha: f64, p: f64, d: u32, delta: f64) -> Classification {
    let q_limit = p.powf(delta);
    let tol = p.powf(delta - d as f64);
    let a = alpha.rem_euclid(1.0);
    let (mut h0, mut h1) = (0f64, 1f64);
    let (mut k0, mut k1) = (1f64, 0f64);
    let mut x = a;
    for _ in 0..64 {
        let ai = x.floor();
        let (h2, k2) = (ai * h1 + h0, ai * k1 + k0);
        if k2 > q_limit {
            break;
        }
        let q = k2 as u64;
        let dist = dist_to_int(q as f64 * a);
        if dist <= tol {
            let num = ((q as f64 * a).round() as u64) % q;
            return Classification::Rational {
                q,
                a: num,
                distance: dist,
            };
        }
        let frac = x - ai;
        if frac < 1e-300 {
            break;
        }
        x = frac.recip();
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
    }
    Classification::Minor
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arcs_at_100() {
        let arcs = build_arcs(100.0, 1.0, 2).unwrap();
        let centers: Vec<String> = arcs.arcs.iter().map(|f| f.to_string()).collect();
        assert_eq!(centers, ["0/1", "1/4", "1/3", "1/2", "2/3", "3/4"]);
        assert_eq!(arcs.radius, 1e-4 * 100f64.ln());
        assert!((arcs.total_measure - 12.0 * arcs.radius).abs() < 1e-18);
        assert_eq!(arcs.locate(0.99999), Some(RationalFreq { m: 0, q: 1 }));
        assert_eq!(arcs.locate(0.5 + 4e-4), Some(RationalFreq { m: 1, q: 2 }));
        assert_eq!(arcs.locate(0.4), None);
    }

    #[test]
    fn overlap_detected() {
        assert!(matches!(build_arcs(3.0, 8.0, 1), Err(Error::ArcsOverlap { .. })));
        let small = build_arcs(1000.0, 1.0, 2).unwrap();
        let big = build_arcs(1000.0, 2.0, 2).unwrap();
        assert!(big.q_max >= small.q_max && big.radius > small.radius);
    }

    #[test]
    fn classification() {
        match classify_alpha(1.0 / 3.0, 10.0, 2, 0.5) {
            Classification::Rational { q, a, distance } => {
                assert_eq!((q, a), (3, 1));
                assert!(distance < 1e-15);
            }
            Classification::Minor => panic!(),
        }
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        assert_eq!(classify_alpha(phi, 1000.0, 2, 0.3), Classification::Minor);
        // Dirichlet: Delta > d - 1 always yields a witness
        for k in 0..200 {
            let alpha = (k as f64 * 0.7548776662466927).fract();
            assert!(matches!(
                classify_alpha(alpha, 50.0, 2, 1.05),
                Classification::Rational { .. }
            ));
        }
    }
}
