//! Randomized quasi-Monte Carlo on `[0,1]^d`.
//!
//! Points come from the additive recurrence `frac(s + i alpha)` with
//! `alpha_j = phi_d^{-(j+1)}`, `phi_d` the positive root of
//! `x^{d+1} = x + 1`. Independent uniform shifts `s` (ChaCha, fixed seed)
//! give replicate estimates whose spread is the reported standard error.
//! Sample indices are processed in fixed-size chunks and reduced in chunk
//! order, so results do not depend on the worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::arith::CompensatedSum;

const CHUNK: usize = 4096;

fn kronecker_alpha(d: usize) -> Vec<f64> {
    let mut phi = 2.0f64;
    for _ in 0..100 {
        let f = phi.powi(d as i32 + 1) - phi - 1.0;
        let df = (d as f64 + 1.0) * phi.powi(d as i32) - 1.0;
        phi -= f / df;
    }
    (0..d).map(|j| phi.powi(-(j as i32 + 1)).fract()).collect()
}

/// Per-shift means of `k` outputs of `integrand` over `points` samples.
/// `result[s][j]` is the mean of output `j` under shift `s`.
pub fn replicate_means<F>(
    dim: usize,
    points: usize,
    shifts: usize,
    seed: u64,
    k: usize,
    integrand: F,
) -> Vec<Vec<f64>>
where
    F: Fn(&[f64], &mut [f64]) + Sync,
{
    let alpha = kronecker_alpha(dim);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift_vecs: Vec<Vec<f64>> = (0..shifts)
        .map(|_| (0..dim).map(|_| rng.gen::<f64>()).collect())
        .collect();
    let chunks = points.div_ceil(CHUNK);
    shift_vecs
        .iter()
        .map(|shift| {
            let partials: Vec<Vec<CompensatedSum>> = (0..chunks)
                .into_par_iter()
                .map(|c| {
                    let mut sums = vec![CompensatedSum::new(); k];
                    let mut x = vec![0.0; dim];
                    let mut out = vec![0.0; k];
                    let end = ((c + 1) * CHUNK).min(points);
                    for i in c * CHUNK..end {
                        let fi = (i + 1) as f64;
                        for j in 0..dim {
                            x[j] = (shift[j] + (fi * alpha[j]).fract()).fract();
                        }
                        integrand(&x, &mut out);
                        for (s, &o) in sums.iter_mut().zip(&out) {
                            s.add(o);
                        }
                    }
                    sums
                })
                .collect();
            (0..k)
                .map(|j| {
                    let total: CompensatedSum =
                        partials.iter().map(|p| p[j].value()).collect();
                    total.value() / points as f64
                })
                .collect()
        })
        .collect()
}

/// Mean over replicates and its standard error, per output.
pub fn mean_and_se(reps: &[Vec<f64>]) -> Vec<(f64, f64)> {
    let r = reps.len() as f64;
    let k = reps.first().map_or(0, Vec::len);
    (0..k)
        .map(|j| {
            let mean = reps.iter().map(|v| v[j]).sum::<f64>() / r;
            let var = if reps.len() > 1 {
                reps.iter().map(|v| (v[j] - mean).powi(2)).sum::<f64>() / (r - 1.0)
            } else {
                0.0
            };
            (mean, (var / r).sqrt())
        })
        .collect()
}

/// Sample covariance of the replicate means of outputs `idx`.
pub fn covariance(reps: &[Vec<f64>], idx: &[usize]) -> Vec<Vec<f64>> {
    let r = reps.len() as f64;
    let means: Vec<f64> = idx
        .iter()
        .map(|&j| reps.iter().map(|v| v[j]).sum::<f64>() / r)
        .collect();
    idx.iter()
        .enumerate()
        .map(|(a, &ja)| {
            idx.iter()
                .enumerate()
                .map(|(b, &jb)| {
                    if reps.len() < 2 {
                        return 0.0;
                    }
                    reps.iter()
                        .map(|v| (v[ja] - means[a]) * (v[jb] - means[b]))
                        .sum::<f64>()
                        / (r - 1.0)
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomial() {
        // int x*y^2 over the unit square = 1/6
        let reps = replicate_means(2, 1 << 14, 8, 7, 1, |x, out| out[0] = x[0] * x[1] * x[1]);
        let (m, se) = mean_and_se(&reps)[0];
        assert!((m - 1.0 / 6.0).abs() < 1e-4);
        assert!(se < 1e-3);
    }

    #[test]
    fn deterministic_for_seed() {
        let f = |x: &[f64], out: &mut [f64]| out[0] = (x[0] * 7.0).sin() + x[2];
        let a = replicate_means(3, 10_000, 4, 99, 1, f);
        let b = replicate_means(3, 10_000, 4, 99, 1, f);
        assert_eq!(a, b);
    }
}
