use serde::Serialize;

use super::{best_split, count_direct, count_mitm, CountResult, MangoldtTable};
use crate::archimedean::{sigma_scaled, QuadratureSpec, SingularIntegralEstimate};
use crate::error::{Error, Result};
use crate::localdensity::{singular_series, NuStrategy, SeriesEstimate, DEFAULT_BUDGET};
use crate::polycore::IntPolynomial;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PredictOptions {
    pub prime_bound: u64,
    pub t_max: u32,
    pub strategy: NuStrategy,
    pub budget: u128,
    pub quadrature: QuadratureSpec,
    pub ground_truth: bool,
    /// Meet-in-the-middle split for the ground truth; chosen automatically
    /// when absent and the polynomial separates.
    pub split: Option<usize>,
    /// Count prime solutions only (a comparison variant).
    pub primes_only: bool,
}

impl Default for PredictOptions {
    fn default() -> Self {
        PredictOptions {
            prime_bound: 200,
            t_max: 4,
            strategy: NuStrategy::Auto,
            budget: DEFAULT_BUDGET,
            quadrature: QuadratureSpec::default(),
            ground_truth: false,
            split: None,
            primes_only: false,
        }
    }
}

/// Everything that determines the numbers in a report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PredictParameters {
    pub prime_bound: u64,
    pub t_max: u32,
    pub strategy: NuStrategy,
    pub budget: String,
    pub quadrature: QuadratureSpec,
    pub split: Option<usize>,
    pub primes_only: bool,
    pub nvars: usize,
    pub degree: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PredictionReport {
    #[serde(rename = "N")]
    pub n: u64,
    pub series: SeriesEstimate,
    pub sigma: SingularIntegralEstimate,
    /// `series.product * sigma.value * N^{n-d}`.
    pub main_term: f64,
    pub ground_truth: Option<CountResult>,
    /// `main_term / ground_truth.value`.
    pub ratio: Option<f64>,
    pub parameters: PredictParameters,
}

/// Assembles `prod_{p <= P} mu(p) * sigma_N * N^{n-d}`, where `sigma_N` is
/// the real density of the full polynomial at scale `N`, and optionally the
/// exact weighted count to compare with.
pub fn predict(b: &IntPolynomial, n: u64, opts: &PredictOptions) -> Result<PredictionReport> {
    let series = singular_series(b, opts.prime_bound, opts.t_max, opts.strategy, opts.budget)?;
    predict_with(b, n, opts, series, None)
}

/// As [`predict`], with the singular series (and optionally the von
/// Mangoldt table for the ground truth) supplied by the caller.
pub fn predict_with(
    b: &IntPolynomial,
    n: u64,
    opts: &PredictOptions,
    series: SeriesEstimate,
    table: Option<&MangoldtTable>,
) -> Result<PredictionReport> {
    let degree = b.degree().ok_or(Error::ZeroPolynomial)?;
    let nvars = b.nvars();
    let sigma = sigma_scaled(b, n as f64, &opts.quadrature);
    let scale = (n as f64).powi(nvars as i32 - degree as i32);
    let main_term = if series.product == 0.0 || sigma.zero_measure {
        0.0
    } else {
        (series.product * sigma.value * scale).max(0.0)
    };
    let split = opts.split.or_else(|| best_split(b));
    let ground_truth = if opts.ground_truth {
        let mut table = match table {
            Some(t) => t.clone(),
            None => MangoldtTable::new(n)?,
        };
        if opts.primes_only && !table.is_primes_only() {
            table = table.primes_only();
        }
        Some(match split {
            Some(k) => count_mitm(b, n, &table, k)?,
            None => count_direct(b, n, &table)?,
        })
    } else {
        None
    };
    let ratio = ground_truth
        .as_ref()
        .and_then(|g| (g.value > 0.0).then(|| main_term / g.value));
    Ok(PredictionReport {
        n,
        series,
        sigma,
        main_term,
        ground_truth,
        ratio,
        parameters: PredictParameters {
            prime_bound: opts.prime_bound,
            t_max: opts.t_max,
            strategy: opts.strategy,
            budget: opts.budget.to_string(),
            quadrature: opts.quadrature.clone(),
            split,
            primes_only: opts.primes_only,
            nvars,
            degree,
        },
    })
}
