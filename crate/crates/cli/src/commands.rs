use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::anyhow;
use circlekit::archimedean::{
    i_eta_csv, mu_infinity, mu_infinity_measure, real_nonsingular_witness, sigma_scaled,
    sigma_scaled_quadrature, RealWitness, SingularIntegralEstimate,
};
use circlekit::counting::{
    best_split, count_direct, count_mitm, counts_csv, predict_with, regularity_exponent,
    CountResult, PredictOptions,
};
use circlekit::hinvariant::{
    a_d_lower, build_gm_fm, lemma21_check, parse_decomposition, quadratic_h, Decomposition,
    Lemma21Report, QuadraticFormData, Verification,
};
use circlekit::localdensity::{b_of_q, local_factors_csv, mu_p, singular_series, LocalFactor};
use circlekit::weylarcs::{build_arcs, estimate_gd, scan_csv, weyl_scan, z_count, Classification, ScanRow, WeylReport};
use circlekit::{Error, IntPolynomial};
use clap::{Args, ValueEnum};
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::cache::Cache;
use crate::config::{resolve, RunConfig};
use crate::{Cli, Command};

pub enum Failure {
    Usage(anyhow::Error),
    Computation(anyhow::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::BudgetExceeded { .. } | Error::Overflow(_) | Error::Factorization(_) => {
                Failure::Computation(e.into())
            }
            _ => Failure::Usage(e.into()),
        }
    }
}

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Usage(e.into())
}

type Res<T> = std::result::Result<T, Failure>;

#[derive(Args, Debug, Clone, Serialize)]
pub struct SeriesArgs {
    /// Polynomial file (`n=<count>` header, then `c k1 .. kn` per term)
    #[arg(long)]
    pub poly: PathBuf,
    /// Also write `p,t,nu,partial_sum` rows here
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct PredictArgs {
    #[arg(long)]
    pub poly: PathBuf,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: u64,
    /// Also compute the exact weighted count
    #[arg(long)]
    pub ground_truth: bool,
    /// Meet-in-the-middle split for the ground truth
    #[arg(long, requires = "ground_truth")]
    pub split: Option<usize>,
    /// Variant: weight primes only, dropping higher prime powers
    #[arg(long, requires = "ground_truth")]
    pub primes_only: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CountMethod {
    Auto,
    Direct,
    Mitm,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct CountArgs {
    #[arg(long)]
    pub poly: PathBuf,
    /// One or more box sizes, comma separated
    #[arg(long = "N", value_delimiter = ',', required = true)]
    #[serde(rename = "N")]
    pub n: Vec<u64>,
    #[arg(long, value_enum, default_value_t = CountMethod::Auto)]
    pub method: CountMethod,
    #[arg(long)]
    pub split: Option<usize>,
    /// Variant: weight primes only, dropping higher prime powers
    #[arg(long)]
    pub primes_only: bool,
    /// Also write `N,solution_count,value` rows here
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct LocalArgs {
    #[arg(long)]
    pub poly: PathBuf,
    #[arg(long)]
    pub p: u64,
    /// Also write `p,t,nu,partial_sum` rows here
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SigmaMethod {
    Quadrature,
    Measure,
    Both,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SigmaInfArgs {
    #[arg(long)]
    pub poly: PathBuf,
    #[arg(long, value_enum, default_value_t = SigmaMethod::Both)]
    pub method: SigmaMethod,
    /// Integrate the full polynomial rescaled to the box [0, N]^n instead
    /// of the top-degree form on [0, 1]^n
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub scale: Option<f64>,
    /// Dump I(eta) samples of the top-degree form as CSV
    #[arg(long)]
    pub eta_csv: Option<PathBuf>,
    #[arg(long, default_value_t = 32)]
    pub eta_samples: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ArcsArgs {
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: f64,
    /// Degree; taken from --poly when that is given instead
    #[arg(long, required_unless_present = "poly", conflicts_with = "poly")]
    pub d: Option<u32>,
    #[arg(long)]
    pub poly: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct WeylScanArgs {
    #[arg(long)]
    pub poly: PathBuf,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: u64,
    /// Explicit frequencies, comma separated
    #[arg(long, value_delimiter = ',')]
    pub alpha: Vec<f64>,
    /// Evenly spaced frequencies k/samples when --alpha is absent
    #[arg(long, default_value_t = 128, conflicts_with = "alpha")]
    pub samples: usize,
    /// Box size for the classification (default N)
    #[arg(long = "P")]
    #[serde(rename = "P")]
    pub p: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub delta: f64,
    /// Exponent in the minor-arc bound P^{n - delta * omega}
    #[arg(long, default_value_t = 4.5)]
    pub omega: f64,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ZcountArgs {
    #[arg(long)]
    pub poly: PathBuf,
    /// Differencing depth (default: the degree)
    #[arg(long)]
    pub d: Option<usize>,
    /// Box radii, comma separated; three or more also fit g_d
    #[arg(long = "R", value_delimiter = ',', required = true)]
    #[serde(rename = "R")]
    pub r: Vec<i64>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct HinvArgs {
    #[arg(long)]
    pub poly: PathBuf,
    /// Decomposition file to verify (`M=` header, then `U: .. ; V: ..` lines)
    #[arg(long)]
    pub decomposition: Option<PathBuf>,
    /// Check the restriction bounds h-1 <= h(f|x_i=0) <= h
    #[arg(long)]
    pub lemma21: bool,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct GmSplitArgs {
    #[arg(long)]
    pub poly: PathBuf,
    #[arg(long)]
    pub decomposition: PathBuf,
    /// Override the M header of the decomposition file
    #[arg(long = "M")]
    #[serde(rename = "M")]
    pub m: Option<usize>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct RegularityArgs {
    /// One file per polynomial of the system
    #[arg(long, required = true, num_args = 1..)]
    pub poly: Vec<PathBuf>,
    #[arg(long = "N", value_delimiter = ',', required = true)]
    #[serde(rename = "N")]
    pub n: Vec<i64>,
}

/// What a subcommand hands back for the report envelope.
struct Outcome {
    poly_hash: Option<String>,
    result: serde_json::Value,
    /// Computation flags; any flag makes the exit code 1.
    flags: Vec<String>,
    warnings: Vec<String>,
}

impl Outcome {
    fn new(poly_hash: Option<String>, result: impl Serialize) -> Res<Self> {
        Ok(Outcome {
            poly_hash,
            result: serde_json::to_value(result).map_err(|e| Failure::Computation(e.into()))?,
            flags: Vec::new(),
            warnings: Vec::new(),
        })
    }
}

#[derive(Serialize)]
struct Report<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    poly_hash: Option<&'a str>,
    config: &'a RunConfig,
    /// Null under `--reproducible`.
    wall_time_seconds: Option<f64>,
    flags: &'a [String],
    warnings: &'a [String],
    result: &'a serde_json::Value,
}

fn read_poly(path: &Path) -> Res<IntPolynomial> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(anyhow!("reading {}: {e}", path.display())))?;
    IntPolynomial::parse(&text).map_err(|e| usage(anyhow!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Res<()> {
    std::fs::write(path, text).map_err(|e| usage(anyhow!("writing {}: {e}", path.display())))
}

fn to_value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).unwrap_or(serde_json::Value::Null)
}

fn describe(c: &Command) -> (&'static str, Vec<String>, serde_json::Value) {
    let p = |x: &PathBuf| vec![x.display().to_string()];
    match c {
        Command::Predict(a) => ("predict", p(&a.poly), to_value(a)),
        Command::Count(a) => ("count", p(&a.poly), to_value(a)),
        Command::Local(a) => ("local", p(&a.poly), to_value(a)),
        Command::Series(a) => ("series", p(&a.poly), to_value(a)),
        Command::SigmaInf(a) => ("sigma-inf", p(&a.poly), to_value(a)),
        Command::Arcs(a) => ("arcs", a.poly.iter().flat_map(p).collect(), to_value(a)),
        Command::WeylScan(a) => ("weyl-scan", p(&a.poly), to_value(a)),
        Command::Zcount(a) => ("zcount", p(&a.poly), to_value(a)),
        Command::Hinv(a) => ("hinv", p(&a.poly), to_value(a)),
        Command::GmSplit(a) => ("gm-split", p(&a.poly), to_value(a)),
        Command::Regularity(a) => ("regularity", a.poly.iter().flat_map(p).collect(), to_value(a)),
    }
}

pub fn dispatch(cli: &Cli) -> Res<u8> {
    let start = Instant::now();
    let (name, polys, args) = describe(&cli.command);
    let cfg = resolve(&cli.tunables, name, polys, args).map_err(Failure::Usage)?;
    if let Some(n) = cfg.threads {
        // Fails only if a pool already exists, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let outcome = match &cli.command {
        Command::Predict(a) => predict(&cfg, a)?,
        Command::Count(a) => count(&cfg, a)?,
        Command::Local(a) => local(&cfg, a)?,
        Command::Series(a) => series(&cfg, a)?,
        Command::SigmaInf(a) => sigma_inf(&cfg, a)?,
        Command::Arcs(a) => arcs(&cfg, a)?,
        Command::WeylScan(a) => weyl(&cfg, a)?,
        Command::Zcount(a) => zcount(&cfg, a)?,
        Command::Hinv(a) => hinv(a)?,
        Command::GmSplit(a) => gm_split(a)?,
        Command::Regularity(a) => regularity(&cfg, a)?,
    };
    let wall = (!cfg.reproducible).then(|| start.elapsed().as_secs_f64());
    let report = Report {
        tool: "circlekit",
        version: env!("CARGO_PKG_VERSION"),
        command: name,
        poly_hash: outcome.poly_hash.as_deref(),
        config: &cfg,
        wall_time_seconds: wall,
        flags: &outcome.flags,
        warnings: &outcome.warnings,
        result: &outcome.result,
    };
    let mut json = serde_json::to_string_pretty(&report).map_err(|e| Failure::Computation(e.into()))?;
    json.push('\n');
    match &cfg.output_path {
        Some(path) => write_text(path, &json)?,
        None => print!("{json}"),
    }
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    for f in &outcome.flags {
        eprintln!("flag: {f}");
    }
    Ok(if outcome.flags.is_empty() { 0 } else { 1 })
}

fn cache_for(cfg: &RunConfig, hash: &str) -> Cache {
    Cache::new(cfg.cache_path.as_deref(), hash)
}

fn series_cached(cfg: &RunConfig, b: &IntPolynomial, cache: &Cache) -> Res<circlekit::localdensity::SeriesEstimate> {
    Ok(cache.series(cfg.prime_bound, cfg.t_max, cfg.strategy, || {
        singular_series(b, cfg.prime_bound, cfg.t_max, cfg.strategy, cfg.budget_value)
    })?)
}

fn sigma_flags(est: &SingularIntegralEstimate, out: &mut Outcome) {
    if est.divergent {
        let method = serde_json::to_value(est.method).unwrap_or_default();
        out.flags.push(format!(
            "singular integral ({}) does not converge",
            method.as_str().unwrap_or("?")
        ));
    }
}

fn predict(cfg: &RunConfig, a: &PredictArgs) -> Res<Outcome> {
    let b = read_poly(&a.poly)?;
    let hash = b.content_hash();
    let cache = cache_for(cfg, &hash);
    let series = series_cached(cfg, &b, &cache)?;
    let table = if a.ground_truth {
        Some(cache.mangoldt(a.n)?)
    } else {
        None
    };
    let opts = PredictOptions {
        prime_bound: cfg.prime_bound,
        t_max: cfg.t_max,
        strategy: cfg.strategy,
        budget: cfg.budget_value,
        quadrature: cfg.quadrature(),
        ground_truth: a.ground_truth,
        split: a.split,
        primes_only: a.primes_only,
    };
    let report = predict_with(&b, a.n, &opts, series, table.as_ref())?;
    let unstable = report.series.unstable_primes.clone();
    let mut out = Outcome::new(Some(hash), &report)?;
    sigma_flags(&report.sigma, &mut out);
    if !unstable.is_empty() {
        out.warnings.push(format!("local factors not stabilized at p in {unstable:?}"));
    }
    if a.primes_only {
        out.warnings
            .push("primes-only variant: the count omits prime powers p^t with t >= 2".into());
    }
    Ok(out)
}

fn count(cfg: &RunConfig, a: &CountArgs) -> Res<Outcome> {
    if a.method == CountMethod::Direct && a.split.is_some() {
        return Err(usage(anyhow!("--split conflicts with --method direct")));
    }
    let b = read_poly(&a.poly)?;
    let hash = b.content_hash();
    let split = match (a.method, a.split) {
        (CountMethod::Direct, _) => None,
        (_, Some(k)) => {
            if !b.is_separable_at(k) {
                return Err(Error::NotSeparable { split: k }.into());
            }
            Some(k)
        }
        (CountMethod::Mitm, None) => Some(
            best_split(&b).ok_or_else(|| usage(anyhow!("polynomial has no separable split")))?,
        ),
        (CountMethod::Auto, None) => best_split(&b),
    };
    let max_n = *a.n.iter().max().unwrap();
    let mut table = cache_for(cfg, &hash).mangoldt(max_n)?;
    if a.primes_only {
        table = table.primes_only();
    }
    let rows: Vec<CountResult> = a
        .n
        .iter()
        .map(|&n| match split {
            Some(k) => count_mitm(&b, n, &table, k),
            None => count_direct(&b, n, &table),
        })
        .collect::<circlekit::Result<_>>()?;
    if let Some(path) = &a.csv {
        write_text(path, &counts_csv(&rows))?;
    }
    let mut out = Outcome::new(Some(hash), &rows)?;
    if a.primes_only {
        out.warnings
            .push("primes-only variant: the count omits prime powers p^t with t >= 2".into());
    }
    Ok(out)
}

#[derive(Serialize)]
struct IdentityRow {
    t: u32,
    /// `1 + sum_{j <= t} B(p^j)`.
    re: f64,
    im: f64,
    /// `p^t nu_t / phi(p^t)^n` as a float.
    exact: f64,
    abs_error: f64,
}

#[derive(Serialize)]
struct LocalResult {
    #[serde(flatten)]
    factor: LocalFactor,
    /// Exponential-sum side of the local identity; absent when it exceeds
    /// the budget.
    identity: Option<Vec<IdentityRow>>,
}

fn identity_rows(b: &IntPolynomial, factor: &LocalFactor, budget: u128) -> circlekit::Result<Vec<IdentityRow>> {
    let mut acc = num_complex::Complex64::new(1.0, 0.0);
    let mut q = 1u64;
    let mut rows = Vec::new();
    for (i, exact) in factor.partial_sums.iter().enumerate() {
        q = q
            .checked_mul(factor.p)
            .ok_or(Error::Overflow("prime power"))?;
        acc += b_of_q(b, q, budget)?;
        let exact = rational_f64(exact);
        rows.push(IdentityRow {
            t: i as u32 + 1,
            re: acc.re,
            im: acc.im,
            exact,
            abs_error: (acc - exact).norm(),
        });
    }
    Ok(rows)
}

fn rational_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

fn local(cfg: &RunConfig, a: &LocalArgs) -> Res<Outcome> {
    let b = read_poly(&a.poly)?;
    let factor = mu_p(&b, a.p, cfg.t_max, cfg.strategy, cfg.budget_value)?;
    if let Some(path) = &a.csv {
        write_text(path, &local_factors_csv(std::slice::from_ref(&factor)))?;
    }
    let mut warnings = Vec::new();
    let identity = match identity_rows(&b, &factor, cfg.budget_value) {
        Ok(rows) => Some(rows),
        Err(e @ Error::BudgetExceeded { .. }) => {
            warnings.push(format!("identity check skipped: {e}"));
            None
        }
        Err(e) => return Err(e.into()),
    };
    if let Some(w) = &factor.warning {
        warnings.push(format!("p = {}: {w}", a.p));
    }
    let mut out = Outcome::new(Some(b.content_hash()), LocalResult { factor, identity })?;
    out.warnings = warnings;
    Ok(out)
}

fn series(cfg: &RunConfig, a: &SeriesArgs) -> Res<Outcome> {
    let b = read_poly(&a.poly)?;
    let hash = b.content_hash();
    let s = series_cached(cfg, &b, &cache_for(cfg, &hash))?;
    if let Some(path) = &a.csv {
        write_text(path, &local_factors_csv(&s.factors))?;
    }
    let unstable = s.unstable_primes.clone();
    let mut out = Outcome::new(Some(hash), &s)?;
    if !unstable.is_empty() {
        out.warnings.push(format!("local factors not stabilized at p in {unstable:?}"));
    }
    Ok(out)
}

#[derive(Serialize)]
struct Agreement {
    difference: f64,
    combined_error: f64,
    /// Difference within three combined standard errors.
    consistent: bool,
}

#[derive(Serialize)]
struct SigmaResult {
    /// "top-form" on the unit box, or "scaled" for the full polynomial.
    target: &'static str,
    quadrature: Option<SingularIntegralEstimate>,
    measure: Option<SingularIntegralEstimate>,
    agreement: Option<Agreement>,
    real_witness: Option<RealWitness>,
}

fn sigma_inf(cfg: &RunConfig, a: &SigmaInfArgs) -> Res<Outcome> {
    let b = read_poly(&a.poly)?;
    let top = b.top_degree_part()?;
    let spec = cfg.quadrature();
    let want_q = a.method != SigmaMethod::Measure;
    let want_m = a.method != SigmaMethod::Quadrature;
    let (target, quadrature, measure) = match a.scale {
        Some(n) => (
            "scaled",
            want_q.then(|| sigma_scaled_quadrature(&b, n, &spec)),
            want_m.then(|| sigma_scaled(&b, n, &spec)),
        ),
        None => (
            "top-form",
            want_q.then(|| mu_infinity(&top, &spec)),
            want_m.then(|| mu_infinity_measure(&top, &spec)),
        ),
    };
    let agreement = match (&quadrature, &measure) {
        (Some(q), Some(m)) if !q.divergent && !m.divergent => {
            let difference = (q.value - m.value).abs();
            let combined_error = q.error_estimate.hypot(m.error_estimate);
            Some(Agreement {
                difference,
                combined_error,
                consistent: difference <= 3.0 * combined_error,
            })
        }
        _ => None,
    };
    if let Some(path) = &a.eta_csv {
        let samples = a.eta_samples.max(2);
        let etas: Vec<f64> = (0..samples)
            .map(|k| cfg.eta_l * k as f64 / (samples - 1) as f64)
            .collect();
        write_text(path, &i_eta_csv(&top, &etas, &spec))?;
    }
    let result = SigmaResult {
        target,
        quadrature,
        measure,
        agreement,
        real_witness: real_nonsingular_witness(&top, 16),
    };
    let mut out = Outcome::new(Some(b.content_hash()), &result)?;
    for est in result.quadrature.iter().chain(result.measure.iter()) {
        sigma_flags(est, &mut out);
    }
    if let Some(ag) = &result.agreement {
        if !ag.consistent {
            out.warnings.push(format!(
                "routes differ by {:.3e}, more than 3 combined errors ({:.3e})",
                ag.difference, ag.combined_error
            ));
        }
    }
    Ok(out)
}

fn arcs(cfg: &RunConfig, a: &ArcsArgs) -> Res<Outcome> {
    let (d, hash) = match (&a.poly, a.d) {
        (Some(path), _) => {
            let b = read_poly(path)?;
            (b.degree().ok_or(Error::ZeroPolynomial)? as u32, Some(b.content_hash()))
        }
        (None, Some(d)) => (d, None),
        (None, None) => unreachable!("clap requires --d or --poly"),
    };
    let dissection = build_arcs(a.n, cfg.arc_c, d)?;
    Outcome::new(hash, &dissection)
}

#[derive(Serialize)]
struct ScanSummary {
    /// `psi(N)^n`, the trivial bound on `|T|`.
    trivial_bound: f64,
    max_abs_rational: Option<f64>,
    max_abs_minor: Option<f64>,
    /// The dichotomy parameters, for reference only: the implied constants
    /// are not effective, so nothing here is a verified bound.
    hypothesis: HypothesisParameters,
}

#[derive(Serialize)]
struct HypothesisParameters {
    #[serde(rename = "P")]
    p: f64,
    delta: f64,
    omega: f64,
    /// `Q = delta * omega`.
    q_exponent: f64,
    /// `P^delta`, the largest denominator of a rational classification.
    denominator_limit: f64,
    /// `P^{n - delta * omega}`.
    minor_bound: f64,
    /// Minor-arc rows whose `|T|` exceeds `minor_bound`.
    minor_rows_above: usize,
}

#[derive(Serialize)]
struct ScanResult {
    summary: ScanSummary,
    rows: Vec<ScanRow>,
}

fn weyl(cfg: &RunConfig, a: &WeylScanArgs) -> Res<Outcome> {
    let b = read_poly(&a.poly)?;
    let hash = b.content_hash();
    let table = cache_for(cfg, &hash).mangoldt(a.n)?;
    let alphas: Vec<f64> = if a.alpha.is_empty() {
        let s = a.samples.max(1);
        (0..s).map(|k| k as f64 / s as f64).collect()
    } else {
        a.alpha.clone()
    };
    let p = a.p.unwrap_or(a.n as f64);
    let rows = weyl_scan(&b, &alphas, a.n, &table, p, a.delta)?;
    if let Some(path) = &a.csv {
        write_text(path, &scan_csv(&rows))?;
    }
    let minor_bound = p.powf(b.nvars() as f64 - a.delta * a.omega);
    let max_of = |rational: bool| {
        rows.iter()
            .filter(|r| matches!(r.classification, Classification::Rational { .. }) == rational)
            .map(|r| r.abs)
            .reduce(f64::max)
    };
    let summary = ScanSummary {
        trivial_bound: table.chebyshev_psi(a.n).powi(b.nvars() as i32),
        max_abs_rational: max_of(true),
        max_abs_minor: max_of(false),
        hypothesis: HypothesisParameters {
            p,
            delta: a.delta,
            omega: a.omega,
            q_exponent: a.delta * a.omega,
            denominator_limit: p.powf(a.delta),
            minor_bound,
            minor_rows_above: rows
                .iter()
                .filter(|r| matches!(r.classification, Classification::Minor) && r.abs > minor_bound)
                .count(),
        },
    };
    Outcome::new(Some(hash), ScanResult { summary, rows })
}

#[derive(Serialize)]
struct ZcountResult {
    d: usize,
    r_values: Vec<i64>,
    z_counts: Vec<u128>,
    fit: Option<WeylReport>,
    /// `g_d / (2^{d-1} (d-1))`: the dichotomy holds for every omega below
    /// this, given the fitted `g_d`.
    omega_admissible_below: Option<f64>,
}

fn zcount(cfg: &RunConfig, a: &ZcountArgs) -> Res<Outcome> {
    let f = read_poly(&a.poly)?;
    let d = match a.d {
        Some(d) => d,
        None => f.degree().ok_or(Error::ZeroPolynomial)?,
    };
    if a.r.iter().any(|&r| r < 0) {
        return Err(usage(anyhow!("--R values must be non-negative")));
    }
    let budget = u64::try_from(cfg.budget_value).unwrap_or(u64::MAX);
    let z_counts = a
        .r
        .iter()
        .map(|&r| z_count(&f, d, r, budget))
        .collect::<circlekit::Result<Vec<_>>>()?;
    let fit = if a.r.len() >= 3 {
        Some(estimate_gd(&f, d, &a.r, budget)?)
    } else {
        None
    };
    let omega_admissible_below = fit
        .as_ref()
        .filter(|_| d >= 2)
        .map(|w| w.fitted_gd / (2f64.powi(d as i32 - 1) * (d - 1) as f64));
    Outcome::new(
        Some(f.content_hash()),
        ZcountResult {
            d,
            r_values: a.r.clone(),
            z_counts,
            fit,
            omega_admissible_below,
        },
    )
}

#[derive(Serialize)]
struct DecompositionResult {
    pairs: usize,
    verification: Verification,
    /// Pairs with a linear factor; present when the decomposition is valid.
    linear_pairs: Option<usize>,
    /// `h(f) <= pairs`, certified when the decomposition is valid.
    upper_bound: Option<usize>,
}

#[derive(Serialize)]
struct HinvResult {
    degree: usize,
    #[serde(flatten)]
    quadratic: Option<QuadraticFormData>,
    decomposition: Option<DecompositionResult>,
    lemma21: Option<Lemma21Report>,
    /// Explicit part of the threshold on `h` for this degree.
    threshold_lower_bound: f64,
}

fn read_decomposition(
    path: &Path,
    nvars: usize,
) -> Res<(usize, Vec<(circlekit::RatPolynomial, circlekit::RatPolynomial)>)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(anyhow!("reading {}: {e}", path.display())))?;
    parse_decomposition(&text, nvars).map_err(|e| usage(anyhow!("{}: {e}", path.display())))
}

fn hinv(a: &HinvArgs) -> Res<Outcome> {
    let f = read_poly(&a.poly)?;
    let degree = f.degree().ok_or(Error::ZeroPolynomial)?;
    if degree != 2 && a.decomposition.is_none() {
        return Err(usage(anyhow!(
            "exact h is only computed for quadratic forms; pass --decomposition for a bound"
        )));
    }
    if a.lemma21 && degree != 2 {
        return Err(usage(anyhow!("--lemma21 needs a quadratic form")));
    }
    let to_rat = |c: &num_bigint::BigInt| BigRational::from_integer(c.clone());
    let quadratic = if degree == 2 {
        Some(quadratic_h(&f, to_rat)?)
    } else {
        None
    };
    let decomposition = match &a.decomposition {
        Some(path) => {
            let (_, pairs) = read_decomposition(path, f.nvars())?;
            let dec = Decomposition::new(f.to_rational(), pairs);
            let verification = dec.verify()?;
            let valid = verification.valid;
            Some(DecompositionResult {
                pairs: dec.claimed_h(),
                linear_pairs: if valid { Some(dec.linear_count()?) } else { None },
                upper_bound: valid.then(|| dec.claimed_h()),
                verification,
            })
        }
        None => None,
    };
    let lemma21 = if a.lemma21 { Some(lemma21_check(&f)?) } else { None };
    let mut warnings = Vec::new();
    if let Some(d) = &decomposition {
        if !d.verification.valid {
            warnings.push(format!(
                "decomposition rejected: {}",
                d.verification.diagnostic.clone().unwrap_or_default()
            ));
        }
    }
    let result = HinvResult {
        degree,
        quadratic,
        decomposition,
        lemma21,
        threshold_lower_bound: a_d_lower(degree as u32),
    };
    let mut out = Outcome::new(Some(f.content_hash()), result)?;
    out.warnings = warnings;
    Ok(out)
}

#[derive(Serialize)]
struct GmSplitResult {
    #[serde(rename = "M")]
    m: usize,
    /// `ell_i` in inline term syntax.
    ells: Vec<String>,
    g_m: String,
    f_m: String,
}

fn inline(p: &circlekit::RatPolynomial) -> String {
    if p.is_zero() {
        "0".into()
    } else {
        p.to_inline()
    }
}

fn gm_split(a: &GmSplitArgs) -> Res<Outcome> {
    let f = read_poly(&a.poly)?;
    let (m_file, pairs) = read_decomposition(&a.decomposition, f.nvars())?;
    let m = a.m.unwrap_or(m_file);
    let split = build_gm_fm(&f.to_rational(), &pairs, m)?;
    Outcome::new(
        Some(f.content_hash()),
        GmSplitResult {
            m: split.m,
            ells: split.ells.iter().map(|l| inline(&l.to_polynomial())).collect(),
            g_m: inline(&split.g_m),
            f_m: inline(&split.f_m),
        },
    )
}

fn regularity(cfg: &RunConfig, a: &RegularityArgs) -> Res<Outcome> {
    let system = a
        .poly
        .iter()
        .map(|p| read_poly(p))
        .collect::<Res<Vec<_>>>()?;
    let hash = system
        .iter()
        .map(IntPolynomial::content_hash)
        .collect::<Vec<_>>()
        .join(",");
    let report = regularity_exponent(&system, &a.n, cfg.budget_value)?;
    let flagged = report.flagged;
    let mut out = Outcome::new(Some(hash), &report)?;
    if flagged {
        out.warnings.push(format!(
            "zero count grows like N^{:.2}, faster than the regular N^{}",
            report.fitted_exponent, report.expected_exponent
        ));
    }
    Ok(out)
}
