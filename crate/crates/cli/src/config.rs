//! Resolved run configuration: explicit flags, then `key=value` lines from
//! `--config`, then built-in defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use circlekit::archimedean::QuadratureSpec;
use circlekit::localdensity::{NuStrategy, DEFAULT_BUDGET};
use clap::Args;
use serde::Serialize;

/// Tunables shared by all subcommands. Every one of them may also be set in
/// the config file under the same name as the long flag.
#[derive(Args, Debug, Clone, Default)]
pub struct Tunables {
    /// `key=value` file merged under the flags given on the command line
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Write the JSON report here instead of stdout
    #[arg(long, short = 'o', global = true, value_name = "FILE")]
    pub output: Option<PathBuf>,
    /// Cache directory (default: $CIRCLEKIT_CACHE, then ~/.cache/circlekit)
    #[arg(long = "cache-dir", global = true, value_name = "DIR")]
    pub cache_dir: Option<PathBuf>,
    /// Disable the on-disk cache
    #[arg(long = "no-cache", global = true)]
    pub no_cache: bool,
    /// Worker threads for the parallel kernels
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Omit wall time so reruns produce byte-identical reports
    #[arg(long, global = true)]
    pub reproducible: bool,
    /// Primes p <= P enter the singular series
    #[arg(long = "prime-bound", global = true, value_name = "P")]
    pub prime_bound: Option<u64>,
    /// Highest level t for the counts modulo p^t
    #[arg(long, global = true)]
    pub tmax: Option<u32>,
    /// Largest truncation L of the singular integral
    #[arg(long = "eta-l", global = true, value_name = "L")]
    pub eta_l: Option<f64>,
    /// Largest sausage half-width
    #[arg(long, global = true)]
    pub eps: Option<f64>,
    /// Quasi-random points per replicate (quadrature)
    #[arg(long = "box-points", global = true)]
    pub box_points: Option<usize>,
    /// Quasi-random points per replicate (measure)
    #[arg(long = "measure-points", global = true)]
    pub measure_points: Option<usize>,
    /// Number of shifted replicates
    #[arg(long, global = true)]
    pub shifts: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// auto | enumerate | lift
    #[arg(long, global = true)]
    pub strategy: Option<String>,
    /// Arc exponent C
    #[arg(long = "C", global = true, value_name = "C")]
    pub arc_c: Option<f64>,
    /// Cap on enumerated points
    #[arg(long, global = true)]
    pub budget: Option<u128>,
}

const KEYS: &[&str] = &[
    "output",
    "cache-dir",
    "threads",
    "prime-bound",
    "tmax",
    "eta-l",
    "eps",
    "box-points",
    "measure-points",
    "shifts",
    "seed",
    "strategy",
    "C",
    "budget",
];

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub poly: Vec<String>,
    pub prime_bound: u64,
    pub t_max: u32,
    pub eta_l: f64,
    pub eps: f64,
    pub box_points: usize,
    pub measure_points: usize,
    pub shifts: usize,
    pub seed: u64,
    pub strategy: NuStrategy,
    pub arc_c: f64,
    pub budget: String,
    pub output: Option<String>,
    pub cache_dir: Option<String>,
    pub threads: Option<usize>,
    /// Subcommand arguments as given.
    pub args: serde_json::Value,
    #[serde(skip)]
    pub budget_value: u128,
    #[serde(skip)]
    pub reproducible: bool,
    #[serde(skip)]
    pub output_path: Option<PathBuf>,
    #[serde(skip)]
    pub cache_path: Option<PathBuf>,
}

impl RunConfig {
    pub fn quadrature(&self) -> QuadratureSpec {
        QuadratureSpec {
            box_points: self.box_points,
            measure_points: self.measure_points,
            shifts: self.shifts,
            eta_max: self.eta_l,
            eps: self.eps,
            seed: self.seed,
            ..QuadratureSpec::default()
        }
    }
}

pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("config line {}: expected key=value", i + 1))?;
        let key = k.trim();
        if !KEYS.contains(&key) {
            bail!("config line {}: unknown key `{key}`", i + 1);
        }
        out.insert(key.to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn pick<T: FromStr>(flag: Option<T>, file: &BTreeMap<String, String>, key: &str, default: T) -> Result<T> {
    if let Some(v) = flag {
        return Ok(v);
    }
    match file.get(key) {
        Some(s) => s
            .parse()
            .map_err(|_| anyhow!("config key `{key}`: cannot parse `{s}`")),
        None => Ok(default),
    }
}

fn positive<T: PartialOrd + Default + std::fmt::Display>(name: &str, v: T) -> Result<T> {
    if v <= T::default() {
        bail!("--{name} must be positive, got {v}");
    }
    Ok(v)
}

fn parse_strategy(s: &str) -> Result<NuStrategy> {
    match s {
        "auto" => Ok(NuStrategy::Auto),
        "enumerate" => Ok(NuStrategy::Enumerate),
        "lift" => Ok(NuStrategy::Lift),
        other => bail!("unknown strategy `{other}` (auto, enumerate, lift)"),
    }
}

fn default_cache_dir() -> Option<PathBuf> {
    if let Some(dir) = std::env::var_os("CIRCLEKIT_CACHE") {
        return Some(PathBuf::from(dir));
    }
    if let Some(x) = std::env::var_os("XDG_CACHE_HOME") {
        return Some(Path::new(&x).join("circlekit"));
    }
    std::env::var_os("HOME").map(|h| Path::new(&h).join(".cache").join("circlekit"))
}

pub fn resolve(t: &Tunables, command: &str, poly: Vec<String>, args: serde_json::Value) -> Result<RunConfig> {
    let file = match &t.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            parse_config_file(&text)?
        }
        None => BTreeMap::new(),
    };
    if t.no_cache && t.cache_dir.is_some() {
        bail!("--no-cache conflicts with --cache-dir");
    }
    let strategy_name = pick(t.strategy.clone(), &file, "strategy", "auto".to_string())?;
    let budget = pick(t.budget, &file, "budget", DEFAULT_BUDGET)?;
    let output = t
        .output
        .clone()
        .or_else(|| file.get("output").map(PathBuf::from));
    let cache_path = if t.no_cache {
        None
    } else {
        t.cache_dir
            .clone()
            .or_else(|| file.get("cache-dir").map(PathBuf::from))
            .or_else(default_cache_dir)
    };
    let threads = match t.threads {
        Some(n) => Some(n),
        None => file
            .get("threads")
            .map(|s| s.parse().map_err(|_| anyhow!("config key `threads`: cannot parse `{s}`")))
            .transpose()?,
    };
    if threads == Some(0) {
        bail!("--threads must be positive");
    }
    let defaults = QuadratureSpec::default();
    Ok(RunConfig {
        command: command.to_string(),
        poly,
        prime_bound: positive("prime-bound", pick(t.prime_bound, &file, "prime-bound", 200)?)?,
        t_max: positive("tmax", pick(t.tmax, &file, "tmax", 4)?)?,
        eta_l: positive("eta-l", pick(t.eta_l, &file, "eta-l", defaults.eta_max)?)?,
        eps: positive("eps", pick(t.eps, &file, "eps", defaults.eps)?)?,
        box_points: positive("box-points", pick(t.box_points, &file, "box-points", defaults.box_points)?)?,
        measure_points: positive(
            "measure-points",
            pick(t.measure_points, &file, "measure-points", defaults.measure_points)?,
        )?,
        shifts: positive("shifts", pick(t.shifts, &file, "shifts", defaults.shifts)?)?,
        seed: pick(t.seed, &file, "seed", defaults.seed)?,
        strategy: parse_strategy(&strategy_name)?,
        arc_c: positive("C", pick(t.arc_c, &file, "C", 1.0)?)?,
        budget: budget.to_string(),
        output: output.as_ref().map(|p| p.display().to_string()),
        cache_dir: cache_path.as_ref().map(|p| p.display().to_string()),
        threads,
        args,
        budget_value: positive("budget", budget)?,
        reproducible: t.reproducible,
        output_path: output,
        cache_path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_parsing() {
        let m = parse_config_file("# comment\nprime-bound = 50\n\ntmax=3 # inline\n").unwrap();
        assert_eq!(m["prime-bound"], "50");
        assert_eq!(m["tmax"], "3");
        assert!(parse_config_file("bogus=1").is_err());
        assert!(parse_config_file("tmax").is_err());
    }

    #[test]
    fn flags_win_over_file() {
        let file = parse_config_file("tmax=3\nseed=9").unwrap();
        assert_eq!(pick(Some(5u32), &file, "tmax", 4).unwrap(), 5);
        assert_eq!(pick(None, &file, "tmax", 4u32).unwrap(), 3);
        assert_eq!(pick(None, &file, "eps", 0.5f64).unwrap(), 0.5);
    }
}
