//! Exponential sums, major arcs and degeneracy counts.
//!
//! `T(b; alpha)` is the von Mangoldt weighted sum whose integral over
//! `[0,1]` recovers the weighted count. Its phases are reduced with
//! [`frac_mul`], so `alpha b(x)` is never formed as a float product.

mod arcs;
mod degeneracy;
mod sums;

pub use arcs::{build_arcs, classify_alpha, ArcDissection, Classification, RationalFreq};
pub use degeneracy::{estimate_gd, z_count, WeylReport, Z_BUDGET};
pub(crate) use sums::for_each_i64_tuple;
pub use sums::{e_normalized, frac_mul, s_sum, t_sum, SUM_BUDGET};

use serde::Serialize;

use crate::counting::MangoldtTable;
use crate::error::Result;
use crate::polycore::IntPolynomial;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanRow {
    pub alpha: f64,
    pub re: f64,
    pub im: f64,
    pub abs: f64,
    pub classification: Classification,
}

/// `T(b; alpha)` at each `alpha`, with the classification of `alpha` at box
/// size `p` and exponent `delta`.
pub fn weyl_scan(
    b: &IntPolynomial,
    alphas: &[f64],
    n: u64,
    table: &MangoldtTable,
    p: f64,
    delta: f64,
) -> Result<Vec<ScanRow>> {
    let d = b.degree().unwrap_or(0) as u32;
    alphas
        .iter()
        .map(|&alpha| {
            let t = t_sum(b, alpha, n, table)?;
            Ok(ScanRow {
                alpha,
                re: t.re,
                im: t.im,
                abs: t.norm(),
                classification: classify_alpha(alpha, p, d, delta),
            })
        })
        .collect()
}

pub fn scan_csv(rows: &[ScanRow]) -> String {
    let mut out = String::from("alpha,re,im,abs,classification\n");
    for r in rows {
        let class = match r.classification {
            Classification::Rational { q, a, .. } => format!("{a}/{q}"),
            Classification::Minor => "minor".to_string(),
        };
        out.push_str(&format!("{},{},{},{},{}\n", r.alpha, r.re, r.im, r.abs, class));
    }
    out
}
