//! The p-adic side of the main term.
//!
//! `B(q)` and the unit sums `S~_{m,q}` are computed in floating point from
//! exact residue histograms. The local factors `mu(p)` never go through
//! floating point: they are read off the exact counts `nu_t(p)` of unit
//! solutions modulo `p^t`, and the complex path is kept as a cross-check.

mod expsum;
mod factor;
mod nu;

pub use expsum::{b_of_q, unit_exp_sum, unit_value_histogram, units};
pub(crate) use expsum::for_each_tuple;
pub use factor::{
    local_factors_csv, mu_p, padic_nonsingular_witness, singular_series, LocalFactor, PadicWitness, SeriesEstimate,
    WITNESS_BUDGET,
};
pub use nu::{
    nu_count, nu_enumerate, nu_lift_all, nu_table, NuStrategy, UnitSolutionCount, DEFAULT_BUDGET,
    ENUMERATION_THRESHOLD,
};

use std::str::FromStr;

use num_bigint::BigUint;
use num_rational::BigRational;
use serde::{Deserialize, Deserializer, Serializer};

pub(crate) fn ser_biguint<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

pub(crate) fn ser_biguints<S: Serializer>(v: &[BigUint], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|x| x.to_string()))
}

pub(crate) fn ser_rational<S: Serializer>(v: &BigRational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

pub(crate) fn ser_rationals<S: Serializer>(v: &[BigRational], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|x| x.to_string()))
}

fn parse_str<T: FromStr, E: serde::de::Error>(s: &str) -> Result<T, E> {
    s.parse().map_err(|_| E::custom(format!("bad number `{s}`")))
}

pub(crate) fn de_biguint<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
    parse_str(&String::deserialize(d)?)
}

pub(crate) fn de_biguints<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigUint>, D::Error> {
    Vec::<String>::deserialize(d)?
        .iter()
        .map(|s| parse_str(s))
        .collect()
}

pub(crate) fn de_rational<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
    parse_str(&String::deserialize(d)?)
}

pub(crate) fn de_rationals<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigRational>, D::Error> {
    Vec::<String>::deserialize(d)?
        .iter()
        .map(|s| parse_str(s))
        .collect()
}
