//! The real density: `I(eta) = int_{[0,1]^n} e(eta f(xi)) dxi`, its
//! truncated integral `J(L) = int_{|eta| <= L} I(eta) deta`, and the limit
//! `mu(infinity)`.
//!
//! Two estimators of the limit are provided. The quadrature route swaps the
//! order of integration: the trapezoid rule in `eta` applied to `e(eta f)`
//! sums to a Dirichlet kernel in `f`, so every `J(L)` of a ladder is one
//! pass over the box samples. The measure route computes
//! `(2 eps)^{-1} vol{|f| <= eps}` by solving exactly along one variable and
//! sampling the others. Both finish with extrapolation along a geometric
//! ladder (`L` doubling, `eps` shrinking by 4).

mod qmc;
mod sausage;

pub use qmc::{covariance, mean_and_se, replicate_means};
pub use sausage::{horner, roots_in, sublevel_measures};

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::polycore::{IntPolynomial, RealPolynomial};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuadratureSpec {
    /// Quasi-random points per replicate.
    pub box_points: usize,
    /// Samples of the remaining `n - 1` coordinates per replicate for the
    /// measure route, which integrates one coordinate exactly.
    pub measure_points: usize,
    /// Number of independently shifted replicates.
    pub shifts: usize,
    /// Largest truncation `L`; the ladder is `L/16, L/8, .., L`.
    pub eta_max: f64,
    /// Trapezoid step in `eta`; `None` picks `1 / (4 sum |coef|)`.
    pub eta_step: Option<f64>,
    /// Largest sausage half-width; the ladder is `eps, eps/4, eps/16, eps/64`.
    pub eps: f64,
    /// Values above this are reported as divergent.
    pub divergence_bound: f64,
    pub seed: u64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            box_points: 1 << 20,
            measure_points: 1 << 17,
            shifts: 8,
            eta_max: 128.0,
            eta_step: None,
            eps: 1e-3,
            divergence_bound: 1e6,
            seed: 20240601,
        }
    }
}

const LADDER_LEN: usize = 5;
const EPS_LADDER_LEN: usize = 4;
/// Increment ratio above which a ladder is treated as not converging.
const STALL_RATIO: f64 = 0.85;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Quadrature,
    Measure,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LadderPoint {
    pub param: f64,
    pub value: f64,
    pub std_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SingularIntegralEstimate {
    pub method: Method,
    pub value: f64,
    pub error_estimate: f64,
    pub l_used: Option<f64>,
    pub eps_used: Option<f64>,
    pub ladder: Vec<LadderPoint>,
    /// "aitken", "richardson" or "last".
    pub extrapolation: &'static str,
    pub divergent: bool,
    pub zero_measure: bool,
    pub note: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IEtaEstimate {
    pub re: f64,
    pub im: f64,
    pub std_error: f64,
}

impl IEtaEstimate {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

/// `I(eta)` at several frequencies from one shared sample set.
pub fn i_eta_many(f: &RealPolynomial, etas: &[f64], spec: &QuadratureSpec) -> Vec<IEtaEstimate> {
    let k = etas.len();
    let reps = replicate_means(f.nvars(), spec.box_points, spec.shifts, spec.seed, 2 * k, |x, out| {
        let v = f.eval(x);
        for (j, &eta) in etas.iter().enumerate() {
            let (s, c) = (2.0 * PI * eta * v).sin_cos();
            out[2 * j] = c;
            out[2 * j + 1] = s;
        }
    });
    let stats = mean_and_se(&reps);
    (0..k)
        .map(|j| {
            let (re, se_re) = stats[2 * j];
            let (im, se_im) = stats[2 * j + 1];
            IEtaEstimate {
                re,
                im,
                std_error: se_re.hypot(se_im),
            }
        })
        .collect()
}

/// `eta,re,im,se` rows for external plotting.
pub fn i_eta_csv(f: &IntPolynomial, etas: &[f64], spec: &QuadratureSpec) -> String {
    let vals = i_eta_many(&RealPolynomial::from_int(f), etas, spec);
    let mut out = String::from("eta,re,im,se\n");
    for (eta, v) in etas.iter().zip(vals) {
        out.push_str(&format!("{eta},{},{},{}\n", v.re, v.im, v.std_error));
    }
    out
}

pub fn i_eta(f: &IntPolynomial, eta: f64, spec: &QuadratureSpec) -> IEtaEstimate {
    i_eta_many(&RealPolynomial::from_int(f), &[eta], spec)[0]
}

fn eta_step(f: &RealPolynomial, spec: &QuadratureSpec) -> f64 {
    spec.eta_step
        .unwrap_or_else(|| 0.25 / f.abs_coefficient_sum().max(1e-300))
}

/// Trapezoid weights summed against `e(eta v)` on the grid `j h`,
/// `|j| <= J`: `h [sin((2J+1) pi h v) / sin(pi h v) - cos(2 pi J h v)]`.
#[inline]
fn trapezoid_kernel(v: f64, h: f64, big_j: f64) -> f64 {
    let s = (PI * h * v).sin();
    let dirichlet = if s.abs() < 1e-12 {
        2.0 * big_j + 1.0
    } else {
        ((2.0 * big_j + 1.0) * PI * h * v).sin() / s
    };
    h * (dirichlet - (2.0 * PI * big_j * h * v).cos())
}

/// Grid for truncation `l`: step at most `h0` and `J = l / h` an integer.
fn grid_for(l: f64, h0: f64) -> (f64, f64) {
    let big_j = (l / h0).ceil().max(1.0);
    (l / big_j, big_j)
}

/// `J(L)` for each `L`, with standard errors, from one pass over the samples.
pub fn j_ladder(f: &RealPolynomial, ls: &[f64], spec: &QuadratureSpec) -> (Vec<LadderPoint>, Vec<Vec<f64>>) {
    let h0 = eta_step(f, spec);
    let grids: Vec<(f64, f64)> = ls.iter().map(|&l| grid_for(l, h0)).collect();
    let reps = replicate_means(f.nvars(), spec.box_points, spec.shifts, spec.seed, ls.len(), |x, out| {
        let v = f.eval(x);
        for (o, &(h, big_j)) in out.iter_mut().zip(&grids) {
            *o = trapezoid_kernel(v, h, big_j);
        }
    });
    let ladder = mean_and_se(&reps)
        .into_iter()
        .zip(ls)
        .map(|((value, std_error), &param)| LadderPoint {
            param,
            value,
            std_error,
        })
        .collect();
    (ladder, reps)
}

pub fn j_of_l(f: &IntPolynomial, l: f64, spec: &QuadratureSpec) -> LadderPoint {
    j_ladder(&RealPolynomial::from_int(f), &[l], spec).0.remove(0)
}

/// Reference `J(L)`: the trapezoid rule applied to explicit `I(eta)` values
/// on the grid. Returns the complex result; the imaginary part should vanish.
pub fn j_of_l_grid(f: &IntPolynomial, l: f64, spec: &QuadratureSpec) -> Complex64 {
    let fr = RealPolynomial::from_int(f);
    let (h, big_j) = grid_for(l, eta_step(&fr, spec));
    let jn = big_j as i64;
    let etas: Vec<f64> = (-jn..=jn).map(|j| j as f64 * h).collect();
    let vals = i_eta_many(&fr, &etas, spec);
    let mut acc = Complex64::new(0.0, 0.0);
    for (j, v) in vals.iter().enumerate() {
        let w = if j == 0 || j == etas.len() - 1 { 0.5 } else { 1.0 };
        acc += v.value() * w;
    }
    acc * h
}

/// Aitken's delta-squared limit of a geometrically converging triple, with
/// the increment ratio; `None` when the increments do not shrink.
pub fn aitken(x0: f64, x1: f64, x2: f64) -> Option<(f64, f64)> {
    let (d1, d2) = (x1 - x0, x2 - x1);
    if d1 == 0.0 {
        return None;
    }
    let r = d2 / d1;
    (r > 0.0 && r < 1.0).then(|| (x2 + d2 * r / (1.0 - r), r))
}

/// Extrapolated limit of a triple: Aitken when the increments shrink
/// geometrically, otherwise the `1/L` (ratio one half) Richardson step.
fn extrapolate(x: [f64; 3]) -> (f64, &'static str) {
    match aitken(x[0], x[1], x[2]) {
        Some((v, _)) => (v, "aitken"),
        None => (x[2] + (x[2] - x[1]), "richardson"),
    }
}

/// Standard error of `extrapolate` on the last three ladder entries by the
/// delta method with the replicate covariance.
fn extrapolation_se(reps: &[Vec<f64>], idx: [usize; 3], at: [f64; 3]) -> f64 {
    let cov = covariance(reps, &idx);
    let base = extrapolate(at).0;
    let mut grad = [0.0; 3];
    for i in 0..3 {
        let h = 1e-6 * at[i].abs().max(1e-3);
        let mut y = at;
        y[i] += h;
        grad[i] = (extrapolate(y).0 - base) / h;
    }
    let mut var = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            var += grad[i] * grad[j] * cov[i][j];
        }
    }
    (var.max(0.0) / reps.len() as f64).sqrt()
}

fn ladder_extrapolation(
    ladder: &[LadderPoint],
    reps: &[Vec<f64>],
) -> (f64, f64, &'static str) {
    let n = ladder.len();
    let v: Vec<f64> = ladder.iter().map(|p| p.value).collect();
    let last = [v[n - 3], v[n - 2], v[n - 1]];
    let prev = [v[n - 4], v[n - 3], v[n - 2]];
    let (main, how) = extrapolate(last);
    let (before, _) = extrapolate(prev);
    let se = extrapolation_se(reps, [n - 3, n - 2, n - 1], last);
    (main, se.hypot(main - before), how)
}

/// `mu(infinity)` of the top form `f` by the quadrature route.
///
/// Divergence is flagged when the last two increments of the ladder do not
/// shrink (ratio above 0.85) or when the last increment exceeds five times
/// what the `1/L` law predicts from the one before.
pub fn mu_infinity(f: &IntPolynomial, spec: &QuadratureSpec) -> SingularIntegralEstimate {
    mu_infinity_real(&RealPolynomial::from_int(f), spec)
}

pub fn mu_infinity_real(f: &RealPolynomial, spec: &QuadratureSpec) -> SingularIntegralEstimate {
    let ls: Vec<f64> = (0..LADDER_LEN)
        .map(|k| spec.eta_max / f64::powi(2.0, (LADDER_LEN - 1 - k) as i32))
        .collect();
    let (ladder, reps) = j_ladder(f, &ls, spec);
    let v: Vec<f64> = ladder.iter().map(|p| p.value).collect();
    let d: Vec<f64> = v.windows(2).map(|w| w[1] - w[0]).collect();
    let m = d.len();
    let stalled = d[m - 2] != 0.0
        && d[m - 3] != 0.0
        && d[m - 1] / d[m - 2] > STALL_RATIO
        && d[m - 2] / d[m - 3] > STALL_RATIO;
    let blown = d[m - 1].abs() > 5.0 * 0.5 * d[m - 2].abs();
    let divergent = stalled || blown || v[m].abs() > spec.divergence_bound;
    let (value, error_estimate, how, note) = if divergent {
        (
            v[m],
            d[m - 1].abs(),
            "last",
            Some(format!(
                "J(L) increments {:.4}, {:.4}, {:.4} do not decay",
                d[m - 3],
                d[m - 2],
                d[m - 1]
            )),
        )
    } else {
        let (value, err, how) = ladder_extrapolation(&ladder, &reps);
        (value, err, how, None)
    };
    SingularIntegralEstimate {
        method: Method::Quadrature,
        value,
        error_estimate,
        l_used: Some(spec.eta_max),
        eps_used: None,
        ladder,
        extrapolation: how,
        divergent,
        zero_measure: false,
        note,
    }
}

/// The variable of highest degree in `f` (ties go to the last one).
fn conditioning_variable(f: &RealPolynomial) -> usize {
    let mut best = 0;
    for i in 0..f.nvars() {
        if f.degree_in(i) >= f.degree_in(best) {
            best = i;
        }
    }
    best
}

/// `(2 eps)^{-1} vol{xi in [0,1]^n : |f(xi)| <= eps}` along the eps ladder.
pub fn sausage_ladder(
    f: &RealPolynomial,
    eps_list: &[f64],
    spec: &QuadratureSpec,
) -> (Vec<LadderPoint>, Vec<Vec<f64>>) {
    let n = f.nvars();
    let var = conditioning_variable(f);
    let reps = replicate_means(n.saturating_sub(1).max(1), spec.measure_points, spec.shifts, spec.seed, eps_list.len(), |u, out| {
        let mut x = vec![0.0; n];
        let mut k = 0;
        for (i, xi) in x.iter_mut().enumerate() {
            if i != var && k < u.len() {
                *xi = u[k];
                k += 1;
            }
        }
        let mut coeffs = Vec::new();
        f.univariate_in(var, &x, &mut coeffs);
        sublevel_measures(&coeffs, eps_list, out);
        for (o, &e) in out.iter_mut().zip(eps_list) {
            *o /= 2.0 * e;
        }
    });
    let ladder = mean_and_se(&reps)
        .into_iter()
        .zip(eps_list)
        .map(|((value, std_error), &param)| LadderPoint {
            param,
            value,
            std_error,
        })
        .collect();
    (ladder, reps)
}

/// Real density of `f` on the unit box by the measure route.
///
/// Extrapolates in `eps` when the ladder increments are statistically
/// significant, otherwise reports the smallest-eps value. Divergence is
/// flagged when values exceed the configured bound or keep growing by
/// non-shrinking increments.
pub fn sigma_measure(f: &RealPolynomial, spec: &QuadratureSpec) -> SingularIntegralEstimate {
    let eps_list: Vec<f64> = (0..EPS_LADDER_LEN)
        .map(|k| spec.eps / f64::powi(4.0, k as i32))
        .collect();
    let (ladder, reps) = sausage_ladder(f, &eps_list, spec);
    let v: Vec<f64> = ladder.iter().map(|p| p.value).collect();
    let se: Vec<f64> = ladder.iter().map(|p| p.std_error).collect();
    let d: Vec<f64> = v.windows(2).map(|w| w[1] - w[0]).collect();
    let m = d.len();
    let last = v[m];
    let zero_measure = v.iter().all(|&x| x == 0.0);
    let significant = |i: usize| d[i].abs() > 3.0 * se[i].hypot(se[i + 1]);
    let growing = (0..m).all(|i| d[i] > 0.0 && significant(i))
        && d[m - 1] / d[m - 2] > STALL_RATIO
        && d[m - 2] / d[m - 3] > STALL_RATIO;
    let divergent = growing || v.iter().any(|x| x.abs() > spec.divergence_bound);
    let (value, error_estimate, how, note) = if divergent {
        (
            last,
            d[m - 1].abs(),
            "last",
            Some(format!(
                "density grows as eps shrinks: increments {:.4}, {:.4}, {:.4}",
                d[m - 3],
                d[m - 2],
                d[m - 1]
            )),
        )
    } else if significant(m - 1) {
        let (value, err, how) = ladder_extrapolation(&ladder, &reps);
        (value, err, how, None)
    } else {
        (last, se[m] + d[m - 1].abs(), "last", None)
    };
    SingularIntegralEstimate {
        method: Method::Measure,
        value,
        error_estimate,
        l_used: None,
        eps_used: Some(eps_list[m]),
        ladder,
        extrapolation: how,
        divergent,
        zero_measure,
        note: if zero_measure {
            Some("no sample came within eps of the zero set".into())
        } else {
            note
        },
    }
}

/// `mu(infinity)` of the top form by the measure route.
pub fn mu_infinity_measure(f: &IntPolynomial, spec: &QuadratureSpec) -> SingularIntegralEstimate {
    sigma_measure(&RealPolynomial::from_int(f), spec)
}

/// Density of the full polynomial at scale `N`: the measure route applied
/// to `b_N(xi) = N^{-d} b(N xi)` on `[0,1]^n`, which equals
/// `(2 eps)^{-1} vol{u in [0,N]^n : |b(u)| <= eps N^d} / N^{n-d}`.
pub fn sigma_scaled(b: &IntPolynomial, n_scale: f64, spec: &QuadratureSpec) -> SingularIntegralEstimate {
    sigma_measure(&RealPolynomial::from_int(b).rescaled(n_scale), spec)
}

/// Same density by the quadrature route, as an independent cross-check.
pub fn sigma_scaled_quadrature(b: &IntPolynomial, n_scale: f64, spec: &QuadratureSpec) -> SingularIntegralEstimate {
    mu_infinity_real(&RealPolynomial::from_int(b).rescaled(n_scale), spec)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RealWitness {
    pub point: Vec<f64>,
    pub value: f64,
    pub gradient_norm: f64,
}

fn polish(f: &RealPolynomial, grad: &[RealPolynomial], mut x: Vec<f64>) -> Option<RealWitness> {
    for _ in 0..50 {
        let v = f.eval(&x);
        let g: Vec<f64> = grad.iter().map(|d| d.eval(&x)).collect();
        let gn2: f64 = g.iter().map(|a| a * a).sum();
        if v.abs() < 1e-14 || gn2 == 0.0 {
            break;
        }
        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi -= v * gi / gn2;
        }
    }
    let value = f.eval(&x);
    let gradient_norm = grad.iter().map(|d| d.eval(&x).powi(2)).sum::<f64>().sqrt();
    let inside = x.iter().all(|&c| c > 0.0 && c < 1.0);
    (inside && value.abs() < 1e-12 && gradient_norm > 1e-6).then_some(RealWitness {
        point: x,
        value,
        gradient_norm,
    })
}

/// Looks for a zero of `f` in the open unit box with nonvanishing gradient:
/// scans the interior grid `i / grid`, bisects along sign changes between
/// neighbouring grid points, then polishes with Newton steps along the
/// gradient.
pub fn real_nonsingular_witness(f: &IntPolynomial, grid: usize) -> Option<RealWitness> {
    let fr = RealPolynomial::from_int(f);
    let n = fr.nvars();
    let grad: Vec<RealPolynomial> = (0..n).map(|i| fr.derivative(i)).collect();
    let g = grid.max(2);
    let total = (g - 1).checked_pow(n as u32)?;
    let coord = |k: usize| k as f64 / g as f64;
    for idx in 0..total {
        let mut rem = idx;
        let cell: Vec<usize> = (0..n)
            .map(|_| {
                let c = rem % (g - 1) + 1;
                rem /= g - 1;
                c
            })
            .collect();
        let x: Vec<f64> = cell.iter().map(|&k| coord(k)).collect();
        let fx = fr.eval(&x);
        if fx == 0.0 {
            if let Some(w) = polish(&fr, &grad, x.clone()) {
                return Some(w);
            }
            continue;
        }
        for j in 0..n {
            if cell[j] + 1 >= g {
                continue;
            }
            let mut y = x.clone();
            y[j] = coord(cell[j] + 1);
            if (fr.eval(&y) > 0.0) == (fx > 0.0) {
                continue;
            }
            let (mut a, mut b) = (x[j], y[j]);
            let mut z = x.clone();
            for _ in 0..100 {
                z[j] = 0.5 * (a + b);
                if (fr.eval(&z) > 0.0) == (fx > 0.0) {
                    a = z[j];
                } else {
                    b = z[j];
                }
            }
            if let Some(w) = polish(&fr, &grad, z) {
                return Some(w);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(text: &str) -> IntPolynomial {
        IntPolynomial::parse(text).unwrap()
    }

    fn small() -> QuadratureSpec {
        QuadratureSpec {
            box_points: 1 << 14,
            measure_points: 1 << 12,
            shifts: 16,
            ..QuadratureSpec::default()
        }
    }

    #[test]
    fn i_eta_basics() {
        let f = poly("n=1\n1 1\n");
        let spec = small();
        let i0 = i_eta(&f, 0.0, &spec);
        assert_eq!((i0.re, i0.im), (1.0, 0.0));
        let i1 = i_eta(&f, 1.0, &spec);
        assert!(i1.value().norm() < 3.0 * i1.std_error.max(1e-12));
        let ih = i_eta(&f, 0.5, &spec);
        let exact = (Complex64::new(0.0, PI).exp() - 1.0) / Complex64::new(0.0, PI);
        assert!((ih.value() - exact).norm() < 1e-4, "{:?}", ih);
    }

    #[test]
    fn conjugate_symmetry() {
        let f = RealPolynomial::from_int(&poly("n=2\n1 1 1\n-1 0 2\n"));
        let v = i_eta_many(&f, &[3.7, -3.7], &small());
        assert!((v[0].re - v[1].re).abs() < 1e-10);
        assert!((v[0].im + v[1].im).abs() < 1e-10);
    }

    #[test]
    fn kernel_matches_explicit_grid() {
        let f = poly("n=2\n1 1 1\n-1 0 2\n");
        let spec = QuadratureSpec {
            box_points: 1 << 12,
            shifts: 2,
            ..QuadratureSpec::default()
        };
        let fast = j_of_l(&f, 3.0, &spec);
        let slow = j_of_l_grid(&f, 3.0, &spec);
        assert!((fast.value - slow.re).abs() < 1e-10);
        assert!(slow.im.abs() < 1e-10);

        // half grid doubled
        let fr = RealPolynomial::from_int(&f);
        let (h, big_j) = grid_for(3.0, eta_step(&fr, &spec));
        let etas: Vec<f64> = (0..=big_j as i64).map(|j| j as f64 * h).collect();
        let vals = i_eta_many(&fr, &etas, &spec);
        let half: f64 = vals
            .iter()
            .enumerate()
            .map(|(j, v)| if j == 0 { 0.5 * v.re } else if j == etas.len() - 1 { 0.5 * v.re } else { v.re })
            .sum::<f64>()
            * h;
        assert!((2.0 * half - slow.re).abs() < 1e-10);
    }

    #[test]
    fn aitken_recovers_geometric_limit() {
        let x: Vec<f64> = (0..3).map(|k| 2.0 - 0.7f64.powi(k)).collect();
        let (v, r) = aitken(x[0], x[1], x[2]).unwrap();
        assert!((v - 2.0).abs() < 1e-12 && (r - 0.7).abs() < 1e-12);
        assert!(aitken(1.0, 2.0, 3.0).is_none());
    }

    #[test]
    fn linear_form_density_is_one() {
        // x1 - x2 on the unit square: density of the diagonal is 1
        let b = poly("n=2\n1 1 0\n-1 0 1\n");
        let s = sigma_scaled(&b, 50.0, &small());
        assert!((s.value - 1.0).abs() < 1e-3, "{s:?}");
        assert!(!s.divergent);
    }

    #[test]
    fn no_real_zero_gives_zero() {
        let b = poly("n=2\n1 2 0\n1 0 2\n1 0 0\n");
        let s = sigma_scaled(&b, 10.0, &small());
        assert!(s.zero_measure);
        assert_eq!(s.value, 0.0);
    }

    #[test]
    fn real_witness_examples() {
        let w = real_nonsingular_witness(&poly("n=3\n1 1 1 0\n-1 0 0 2\n"), 8).unwrap();
        assert!(w.value.abs() < 1e-12 && w.gradient_norm > 1e-6);
        assert!(real_nonsingular_witness(&poly("n=3\n1 2 0 0\n1 0 2 0\n1 0 0 2\n"), 8).is_none());
        let w = real_nonsingular_witness(&poly("n=2\n1 2 0\n-1 0 2\n"), 8).unwrap();
        assert!((w.point[0] - w.point[1]).abs() < 1e-9);
    }
}
