//! One-dimensional sublevel measures `|{x in [0,1] : |g(x)| <= eps}|` for a
//! real polynomial `g`, computed from its monotone pieces.

/// Horner evaluation; `c[k]` is the coefficient of `x^k`.
#[inline]
pub fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

pub fn derivative(c: &[f64]) -> Vec<f64> {
    c.iter()
        .enumerate()
        .skip(1)
        .map(|(k, &a)| k as f64 * a)
        .collect()
}

fn trim(c: &[f64]) -> &[f64] {
    let scale = c.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let mut end = c.len();
    while end > 0 && c[end - 1].abs() <= 1e-14 * scale {
        end -= 1;
    }
    &c[..end]
}

/// Solves `g(x) = y` on `[a, b]` where `g` is monotone and `g(a) - y`,
/// `g(b) - y` have opposite signs (or one vanishes).
fn solve_monotone(c: &[f64], dc: &[f64], y: f64, a: f64, b: f64) -> f64 {
    solve_monotone_from(c, dc, y, a, b, 0.5 * (a + b))
}

/// As `solve_monotone`, starting Newton from `guess` inside `[a, b]`.
fn solve_monotone_from(c: &[f64], dc: &[f64], y: f64, mut a: f64, mut b: f64, guess: f64) -> f64 {
    let mut fa = horner(c, a) - y;
    if fa == 0.0 {
        return a;
    }
    if horner(c, b) - y == 0.0 {
        return b;
    }
    let mut x = guess;
    for _ in 0..200 {
        let fx = horner(c, x) - y;
        if fx == 0.0 {
            return x;
        }
        if (fx > 0.0) == (fa > 0.0) {
            a = x;
            fa = fx;
        } else {
            b = x;
        }
        if b - a <= 4.0 * f64::EPSILON * b.abs().max(1e-300) {
            break;
        }
        let d = horner(dc, x);
        let newton = x - fx / d;
        if d != 0.0 && newton > a && newton < b {
            let step = (newton - x).abs();
            x = newton;
            if step <= 2.0 * f64::EPSILON * x.abs().max(1e-300) {
                break;
            }
        } else {
            x = 0.5 * (a + b);
        }
    }
    x
}

/// Real roots of `c` in the open interval `(a, b)`, ascending.
pub fn roots_in(c: &[f64], a: f64, b: f64) -> Vec<f64> {
    let c = trim(c);
    match c.len() {
        0 | 1 => Vec::new(),
        2 => {
            let r = -c[0] / c[1];
            if r > a && r < b {
                vec![r]
            } else {
                Vec::new()
            }
        }
        _ => {
            let dc = derivative(c);
            let mut pts = vec![a];
            pts.extend(roots_in(&dc, a, b));
            pts.push(b);
            let mut out = Vec::new();
            for w in pts.windows(2) {
                let (l, r) = (w[0], w[1]);
                let (gl, gr) = (horner(c, l), horner(c, r));
                if gl == 0.0 && l > a {
                    out.push(l);
                } else if (gl < 0.0) != (gr < 0.0) && gr != 0.0 {
                    out.push(solve_monotone(c, &dc, 0.0, l, r));
                }
            }
            out.dedup();
            out
        }
    }
}

/// Measure of `{x in [0,1] : |g(x)| <= eps}` for each `eps` in `eps_list`.
pub fn sublevel_measures(c: &[f64], eps_list: &[f64], out: &mut [f64]) {
    let c = trim(c);
    if c.len() <= 1 {
        let g0 = c.first().copied().unwrap_or(0.0).abs();
        for (o, &e) in out.iter_mut().zip(eps_list) {
            *o = if g0 <= e { 1.0 } else { 0.0 };
        }
        return;
    }
    let dc = derivative(c);
    let mut pts = vec![0.0];
    pts.extend(roots_in(&dc, 0.0, 1.0));
    pts.push(1.0);
    let vals: Vec<f64> = pts.iter().map(|&x| horner(c, x)).collect();
    for o in out.iter_mut() {
        *o = 0.0;
    }
    for (w, v) in pts.windows(2).zip(vals.windows(2)) {
        let (a, b) = (w[0], w[1]);
        let (ga, gb) = (v[0], v[1]);
        let (lo, hi) = (ga.min(gb), ga.max(gb));
        let widest = eps_list.iter().fold(0.0f64, |m, &e| m.max(e));
        if hi < -widest || lo > widest {
            continue;
        }
        let guess = if lo < 0.0 && hi > 0.0 {
            solve_monotone(c, &dc, 0.0, a, b)
        } else {
            0.5 * (a + b)
        };
        for (o, &eps) in out.iter_mut().zip(eps_list) {
            if hi < -eps || lo > eps {
                continue;
            }
            if lo >= -eps && hi <= eps {
                *o += b - a;
                continue;
            }
            let inv = |y: f64| -> f64 {
                if y == ga {
                    a
                } else if y == gb {
                    b
                } else {
                    solve_monotone_from(c, &dc, y, a, b, guess)
                }
            };
            let x1 = inv(lo.max(-eps));
            let x2 = inv(hi.min(eps));
            *o += (x2 - x1).abs();
        }
    }
}
