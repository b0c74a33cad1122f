//! Directional increment exponents and anisotropic critical exponents.
//!
//! Along a lattice direction `e`, the structure function
//! `S(t) = mean |f(x + t e) - f(x)|^p` of a field with directional regularity
//! `h` scales like `t^{h p}`. For an analysis anisotropy `D` with eigenpairs
//! `(lambda_i, e_i)` the critical exponent is `min(lambda_1 h_1, lambda_2 h_2)`.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::anisotropy::{Anisotropy, SampledField};
use crate::error::{Error, Result};
use crate::stats::{mean, ols, stderr};

/// Moment order `p` in `[1, inf]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Order {
    Finite(f64),
    Inf,
}

impl Order {
    pub fn new(p: f64) -> Result<Self> {
        if p == f64::INFINITY {
            Ok(Order::Inf)
        } else if p.is_finite() && p >= 1.0 {
            Ok(Order::Finite(p))
        } else {
            Err(Error::Domain(format!("order p = {p} outside [1, inf]")))
        }
    }

    pub fn value(&self) -> f64 {
        match self {
            Order::Finite(p) => *p,
            Order::Inf => f64::INFINITY,
        }
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Order::Finite(p) => write!(f, "{p}"),
            Order::Inf => f.write_str("inf"),
        }
    }
}

impl FromStr for Order {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" => Ok(Order::Inf),
            t => Order::new(t.parse().map_err(|_| Error::Domain(format!("bad order {s:?}")))?),
        }
    }
}

impl Serialize for Order {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Order::Finite(p) => s.serialize_f64(*p),
            Order::Inf => s.serialize_str("inf"),
        }
    }
}

/// Largest component of a snapped lattice direction.
pub const MAX_LATTICE_COMPONENT: i64 = 8;

/// Nearest lattice direction `(u, v)` with `|u|, |v| <= 8`, reduced and with
/// a canonical sign (first nonzero component positive).
pub fn snap_direction(e: [f64; 2]) -> Result<(i64, i64)> {
    let r = e[0].hypot(e[1]);
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!("direction {e:?} has no length")));
    }
    let (ex, ey) = (e[0] / r, e[1] / r);
    let mut best = (0, 0);
    let mut best_cos = -1.0;
    let m = MAX_LATTICE_COMPONENT;
    for u in -m..=m {
        for v in -m..=m {
            if (u, v) == (0, 0) || gcd(u, v) != 1 {
                continue;
            }
            let c = (u as f64 * ex + v as f64 * ey) / (u as f64).hypot(v as f64);
            if c > best_cos + 1e-15 {
                best_cos = c;
                best = (u, v);
            }
        }
    }
    let (u, v) = best;
    Ok(if u < 0 || (u == 0 && v < 0) { (-u, -v) } else { (u, v) })
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Table of the order-`p` increment statistic along one lattice direction.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureFunction {
    /// Unit vector of the lattice direction.
    pub direction: [f64; 2],
    pub lattice: (i64, i64),
    pub p: Order,
    /// Lag lengths `t = m |(u, v)| / n`.
    pub lags: Vec<f64>,
    /// Lattice step counts `m` behind each lag.
    pub steps: Vec<usize>,
    pub values: Vec<f64>,
    /// Default regression window `(t_min, t_max)`.
    pub fit_range: (f64, f64),
}

/// Step counts `round(2^{k/4})`, deduplicated, up to `max_step`.
pub fn quarter_octave_steps(max_step: usize) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::new();
    for k in 0.. {
        let m = 2f64.powf(k as f64 / 4.0).round() as usize;
        if m > max_step {
            break;
        }
        if out.last() != Some(&m) {
            out.push(m);
        }
    }
    out
}

/// Default step window: two octaves are dropped at each end of `[1, n/8]`,
/// keeping at least the octave `[4, 8]` on small grids.
pub fn default_fit_steps(n: usize) -> (usize, usize) {
    (4, (n / 32).max(8))
}

/// Lag lengths for the default quarter-octave step ladder along `direction`.
pub fn default_lags(n: usize, direction: [f64; 2]) -> Result<Vec<f64>> {
    let (u, v) = snap_direction(direction)?;
    let unit = (u as f64).hypot(v as f64) / n as f64;
    let reach = (u.abs().max(v.abs())) as usize;
    Ok(quarter_octave_steps(n / 8 / reach)
        .into_iter()
        .map(|m| m as f64 * unit)
        .collect())
}

/// Order-`p` structure function of `field` along the lattice direction nearest
/// to `direction`, averaged over all `x` with both `x` and `x + t e` at least
/// `n/8` samples from every edge.
pub fn structure_function(
    field: &SampledField,
    direction: [f64; 2],
    p: Order,
    lags: &[f64],
) -> Result<StructureFunction> {
    let n = field.n;
    let (u, v) = snap_direction(direction)?;
    let norm = (u as f64).hypot(v as f64);
    let unit = norm / n as f64;
    if lags.is_empty() {
        return Err(Error::Domain("no lags given".into()));
    }
    let mut steps = Vec::with_capacity(lags.len());
    for &t in lags {
        if !(t > 0.0 && t <= 0.25) {
            return Err(Error::Domain(format!("lag {t} outside (0, 1/4]")));
        }
        let m = (t / unit).round() as usize;
        if m == 0 {
            return Err(Error::Domain(format!("lag {t} below one lattice step")));
        }
        if steps.last().is_some_and(|&prev| m <= prev) {
            return Err(Error::Domain("lags must be strictly increasing on the lattice".into()));
        }
        steps.push(m);
    }
    let margin = n / 8;
    let (lo, hi) = (margin as i64, (n - margin) as i64);
    let values: Vec<f64> = steps
        .par_iter()
        .map(|&m| increment_statistic(field, (u * m as i64, v * m as i64), lo, hi, p))
        .collect::<Result<_>>()?;
    let (f0, f1) = default_fit_steps(n);
    Ok(StructureFunction {
        direction: [u as f64 / norm, v as f64 / norm],
        lattice: (u, v),
        p,
        lags: steps.iter().map(|&m| m as f64 * unit).collect(),
        steps,
        values,
        fit_range: (f0 as f64 * unit, f1 as f64 * unit),
    })
}

fn increment_statistic(field: &SampledField, d: (i64, i64), lo: i64, hi: i64, p: Order) -> Result<f64> {
    let n = field.n as i64;
    let (di, dj) = d;
    // both x and x + d inside [lo, hi)^2
    let i0 = lo.max(lo - di);
    let i1 = hi.min(hi - di);
    let j0 = lo.max(lo - dj);
    let j1 = hi.min(hi - dj);
    if i0 >= i1 || j0 >= j1 {
        return Err(Error::Domain(format!("lag {d:?} leaves no interior points")));
    }
    let mut acc = 0.0;
    for i in i0..i1 {
        let a = &field.values[(i * n + j0) as usize..(i * n + j1) as usize];
        let b = &field.values[((i + di) * n + j0 + dj) as usize..((i + di) * n + j1 + dj) as usize];
        let it = a.iter().zip(b).map(|(x, y)| (y - x).abs());
        acc = match p {
            Order::Inf => it.fold(acc, f64::max),
            Order::Finite(2.0) => acc + it.map(|z| z * z).sum::<f64>(),
            Order::Finite(1.0) => acc + it.sum::<f64>(),
            Order::Finite(q) => acc + it.map(|z| z.powf(q)).sum::<f64>(),
        };
    }
    Ok(match p {
        Order::Inf => acc,
        Order::Finite(_) => acc / ((i1 - i0) * (j1 - j0)) as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DirectionalExponent {
    pub h: f64,
    pub stderr: f64,
    pub fit_range: (f64, f64),
}

/// Regression of `log S` on `log t` over the default fit window.
pub fn directional_exponent(sf: &StructureFunction) -> Result<DirectionalExponent> {
    directional_exponent_in(sf, sf.fit_range)
}

pub fn directional_exponent_in(sf: &StructureFunction, range: (f64, f64)) -> Result<DirectionalExponent> {
    let tol = 1e-12;
    let idx: Vec<usize> = (0..sf.lags.len())
        .filter(|&k| sf.lags[k] >= range.0 * (1.0 - tol) && sf.lags[k] <= range.1 * (1.0 + tol))
        .collect();
    if idx.len() < 4 {
        return Err(Error::Domain(format!(
            "only {} lags in fit range {range:?}, need 4",
            idx.len()
        )));
    }
    if idx.iter().any(|&k| !(sf.values[k] > 0.0)) {
        return Err(Error::Degenerate(format!(
            "field is constant along lattice direction {:?}",
            sf.lattice
        )));
    }
    let x: Vec<f64> = idx.iter().map(|&k| sf.lags[k].ln()).collect();
    let y: Vec<f64> = idx.iter().map(|&k| sf.values[k].ln()).collect();
    let fit = ols(&x, &y).ok_or_else(|| Error::Degenerate("regression failed".into()))?;
    let scale = match sf.p {
        Order::Finite(p) => p,
        Order::Inf => 1.0,
    };
    Ok(DirectionalExponent {
        h: fit.slope / scale,
        stderr: fit.slope_stderr / scale,
        fit_range: (sf.lags[idx[0]], sf.lags[*idx.last().unwrap()]),
    })
}

/// Exponent along `direction` with default lags and fit window.
pub fn exponent_along(field: &SampledField, direction: [f64; 2], p: Order) -> Result<DirectionalExponent> {
    let lags = default_lags(field.n, direction)?;
    directional_exponent(&structure_function(field, direction, p, &lags)?)
}

/// `min(lambda_1 h_1, lambda_2 h_2)` with `h_i` measured along `e_i`.
pub fn critical_exponent(field: &SampledField, d: &Anisotropy, p: Order) -> Result<f64> {
    let h1 = exponent_along(field, d.e1(), p)?.h;
    let h2 = exponent_along(field, d.e2(), p)?.h;
    Ok((d.lambda1() * h1).min(d.lambda2() * h2))
}

/// Closed-form critical exponent `H min(alpha/alpha0, (2-alpha)/(2-alpha0))`
/// of a field with anisotropy `diag(alpha0, 2-alpha0)` analysed with `diag(alpha, 2-alpha)`.
pub fn tent_prediction(alpha: f64, alpha0: f64, hurst: f64) -> Result<f64> {
    for (name, v) in [("alpha", alpha), ("alpha0", alpha0)] {
        if !(v > 0.0 && v < 2.0) {
            return Err(Error::Domain(format!("{name} = {v} outside (0, 2)")));
        }
    }
    Ok(hurst * (alpha / alpha0).min((2.0 - alpha) / (2.0 - alpha0)))
}

/// Grid `start, start + step, ...` up to and including `stop` when `stop`
/// lies on it (within a millionth of a step). Requires `start < stop`.
pub fn alpha_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !start.is_finite() || !stop.is_finite() {
        return Err(Error::Domain(format!("bad grid {start}:{stop}:{step}")));
    }
    if !(stop > start) {
        return Err(Error::Domain(format!("empty grid {start}:{stop}:{step}")));
    }
    let count = ((stop - start) / step + 1e-6).floor() as usize + 1;
    Ok((0..count).map(|k| start + k as f64 * step).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentScan {
    pub alphas: Vec<f64>,
    pub exponents: Vec<f64>,
    pub stderrs: Vec<f64>,
    pub argmax_alpha: f64,
    pub peak: f64,
}

/// Axis exponents `(h_1, h_2)` of one field; everything a diagonal scan needs.
pub fn axis_exponents(field: &SampledField, p: Order) -> Result<(f64, f64)> {
    Ok((
        exponent_along(field, [1.0, 0.0], p)?.h,
        exponent_along(field, [0.0, 1.0], p)?.h,
    ))
}

pub const ARGMAX_TIE_TOL: f64 = 1e-9;
pub const SCAN_RANGE: (f64, f64) = (0.2, 1.8);

/// Scan from per-realization axis exponents.
pub fn scan_from_axis_exponents(h: &[(f64, f64)], alpha_grid: &[f64]) -> Result<ExponentScan> {
    if h.is_empty() {
        return Err(Error::Domain("no realizations".into()));
    }
    if alpha_grid.is_empty() {
        return Err(Error::Domain("empty grid".into()));
    }
    for &a in alpha_grid {
        if !(a >= SCAN_RANGE.0 - 1e-12 && a <= SCAN_RANGE.1 + 1e-12) {
            return Err(Error::Domain(format!("alpha {a} outside [0.2, 1.8]")));
        }
    }
    let mut exponents = Vec::with_capacity(alpha_grid.len());
    let mut stderrs = Vec::with_capacity(alpha_grid.len());
    for &a in alpha_grid {
        let per: Vec<f64> = h.iter().map(|(h1, h2)| (a * h1).min((2.0 - a) * h2)).collect();
        exponents.push(mean(&per));
        stderrs.push(stderr(&per));
    }
    let (argmax_alpha, peak) = argmax_smallest(alpha_grid, &exponents);
    Ok(ExponentScan {
        alphas: alpha_grid.to_vec(),
        exponents,
        stderrs,
        argmax_alpha,
        peak,
    })
}

/// Maximum of `y`, ties within [`ARGMAX_TIE_TOL`] resolved toward the smallest `x`.
pub fn argmax_smallest(x: &[f64], y: &[f64]) -> (f64, f64) {
    let peak = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let k = (0..x.len())
        .filter(|&k| y[k] >= peak - ARGMAX_TIE_TOL)
        .min_by(|&a, &b| x[a].total_cmp(&x[b]))
        .unwrap();
    (x[k], y[k])
}

/// Averages the diagonal critical exponent over realizations of one spec.
pub fn scan_anisotropy(fields: &[SampledField], alpha_grid: &[f64], p: Order) -> Result<ExponentScan> {
    if let Some(first) = fields.first() {
        let key = first.spec.with_seed(0);
        if fields.iter().any(|f| f.spec.with_seed(0) != key) {
            return Err(Error::Domain("fields come from different specs".into()));
        }
    }
    let h: Vec<(f64, f64)> = fields.par_iter().map(|f| axis_exponents(f, p)).collect::<Result<_>>()?;
    scan_from_axis_exponents(&h, alpha_grid)
}

fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// CSV with columns `direction_u,direction_v,p,t,S`.
pub fn write_structure_csv(w: impl Write, sfs: &[StructureFunction]) -> Result<()> {
    let mut out = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    out.write_record(["direction_u", "direction_v", "p", "t", "S"])?;
    for sf in sfs {
        for (t, s) in sf.lags.iter().zip(&sf.values) {
            out.write_record([
                fmt_f64(sf.direction[0]),
                fmt_f64(sf.direction[1]),
                sf.p.to_string(),
                fmt_f64(*t),
                fmt_f64(*s),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct StructureRow {
    pub direction_u: f64,
    pub direction_v: f64,
    pub p: String,
    pub t: f64,
    #[serde(rename = "S")]
    pub s: f64,
}

pub fn read_structure_csv(r: impl Read) -> Result<Vec<StructureRow>> {
    let mut rd = csv::Reader::from_reader(r);
    Ok(rd.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// CSV with columns `alpha,exponent_mean,exponent_stderr`.
pub fn write_scan_csv(w: impl Write, scan: &ExponentScan) -> Result<()> {
    let mut out = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    out.write_record(["alpha", "exponent_mean", "exponent_stderr"])?;
    for k in 0..scan.alphas.len() {
        out.write_record([
            fmt_f64(scan.alphas[k]),
            fmt_f64(scan.exponents[k]),
            fmt_f64(scan.stderrs[k]),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct ScanRow {
    pub alpha: f64,
    pub exponent_mean: f64,
    pub exponent_stderr: f64,
}

pub fn read_scan_csv(r: impl Read) -> Result<Vec<ScanRow>> {
    let mut rd = csv::Reader::from_reader(r);
    Ok(rd.deserialize().collect::<std::result::Result<_, _>>()?)
}
