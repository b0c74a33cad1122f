//! Hyperbolic wavelet analysis: a separable periodic DWT with independent
//! depths per axis, per-block `l^p` statistics, and a search for the scale
//! ratio along which the statistics decay slowest.
//!
//! Axis 1 is the first array index (`x1`), axis 2 the second. Level `j = 1`
//! is the finest. Block `(j1, j2)` holds the detail-by-detail coefficients
//! and has `(n / 2^j1) (n / 2^j2)` entries.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::anisotropy::SampledField;
use crate::besov::Order;
use crate::error::{Error, Result};
use crate::stats::ols;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Filter {
    Haar,
    D4,
}

impl Filter {
    /// Orthonormal low-pass taps.
    pub fn lowpass(&self) -> Vec<f64> {
        match self {
            Filter::Haar => vec![std::f64::consts::FRAC_1_SQRT_2; 2],
            Filter::D4 => {
                let s3 = 3f64.sqrt();
                let d = 4.0 * 2f64.sqrt();
                vec![(1.0 + s3) / d, (3.0 + s3) / d, (3.0 - s3) / d, (1.0 - s3) / d]
            }
        }
    }

    /// Quadrature mirror `g_k = (-1)^k h_{L-1-k}`.
    pub fn highpass(&self) -> Vec<f64> {
        let h = self.lowpass();
        let l = h.len();
        (0..l)
            .map(|k| if k % 2 == 0 { h[l - 1 - k] } else { -h[l - 1 - k] })
            .collect()
    }
}

impl fmt::Display for Filter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Filter::Haar => "haar",
            Filter::D4 => "d4",
        })
    }
}

impl FromStr for Filter {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "haar" => Ok(Filter::Haar),
            "d4" | "db2" => Ok(Filter::D4),
            _ => Err(Error::Domain(format!("unknown filter {s:?} (haar|d4)"))),
        }
    }
}

fn dwt_levels(x: &mut [f64], levels: usize, h: &[f64], g: &[f64], tmp: &mut Vec<f64>) {
    let mut len = x.len();
    for _ in 0..levels {
        let half = len / 2;
        tmp.clear();
        tmp.resize(len, 0.0);
        for k in 0..half {
            let (mut a, mut d) = (0.0, 0.0);
            for m in 0..h.len() {
                let v = x[(2 * k + m) % len];
                a += h[m] * v;
                d += g[m] * v;
            }
            tmp[k] = a;
            tmp[half + k] = d;
        }
        x[..len].copy_from_slice(tmp);
        len = half;
    }
}

fn idwt_levels(x: &mut [f64], levels: usize, h: &[f64], g: &[f64], tmp: &mut Vec<f64>) {
    for l in (0..levels).rev() {
        let len = x.len() >> l;
        let half = len / 2;
        tmp.clear();
        tmp.resize(len, 0.0);
        for k in 0..half {
            let (a, d) = (x[k], x[half + k]);
            for m in 0..h.len() {
                tmp[(2 * k + m) % len] += h[m] * a + g[m] * d;
            }
        }
        x[..len].copy_from_slice(tmp);
    }
}

/// Applies `op` to every line along axis 2 (rows) of an `n x n` array.
fn along_axis2(data: &mut [f64], n: usize, op: impl Fn(&mut [f64], &mut Vec<f64>) + Sync) {
    data.par_chunks_mut(n).for_each_init(Vec::new, |tmp, row| op(row, tmp));
}

/// Applies `op` to every line along axis 1 (columns).
fn along_axis1(data: &mut [f64], n: usize, op: impl Fn(&mut [f64], &mut Vec<f64>) + Sync) {
    let cols: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map_init(Vec::new, |tmp, j| {
            let mut col: Vec<f64> = (0..n).map(|i| data[i * n + j]).collect();
            op(&mut col, tmp);
            col
        })
        .collect();
    for (j, col) in cols.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            data[i * n + j] = *v;
        }
    }
}

/// Coefficients of the full separable transform in tensor Mallat layout.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperbolicPyramid {
    pub n: usize,
    pub levels: (usize, usize),
    pub filter: Filter,
    pub coeffs: Vec<f64>,
}

/// Index range of detail level `j` along one axis.
fn detail_range(n: usize, j: usize) -> std::ops::Range<usize> {
    (n >> j)..(n >> (j - 1))
}

impl HyperbolicPyramid {
    /// Copy of block `(j1, j2)`, row-major.
    pub fn block(&self, j1: usize, j2: usize) -> Vec<f64> {
        let n = self.n;
        let (r1, r2) = (detail_range(n, j1), detail_range(n, j2));
        r1.flat_map(|i| self.coeffs[i * n + r2.start..i * n + r2.end].iter().copied())
            .collect()
    }

    pub fn block_shape(&self, j1: usize, j2: usize) -> (usize, usize) {
        (self.n >> j1, self.n >> j2)
    }

    /// Mutable access to coefficient `k = (k1, k2)` of block `(j1, j2)`.
    pub fn coeff_mut(&mut self, j1: usize, j2: usize, k: (usize, usize)) -> &mut f64 {
        let n = self.n;
        &mut self.coeffs[((n >> j1) + k.0) * n + (n >> j2) + k.1]
    }

    pub fn zeros(n: usize, levels: (usize, usize), filter: Filter) -> Result<Self> {
        check_levels(n, levels)?;
        Ok(HyperbolicPyramid {
            n,
            levels,
            filter,
            coeffs: vec![0.0; n * n],
        })
    }
}

fn check_levels(n: usize, levels: (usize, usize)) -> Result<()> {
    if !n.is_power_of_two() || n < 2 {
        return Err(Error::Domain(format!("grid size {n} is not a power of two")));
    }
    let max = n.trailing_zeros() as usize;
    for (axis, j) in [(1, levels.0), (2, levels.1)] {
        if j == 0 || j > max {
            return Err(Error::Domain(format!(
                "infeasible depth {j} on axis {axis}: must lie in 1..={max} for n = {n}"
            )));
        }
    }
    Ok(())
}

/// Deepest depth that leaves at least two approximation coefficients per axis.
pub fn default_levels(n: usize) -> (usize, usize) {
    let j = (n.trailing_zeros() as usize).saturating_sub(1).max(1);
    (j, j)
}

/// Separable periodic DWT: depth `levels.0` along axis 1, then `levels.1` along axis 2.
pub fn hyperbolic_transform(field: &SampledField, filter: Filter, levels: (usize, usize)) -> Result<HyperbolicPyramid> {
    let n = field.n;
    check_levels(n, levels)?;
    let (h, g) = (filter.lowpass(), filter.highpass());
    let mut data = field.values.clone();
    along_axis1(&mut data, n, |x, tmp| dwt_levels(x, levels.0, &h, &g, tmp));
    along_axis2(&mut data, n, |x, tmp| dwt_levels(x, levels.1, &h, &g, tmp));
    Ok(HyperbolicPyramid {
        n,
        levels,
        filter,
        coeffs: data,
    })
}

/// Inverse of [`hyperbolic_transform`]; returns the row-major samples.
pub fn inverse_transform(pyr: &HyperbolicPyramid) -> Vec<f64> {
    let n = pyr.n;
    let (h, g) = (pyr.filter.lowpass(), pyr.filter.highpass());
    let mut data = pyr.coeffs.clone();
    along_axis2(&mut data, n, |x, tmp| idwt_levels(x, pyr.levels.1, &h, &g, tmp));
    along_axis1(&mut data, n, |x, tmp| idwt_levels(x, pyr.levels.0, &h, &g, tmp));
    data
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlockStat {
    pub j1: usize,
    pub j2: usize,
    /// `log2 (mean |d|^p)^{1/p}` (`log2 max |d|` for `p = inf`); `None` for an all-zero block.
    pub log2_stat: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaleStatistics {
    pub n: usize,
    pub levels: (usize, usize),
    pub p: Order,
    pub blocks: Vec<BlockStat>,
}

impl ScaleStatistics {
    pub fn get(&self, j1: usize, j2: usize) -> Option<f64> {
        self.blocks
            .iter()
            .find(|b| b.j1 == j1 && b.j2 == j2)
            .and_then(|b| b.log2_stat)
    }

    /// Table of the transposed field.
    pub fn transposed(&self) -> ScaleStatistics {
        let mut blocks: Vec<BlockStat> = self
            .blocks
            .iter()
            .map(|b| BlockStat {
                j1: b.j2,
                j2: b.j1,
                log2_stat: b.log2_stat,
            })
            .collect();
        blocks.sort_by_key(|b| (b.j1, b.j2));
        ScaleStatistics {
            n: self.n,
            levels: (self.levels.1, self.levels.0),
            p: self.p,
            blocks,
        }
    }
}

/// Blocks whose largest coefficient is below this fraction of the largest
/// coefficient in the pyramid are filter roundoff and count as empty.
pub const ROUNDOFF_FLOOR: f64 = 1e-12;

/// Per-coefficient `l^p` mean of every detail block, on a log2 scale.
pub fn scale_statistics(pyr: &HyperbolicPyramid, p: Order) -> ScaleStatistics {
    let floor = ROUNDOFF_FLOOR * pyr.coeffs.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut blocks = Vec::with_capacity(pyr.levels.0 * pyr.levels.1);
    for j1 in 1..=pyr.levels.0 {
        for j2 in 1..=pyr.levels.1 {
            blocks.push(BlockStat {
                j1,
                j2,
                log2_stat: block_statistic(&pyr.block(j1, j2), p, floor),
            });
        }
    }
    ScaleStatistics {
        n: pyr.n,
        levels: pyr.levels,
        p,
        blocks,
    }
}

fn block_statistic(d: &[f64], p: Order, floor: f64) -> Option<f64> {
    let m = d.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if !(m > floor) {
        return None;
    }
    let v = match p {
        Order::Inf => m,
        // scale by the maximum to avoid under/overflow for large p
        Order::Finite(q) => {
            let s = d.iter().map(|v| (v.abs() / m).powf(q)).sum::<f64>() / d.len() as f64;
            m * s.powf(1.0 / q)
        }
    };
    Some(v.log2())
}

/// Mean of log-statistics over realizations; a block empty in any input stays empty.
pub fn average_statistics(tables: &[ScaleStatistics]) -> Result<ScaleStatistics> {
    let first = tables
        .first()
        .ok_or_else(|| Error::Domain("no tables to average".into()))?;
    if tables
        .iter()
        .any(|t| t.n != first.n || t.levels != first.levels || t.p != first.p)
    {
        return Err(Error::Domain("tables have different shapes".into()));
    }
    let blocks = first
        .blocks
        .iter()
        .enumerate()
        .map(|(k, b)| {
            let vals: Option<Vec<f64>> = tables.iter().map(|t| t.blocks[k].log2_stat).collect();
            BlockStat {
                j1: b.j1,
                j2: b.j2,
                log2_stat: vals.map(|v| v.iter().sum::<f64>() / v.len() as f64),
            }
        })
        .collect();
    Ok(ScaleStatistics {
        blocks,
        ..first.clone()
    })
}

/// Candidate ratios `r = jc1 / jc2` and the scale window of the ray fits.
///
/// `jc = log2 n - j` counts octaves from the domain scale, so every ray
/// `jc1 = r jc2` starts at the coarse corner, like the orbits `a^D x` of a
/// self-similar field.
#[derive(Debug, Clone, PartialEq)]
pub struct RayConfig {
    /// Ratios at or below 1, ascending and ending with 1. The full grid
    /// appends their reciprocals.
    pub lower_ratios: Vec<f64>,
    /// Coarsest scale index used. The default 2 drops the coarsest octave,
    /// which the periodic boundary biases.
    pub min_jc: usize,
    /// Finest scale index used; `None` means `log2 n - 1`.
    pub max_jc: Option<usize>,
}

pub const RATIO_MAX: f64 = 6.5;
pub const RATIO_POINTS: usize = 61;

impl Default for RayConfig {
    /// 61 log-spaced ratios on `[1/6.5, 6.5]`, scales from the second octave
    /// down to the finest one.
    fn default() -> Self {
        let half = RATIO_POINTS / 2;
        let lmax = RATIO_MAX.ln();
        let lower_ratios = (0..=half)
            .map(|k| {
                if k == half {
                    1.0
                } else {
                    (-lmax + lmax * k as f64 / half as f64).exp()
                }
            })
            .collect();
        RayConfig {
            lower_ratios,
            min_jc: 2,
            max_jc: None,
        }
    }
}

impl RayConfig {
    pub fn ratios(&self) -> Vec<f64> {
        let mut r = self.lower_ratios.clone();
        r.extend(self.lower_ratios.iter().rev().skip(1).map(|q| 1.0 / q));
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RayFit {
    pub ratio: f64,
    /// Minus the slope of the L1-normalized log2 statistic per unit `(jc1 + jc2)/2`.
    pub decay_rate: Option<f64>,
    pub blocks_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioResult {
    pub best_ratio: f64,
    /// Slope of the L1-normalized log2 statistic along the best ray.
    pub slope_at_best: f64,
    /// `2 r / (1 + r)`: the `alpha0` whose anisotropy has eigenvalue ratio `r`.
    pub implied_alpha0: f64,
    pub rays: Vec<RayFit>,
}

pub fn ratio_maximize(stats: &ScaleStatistics) -> Result<RatioResult> {
    ratio_maximize_with(stats, &RayConfig::default())
}

/// For every ray `jc1 = r jc2`, regresses the L1-normalized log-statistic
/// `log2 stat + (jc1 + jc2)/2` on `(jc1 + jc2)/2` over the blocks nearest the
/// ray and returns the ray with the slowest decay.
///
/// For a field with anisotropy `diag(alpha0, 2 - alpha0)` and Hurst index `H`
/// the continuous-scale decay rate along the ray of ratio `r = alpha/(2-alpha)`
/// is `(H + 1) max(alpha/alpha0, (2-alpha)/(2-alpha0)) - 1`, minimal and equal
/// to `H` at `alpha = alpha0`.
pub fn ratio_maximize_with(stats: &ScaleStatistics, cfg: &RayConfig) -> Result<RatioResult> {
    let l = stats.n.trailing_zeros() as usize;
    let max_jc = cfg.max_jc.unwrap_or(l.saturating_sub(1));
    let usable = |jc1: usize, jc2: usize| -> Option<f64> {
        if jc1 < cfg.min_jc || jc2 < cfg.min_jc || jc1 > max_jc || jc2 > max_jc {
            return None;
        }
        let (j1, j2) = (l.checked_sub(jc1)?, l.checked_sub(jc2)?);
        if j1 == 0 || j2 == 0 {
            return None;
        }
        stats.get(j1, j2)
    };
    let fit_ray = |pick: &dyn Fn(usize) -> Option<(usize, usize)>| -> (Option<f64>, usize) {
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for jc in cfg.min_jc..=max_jc {
            if let Some((a, b)) = pick(jc) {
                if let Some(v) = usable(a, b) {
                    let u = 0.5 * (a + b) as f64;
                    xs.push(u);
                    ys.push(v + u);
                }
            }
        }
        if xs.len() < 3 {
            return (None, xs.len());
        }
        (ols(&xs, &ys).map(|f| -f.slope), xs.len())
    };

    let mut rays = Vec::new();
    for &q in &cfg.lower_ratios {
        let (d, used) = fit_ray(&|jc1| Some((jc1, (jc1 as f64 / q).round() as usize)));
        rays.push(RayFit {
            ratio: q,
            decay_rate: d,
            blocks_used: used,
        });
    }
    for &q in cfg.lower_ratios.iter().rev().skip(1) {
        let (d, used) = fit_ray(&|jc2| Some(((jc2 as f64 / q).round() as usize, jc2)));
        rays.push(RayFit {
            ratio: 1.0 / q,
            decay_rate: d,
            blocks_used: used,
        });
    }
    // Neighbouring rays often select the same blocks and tie exactly; the
    // ratio closest to 1 wins so that transposition maps best to 1 / best.
    let best = rays
        .iter()
        .filter_map(|r| r.decay_rate.map(|d| (r.ratio, d)))
        .fold(None, |acc: Option<(f64, f64)>, (r, d)| match acc {
            Some((br, bd)) if bd < d || (bd == d && br.ln().abs() <= r.ln().abs()) => acc,
            _ => Some((r, d)),
        })
        .ok_or_else(|| Error::Degenerate("no ray has 3 usable blocks".into()))?;
    Ok(RatioResult {
        best_ratio: best.0,
        slope_at_best: -best.1,
        implied_alpha0: 2.0 * best.0 / (1.0 + best.0),
        rays,
    })
}

fn fmt_stat(v: Option<f64>) -> String {
    v.map_or_else(|| "-inf".to_string(), |x| format!("{x}"))
}

/// CSV with columns `j1,j2,p,log2_stat`; empty blocks are written as `-inf`.
pub fn write_stats_csv(w: impl Write, stats: &ScaleStatistics) -> Result<()> {
    let mut out = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    out.write_record(["j1", "j2", "p", "log2_stat"])?;
    for b in &stats.blocks {
        out.write_record([
            b.j1.to_string(),
            b.j2.to_string(),
            stats.p.to_string(),
            fmt_stat(b.log2_stat),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct StatRow {
    pub j1: usize,
    pub j2: usize,
    pub p: String,
    pub log2_stat: f64,
}

pub fn read_stats_csv(r: impl Read) -> Result<Vec<StatRow>> {
    let mut rd = csv::Reader::from_reader(r);
    Ok(rd.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// CSV with columns `ratio,decay_rate`, usable rays only.
pub fn write_ratio_csv(w: impl Write, res: &RatioResult) -> Result<()> {
    let mut out = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    out.write_record(["ratio", "decay_rate"])?;
    for r in &res.rays {
        if let Some(d) = r.decay_rate {
            out.write_record([format!("{}", r.ratio), format!("{d}")])?;
        }
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct RatioRow {
    pub ratio: f64,
    pub decay_rate: f64,
}

pub fn read_ratio_csv(r: impl Read) -> Result<Vec<RatioRow>> {
    let mut rd = csv::Reader::from_reader(r);
    Ok(rd.deserialize().collect::<std::result::Result<_, _>>()?)
}
