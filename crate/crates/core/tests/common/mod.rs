//! Property checks shared by the proptest suite and the acceptance harness.
//! Each returns `Err` with a description of the first violation.

#![allow(dead_code)]

use anisotex_core::besov::{default_lags, directional_exponent, structure_function, tent_prediction, Order};
use anisotex_core::hywave::{hyperbolic_transform, inverse_transform, ratio_maximize, scale_statistics, Filter};
use anisotex_core::{matrix_power, validate_anisotropy, Error, FieldSpec, Mat2, SampledField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type Check = Result<(), String>;

fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

fn max_abs_diff(a: &Mat2, b: &Mat2) -> f64 {
    (0..4)
        .map(|k| (a[k / 2][k % 2] - b[k / 2][k % 2]).abs())
        .fold(0.0, f64::max)
}

/// `a^D b^D = (ab)^D`, `a^D e_i = a^{lambda_i} e_i` and `det a^D = a^2`.
/// `lambda1` is the first eigenvalue and `theta` the angle of `e2` against `e1 = (1, 0)`.
pub fn semigroup(lambda1: f64, theta: f64, a: f64, b: f64) -> Check {
    let d = validate_anisotropy(lambda1, 2.0 - lambda1, [1.0, 0.0], [theta.cos(), theta.sin()])
        .map_err(|e| e.to_string())?;
    let pa = matrix_power(&d, a).unwrap();
    let pb = matrix_power(&d, b).unwrap();
    let pab = matrix_power(&d, a * b).unwrap();
    let prod = mat_mul(&pa, &pb);
    let scale = max_abs_diff(&pab, &[[0.0; 2]; 2]).max(1.0);
    let err = max_abs_diff(&prod, &pab) / scale;
    if err > 1e-10 {
        return Err(format!(
            "semigroup defect {err:e} at lambda1={lambda1}, theta={theta}, a={a}, b={b}"
        ));
    }
    for (lam, e) in [(d.lambda1(), d.e1()), (d.lambda2(), d.e2())] {
        let v = [pa[0][0] * e[0] + pa[0][1] * e[1], pa[1][0] * e[0] + pa[1][1] * e[1]];
        let s = a.powf(lam);
        let err = ((v[0] - s * e[0]).abs() + (v[1] - s * e[1]).abs()) / s;
        if err > 1e-10 {
            return Err(format!("eigenvector action defect {err:e} at lambda={lam}, a={a}"));
        }
    }
    let det = pa[0][0] * pa[1][1] - pa[0][1] * pa[1][0];
    if (det / (a * a) - 1.0).abs() > 1e-10 {
        return Err(format!("det a^D = {det}, expected {}", a * a));
    }
    Ok(())
}

pub fn noise_field(n: usize, seed: u64) -> SampledField {
    let spec = FieldSpec::new(1.0, 0.5, n, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..n * n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    SampledField::new(n, values, spec).unwrap()
}

/// Inverse transform reproduces the field and the transform preserves energy.
pub fn reconstruction_and_energy(n: usize, seed: u64, filter: Filter, levels: (usize, usize)) -> Check {
    let f = noise_field(n, seed);
    let pyr = hyperbolic_transform(&f, filter, levels).map_err(|e| e.to_string())?;
    let back = inverse_transform(&pyr);
    let err = back
        .iter()
        .zip(&f.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if err >= 1e-9 {
        return Err(format!(
            "reconstruction error {err:e} (n={n}, {filter}, levels {levels:?})"
        ));
    }
    let e0: f64 = f.values.iter().map(|v| v * v).sum();
    let e1: f64 = pyr.coeffs.iter().map(|v| v * v).sum();
    if ((e1 - e0) / e0).abs() > 1e-9 {
        return Err(format!("energy {e1} vs {e0} (n={n}, {filter}, levels {levels:?})"));
    }
    Ok(())
}

/// Every block statistic is non-decreasing along p = 1, 2, 4, inf.
pub fn lp_monotone(n: usize, seed: u64, filter: Filter) -> Check {
    let f = noise_field(n, seed);
    let pyr = hyperbolic_transform(&f, filter, (3, 4)).unwrap();
    let orders = [Order::Finite(1.0), Order::Finite(2.0), Order::Finite(4.0), Order::Inf];
    let tables: Vec<_> = orders.iter().map(|&p| scale_statistics(&pyr, p)).collect();
    for k in 0..tables[0].blocks.len() {
        for w in tables.windows(2) {
            let (lo, hi) = (w[0].blocks[k].log2_stat.unwrap(), w[1].blocks[k].log2_stat.unwrap());
            if hi < lo - 1e-12 {
                return Err(format!(
                    "block {:?}: p={} gives {lo}, p={} gives {hi}",
                    (w[0].blocks[k].j1, w[0].blocks[k].j2),
                    w[0].p,
                    w[1].p
                ));
            }
        }
    }
    Ok(())
}

/// The tent rises up to `alpha0`, falls after it and peaks at `hurst`.
pub fn tent_unimodal(alpha0: f64, hurst: f64) -> Check {
    let grid: Vec<f64> = (1..400).map(|k| k as f64 * 0.005).collect();
    let vals: Vec<f64> = grid
        .iter()
        .map(|&a| tent_prediction(a, alpha0, hurst).unwrap())
        .collect();
    for k in 1..grid.len() {
        let rising = grid[k] <= alpha0;
        let falling = grid[k - 1] >= alpha0;
        if (rising && vals[k] < vals[k - 1]) || (falling && vals[k] > vals[k - 1]) {
            return Err(format!(
                "tent not unimodal near alpha = {} for alpha0 = {alpha0}",
                grid[k]
            ));
        }
    }
    let peak = tent_prediction(alpha0, alpha0, hurst).unwrap();
    if (peak - hurst).abs() > 1e-12 || vals.iter().any(|&v| v > peak + 1e-12) {
        return Err(format!("tent peak {peak} differs from hurst {hurst}"));
    }
    Ok(())
}

/// Constant fields yield zero increments: regression reports a degenerate
/// input, every wavelet block is empty and the ratio search has no ray.
pub fn constant_field_degenerate(n: usize, c: f64) -> Check {
    let spec = FieldSpec::new(1.0, 0.5, n, 0).unwrap();
    let f = SampledField::from_fn(n, spec, |_, _| c).unwrap();
    for dir in [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [2.0, -1.0]] {
        let lags = default_lags(n, dir).map_err(|e| e.to_string())?;
        let sf = structure_function(&f, dir, Order::Finite(2.0), &lags).map_err(|e| e.to_string())?;
        if sf.values.iter().any(|&v| v != 0.0) {
            return Err(format!("nonzero structure function along {dir:?}"));
        }
        match directional_exponent(&sf) {
            Err(Error::Degenerate(_)) => {}
            other => return Err(format!("expected a degenerate error along {dir:?}, got {other:?}")),
        }
    }
    let pyr = hyperbolic_transform(&f, Filter::D4, (4, 4)).unwrap();
    let stats = scale_statistics(&pyr, Order::Finite(2.0));
    if stats.blocks.iter().any(|b| b.log2_stat.is_some()) {
        return Err("constant field has a non-empty wavelet block".into());
    }
    if ratio_maximize(&stats).is_ok() {
        return Err("ratio search succeeded on an empty table".into());
    }
    Ok(())
}
