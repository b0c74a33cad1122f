//! Monte-Carlo second-order statistics of synthesized fields.
//!
//! Increments are stationary, so `E X(x)^2 = E (X(y + x) - X(y))^2` for every
//! `y`. Averaging the right-hand side over all translations inside the window
//! gives a far less noisy estimate than the pointwise sample variance.

use serde::Serialize;

use crate::anisotropy::{mat_vec, matrix_power, FieldSpec, SampledField};
use crate::error::{Error, Result};
use crate::stats::mean;

use super::map_realizations;

/// Mean of `(X(y + d) - X(y))^2` over all `y` with both points in the window.
pub fn pooled_increment_variance(field: &SampledField, d: (usize, usize)) -> f64 {
    let n = field.n;
    let (di, dj) = d;
    if di >= n || dj >= n {
        return f64::NAN;
    }
    let mut acc = 0.0;
    for i in 0..n - di {
        let a = &field.values[i * n..i * n + n - dj];
        let b = &field.values[(i + di) * n + dj..(i + di) * n + n];
        acc += a.iter().zip(b).map(|(x, y)| (y - x) * (y - x)).sum::<f64>();
    }
    acc / ((n - di) * (n - dj)) as f64
}

/// Nearest lattice offset of a point of `[0, 1)^2`.
pub fn lattice_offset(x: [f64; 2], n: usize) -> Result<(usize, usize)> {
    let snap = |v: f64| -> Result<usize> {
        let k = (v * n as f64).round();
        if !(v >= 0.0 && k < n as f64) {
            return Err(Error::Domain(format!(
                "point coordinate {v} outside the sampled window [0, 1)"
            )));
        }
        Ok(k as usize)
    };
    Ok((snap(x[0])?, snap(x[1])?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingCheck {
    /// `Var X(a^E x) / Var X(x)`.
    pub ratio: f64,
    /// 95% half-width from the delta method over realizations.
    pub ci_halfwidth: f64,
    /// `a^{2H}`.
    pub target: f64,
}

/// Estimates `Var X(a^{E0} x) / Var X(x)` over `reps` realizations with seeds
/// `spec.seed ..`. Both points are snapped to the lattice.
pub fn monte_carlo_scaling_check(spec: &FieldSpec, a: f64, x: [f64; 2], reps: usize) -> Result<ScalingCheck> {
    if reps < 50 {
        return Err(Error::Domain(format!("reps = {reps} must be at least 50")));
    }
    let m = matrix_power(&spec.anisotropy, a)?;
    let d0 = lattice_offset(x, spec.grid_n)?;
    let d1 = lattice_offset(mat_vec(&m, x), spec.grid_n)?;
    let target = a.powf(2.0 * spec.hurst);
    let pairs = map_realizations(spec, reps, |f| {
        (pooled_increment_variance(f, d0), pooled_increment_variance(f, d1))
    })?;
    let v0: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let v1: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let (m0, m1) = (mean(&v0), mean(&v1));
    if !(m0 > 0.0) {
        return Err(Error::Degenerate("zero variance at the reference point".into()));
    }
    let ratio = m1 / m0;
    let r = reps as f64;
    let resid: Vec<f64> = v1.iter().zip(&v0).map(|(b, a)| b - ratio * a).collect();
    let var = resid.iter().map(|e| e * e).sum::<f64>() / (r - 1.0) / r / (m0 * m0);
    Ok(ScalingCheck {
        ratio,
        ci_halfwidth: 1.96 * var.sqrt(),
        target,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pooled_variance_of_linear_field() {
        let spec = FieldSpec::new(1.0, 0.5, 64, 0).unwrap();
        let f = SampledField::from_fn(64, spec, |x, y| 2.0 * x + y).unwrap();
        let v = pooled_increment_variance(&f, (3, 5));
        let expect = (2.0 * 3.0 / 64.0 + 5.0 / 64.0f64).powi(2);
        assert!((v - expect).abs() < 1e-14);
    }

    #[test]
    fn unit_scale_gives_unit_ratio() {
        let spec = FieldSpec::new(0.6, 0.4, 64, 3).unwrap();
        let r = monte_carlo_scaling_check(&spec, 1.0, [0.2, 0.1], 50).unwrap();
        assert_eq!(r.ratio, 1.0);
        assert!(monte_carlo_scaling_check(&spec, 2.0, [0.9, 0.9], 50).is_err());
        assert!(monte_carlo_scaling_check(&spec, 2.0, [0.2, 0.1], 10).is_err());
    }
}
