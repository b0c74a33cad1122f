//! `E0`-homogeneous spectral gauges and the admissibility checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::anisotropy::{mat_vec, Anisotropy, RhoKind};
use crate::error::{Error, Result};
use crate::quad::Rule;

/// A continuous positive function with `rho(a^{E0^T} xi) = a rho(xi)`.
///
/// `anisotropy` is the tag the function claims to be homogeneous for; it is
/// kept separate from the kind parameters so that mis-tagged gauges can be
/// detected by [`check_homogeneity`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogeneousFunction {
    pub kind: GaugeKind,
    pub anisotropy: Anisotropy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GaugeKind {
    /// `|xi1|^{1/alpha0} + |xi2|^{1/(2-alpha0)}`.
    PowerSum { alpha0: f64 },
}

impl GaugeKind {
    pub fn id(&self) -> RhoKind {
        match self {
            GaugeKind::PowerSum { .. } => RhoKind::PowerSum,
        }
    }
}

/// The power-sum gauge tagged with `E0 = diag(alpha0, 2 - alpha0)`.
pub fn rho_power_sum(alpha0: f64) -> Result<HomogeneousFunction> {
    if !(alpha0 > 0.0 && alpha0 < 2.0) {
        return Err(Error::Domain(format!("alpha0 = {alpha0} outside (0, 2)")));
    }
    Ok(HomogeneousFunction {
        kind: GaugeKind::PowerSum { alpha0 },
        anisotropy: Anisotropy::diagonal(alpha0)?,
    })
}

impl HomogeneousFunction {
    /// Looks up the gauge a field spec refers to.
    pub fn for_spec(spec: &crate::FieldSpec) -> Result<Self> {
        match spec.rho {
            RhoKind::PowerSum => rho_power_sum(spec.alpha0()),
        }
    }

    #[inline]
    pub fn eval(&self, xi: [f64; 2]) -> f64 {
        match self.kind {
            GaugeKind::PowerSum { alpha0 } => xi[0].abs().powf(1.0 / alpha0) + xi[1].abs().powf(1.0 / (2.0 - alpha0)),
        }
    }
}

/// Pointwise value of the gauge; zero exactly at the origin.
pub fn evaluate(rho: &HomogeneousFunction, xi: [f64; 2]) -> f64 {
    rho.eval(xi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HomogeneityReport {
    pub max_relative_error: f64,
}

/// Largest relative defect of `rho(a^{E^T} xi) = a rho(xi)` over `trials`
/// pseudo-random pairs with `a` log-uniform on `[0.01, 100]` and `xi` on the
/// unit circle. A single trial uses `a = 1`.
pub fn check_homogeneity(rho: &HomogeneousFunction, trials: usize) -> Result<HomogeneityReport> {
    if trials == 0 {
        return Err(Error::Domain("trials must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x686f_6d6f);
    let mut worst: f64 = 0.0;
    for t in 0..trials {
        let a = if trials == 1 {
            1.0
        } else if t == 0 {
            4.0
        } else {
            (rng.random_range(0.01f64.ln()..100f64.ln())).exp()
        };
        let th = if t == 0 {
            0.0
        } else {
            rng.random_range(0.0..std::f64::consts::TAU)
        };
        let xi = [th.cos(), th.sin()];
        let m = rho.anisotropy.transpose_power(a)?;
        let lhs = rho.eval(mat_vec(&m, xi));
        let rhs = a * rho.eval(xi);
        worst = worst.max((lhs - rhs).abs() / rhs);
    }
    Ok(HomogeneityReport {
        max_relative_error: worst,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegrabilityReport {
    pub finite: bool,
    /// Shell sum plus geometric tail extrapolation; infinite when divergent.
    pub estimate: f64,
    /// Ratio of consecutive innermost shell contributions.
    pub inner_ratio: f64,
}

/// Decay threshold on consecutive shell ratios. Near the admissibility
/// boundary the inner ratio tends to `2^{-2(min lambda - H)}`, which is
/// 0.986 at `H = 0.99`, `lambda = 1`; anything visibly below 1 is convergent.
pub const SHELL_RATIO_THRESHOLD: f64 = 0.999;
const INNER_SHELLS: i32 = 40;
const OUTER_RADIUS: f64 = 1e4;

/// Numerically evaluates `int min(1, |xi|^2) rho(xi)^{-2(H+1)} dxi` over dyadic
/// shells `{2^k <= rho < 2^{k+1}}` and decides convergence from the decay of
/// the innermost shells.
///
/// Shells are parameterized by `xi1 = (s w)^{lambda1}`, `xi2 = (s (1-w))^{lambda2}`
/// so that `rho = s`; the Jacobian is `lambda1 lambda2 s w^{lambda1-1} (1-w)^{lambda2-1}`.
pub fn check_integrability(rho: &HomogeneousFunction, hurst: f64) -> Result<IntegrabilityReport> {
    if !(hurst > 0.0) {
        return Err(Error::Domain(format!("hurst = {hurst} must be positive")));
    }
    let GaugeKind::PowerSum { alpha0 } = rho.kind;
    let (l1, l2) = (alpha0, 2.0 - alpha0);
    let gamma = 2.0 * (hurst + 1.0);
    let rs = Rule::new(16);
    let rw = Rule::new(24);

    // Angular integral at radius s. The endpoint singularities w^{l1-1} and
    // (1-w)^{l2-1} are removed by w = v^{1/l1} and 1-w = v^{1/l2}.
    let angular = |s: f64| -> f64 {
        let body = |w: f64| {
            let x1 = (s * w).powf(l1);
            let x2 = (s * (1.0 - w)).powf(l2);
            (x1 * x1 + x2 * x2).min(1.0)
        };
        let left = rw.integrate(0.0, 0.5f64.powf(l1), |v| {
            let w = v.powf(1.0 / l1);
            body(w) * (1.0 - w).powf(l2 - 1.0) / l1
        });
        let right = rw.integrate(0.0, 0.5f64.powf(l2), |v| {
            let w = 1.0 - v.powf(1.0 / l2);
            body(w) * w.powf(l1 - 1.0) / l2
        });
        l1 * l2 * (left + right)
    };
    // Four quadrants by symmetry.
    let shell = |k: i32| -> f64 {
        let (a, b) = (2f64.powi(k), 2f64.powi(k + 1));
        4.0 * rs.integrate(a, b, |s| s * s.powf(-gamma) * angular(s))
    };

    let inner: Vec<f64> = (1..=INNER_SHELLS).map(|k| shell(-k)).collect();
    let top = OUTER_RADIUS.log2().ceil() as i32;
    let outer: Vec<f64> = (0..top).map(shell).collect();

    let ratios: Vec<f64> = inner.windows(2).map(|w| w[1] / w[0]).collect();
    let last = &ratios[ratios.len() - 5..];
    let inner_ratio = *last.last().unwrap();
    let finite = last.iter().all(|r| r.is_finite() && *r < SHELL_RATIO_THRESHOLD);
    let estimate = if finite {
        let q = inner_ratio;
        let tail_in = inner.last().unwrap() * q / (1.0 - q);
        let qo = outer[outer.len() - 1] / outer[outer.len() - 2];
        let tail_out = outer.last().unwrap() * qo / (1.0 - qo);
        inner.iter().sum::<f64>() + outer.iter().sum::<f64>() + tail_in + tail_out
    } else {
        f64::INFINITY
    };
    Ok(IntegrabilityReport {
        finite,
        estimate,
        inner_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluation_examples() {
        let r1 = rho_power_sum(1.0).unwrap();
        assert_eq!(evaluate(&r1, [1.0, 1.0]), 2.0);
        let r = rho_power_sum(0.6).unwrap();
        assert!((evaluate(&r, [2f64.powf(0.6), 2f64.powf(1.4)]) - 4.0).abs() < 1e-12);
        assert_eq!(evaluate(&r, [0.0, 0.0]), 0.0);
        assert_eq!(evaluate(&r, [1.0, 0.0]), 1.0);
        assert_eq!(evaluate(&r, [0.0, 1.0]), 1.0);
        assert_eq!(evaluate(&rho_power_sum(0.5).unwrap(), [4.0, 0.0]), 16.0);
        assert!(rho_power_sum(2.0).is_err());
        assert!(rho_power_sum(0.0).is_err());
    }

    #[test]
    fn homogeneity() {
        for a0 in [0.3, 0.6, 1.0, 1.5] {
            let r = check_homogeneity(&rho_power_sum(a0).unwrap(), 1000).unwrap();
            assert!(r.max_relative_error <= 1e-10, "{a0}: {r:?}");
        }
        let single = check_homogeneity(&rho_power_sum(1.0).unwrap(), 1).unwrap();
        assert_eq!(single.max_relative_error, 0.0);
        assert!(check_homogeneity(&rho_power_sum(1.0).unwrap(), 0).is_err());
    }

    #[test]
    fn mistagged_gauge_is_detected() {
        let mut r = rho_power_sum(0.6).unwrap();
        r.anisotropy = Anisotropy::diagonal(1.0).unwrap();
        // a = 4, xi = (1, 0): 4^{1/0.6} = 10.08 against 4.
        let rep = check_homogeneity(&r, 1000).unwrap();
        assert!(rep.max_relative_error > 0.1);
        assert!(rep.max_relative_error >= 10.079368399158986 / 4.0 - 1.0 - 1e-12);
    }

    #[test]
    fn isotropic_gauge_is_degree_one() {
        let r = rho_power_sum(1.0).unwrap();
        for (c, xi) in [(3.0, [0.25, -1.5]), (0.125, [2.0, 8.0])] {
            assert_eq!(r.eval([c * xi[0], c * xi[1]]), c * r.eval(xi));
        }
    }

    #[test]
    fn strictly_positive_on_circle() {
        for a0 in [0.3, 1.0, 1.7] {
            let r = rho_power_sum(a0).unwrap();
            let m = (0..10_000)
                .map(|k| {
                    let t = k as f64 * std::f64::consts::TAU / 10_000.0;
                    r.eval([t.cos(), t.sin()])
                })
                .fold(f64::INFINITY, f64::min);
            assert!(m > 0.0);
        }
    }

    #[test]
    fn integrability_examples() {
        let r = rho_power_sum(0.6).unwrap();
        assert!(check_integrability(&r, 0.4).unwrap().finite);
        assert!(!check_integrability(&r, 0.7).unwrap().finite);
        let r1 = rho_power_sum(1.0).unwrap();
        assert!(check_integrability(&r1, 0.99).unwrap().finite);
    }
}
