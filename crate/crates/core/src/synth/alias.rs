//! Aliased spectral density of the point-sampled field.
//!
//! Sampling at spacing `1/n` folds all frequencies `xi + 2 pi n m`, `m in Z^2`,
//! onto the base band. The folded density is
//! `F(xi) = sum_m f(xi + 2 pi n m)` with `f = rho^{-2(H+1)}`.
//! We sum `|m| <= M` explicitly and close the remaining tails in closed form.

use statrs::function::beta::{beta_reg, ln_beta};

/// Explicitly summed images per axis and side.
pub const IMAGES: i64 = 4;

/// Axis parameters for `f(xi) = (|xi_o|^{1/lo} + |xi_i|^{1/li})^{-gamma}`,
/// where the inner axis carries the larger eigenvalue (heavier tail).
#[derive(Debug, Clone, Copy)]
pub struct Folding {
    pub li: f64,
    pub lo: f64,
    pub hurst: f64,
    pub gamma: f64,
    /// Sampling frequency `2 pi n`.
    pub period: f64,
    /// `int f d xi_inner = cm |xi_o|^{-q}`.
    cm: f64,
    q: f64,
    /// `B(gamma - li, li)` for the inner tail integral.
    beta_inner: f64,
}

impl Folding {
    pub fn new(li: f64, lo: f64, hurst: f64, n: usize) -> Self {
        let gamma = 2.0 * (hurst + 1.0);
        Folding {
            li,
            lo,
            hurst,
            gamma,
            period: std::f64::consts::TAU * n as f64,
            cm: 2.0 * li * ln_beta(li, 2.0 * hurst + lo).exp(),
            q: 1.0 + 2.0 * hurst / lo,
            beta_inner: ln_beta(gamma - li, li).exp(),
        }
    }

    /// `int_U^inf (c + u^{1/li})^{-gamma} du` for `U > 0`.
    pub fn inner_tail(&self, c: f64, u: f64) -> f64 {
        let (li, g) = (self.li, self.gamma);
        if c == 0.0 {
            let p = g / li;
            return u.powf(1.0 - p) / (p - 1.0);
        }
        let v = u.powf(1.0 / li) / c;
        let t0 = 1.0 / (1.0 + v);
        li * c.powf(li - g) * beta_reg(g - li, li, t0) * self.beta_inner
    }

    /// Folded density along one outer frequency for every inner frequency.
    pub fn density_row(&self, xi_o: f64, inner: &[InnerColumn], out: &mut [f64]) {
        let m = IMAGES;
        let p = self.period;
        let cs: Vec<f64> = (-m..=m)
            .map(|mo| (xi_o + p * mo as f64).abs().powf(1.0 / self.lo))
            .collect();
        let s_hi = (m as f64 + 0.5) * p + xi_o;
        let s_lo = (m as f64 + 0.5) * p - xi_o;
        let outer_tail = self.cm / (self.q - 1.0) * (s_hi.powf(1.0 - self.q) + s_lo.powf(1.0 - self.q)) / (p * p);
        for (col, o) in inner.iter().zip(out.iter_mut()) {
            let mut acc = outer_tail;
            for &c in &cs {
                for &w in &col.pows {
                    let base = c + w;
                    if base > 0.0 {
                        acc += base.powf(-self.gamma);
                    }
                }
                acc += (self.inner_tail(c, col.u_hi) + self.inner_tail(c, col.u_lo)) / p;
            }
            *o = acc;
        }
    }

    pub fn column(&self, xi_i: f64) -> InnerColumn {
        let m = IMAGES;
        let p = self.period;
        InnerColumn {
            pows: (-m..=m)
                .map(|mi| (xi_i + p * mi as f64).abs().powf(1.0 / self.li))
                .collect(),
            u_hi: (m as f64 + 0.5) * p + xi_i,
            u_lo: (m as f64 + 0.5) * p - xi_i,
        }
    }
}

/// Precomputed inner-axis quantities for one inner frequency.
#[derive(Debug, Clone)]
pub struct InnerColumn {
    pows: Vec<f64>,
    u_hi: f64,
    u_lo: f64,
}
