//! Shared domain types and anisotropic linear algebra.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major 2x2 matrix.
pub type Mat2 = [[f64; 2]; 2];

const NORM_TOL: f64 = 1e-12;
const DET_TOL: f64 = 1e-9;

/// A diagonalizable 2x2 matrix with positive eigenvalues and trace 2,
/// stored through its eigenpairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anisotropy {
    lambda1: f64,
    lambda2: f64,
    e1: [f64; 2],
    e2: [f64; 2],
}

/// Checks every invariant of [`Anisotropy`] and reports all violations at once.
pub fn validate_anisotropy(lambda1: f64, lambda2: f64, e1: [f64; 2], e2: [f64; 2]) -> Result<Anisotropy> {
    let mut problems = Vec::new();
    let all = [lambda1, lambda2, e1[0], e1[1], e2[0], e2[1]];
    if all.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidAnisotropy(vec!["non-finite component".into()]));
    }
    let trace = lambda1 + lambda2;
    if (trace - 2.0).abs() > NORM_TOL {
        problems.push(format!("trace = {trace} != 2"));
    }
    if lambda1 <= 0.0 {
        problems.push(format!("lambda1 = {lambda1} is not positive"));
    }
    if lambda2 <= 0.0 {
        problems.push(format!("lambda2 = {lambda2} is not positive"));
    }
    for (name, e) in [("e1", e1), ("e2", e2)] {
        let norm = e[0].hypot(e[1]);
        if (norm - 1.0).abs() > NORM_TOL {
            problems.push(format!("{name} has norm {norm} != 1"));
        }
    }
    let det = e1[0] * e2[1] - e1[1] * e2[0];
    if det.abs() <= DET_TOL {
        problems.push(format!("eigenvectors are collinear (det = {det:e})"));
    }
    if problems.is_empty() {
        Ok(Anisotropy {
            lambda1,
            lambda2,
            e1,
            e2,
        })
    } else {
        Err(Error::InvalidAnisotropy(problems))
    }
}

impl Anisotropy {
    /// `diag(alpha, 2 - alpha)` in the canonical basis.
    pub fn diagonal(alpha: f64) -> Result<Self> {
        validate_anisotropy(alpha, 2.0 - alpha, [1.0, 0.0], [0.0, 1.0])
    }

    /// Rescales arbitrary positive eigenvalues to trace 2 and normalizes the
    /// eigenvectors. Any `c * D` with `c > 0` maps to the same anisotropy.
    pub fn normalized(lambda1: f64, lambda2: f64, e1: [f64; 2], e2: [f64; 2]) -> Result<Self> {
        let s = lambda1 + lambda2;
        if !(s > 0.0) {
            return Err(Error::Domain(format!("eigenvalue sum {s} must be positive")));
        }
        let unit = |e: [f64; 2]| {
            let r = e[0].hypot(e[1]);
            [e[0] / r, e[1] / r]
        };
        let l1 = 2.0 * lambda1 / s;
        validate_anisotropy(l1, 2.0 - l1, unit(e1), unit(e2))
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    pub fn lambda2(&self) -> f64 {
        self.lambda2
    }

    pub fn e1(&self) -> [f64; 2] {
        self.e1
    }

    pub fn e2(&self) -> [f64; 2] {
        self.e2
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.lambda1.min(self.lambda2)
    }

    pub fn is_axis_aligned(&self) -> bool {
        self.e1 == [1.0, 0.0] && self.e2 == [0.0, 1.0]
    }

    /// The matrix `P diag(lambda1, lambda2) P^-1`.
    pub fn matrix(&self) -> Mat2 {
        conjugate(self, self.lambda1, self.lambda2)
    }

    /// The transpose of [`matrix_power`], used when the exponent acts on frequencies.
    pub fn transpose_power(&self, a: f64) -> Result<Mat2> {
        let m = matrix_power(self, a)?;
        Ok([[m[0][0], m[1][0]], [m[0][1], m[1][1]]])
    }
}

fn conjugate(d: &Anisotropy, v1: f64, v2: f64) -> Mat2 {
    let [p00, p10] = d.e1;
    let [p01, p11] = d.e2;
    let det = p00 * p11 - p01 * p10;
    let inv = [[p11 / det, -p01 / det], [-p10 / det, p00 / det]];
    let pd = [[p00 * v1, p01 * v2], [p10 * v1, p11 * v2]];
    mat_mul(&pd, &inv)
}

/// `a^D = P diag(a^lambda1, a^lambda2) P^-1`, the exact matrix exponential `exp(D ln a)`.
pub fn matrix_power(d: &Anisotropy, a: f64) -> Result<Mat2> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::Domain(format!("matrix_power needs a > 0, got {a}")));
    }
    Ok(conjugate(d, a.powf(d.lambda1), a.powf(d.lambda2)))
}

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn mat_vec(a: &Mat2, x: [f64; 2]) -> [f64; 2] {
    [a[0][0] * x[0] + a[0][1] * x[1], a[1][0] * x[0] + a[1][1] * x[1]]
}

pub fn det(a: &Mat2) -> f64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

/// Identifier of the homogeneous gauge used by a field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhoKind {
    PowerSum,
}

/// Full generative description of an OSGRF realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub anisotropy: Anisotropy,
    pub hurst: f64,
    pub rho: RhoKind,
    pub grid_n: usize,
    pub seed: u64,
}

impl FieldSpec {
    /// Field anisotropy `diag(alpha0, 2 - alpha0)` with the power-sum gauge.
    pub fn new(alpha0: f64, hurst: f64, grid_n: usize, seed: u64) -> Result<Self> {
        if !(alpha0 > 0.0 && alpha0 < 2.0) {
            return Err(Error::Domain(format!("alpha0 = {alpha0} outside (0, 2)")));
        }
        let spec = FieldSpec {
            anisotropy: Anisotropy::diagonal(alpha0)?,
            hurst,
            rho: RhoKind::PowerSum,
            grid_n,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let a = &self.anisotropy;
        validate_anisotropy(a.lambda1, a.lambda2, a.e1, a.e2)?;
        if !a.is_axis_aligned() {
            return Err(Error::Domain(
                "field anisotropy must be diagonal in the canonical basis".into(),
            ));
        }
        let bound = a.min_eigenvalue();
        if !(self.hurst > 0.0 && self.hurst < bound) {
            return Err(Error::Inadmissible {
                hurst: self.hurst,
                bound,
                lambda1: a.lambda1,
                lambda2: a.lambda2,
            });
        }
        if self.grid_n < 64 || !self.grid_n.is_power_of_two() {
            return Err(Error::Domain(format!(
                "grid_n = {} must be a power of two >= 64",
                self.grid_n
            )));
        }
        Ok(())
    }

    pub fn alpha0(&self) -> f64 {
        self.anisotropy.lambda1
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        FieldSpec { seed, ..self.clone() }
    }
}

/// An `n x n` grid sampled at `x = (i/n, j/n)`, row-major in `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    pub n: usize,
    pub values: Vec<f64>,
    pub spec: FieldSpec,
}

impl SampledField {
    pub fn new(n: usize, values: Vec<f64>, spec: FieldSpec) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::Domain(format!(
                "expected {} values, got {}",
                n * n,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("field contains non-finite values".into()));
        }
        Ok(SampledField { n, values, spec })
    }

    /// Builds a field from a function of the sample position; handy for tests.
    pub fn from_fn(n: usize, spec: FieldSpec, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let h = 1.0 / n as f64;
        let values = (0..n * n).map(|k| f((k / n) as f64 * h, (k % n) as f64 * h)).collect();
        Self::new(n, values, spec)
    }

    /// Same grid and provenance with new samples.
    pub fn with_values(&self, values: Vec<f64>) -> SampledField {
        assert_eq!(values.len(), self.n * self.n, "sample count must match the grid");
        SampledField {
            n: self.n,
            values,
            spec: self.spec.clone(),
        }
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn transposed(&self) -> SampledField {
        let n = self.n;
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                values[j * n + i] = self.values[i * n + j];
            }
        }
        SampledField {
            n,
            values,
            spec: self.spec.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &Mat2, b: &Mat2, tol: f64) -> bool {
        (0..2).all(|i| (0..2).all(|j| (a[i][j] - b[i][j]).abs() <= tol))
    }

    #[test]
    fn power_at_one_is_identity() {
        let d = validate_anisotropy(0.7, 1.3, [1.0, 0.0], [0.6, 0.8]).unwrap();
        assert!(close(&matrix_power(&d, 1.0).unwrap(), &[[1.0, 0.0], [0.0, 1.0]], 1e-14));
    }

    #[test]
    fn diagonal_power() {
        let d = Anisotropy::diagonal(0.6).unwrap();
        let m = matrix_power(&d, 4.0).unwrap();
        assert!((m[0][0] - 2.297_396_709_994_07).abs() < 1e-12);
        assert!((m[1][1] - 6.964_404_506_368_992).abs() < 1e-12);
        assert_eq!(m[0][1], 0.0);
        let six = mat_mul(&matrix_power(&d, 2.0).unwrap(), &matrix_power(&d, 3.0).unwrap());
        assert!(close(&six, &matrix_power(&d, 6.0).unwrap(), 1e-12));
    }

    #[test]
    fn nonpositive_scale_rejected() {
        let d = Anisotropy::diagonal(1.0).unwrap();
        assert!(matches!(matrix_power(&d, 0.0), Err(Error::Domain(_))));
        assert!(matches!(matrix_power(&d, -2.0), Err(Error::Domain(_))));
    }

    #[test]
    fn validation_reports_every_problem() {
        assert!(validate_anisotropy(1.0, 1.0, [1.0, 0.0], [0.0, 1.0]).is_ok());
        assert!(validate_anisotropy(0.6, 1.4, [1.0, 0.0], [0.0, 1.0]).is_ok());
        let Err(Error::InvalidAnisotropy(p)) = validate_anisotropy(0.5, 1.0, [1.0, 0.0], [0.0, 1.0]) else {
            panic!("trace 1.5 accepted")
        };
        assert_eq!(p.len(), 1);
        assert!(p[0].contains("trace = 1.5"));
        let Err(Error::InvalidAnisotropy(p)) = validate_anisotropy(-1.0, 3.0, [1.0, 0.0], [2.0, 0.0]) else {
            panic!()
        };
        assert_eq!(p.len(), 3);
    }

    #[test]
    fn normalized_absorbs_scale() {
        let a = Anisotropy::normalized(3.0, 7.0, [2.0, 0.0], [0.0, 5.0]).unwrap();
        assert!((a.lambda1() - 0.6).abs() < 1e-15);
        assert_eq!(a.e1(), [1.0, 0.0]);
    }

    #[test]
    fn field_spec_admissibility() {
        assert!(FieldSpec::new(0.6, 0.4, 256, 1).is_ok());
        let err = FieldSpec::new(0.6, 0.7, 256, 1).unwrap_err();
        assert!(err.to_string().contains("(0, 0.6)"), "{err}");
        assert!(FieldSpec::new(0.6, 0.4, 100, 1).is_err());
        assert!(FieldSpec::new(0.6, 0.4, 32, 1).is_err());
    }

    #[test]
    fn spec_json_round_trip_rejects_unknown_keys() {
        let s = FieldSpec::new(1.2, 0.5, 128, 9).unwrap();
        let txt = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<FieldSpec>(&txt).unwrap(), s);
        let bad = txt.replacen('{', "{\"extra\":1,", 1);
        assert!(serde_json::from_str::<FieldSpec>(&bad).is_err());
    }
}
