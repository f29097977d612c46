//! (n, m, k)-linear prediction of α-stable sequences under the
//! covariation-orthogonality criterion, and the least-squares AR baseline.

use rayon::prelude::*;
use thiserror::Error;

use crate::linalg::{condition_number_1, least_squares, Lu, Matrix};
use crate::scalar::Scalar;
use crate::stable::StableParams;
use crate::traffic::TrafficMatrix;

/// Largest 1-norm condition number accepted for the coefficient system.
pub const MAX_CONDITION: f64 = 1e12;
/// Default relative ridge factor.
pub const DEFAULT_RIDGE: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PredictionError {
    #[error("invalid predictor spec: {0}")]
    InvalidSpec(String),
    #[error("need at least {needed} samples in the window, got {got}")]
    ShortHistory { needed: usize, got: usize },
    #[error("window ending at {t_end} does not fit in {len} intervals (n = {n})")]
    WindowOutOfRange { t_end: usize, n: usize, len: usize },
    #[error("singular coefficient system{}: condition number {condition:e}", cell_suffix(.cell_id))]
    SingularSystem { cell_id: Option<String>, condition: f64 },
}

fn cell_suffix(cell: &Option<String>) -> String {
    cell.as_ref().map(|c| format!(" for cell {c}")).unwrap_or_default()
}

/// `(n, m, k)` configuration plus the exponent used in the signed powers.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LinearPredictorSpec<T = f64> {
    /// Training window length.
    pub n: usize,
    /// Number of coefficients.
    pub m: usize,
    /// Forecast lag.
    pub k: usize,
    /// Exponent in `(1, 2]`.
    pub alpha: T,
    /// Ridge as a fraction of `trace(C)/m`.
    pub ridge: T,
}

impl<T: Scalar> LinearPredictorSpec<T> {
    pub fn new(n: usize, m: usize, k: usize, alpha: T) -> Result<Self, PredictionError> {
        let s = Self { n, m, k, alpha, ridge: T::lit(DEFAULT_RIDGE) };
        s.validate()?;
        Ok(s)
    }

    pub fn with_ridge(self, ridge: T) -> Result<Self, PredictionError> {
        let s = Self { ridge, ..self };
        s.validate()?;
        Ok(s)
    }

    pub fn with_alpha(self, alpha: T) -> Self {
        Self { alpha, ..self }
    }

    pub fn validate(&self) -> Result<(), PredictionError> {
        let bad = |msg: String| Err(PredictionError::InvalidSpec(msg));
        if self.m == 0 || self.m > self.n {
            return bad(format!("need 1 <= m <= n, got m = {}, n = {}", self.m, self.n));
        }
        if self.k == 0 {
            return bad("k must be >= 1".into());
        }
        if self.n < self.m + self.k {
            return bad(format!("need n >= m + k, got n = {}, m = {}, k = {}", self.n, self.m, self.k));
        }
        if !(self.alpha > T::one() && self.alpha <= T::lit(2.0)) {
            return bad(format!("alpha = {} outside (1, 2]", self.alpha));
        }
        if !(self.ridge >= T::zero()) || !self.ridge.is_finite() {
            return bad(format!("ridge = {} must be finite and >= 0", self.ridge));
        }
        Ok(())
    }

    /// Number of regression equations in a window.
    fn equations(&self) -> usize {
        self.n - self.k - self.m + 1
    }
}

impl Default for LinearPredictorSpec<f64> {
    fn default() -> Self {
        Self { n: 36, m: 10, k: 1, alpha: 2.0, ridge: DEFAULT_RIDGE }
    }
}

/// `|v|^p · sgn(v)`.
pub fn signed_power<T: Scalar>(v: T, p: T) -> T {
    if v == T::zero() {
        T::zero()
    } else {
        v.abs().powf(p) * v.sgn()
    }
}

/// Clamps a fitted exponent into the predictor's range `[1.01, 2]`.
pub fn effective_alpha<T: Scalar>(params: &StableParams<T>) -> T {
    params.alpha.max(T::lit(1.01)).min(T::lit(2.0))
}

fn window<'a, T: Scalar>(history: &'a [T], spec: &LinearPredictorSpec<T>) -> Result<&'a [T], PredictionError> {
    spec.validate()?;
    if history.len() < spec.n {
        return Err(PredictionError::ShortHistory { needed: spec.n, got: history.len() });
    }
    Ok(&history[history.len() - spec.n..])
}

/// Coefficients `a` solving `(C + r·I) a = c` on the last `n` samples.
///
/// With the window `w` and regression times `τ = m−1, …, n−k−1` (0-based),
/// `C[h][l] = Σ_τ w[τ−l]·w[τ−h]^<α−1>` and `c[h] = Σ_τ w[τ+k]·w[τ−h]^<α−1>`,
/// so that at α = 2 this is the least-squares normal system. The ridge is
/// `r = spec.ridge · trace(C)/m`.
pub fn fit_coefficients<T: Scalar>(history: &[T], spec: &LinearPredictorSpec<T>) -> Result<Vec<T>, PredictionError> {
    let w = window(history, spec)?;
    let m = spec.m;
    if w.iter().all(|&v| v == T::zero()) {
        return Ok(vec![T::zero(); m]);
    }
    let p = spec.alpha - T::one();
    let mut c_mat = Matrix::zeros(m, m);
    let mut rhs = vec![T::zero(); m];
    for tau in (m - 1)..(spec.n - spec.k) {
        for h in 0..m {
            let g = signed_power(w[tau - h], p);
            if g == T::zero() {
                continue;
            }
            for l in 0..m {
                c_mat[(h, l)] += w[tau - l] * g;
            }
            rhs[h] += w[tau + spec.k] * g;
        }
    }
    let ridge = spec.ridge * c_mat.trace() / T::from_usize_lossy(m);
    for d in 0..m {
        c_mat[(d, d)] += ridge;
    }
    let condition = condition_number_1(&c_mat);
    if !(condition <= T::lit(MAX_CONDITION)) {
        return Err(PredictionError::SingularSystem { cell_id: None, condition: condition.to_f64_lossy() });
    }
    let lu = Lu::new(&c_mat)
        .ok_or(PredictionError::SingularSystem { cell_id: None, condition: f64::INFINITY })?;
    Ok(lu.solve(&rhs))
}

/// `Σ_j a(j) w[n−j]`, the k-step-ahead value from the end of the window.
pub fn apply_coefficients<T: Scalar>(history: &[T], coefficients: &[T]) -> T {
    let n = history.len();
    coefficients.iter().enumerate().map(|(j, &a)| a * history[n - 1 - j]).sum()
}

/// Per-cell forecasts `x̃_α` plus the coefficients that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct CoarseForecast<T = f64> {
    pub values: Vec<T>,
    pub coefficients: Vec<Vec<T>>,
}

fn check_t_end<T: Scalar>(matrix: &TrafficMatrix<T>, t_end: usize, n: usize) -> Result<(), PredictionError> {
    if t_end < n || t_end > matrix.n_intervals() {
        return Err(PredictionError::WindowOutOfRange { t_end, n, len: matrix.n_intervals() });
    }
    Ok(())
}

fn per_cell<T: Scalar>(
    matrix: &TrafficMatrix<T>,
    t_end: usize,
    n: usize,
    fit: impl Fn(usize, &[T]) -> Result<Vec<T>, PredictionError> + Sync,
) -> Result<CoarseForecast<T>, PredictionError> {
    check_t_end(matrix, t_end, n)?;
    let results: Vec<Result<(T, Vec<T>), PredictionError>> = (0..matrix.n_cells())
        .into_par_iter()
        .map(|i| {
            let hist: Vec<T> = (t_end - n..t_end).map(|t| matrix.value(i, t)).collect();
            let a = fit(i, &hist).map_err(|e| match e {
                PredictionError::SingularSystem { condition, .. } => {
                    PredictionError::SingularSystem { cell_id: Some(matrix.cells()[i].cell_id.clone()), condition }
                }
                other => other,
            })?;
            Ok((apply_coefficients(&hist, &a), a))
        })
        .collect();
    let mut values = Vec::with_capacity(results.len());
    let mut coefficients = Vec::with_capacity(results.len());
    for r in results {
        let (v, a) = r?;
        values.push(v);
        coefficients.push(a);
    }
    Ok(CoarseForecast { values, coefficients })
}

/// Forecasts column `t_end − 1 + k` of every cell from columns
/// `[t_end − n, t_end)`, all cells sharing `spec.alpha`.
pub fn forecast<T: Scalar>(
    matrix: &TrafficMatrix<T>,
    t_end: usize,
    spec: &LinearPredictorSpec<T>,
) -> Result<CoarseForecast<T>, PredictionError> {
    spec.validate()?;
    per_cell(matrix, t_end, spec.n, |_, h| fit_coefficients(h, spec))
}

/// As [`forecast`], with one exponent per cell.
pub fn forecast_with_alphas<T: Scalar>(
    matrix: &TrafficMatrix<T>,
    t_end: usize,
    spec: &LinearPredictorSpec<T>,
    alphas: &[T],
) -> Result<CoarseForecast<T>, PredictionError> {
    spec.validate()?;
    if alphas.len() != matrix.n_cells() {
        return Err(PredictionError::InvalidSpec(format!(
            "{} alphas for {} cells",
            alphas.len(),
            matrix.n_cells()
        )));
    }
    per_cell(matrix, t_end, spec.n, |i, h| fit_coefficients(h, &spec.with_alpha(alphas[i])))
}

/// Least-squares AR(m) coefficients for a k-step-ahead target, from a
/// Householder QR of the (ridge-augmented) regression matrix.
pub fn ls_ar_coefficients<T: Scalar>(history: &[T], spec: &LinearPredictorSpec<T>) -> Result<Vec<T>, PredictionError> {
    let w = window(history, spec)?;
    let m = spec.m;
    if w.iter().all(|&v| v == T::zero()) {
        return Ok(vec![T::zero(); m]);
    }
    let rows = spec.equations();
    let taus: Vec<usize> = ((m - 1)..(spec.n - spec.k)).collect();
    let x = Matrix::from_fn(rows, m, |r, l| w[taus[r] - l]);
    let y: Vec<T> = taus.iter().map(|&t| w[t + spec.k]).collect();
    let ridge = spec.ridge * x.as_slice().iter().map(|&v| v * v).sum::<T>() / T::from_usize_lossy(m);
    let (a, b) = if ridge > T::zero() {
        let s = ridge.sqrt();
        let aug = Matrix::from_fn(rows + m, m, |r, l| {
            if r < rows {
                x[(r, l)]
            } else if r - rows == l {
                s
            } else {
                T::zero()
            }
        });
        let mut rhs = y.clone();
        rhs.extend(std::iter::repeat(T::zero()).take(m));
        (aug, rhs)
    } else {
        (x, y)
    };
    least_squares(&a, &b).ok_or(PredictionError::SingularSystem { cell_id: None, condition: f64::INFINITY })
}

/// Per-cell least-squares AR forecasts (the α = 2 baseline).
pub fn ls_ar_forecast<T: Scalar>(
    matrix: &TrafficMatrix<T>,
    t_end: usize,
    spec: &LinearPredictorSpec<T>,
) -> Result<CoarseForecast<T>, PredictionError> {
    spec.validate()?;
    per_cell(matrix, t_end, spec.n, |_, h| ls_ar_coefficients(h, spec))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n: usize, m: usize, k: usize, alpha: f64) -> LinearPredictorSpec<f64> {
        LinearPredictorSpec::new(n, m, k, alpha).unwrap()
    }

    #[test]
    fn signed_power_examples() {
        assert_eq!(signed_power(-4.0, 1.0), -4.0);
        assert_eq!(signed_power(0.0, 0.3), 0.0);
        assert!((signed_power(-8.0f64, 2.0 / 3.0) + 4.0).abs() < 1e-12);
        assert_eq!(signed_power(0.0, 0.0), 0.0);
    }

    #[test]
    fn effective_alpha_clamps() {
        let p = |a| StableParams { alpha: a, beta: 1.0, sigma: 1.0, mu: 0.0 };
        assert_eq!(effective_alpha(&p(0.51)), 1.01);
        assert_eq!(effective_alpha(&p(1.61)), 1.61);
        assert_eq!(effective_alpha(&p(2.0)), 2.0);
    }

    #[test]
    fn spec_validation() {
        assert!(LinearPredictorSpec::new(36, 10, 1, 1.5).is_ok());
        assert!(LinearPredictorSpec::new(36, 0, 1, 1.5).is_err());
        assert!(LinearPredictorSpec::new(36, 10, 0, 1.5).is_err());
        assert!(LinearPredictorSpec::new(10, 10, 1, 1.5).is_err());
        assert!(LinearPredictorSpec::new(36, 10, 1, 1.0).is_err());
        assert!(LinearPredictorSpec::new(36, 10, 1, 2.5).is_err());
        assert!(spec(36, 10, 1, 2.0).with_ridge(-1.0).is_err());
    }

    #[test]
    fn recovers_ar1_coefficient() {
        let h: Vec<f64> = (0..40).map(|t| 1000.0 * 0.5f64.powi(t)).collect();
        let s = spec(36, 1, 1, 2.0).with_ridge(0.0).unwrap();
        let a = fit_coefficients(&h, &s).unwrap();
        assert!((a[0] - 0.5).abs() < 1e-8);
        assert!((apply_coefficients(&h, &a) - 0.5 * h[39]).abs() < 1e-6 * h[39]);
    }

    #[test]
    fn constant_history_forecasts_constant() {
        let h = vec![42.0; 36];
        for alpha in [1.2, 1.6, 2.0] {
            let s = spec(36, 10, 1, alpha);
            let a = fit_coefficients(&h, &s).unwrap();
            assert!((apply_coefficients(&h, &a) - 42.0).abs() < 1e-4);
        }
    }

    #[test]
    fn zero_window_forecasts_zero() {
        let a = fit_coefficients(&[0.0; 36], &spec(36, 10, 1, 1.5)).unwrap();
        assert_eq!(a, vec![0.0; 10]);
    }

    #[test]
    fn unregularized_rank_deficiency_is_reported() {
        let h = vec![3.0; 36];
        let s = spec(36, 4, 1, 2.0).with_ridge(0.0).unwrap();
        assert!(matches!(fit_coefficients(&h, &s), Err(PredictionError::SingularSystem { .. })));
    }

    #[test]
    fn only_the_last_n_samples_matter() {
        let h: Vec<f64> = (0..60).map(|t| ((t * 7) % 11) as f64 + 1.0).collect();
        let s = spec(30, 5, 2, 1.7);
        assert_eq!(fit_coefficients(&h, &s).unwrap(), fit_coefficients(&h[30..], &s).unwrap());
    }

    #[test]
    fn f32_prediction_runs() {
        let h: Vec<f32> = (0..36).map(|t| 10.0 + (t as f32 * 0.7).sin()).collect();
        let s = LinearPredictorSpec::<f32>::new(36, 4, 1, 1.5).unwrap();
        let a = fit_coefficients(&h, &s).unwrap();
        assert!(apply_coefficients(&h, &a).is_finite());
    }
}
