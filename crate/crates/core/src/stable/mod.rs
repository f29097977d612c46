//! α-stable laws: characteristic function, sampling, parameter estimation and
//! goodness-of-fit diagnostics.
//!
//! Parameterization throughout is the one with characteristic function
//!
//! ```text
//! Φ(ω) = exp{ −σ^α |ω|^α (1 − jβ sgn(ω) tan(πα/2)) + jμω }        α ≠ 1
//! Φ(ω) = exp{ −σ |ω| (1 + j(2β/π) sgn(ω) ln|ω|) + jμω }            α = 1
//! ```

mod cf;
mod density;
mod ks;
mod quantile;
mod sample;

use thiserror::Error;

use crate::scalar::Scalar;

pub use cf::{
    characteristic_function, default_omega_grid, empirical_cf, estimate_ecf, fit_psi_line,
    psi_linearity_error, LineFit,
};
pub use density::{cdf, normalized_cdf, normalized_pdf, pdf, NonNegativeStable};
pub use ks::{ks_test, ks_threshold_95, KsResult, KS_COEFFICIENT_95};
pub use quantile::{estimate_quantile, QuantileEstimate, QUANTILE_ALPHA_MIN};
pub use sample::{sample, sample_with_rng, StableSampler};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StableError {
    #[error("invalid stable parameters: {0}")]
    InvalidParams(String),
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("degenerate sample: quantile spread is zero")]
    DegenerateSample,
    #[error("ill-conditioned empirical characteristic function at omega = {omega}")]
    IllConditioned { omega: f64 },
    #[error("invalid omega grid: {0}")]
    InvalidGrid(String),
}

/// The four α-stable parameters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StableParams<T = f64> {
    /// Characteristic exponent, `0 < α ≤ 2`.
    pub alpha: T,
    /// Skewness, `−1 ≤ β ≤ 1`.
    pub beta: T,
    /// Scale, `σ ≥ 0`.
    pub sigma: T,
    /// Shift.
    pub mu: T,
}

impl<T: Scalar> StableParams<T> {
    pub fn new(alpha: T, beta: T, sigma: T, mu: T) -> Result<Self, StableError> {
        let p = Self { alpha, beta, sigma, mu };
        p.validate()?;
        Ok(p)
    }

    /// Gaussian with the given mean and variance (`σ = sd / √2`).
    pub fn gaussian(mean: T, variance: T) -> Self {
        Self { alpha: T::lit(2.0), beta: T::zero(), sigma: (variance / T::lit(2.0)).sqrt(), mu: mean }
    }

    pub fn validate(&self) -> Result<(), StableError> {
        let Self { alpha, beta, sigma, mu } = *self;
        if !(alpha > T::zero() && alpha <= T::lit(2.0)) {
            return Err(StableError::InvalidParams(format!("alpha = {alpha} outside (0, 2]")));
        }
        if !(beta >= -T::one() && beta <= T::one()) {
            return Err(StableError::InvalidParams(format!("beta = {beta} outside [-1, 1]")));
        }
        if !(sigma >= T::zero()) || !sigma.is_finite() {
            return Err(StableError::InvalidParams(format!("sigma = {sigma} must be finite and >= 0")));
        }
        if !mu.is_finite() {
            return Err(StableError::InvalidParams(format!("mu = {mu} must be finite")));
        }
        Ok(())
    }

    /// `tan(πα/2)`, pinned to exactly zero at `α = 2` so the Gaussian case
    /// does not pick up a spurious β dependence.
    pub(crate) fn skew_tan(&self) -> T {
        if self.alpha == T::lit(2.0) {
            T::zero()
        } else {
            (T::FRAC_PI_2() * self.alpha).tan()
        }
    }

    pub(crate) fn is_cauchy_branch(&self) -> bool {
        self.alpha == T::one()
    }

    pub fn cast<U: Scalar>(&self) -> StableParams<U> {
        StableParams {
            alpha: U::lit(self.alpha.to_f64_lossy()),
            beta: U::lit(self.beta.to_f64_lossy()),
            sigma: U::lit(self.sigma.to_f64_lossy()),
            mu: U::lit(self.mu.to_f64_lossy()),
        }
    }
}

/// Which estimator produced a [`FitReport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Quantile,
    Ecf,
}

impl EstimatorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Quantile => "quantile",
            Self::Ecf => "ecf",
        }
    }
}

/// Parameter fit plus the diagnostics reported alongside it.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct FitReport<T = f64> {
    pub params: StableParams<T>,
    pub estimator: EstimatorKind,
    pub ks_statistic: T,
    pub ks_threshold_95: T,
    /// Slope of the Ψ(ω)-vs-ln ω line; `NaN` when the line could not be fitted.
    pub psi_slope: T,
    pub psi_fit_error: T,
    pub sample_count: usize,
}

/// Estimates parameters with the quantile method, falling back to the
/// characteristic-function regression when the quantile estimate sits at its
/// lower α bound or the sample quartiles coincide.
pub fn estimate<T: Scalar>(samples: &[T]) -> Result<(StableParams<T>, EstimatorKind), StableError> {
    match estimate_quantile(samples) {
        Ok(q) if !q.alpha_clamped_low => Ok((q.params, EstimatorKind::Quantile)),
        Ok(q) => match ecf_with_default_grid(samples) {
            Ok(p) => Ok((p, EstimatorKind::Ecf)),
            Err(_) => Ok((q.params, EstimatorKind::Quantile)),
        },
        Err(StableError::DegenerateSample) => {
            ecf_with_default_grid(samples).map(|p| (p, EstimatorKind::Ecf))
        }
        Err(e) => Err(e),
    }
}

fn ecf_with_default_grid<T: Scalar>(samples: &[T]) -> Result<StableParams<T>, StableError> {
    let grid = default_omega_grid(samples)?;
    estimate_ecf(samples, &grid)
}

/// Full fitting workflow for one traffic vector: estimate, K-S test against
/// the normalized model, Ψ-linearity check.
pub fn fit<T: Scalar>(samples: &[T], quantization_levels: usize) -> Result<FitReport<T>, StableError> {
    let (params, estimator) = estimate(samples)?;
    let ks = ks_test(samples, &params, quantization_levels)?;
    let (psi_slope, psi_fit_error) = default_omega_grid(samples)
        .and_then(|g| psi_linearity_error(samples, &g))
        .unwrap_or((T::nan(), T::nan()));
    Ok(FitReport {
        params,
        estimator,
        ks_statistic: ks.statistic,
        ks_threshold_95: ks.threshold_95,
        psi_slope,
        psi_fit_error,
        sample_count: ks.sample_count,
    })
}
