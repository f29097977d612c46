use super::{NonNegativeStable, StableError, StableParams};
use crate::scalar::Scalar;
use crate::traffic::quantized_cdf;

/// Asymptotic 95% Kolmogorov–Smirnov coefficient.
pub const KS_COEFFICIENT_95: f64 = 1.358;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult<T> {
    pub statistic: T,
    pub threshold_95: T,
    /// Number of non-negative samples that entered the test.
    pub sample_count: usize,
}

impl<T: Scalar> KsResult<T> {
    pub fn passes(&self) -> bool {
        self.statistic < self.threshold_95
    }
}

pub fn ks_threshold_95<T: Scalar>(sample_count: usize) -> T {
    T::lit(KS_COEFFICIENT_95 / (sample_count as f64).sqrt())
}

/// Largest gap between the quantized empirical CDF of the samples and the
/// model CDF restricted to `[0, ∞)`, checked at the bin upper edges.
///
/// Negative samples are dropped before binning.
pub fn ks_test<T: Scalar>(
    samples: &[T],
    params: &StableParams<T>,
    quantization_levels: usize,
) -> Result<KsResult<T>, StableError> {
    if quantization_levels < 2 {
        return Err(StableError::InvalidGrid(format!(
            "quantization levels must be >= 2, got {quantization_levels}"
        )));
    }
    let kept: Vec<T> = samples.iter().copied().filter(|&v| v >= T::zero()).collect();
    if kept.is_empty() {
        return Err(StableError::TooFewSamples { needed: 1, got: 0 });
    }
    let model = NonNegativeStable::new(*params)?;
    let statistic = quantized_cdf(&kept, quantization_levels)
        .iter()
        .map(|step| (step.cumulative - model.cdf(step.bin_upper)).abs())
        .fold(T::zero(), T::max);
    Ok(KsResult { statistic, threshold_95: ks_threshold_95(kept.len()), sample_count: kept.len() })
}
