use crate::scalar::Scalar;

/// One step of a quantized empirical distribution function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdfStep<T> {
    pub bin_upper: T,
    pub cumulative: T,
}

/// Empirical CDF evaluated at the upper edges of `levels` equal-width bins
/// spanning `[min, max]` of the data. The last edge is exactly the maximum,
/// so the final cumulative value is 1.
///
/// Returns an empty vector for empty input or fewer than two levels.
pub fn quantized_cdf<T: Scalar>(vector: &[T], levels: usize) -> Vec<CdfStep<T>> {
    if vector.is_empty() || levels < 2 {
        return Vec::new();
    }
    let mut sorted = vector.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("NaN in traffic vector"));
    let lo = sorted[0];
    let hi = sorted[sorted.len() - 1];
    let n = T::from_usize_lossy(sorted.len());
    let width = (hi - lo) / T::from_usize_lossy(levels);
    (1..=levels)
        .map(|k| {
            let upper = if k == levels { hi } else { lo + width * T::from_usize_lossy(k) };
            let count = sorted.partition_point(|&v| v <= upper);
            CdfStep { bin_upper: upper, cumulative: T::from_usize_lossy(count) / n }
        })
        .collect()
}
