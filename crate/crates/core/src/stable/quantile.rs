use super::cf::{quantile_pair, sorted};
use super::{StableError, StableParams};
use crate::scalar::Scalar;

/// Lowest α the quantile tables support reliably; estimates below it are
/// clamped and flagged.
pub const QUANTILE_ALPHA_MIN: f64 = 0.6;

const MIN_SAMPLES: usize = 100;

const NU_ALPHA: [f64; 15] = [2.439, 2.5, 2.6, 2.7, 2.8, 3.0, 3.2, 3.5, 4.0, 5.0, 6.0, 8.0, 10.0, 15.0, 25.0];
const NU_BETA: [f64; 7] = [0.0, 0.1, 0.2, 0.3, 0.5, 0.7, 1.0];

#[rustfmt::skip]
const PSI1: [[f64; 7]; 15] = [
    [2.000, 2.000, 2.000, 2.000, 2.000, 2.000, 2.000],
    [1.916, 1.924, 1.924, 1.924, 1.924, 1.924, 1.924],
    [1.808, 1.813, 1.829, 1.829, 1.829, 1.829, 1.829],
    [1.729, 1.730, 1.737, 1.745, 1.745, 1.745, 1.745],
    [1.664, 1.663, 1.663, 1.668, 1.676, 1.676, 1.676],
    [1.563, 1.560, 1.553, 1.548, 1.547, 1.547, 1.547],
    [1.484, 1.480, 1.471, 1.460, 1.448, 1.438, 1.438],
    [1.391, 1.386, 1.378, 1.364, 1.337, 1.318, 1.318],
    [1.279, 1.273, 1.266, 1.250, 1.210, 1.184, 1.150],
    [1.128, 1.121, 1.114, 1.101, 1.067, 1.027, 0.973],
    [1.029, 1.021, 1.014, 1.004, 0.974, 0.935, 0.874],
    [0.896, 0.892, 0.884, 0.883, 0.855, 0.823, 0.769],
    [0.818, 0.812, 0.806, 0.801, 0.780, 0.756, 0.691],
    [0.698, 0.695, 0.692, 0.689, 0.676, 0.656, 0.597],
    [0.593, 0.590, 0.588, 0.586, 0.579, 0.563, 0.513],
];

#[rustfmt::skip]
const PSI2: [[f64; 7]; 15] = [
    [0.0, 2.160, 1.000, 1.000, 1.000, 1.000, 1.000],
    [0.0, 1.592, 3.390, 1.000, 1.000, 1.000, 1.000],
    [0.0, 0.759, 1.800, 1.000, 1.000, 1.000, 1.000],
    [0.0, 0.482, 1.048, 1.694, 1.000, 1.000, 1.000],
    [0.0, 0.360, 0.760, 1.232, 2.229, 1.000, 1.000],
    [0.0, 0.253, 0.518, 0.823, 1.575, 1.000, 1.000],
    [0.0, 0.203, 0.410, 0.632, 1.244, 1.906, 1.000],
    [0.0, 0.165, 0.332, 0.499, 0.943, 1.560, 1.000],
    [0.0, 0.136, 0.271, 0.404, 0.689, 1.230, 2.195],
    [0.0, 0.109, 0.216, 0.323, 0.539, 0.827, 1.917],
    [0.0, 0.096, 0.190, 0.284, 0.472, 0.693, 1.759],
    [0.0, 0.082, 0.163, 0.243, 0.412, 0.601, 1.596],
    [0.0, 0.074, 0.147, 0.220, 0.377, 0.546, 1.482],
    [0.0, 0.064, 0.128, 0.191, 0.330, 0.478, 1.362],
    [0.0, 0.056, 0.112, 0.167, 0.285, 0.428, 1.274],
];

// Rows ascend in α (0.5, 0.6, …, 2.0).
const ALPHA_AXIS: [f64; 16] = [0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.1, 1.2, 1.3, 1.4, 1.5, 1.6, 1.7, 1.8, 1.9, 2.0];
const BETA_AXIS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

#[rustfmt::skip]
const PHI3: [[f64; 5]; 16] = [
    [2.588, 3.073, 4.534, 6.636, 9.144],
    [2.337, 2.634, 3.542, 4.808, 6.247],
    [2.189, 2.392, 3.004, 3.844, 4.775],
    [2.098, 2.244, 2.676, 3.265, 3.912],
    [2.040, 2.149, 2.461, 2.886, 3.356],
    [2.000, 2.085, 2.311, 2.624, 2.973],
    [1.980, 2.040, 2.205, 2.435, 2.696],
    [1.965, 2.007, 2.125, 2.294, 2.491],
    [1.955, 1.984, 2.067, 2.188, 2.333],
    [1.946, 1.967, 2.022, 2.106, 2.211],
    [1.939, 1.952, 1.988, 2.045, 2.116],
    [1.933, 1.940, 1.962, 1.997, 2.043],
    [1.927, 1.930, 1.943, 1.961, 1.987],
    [1.921, 1.922, 1.927, 1.936, 1.947],
    [1.914, 1.915, 1.916, 1.918, 1.921],
    [1.908, 1.908, 1.908, 1.908, 1.908],
];

#[rustfmt::skip]
const PHI5: [[f64; 5]; 16] = [
    [0.0, -0.061, -0.279, -0.659, -1.198],
    [0.0, -0.078, -0.272, -0.581, -0.997],
    [0.0, -0.089, -0.262, -0.520, -0.853],
    [0.0, -0.096, -0.250, -0.469, -0.742],
    [0.0, -0.099, -0.237, -0.424, -0.652],
    [0.0, -0.098, -0.223, -0.380, -0.576],
    [0.0, -0.095, -0.208, -0.346, -0.508],
    [0.0, -0.090, -0.192, -0.310, -0.447],
    [0.0, -0.084, -0.173, -0.276, -0.390],
    [0.0, -0.075, -0.154, -0.241, -0.335],
    [0.0, -0.066, -0.134, -0.206, -0.283],
    [0.0, -0.056, -0.111, -0.170, -0.232],
    [0.0, -0.043, -0.088, -0.132, -0.179],
    [0.0, -0.030, -0.061, -0.092, -0.123],
    [0.0, -0.017, -0.032, -0.049, -0.064],
    [0.0, 0.0, 0.0, 0.0, 0.0],
];

/// Bracketing index and weight on an ascending axis; clamps outside it.
fn locate(axis: &[f64], x: f64) -> (usize, f64) {
    let last = axis.len() - 1;
    if x <= axis[0] {
        return (0, 0.0);
    }
    if x >= axis[last] {
        return (last - 1, 1.0);
    }
    let i = axis.partition_point(|&a| a <= x) - 1;
    (i, (x - axis[i]) / (axis[i + 1] - axis[i]))
}

fn bilinear<const C: usize>(rows: &[f64], cols: &[f64; C], table: &[[f64; C]], r: f64, c: f64) -> f64 {
    let (i, u) = locate(rows, r);
    let (j, v) = locate(cols, c);
    let t = |a: usize, b: usize| table[a][b];
    (1.0 - u) * (1.0 - v) * t(i, j) + u * (1.0 - v) * t(i + 1, j) + (1.0 - u) * v * t(i, j + 1) + u * v * t(i + 1, j + 1)
}

/// Quantile-based estimate plus whether α hit the lower clamp.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantileEstimate<T> {
    pub params: StableParams<T>,
    pub alpha_clamped_low: bool,
}

/// Table-driven estimate from the 5th, 25th, 50th, 75th and 95th percentiles.
pub fn estimate_quantile<T: Scalar>(samples: &[T]) -> Result<QuantileEstimate<T>, StableError> {
    if samples.len() < MIN_SAMPLES {
        return Err(StableError::TooFewSamples { needed: MIN_SAMPLES, got: samples.len() });
    }
    let s = sorted(samples);
    let f = |v: T| v.to_f64_lossy();
    let (q05, q95) = quantile_pair(&s, 0.05);
    let (q25, q75) = quantile_pair(&s, 0.25);
    let (q50, _) = quantile_pair(&s, 0.5);
    let (q05, q95, q25, q75, q50) = (f(q05), f(q95), f(q25), f(q75), f(q50));
    let iqr = q75 - q25;
    if !(iqr > 0.0) {
        return Err(StableError::DegenerateSample);
    }
    let nu_alpha = (q95 - q05) / iqr;
    let nu_beta = (q95 + q05 - 2.0 * q50) / (q95 - q05);
    let nb_sign = if nu_beta > 0.0 { 1.0 } else if nu_beta < 0.0 { -1.0 } else { 0.0 };

    let (mut alpha, mut beta) = if nu_alpha <= NU_ALPHA[0] {
        (2.0, 0.0)
    } else {
        let na = nu_alpha.min(NU_ALPHA[NU_ALPHA.len() - 1]);
        let nb = nu_beta.abs();
        (bilinear(&NU_ALPHA, &NU_BETA, &PSI1, na, nb), nb_sign * bilinear(&NU_ALPHA, &NU_BETA, &PSI2, na, nb))
    };
    let alpha_clamped_low = alpha < QUANTILE_ALPHA_MIN;
    alpha = alpha.clamp(QUANTILE_ALPHA_MIN, 2.0);
    beta = beta.clamp(-1.0, 1.0);
    if alpha == 2.0 {
        beta = 0.0;
    }

    let ab = beta.abs();
    let b_sign = if beta > 0.0 { 1.0 } else if beta < 0.0 { -1.0 } else { 0.0 };
    let c = iqr / bilinear(&ALPHA_AXIS, &BETA_AXIS, &PHI3, alpha, ab);
    let zeta = q50 + c * b_sign * bilinear(&ALPHA_AXIS, &BETA_AXIS, &PHI5, alpha, ab);
    let mu = if alpha == 1.0 {
        zeta - std::f64::consts::FRAC_2_PI * beta * c * c.ln()
    } else if alpha == 2.0 {
        zeta
    } else {
        zeta - beta * c * (std::f64::consts::FRAC_PI_2 * alpha).tan()
    };
    Ok(QuantileEstimate {
        params: StableParams { alpha: T::lit(alpha), beta: T::lit(beta), sigma: T::lit(c), mu: T::lit(mu) },
        alpha_clamped_low,
    })
}
