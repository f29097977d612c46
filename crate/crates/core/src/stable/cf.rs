use num_complex::Complex;

use super::{StableError, StableParams};
use crate::scalar::Scalar;

const MIN_SAMPLES: usize = 100;

/// Φ(ω) of the stable law.
pub fn characteristic_function<T: Scalar>(params: &StableParams<T>, omega: T) -> Complex<T> {
    log_cf(params, omega).exp()
}

/// ln Φ(ω), computed directly so large shifts do not lose precision.
pub(crate) fn log_cf<T: Scalar>(params: &StableParams<T>, omega: T) -> Complex<T> {
    if omega == T::zero() {
        return Complex::new(T::zero(), T::zero());
    }
    let StableParams { alpha, beta, sigma, mu } = *params;
    let abs_w = omega.abs();
    let sgn = omega.sgn();
    if params.is_cauchy_branch() {
        let scale = sigma * abs_w;
        let re = -scale;
        let im = -scale * T::lit(2.0) * beta / T::PI() * sgn * abs_w.ln() + mu * omega;
        Complex::new(re, im)
    } else {
        let scale = (sigma * abs_w).powf(alpha);
        let re = -scale;
        let im = scale * beta * sgn * params.skew_tan() + mu * omega;
        Complex::new(re, im)
    }
}

/// Sample characteristic function `(1/n) Σ exp(jωx)`.
pub fn empirical_cf<T: Scalar>(samples: &[T], omega: T) -> Complex<T> {
    let n = T::from_usize_lossy(samples.len());
    let (c, s) = samples.iter().fold((T::zero(), T::zero()), |(c, s), &x| {
        let (sn, cs) = (omega * x).sin_cos();
        (c + cs, s + sn)
    });
    Complex::new(c / n, s / n)
}

/// Least-squares line of Ψ(ω) = ln(−Re ln Φ(ω)) against ln ω.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit<T> {
    pub slope: T,
    pub intercept: T,
    /// RMS residual divided by the RMS of the Ψ values.
    pub normalized_error: T,
}

impl<T: Scalar> LineFit<T> {
    /// Scale implied by the intercept, `exp(intercept / slope)`.
    pub fn sigma(&self) -> T {
        (self.intercept / self.slope).exp()
    }
}

/// Fits the Ψ line from characteristic-function values on a grid.
pub fn fit_psi_line<T: Scalar>(
    omega_grid: &[T],
    cf_values: &[Complex<T>],
) -> Result<LineFit<T>, StableError> {
    check_grid(omega_grid)?;
    assert_eq!(omega_grid.len(), cf_values.len());
    let mut xs = Vec::with_capacity(omega_grid.len());
    let mut ys = Vec::with_capacity(omega_grid.len());
    for (&w, phi) in omega_grid.iter().zip(cf_values) {
        let log_mod = phi.norm().ln();
        if !(log_mod < T::zero()) {
            return Err(StableError::IllConditioned { omega: w.to_f64_lossy() });
        }
        xs.push(w.ln());
        ys.push((-log_mod).ln());
    }
    let n = T::from_usize_lossy(xs.len());
    let mx = xs.iter().copied().sum::<T>() / n;
    let my = ys.iter().copied().sum::<T>() / n;
    let sxx: T = xs.iter().map(|&x| (x - mx) * (x - mx)).sum();
    let sxy: T = xs.iter().zip(&ys).map(|(&x, &y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: T = xs
        .iter()
        .zip(&ys)
        .map(|(&x, &y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let ss_y: T = ys.iter().map(|&y| y * y).sum();
    let normalized_error = if ss_y > T::zero() { (ss_res / ss_y).sqrt() } else { T::zero() };
    Ok(LineFit { slope, intercept, normalized_error })
}

fn check_grid<T: Scalar>(grid: &[T]) -> Result<(), StableError> {
    if grid.len() < 4 {
        return Err(StableError::InvalidGrid(format!("need at least 4 points, got {}", grid.len())));
    }
    if grid.iter().any(|&w| !(w > T::zero()) || !w.is_finite()) {
        return Err(StableError::InvalidGrid("frequencies must be finite and > 0".into()));
    }
    Ok(())
}

fn check_samples<T: Scalar>(samples: &[T]) -> Result<(), StableError> {
    if samples.len() < MIN_SAMPLES {
        return Err(StableError::TooFewSamples { needed: MIN_SAMPLES, got: samples.len() });
    }
    Ok(())
}

pub(crate) fn sorted<T: Scalar>(samples: &[T]) -> Vec<T> {
    let mut v = samples.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("NaN in samples"));
    v
}

/// Lower/upper linear-interpolation quantiles at `p` and `1 − p`.
///
/// Both are taken with the same interpolation weight from opposite ends of
/// the sorted data, so a sample symmetric about zero yields exactly opposite
/// quantiles.
pub(crate) fn quantile_pair<T: Scalar>(sorted: &[T], p: f64) -> (T, T) {
    let n = sorted.len();
    let h = p * (n - 1) as f64;
    let lo = h.floor() as usize;
    let frac = T::lit(h - lo as f64);
    let one_m = T::one() - frac;
    let next = (lo + 1).min(n - 1);
    let low = one_m * sorted[lo] + frac * sorted[next];
    let high = one_m * sorted[n - 1 - lo] + frac * sorted[n - 1 - next];
    (low, high)
}

/// Default Ψ grid: 20 log-spaced points on `[0.01/σ₀, 1/σ₀]` with `σ₀` half
/// the interquartile range (wider spreads are used if the quartiles coincide).
pub fn default_omega_grid<T: Scalar>(samples: &[T]) -> Result<Vec<T>, StableError> {
    check_samples(samples)?;
    let s = sorted(samples);
    let (q25, q75) = quantile_pair(&s, 0.25);
    let (q05, q95) = quantile_pair(&s, 0.05);
    let (q01, q99) = quantile_pair(&s, 0.01);
    let spread = [
        (q75 - q25) / T::lit(2.0),
        (q95 - q05) / T::lit(4.0),
        (q99 - q01) / T::lit(8.0),
        (s[s.len() - 1] - s[0]) / T::lit(16.0),
    ]
    .into_iter()
    .find(|&v| v > T::zero())
    .ok_or(StableError::IllConditioned { omega: 0.0 })?;
    let lo = (T::lit(0.01) / spread).ln();
    let hi = (T::one() / spread).ln();
    let steps = T::lit(19.0);
    Ok((0..20).map(|k| (lo + (hi - lo) * T::from_usize_lossy(k) / steps).exp()).collect())
}

/// Ψ-linearity diagnostic on raw samples: returns `(slope, normalized_error)`.
pub fn psi_linearity_error<T: Scalar>(samples: &[T], omega_grid: &[T]) -> Result<(T, T), StableError> {
    check_samples(samples)?;
    check_grid(omega_grid)?;
    let phis: Vec<_> = omega_grid.iter().map(|&w| empirical_cf(samples, w)).collect();
    let fit = fit_psi_line(omega_grid, &phis)?;
    Ok((fit.slope, fit.normalized_error))
}

/// Sample characteristic function regression.
///
/// α and σ come from the Ψ line; β and μ from a least-squares fit of the
/// unwrapped phase of the sample characteristic function (of the data
/// centred at its median) on the two regressors of Im ln Φ.
pub fn estimate_ecf<T: Scalar>(samples: &[T], omega_grid: &[T]) -> Result<StableParams<T>, StableError> {
    check_samples(samples)?;
    check_grid(omega_grid)?;
    let s = sorted(samples);
    let (median, _) = quantile_pair(&s, 0.5);
    let centred: Vec<T> = samples.iter().map(|&x| x - median).collect();
    let phis: Vec<Complex<T>> = omega_grid.iter().map(|&w| empirical_cf(&centred, w)).collect();
    let line = fit_psi_line(omega_grid, &phis)?;
    let alpha = line.slope.min(T::lit(2.0));
    if !(alpha > T::zero()) {
        return Err(StableError::IllConditioned { omega: omega_grid[0].to_f64_lossy() });
    }
    let sigma = (line.intercept / alpha).exp();

    let phases = unwrap_phases(&phis);
    let near_cauchy = (alpha - T::one()).abs() < T::lit(1e-2);
    // Im ln Φ(ω) = μω + β·r(ω)
    let skew_regressor = |w: T| -> T {
        if near_cauchy {
            -T::lit(2.0) / T::PI() * sigma * w * (w.ln())
        } else if alpha == T::lit(2.0) {
            T::zero()
        } else {
            (sigma * w).powf(alpha) * (T::FRAC_PI_2() * alpha).tan()
        }
    };
    let (mut s11, mut s12, mut s22, mut b1, mut b2) = (T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
    for (&w, &y) in omega_grid.iter().zip(&phases) {
        let r = skew_regressor(w);
        s11 += w * w;
        s12 += w * r;
        s22 += r * r;
        b1 += w * y;
        b2 += r * y;
    }
    let det = s11 * s22 - s12 * s12;
    let (mu_c, beta) = if det.abs() > T::lit(1e-10) * s11 * s22 && s22 > T::zero() {
        ((b1 * s22 - b2 * s12) / det, (s11 * b2 - s12 * b1) / det)
    } else {
        (b1 / s11, T::zero())
    };
    let beta = beta.max(-T::one()).min(T::one());
    Ok(StableParams { alpha, beta, sigma, mu: mu_c + median })
}

fn unwrap_phases<T: Scalar>(phis: &[Complex<T>]) -> Vec<T> {
    let two_pi = T::TAU();
    let mut out = Vec::with_capacity(phis.len());
    let mut offset = T::zero();
    let mut prev: Option<T> = None;
    for phi in phis {
        let a = phi.arg();
        if let Some(p) = prev {
            let mut d = a + offset - p;
            while d > T::PI() {
                offset -= two_pi;
                d -= two_pi;
            }
            while d < -T::PI() {
                offset += two_pi;
                d += two_pi;
            }
        }
        let v = a + offset;
        out.push(v);
        prev = Some(v);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stable::sample;

    fn params(a: f64, b: f64, s: f64, m: f64) -> StableParams<f64> {
        StableParams::new(a, b, s, m).unwrap()
    }

    #[test]
    fn gaussian_reduction_and_origin() {
        let phi = characteristic_function(&params(2.0, 0.0, 1.0, 0.0), 1.0);
        assert!((phi.re - (-1.0f64).exp()).abs() < 1e-15 && phi.im.abs() < 1e-15);
        for p in [params(0.7, 0.3, 2.0, -1.0), params(1.0, 1.0, 3.0, 5.0), params(2.0, 1.0, 1.0, 1.0)] {
            let one = characteristic_function(&p, 0.0);
            assert_eq!((one.re, one.im), (1.0, 0.0));
        }
    }

    #[test]
    fn gaussian_cf_ignores_beta() {
        let a = characteristic_function(&params(2.0, 1.0, 1.5, 0.2), 0.7);
        let b = characteristic_function(&params(2.0, -1.0, 1.5, 0.2), 0.7);
        assert_eq!(a, b);
    }

    #[test]
    fn conjugate_symmetry_and_modulus() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let mut alpha: f64 = rng.random_range(0.1..=2.0);
            if rng.random_bool(0.1) {
                alpha = 1.0;
            }
            let p = params(alpha, rng.random_range(-1.0..=1.0), rng.random_range(0.0..5.0), rng.random_range(-10.0..10.0));
            let w: f64 = rng.random_range(-3.0..3.0);
            let a = characteristic_function(&p, w);
            let b = characteristic_function(&p, -w);
            assert!((a - b.conj()).norm() < 1e-12);
            let expected = if alpha == 1.0 { (-p.sigma * w.abs()).exp() } else { (-(p.sigma * w.abs()).powf(alpha)).exp() };
            assert!((a.norm() - expected).abs() < 1e-12);
            assert!(a.norm() <= 1.0 + 1e-15);
        }
    }

    #[test]
    fn psi_is_exactly_linear_for_analytic_cf() {
        for alpha in [0.5, 1.5, 2.0] {
            let p = params(alpha, 0.4, 2.0, 1.0);
            for w in [0.05, 0.3, 1.7] {
                let psi = (-characteristic_function(&p, w).ln().re).ln();
                assert!((psi - (alpha * w.ln() + alpha * 2.0f64.ln())).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn analytic_cf_line_recovers_alpha_and_sigma() {
        let p = params(1.5, 0.3, 2.0, 0.7);
        let grid: Vec<f64> = (0..20).map(|k| 0.005 * 1.25f64.powi(k)).collect();
        let phis: Vec<_> = grid.iter().map(|&w| characteristic_function(&p, w)).collect();
        let fit = fit_psi_line(&grid, &phis).unwrap();
        assert!((fit.slope - 1.5).abs() < 1e-6);
        assert!((fit.sigma() - 2.0).abs() < 1e-6);
        assert!(fit.normalized_error < 1e-9);
    }

    #[test]
    fn constant_samples_are_ill_conditioned() {
        let xs = vec![42.0; 500];
        let grid: Vec<f64> = (1..=8).map(|k| k as f64 * 0.1).collect();
        assert!(matches!(estimate_ecf(&xs, &grid), Err(StableError::IllConditioned { .. })));
        assert!(matches!(default_omega_grid(&xs), Err(StableError::IllConditioned { .. })));
    }

    #[test]
    fn grid_and_sample_preconditions() {
        let xs: Vec<f64> = (0..200).map(|i| i as f64).collect();
        assert!(matches!(estimate_ecf(&xs, &[0.1, 0.2, 0.3]), Err(StableError::InvalidGrid(_))));
        assert!(matches!(estimate_ecf(&xs, &[0.1, 0.2, -0.3, 0.4]), Err(StableError::InvalidGrid(_))));
        assert!(matches!(estimate_ecf(&xs[..50], &[0.1, 0.2, 0.3, 0.4]), Err(StableError::TooFewSamples { .. })));
    }

    #[test]
    fn ecf_recovers_all_four_parameters() {
        let p = params(1.5, 0.5, 3.0, 10.0);
        let xs = sample(&p, 100_000, 21);
        let est = estimate_ecf(&xs, &default_omega_grid(&xs).unwrap()).unwrap();
        assert!((est.alpha - 1.5).abs() < 0.05, "{est:?}");
        assert!((est.sigma - 3.0).abs() < 0.15, "{est:?}");
        assert!((est.beta - 0.5).abs() < 0.25, "{est:?}");
        assert!((est.mu - 10.0).abs() < 0.5, "{est:?}");
    }

    #[test]
    fn ecf_recovers_heavy_tailed_video_alpha() {
        let p = params(0.51, 1.0, 136.52, -341.15);
        let xs = sample(&p, 100_000, 5);
        let est = estimate_ecf(&xs, &default_omega_grid(&xs).unwrap()).unwrap();
        assert!(est.alpha >= 0.41 && est.alpha <= 0.61, "{est:?}");
    }

    #[test]
    fn sampled_stable_data_is_nearly_linear() {
        for (seed, p) in [(1, params(0.8, 0.5, 10.0, 3.0)), (2, params(1.5, -0.3, 1.0, 0.0))] {
            let xs = sample(&p, 100_000, seed);
            let (slope, err) = psi_linearity_error(&xs, &default_omega_grid(&xs).unwrap()).unwrap();
            assert!(err < 0.02, "{p:?}: {err}");
            assert!((slope - p.alpha).abs() < 0.1);
        }
    }

    #[test]
    fn uniform_data_is_less_linear_than_matched_gaussian() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let uni: Vec<f64> = (0..100_000).map(|_| rng.random::<f64>()).collect();
        // same mean and variance as U[0,1]
        let gauss = sample(&StableParams::gaussian(0.5, 1.0 / 12.0), 100_000, 4);
        let (_, e_uni) = psi_linearity_error(&uni, &default_omega_grid(&uni).unwrap()).unwrap();
        let (_, e_gauss) = psi_linearity_error(&gauss, &default_omega_grid(&gauss).unwrap()).unwrap();
        assert!(e_uni > e_gauss, "uniform {e_uni} vs gaussian {e_gauss}");
    }

    #[test]
    fn symmetric_quantile_pair_is_exactly_opposite() {
        let mut xs: Vec<f64> = (1..=501).map(|i| (i as f64 * 0.37).sin() * 10.0 + i as f64 * 1e-3).collect();
        let mirrored: Vec<f64> = xs.iter().map(|v| -v).collect();
        xs.extend(mirrored);
        let s = sorted(&xs);
        for p in [0.05, 0.25, 0.5] {
            let (lo, hi) = quantile_pair(&s, p);
            assert_eq!(lo, -hi);
        }
    }
}
