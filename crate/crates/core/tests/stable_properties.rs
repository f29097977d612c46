use alphacast::stable::{
    characteristic_function, default_omega_grid, empirical_cf, estimate_ecf, estimate_quantile, ks_test,
    normalized_cdf, normalized_pdf, sample, StableParams,
};
use alphacast::traffic::quantized_cdf;
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;

fn params() -> impl Strategy<Value = StableParams> {
    (0.2f64..2.0, -1.0f64..1.0, 0.01f64..50.0, -100.0f64..100.0)
        .prop_filter("alpha = 1 uses a separate branch", |(a, ..)| (a - 1.0).abs() > 1e-3)
        .prop_map(|(alpha, beta, sigma, mu)| StableParams { alpha, beta, sigma, mu })
}

/// Direct S1 characteristic function, written out independently.
fn cf_oracle(p: &StableParams, w: f64) -> Complex64 {
    let scale = (p.sigma * w.abs()).powf(p.alpha);
    let skew = if (p.alpha - 1.0).abs() > 1e-12 {
        p.beta * w.signum() * (PI * p.alpha / 2.0).tan()
    } else {
        -p.beta * w.signum() * 2.0 / PI * w.abs().ln()
    };
    Complex64::new(-scale, scale * skew + p.mu * w).exp()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn cf_is_conjugate_symmetric_with_exact_modulus(p in params(), w in 0.001f64..5.0) {
        let pos = characteristic_function(&p, w);
        let neg = characteristic_function(&p, -w);
        prop_assert!((pos - neg.conj()).norm() < 1e-12);
        let modulus = (-(p.sigma * w).powf(p.alpha)).exp();
        prop_assert!((pos.norm() - modulus).abs() < 1e-12);
        prop_assert!(pos.norm() <= 1.0 + 1e-15);
        prop_assert!((pos - cf_oracle(&p, w)).norm() < 1e-9 * (1.0 + (p.mu * w).abs()));
    }

    #[test]
    fn psi_is_linear_in_log_frequency(
        alpha in prop::sample::select(vec![0.5, 1.5, 2.0]),
        sigma in 0.1f64..10.0,
        w in 0.01f64..3.0,
        beta in -1.0f64..1.0,
    ) {
        // Beyond this |Φ| underflows f64 and ln|Φ| is not representable.
        prop_assume!((sigma * w).powf(alpha) < 700.0);
        let p = StableParams { alpha, beta, sigma, mu: 3.0 };
        let psi = (-characteristic_function(&p, w).ln().re).ln();
        prop_assert!((psi - (alpha * w.ln() + alpha * sigma.ln())).abs() < 1e-9);
    }
}

#[test]
fn empirical_cf_of_samples_matches_analytic() {
    let p = StableParams { alpha: 1.5, beta: 0.0, sigma: 1.0, mu: 0.0 };
    let xs = sample(&p, 100_000, 2024);
    for k in 1..=10 {
        let w = k as f64 / 10.0;
        let gap = (empirical_cf(&xs, w) - cf_oracle(&p, w)).norm();
        assert!(gap < 0.01, "omega {w}: {gap}");
    }
}

#[test]
fn empirical_cf_of_im_traffic_law_matches_analytic() {
    let p = StableParams { alpha: 1.61, beta: 1.0, sigma: 188.67, mu: 221.83 };
    let xs = sample(&p, 1_000_000, 7);
    let gap = (empirical_cf(&xs, 0.01) - characteristic_function(&p, 0.01)).norm();
    assert!(gap < 0.01, "{gap}");
}

fn mean_alpha_error(truth: &StableParams, count: usize, seeds: u64, est: impl Fn(&[f64]) -> f64) -> f64 {
    (0..seeds).map(|s| (est(&sample(truth, count, 100 + s)) - truth.alpha).abs()).sum::<f64>() / seeds as f64
}

#[test]
fn quantile_estimator_is_consistent() {
    let p = StableParams { alpha: 1.5, beta: 0.5, sigma: 2.0, mu: 1.0 };
    let est = |xs: &[f64]| estimate_quantile(xs).unwrap().params.alpha;
    let small = mean_alpha_error(&p, 1_000, 20, est);
    let large = mean_alpha_error(&p, 100_000, 20, est);
    assert!(large <= 0.5 * small, "{large} vs {small}");
}

#[test]
fn ecf_estimator_is_consistent() {
    let p = StableParams { alpha: 0.8, beta: 0.0, sigma: 1.0, mu: 0.0 };
    let est = |xs: &[f64]| estimate_ecf(xs, &default_omega_grid(xs).unwrap()).unwrap().alpha;
    let small = mean_alpha_error(&p, 1_000, 20, est);
    let large = mean_alpha_error(&p, 100_000, 20, est);
    assert!(large <= 0.5 * small, "{large} vs {small}");
}

#[test]
fn gaussian_samples_pass_the_gaussian_test() {
    let p = StableParams { alpha: 2.0, beta: 0.0, sigma: 1.0, mu: 20.0 };
    let passed = (0..50).filter(|&s| ks_test(&sample(&p, 1_000, s), &p, 100).unwrap().passes()).count();
    assert!(passed >= 45, "{passed}/50");
}

#[test]
fn ks_statistic_is_the_largest_quantized_cdf_gap() {
    let p = StableParams { alpha: 1.61, beta: 1.0, sigma: 188.67, mu: 221.83 };
    let xs = sample(&p, 5_000, 99);
    let kept: Vec<f64> = xs.iter().copied().filter(|&v| v >= 0.0).collect();
    let steps = quantized_cdf(&kept, 100);
    let mut gap = 0.0f64;
    for step in &steps {
        let below = kept.iter().filter(|&&v| v <= step.bin_upper).count() as f64 / kept.len() as f64;
        gap = gap.max((below - normalized_cdf(&p, step.bin_upper).unwrap()).abs());
    }
    let r = ks_test(&xs, &p, 100).unwrap();
    assert_eq!(r.sample_count, kept.len());
    assert!((r.statistic - gap).abs() < 1e-15, "{} vs {gap}", r.statistic);
}

/// Simpson's rule after the substitution `omega = u^4`, which smooths the
/// `|omega|^alpha` cusp at the origin.
fn invert(p: &StableParams, x: f64, cdf: bool) -> f64 {
    let upper = (40.0f64.powf(1.0 / p.alpha) / p.sigma).powf(0.25);
    let n = 2_000_000;
    let h = upper / n as f64;
    let f = |u: f64| {
        if u == 0.0 {
            return 0.0;
        }
        let w = u.powi(4);
        let v = cf_oracle(p, w) * Complex64::new(0.0, -w * x).exp();
        let jac = 4.0 * u.powi(3);
        if cdf { v.im / w * jac } else { v.re * jac }
    };
    let mut acc = f(0.0) + f(upper);
    for i in 1..n {
        acc += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    let integral = acc * h / 3.0 / PI;
    if cdf { 0.5 - integral } else { integral }
}

#[test]
fn half_line_density_matches_inversion_oracle_for_video_law() {
    let p = StableParams { alpha: 0.51, beta: 1.0, sigma: 136.52, mu: -341.15 };
    let mass = 1.0 - invert(&p, 0.0, true);
    for x in [0.0, 100.0, 1000.0] {
        let oracle = invert(&p, x, false) / mass;
        let ours = normalized_pdf(&p, x).unwrap();
        assert!((ours - oracle).abs() < 1e-6, "x = {x}: {ours} vs {oracle}");
    }
    assert_eq!(normalized_pdf(&p, -5.0).unwrap(), 0.0);
}
