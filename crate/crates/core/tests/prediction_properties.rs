use alphacast::eval::{self, EvalSettings, Method};
use alphacast::linalg::Matrix;
use alphacast::linear_prediction::{
    fit_coefficients, forecast, forecast_with_alphas, ls_ar_coefficients, ls_ar_forecast, LinearPredictorSpec,
};
use alphacast::traffic::{generate_synthetic, CellMeta, ScenarioSpec, Service};
use alphacast::TrafficMatrix;
use proptest::prelude::*;

fn matrix_from_rows(rows: &[Vec<f64>]) -> TrafficMatrix {
    let cells = (0..rows.len()).map(|i| CellMeta::new(format!("cell{i}"), 30.0 + 0.01 * i as f64, 120.0).unwrap()).collect();
    TrafficMatrix::new(cells, 300, 0, Matrix::from_rows(rows), Service::Web).unwrap()
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn window() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1.0f64..100.0, 40)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gaussian_exponent_reduces_to_least_squares(w in window(), m in 1usize..8, k in 1usize..3) {
        let spec = LinearPredictorSpec::new(40, m, k, 2.0).unwrap();
        let ours = fit_coefficients(&w, &spec).unwrap();
        let ls = ls_ar_coefficients(&w, &spec).unwrap();
        let scale = ls.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        for (a, b) in ours.iter().zip(&ls) {
            prop_assert!((a - b).abs() <= 1e-8 * scale, "{} vs {}", a, b);
        }
    }

    #[test]
    fn forecast_is_scale_equivariant(w in window(), alpha in 1.05f64..2.0, c in 0.01f64..100.0) {
        let spec = LinearPredictorSpec::new(36, 6, 1, alpha).unwrap();
        let base = matrix_from_rows(&[w.clone()]);
        let scaled = base.scaled(c);
        let a = forecast(&base, 40, &spec).unwrap().values[0];
        let b = forecast(&scaled, 40, &spec).unwrap().values[0];
        prop_assert!((b - c * a).abs() <= 1e-8 * (c * a).abs().max(1e-300), "{} vs {}", b, c * a);
    }

    #[test]
    fn older_data_does_not_matter(w in window(), prefix in prop::collection::vec(0.0f64..1e4, 0..30), alpha in 1.05f64..2.0) {
        let spec = LinearPredictorSpec::new(36, 5, 2, alpha).unwrap();
        let mut long = prefix.clone();
        long.extend_from_slice(&w);
        let a = fit_coefficients(&w, &spec).unwrap();
        let b = fit_coefficients(&long, &spec).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn permuting_cells_permutes_forecasts(rows in prop::collection::vec(window(), 4), shift in 1usize..4) {
        let spec = LinearPredictorSpec::new(36, 4, 1, 1.5).unwrap();
        let m = matrix_from_rows(&rows);
        let order: Vec<usize> = (0..4).map(|i| (i + shift) % 4).collect();
        let p = m.permute_cells(&order);
        let a = forecast(&m, 40, &spec).unwrap().values;
        let b = forecast(&p, 40, &spec).unwrap().values;
        for (pos, &src) in order.iter().enumerate() {
            prop_assert_eq!(b[pos], a[src]);
        }
    }
}

#[test]
fn noiseless_ar1_row_is_continued() {
    let row: Vec<f64> = (0..50).map(|t| 1e6 * 0.5f64.powi(t)).collect();
    let m = matrix_from_rows(&[row.clone()]);
    let spec = LinearPredictorSpec::new(36, 1, 1, 2.0).unwrap();
    let f = forecast(&m, 40, &spec).unwrap();
    assert!((f.coefficients[0][0] - 0.5).abs() < 1e-8);
    assert!(rel_close(f.values[0], 0.5 * row[39], 1e-6));
    let ls = ls_ar_forecast(&m, 40, &spec).unwrap();
    assert!(rel_close(ls.values[0], 0.5 * row[39], 1e-6));
}

#[test]
fn constant_windows_forecast_the_constant() {
    for alpha in [1.01, 1.5, 2.0] {
        let m = matrix_from_rows(&[vec![17.0; 60]]);
        let spec = LinearPredictorSpec::new(36, 10, 1, alpha).unwrap();
        let v = forecast(&m, 50, &spec).unwrap().values[0];
        assert!((v - 17.0).abs() < 1e-4, "alpha {alpha}: {v}");
    }
}

#[test]
fn per_cell_exponents_match_single_exponent_runs() {
    let rows: Vec<Vec<f64>> = (0..3).map(|i| (0..48).map(|t| 10.0 + ((t * (i + 3)) % 7) as f64).collect()).collect();
    let m = matrix_from_rows(&rows);
    let spec = LinearPredictorSpec::new(36, 4, 1, 2.0).unwrap();
    let alphas = [1.2, 1.6, 2.0];
    let mixed = forecast_with_alphas(&m, 48, &spec, &alphas).unwrap();
    for (i, &a) in alphas.iter().enumerate() {
        let single = forecast(&m, 48, &spec.with_alpha(a)).unwrap();
        assert_eq!(mixed.values[i], single.values[i]);
    }
}

#[test]
fn linear_forecast_is_usable_on_im_traffic() {
    let settings = EvalSettings::default();
    let mut total = 0.0;
    for seed in 0..10 {
        let m = generate_synthetic::<f64>(&ScenarioSpec::im(), seed).unwrap().matrix;
        let r = eval::evaluate_timestamp(&m, 144, &[Method::Linear], &settings).unwrap();
        let v = r.nmae(Method::Linear).unwrap();
        assert!(v.is_finite());
        total += v;
    }
    let mean = total / 10.0;
    assert!(mean < 1.0, "mean NMAE {mean}");
}
