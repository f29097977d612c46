use std::collections::BTreeMap;
use std::path::Path;

use alphacast::adm::refine;
use alphacast::eval::{evaluate, mean_nmae, nmae, prediction_alphas, sweep, SweepPoint, TimestampResult};
use alphacast::linear_prediction::{forecast_with_alphas, ls_ar_forecast};
use alphacast::stable::fit;
use alphacast::traffic::{generate_synthetic, ingest_csv, voronoi_sparsity, write_cells, write_traffic_long, write_wide};
use alphacast::{FitReport, Method, SparseMethod, TrafficMatrix};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::io::{write_atomic, write_json, write_output, Table};

fn num(v: f64) -> String {
    format!("{v}")
}

/// Traffic from `traffic`/`cells`, or the configured synthetic scenario.
pub fn load_matrix(cfg: &RunConfig) -> Result<TrafficMatrix, CliError> {
    match cfg.get("traffic") {
        Some(traffic) => {
            let cells = cfg.require("cells").map_err(|_| CliError::usage("--traffic needs --cells"))?;
            Ok(ingest_csv(Path::new(traffic), Path::new(cells), &cfg.ingest_options()?)?)
        }
        None => {
            let spec = cfg.scenario()?;
            generate_synthetic(&spec, cfg.seed()?).map(|s| s.matrix).map_err(CliError::Numerical)
        }
    }
}

fn fit_row(id: &str, fit: Result<FitReport, alphacast::StableError>) -> Vec<String> {
    match fit {
        Ok(r) => vec![
            id.to_string(),
            num(r.params.alpha),
            num(r.params.beta),
            num(r.params.sigma),
            num(r.params.mu),
            num(r.ks_statistic),
            num(r.ks_threshold_95),
            num(r.psi_fit_error),
            r.estimator.as_str().to_string(),
        ],
        Err(_) => {
            let mut row = vec![id.to_string()];
            row.extend(std::iter::repeat_n(String::new(), 7));
            row.push("failed".into());
            row
        }
    }
}

pub const POOLED_ID: &str = "(pooled)";

#[derive(Serialize)]
struct FitJson<'a> {
    seed: u64,
    config: &'a BTreeMap<String, String>,
    cells: BTreeMap<String, Option<FitReport>>,
    pooled: FitReport,
}

pub fn fit_stable(cfg: &RunConfig) -> Result<(), CliError> {
    let matrix = load_matrix(cfg)?;
    let levels: usize = cfg.require_parsed("quantization_levels")?;
    let fits: Vec<_> = (0..matrix.n_cells()).map(|i| fit(&matrix.row(i), levels)).collect();
    let pooled_values: Vec<f64> = (0..matrix.n_cells()).flat_map(|i| matrix.row(i)).collect();
    let pooled = fit(&pooled_values, levels)?;

    write_output(cfg.get("output"), |w| {
        let mut t = Table::new(w, &["cell_id", "alpha", "beta", "sigma", "mu", "ks_stat", "ks_thresh", "psi_err", "estimator_used"])?;
        for (cell, f) in matrix.cells().iter().zip(&fits) {
            t.row(fit_row(&cell.cell_id, f.clone()))?;
        }
        t.row(fit_row(POOLED_ID, Ok(pooled.clone())))?;
        t.finish()
    })?;
    if let Some(path) = cfg.get("json") {
        let cells = matrix.cells().iter().zip(&fits).map(|(c, f)| (c.cell_id.clone(), f.clone().ok())).collect();
        write_json(Path::new(path), &FitJson { seed: cfg.seed()?, config: cfg.values(), cells, pooled })?;
    }
    Ok(())
}

pub fn generate(cfg: &RunConfig) -> Result<(), CliError> {
    let output = cfg.require("output")?;
    let cells = cfg.require("cells")?;
    let spec = cfg.scenario()?;
    let s = generate_synthetic::<f64>(&spec, cfg.seed()?).map_err(CliError::Numerical)?;
    let m = &s.matrix;
    write_atomic(Path::new(output), |w| Ok(write_traffic_long(w, m)?))?;
    write_atomic(Path::new(cells), |w| Ok(write_cells(w, m.cells())?))?;
    if let Some(wide) = cfg.get("wide") {
        write_atomic(Path::new(wide), |w| Ok(write_wide(w, m)?))?;
    }
    Ok(())
}

pub fn predict(cfg: &RunConfig) -> Result<(), CliError> {
    let matrix = load_matrix(cfg)?;
    let settings = cfg.eval_settings()?;
    let method = cfg.method()?;
    let p = &settings.predictor;
    let t_end = cfg.get_parsed("t_end")?.unwrap_or(matrix.n_intervals());
    if t_end > matrix.n_intervals() {
        return Err(CliError::usage(format!("t_end {t_end} exceeds the {} available intervals", matrix.n_intervals())));
    }

    let coarse = if method == Method::LsAr {
        ls_ar_forecast(&matrix, t_end, p)?.values
    } else {
        let alphas = prediction_alphas(&matrix, t_end, &settings);
        forecast_with_alphas(&matrix, t_end, p, &alphas)?.values
    };
    let prediction = match method {
        Method::Linear | Method::LsAr => coarse.clone(),
        Method::AdmLars | Method::AdmOmp => {
            let mut adm = settings.adm;
            adm.method = if method == Method::AdmLars { SparseMethod::Lars } else { SparseMethod::Omp };
            refine(&coarse, matrix.values(), t_end, &adm, None)?.x_p
        }
    };

    write_output(cfg.get("output"), |w| {
        let mut t = Table::new(w, &["cell_id", "coarse", "prediction"])?;
        for ((cell, c), x) in matrix.cells().iter().zip(&coarse).zip(&prediction) {
            t.row([cell.cell_id.clone(), num(*c), num(*x)])?;
        }
        t.finish()
    })?;
    let target = t_end + p.k - 1;
    if target < matrix.n_intervals() {
        if let Ok(e) = nmae(&prediction, matrix.column(target)) {
            eprintln!("{method} interval {target}: NMAE {e}");
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct SourceJson {
    kind: &'static str,
    service: String,
    n_cells: usize,
    n_intervals: usize,
    resolution_seconds: i64,
    start_timestamp: i64,
}

#[derive(Serialize)]
struct SweepJson {
    param: String,
    points: Vec<SweepPointJson>,
}

#[derive(Serialize)]
struct SweepPointJson {
    value: f64,
    mean_nmae: BTreeMap<String, f64>,
    results: Vec<TimestampResult>,
}

#[derive(Serialize)]
struct EvalJson<'a> {
    seed: u64,
    config: &'a BTreeMap<String, String>,
    source: SourceJson,
    cell_ids: Vec<String>,
    timestamps: Vec<usize>,
    methods: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mean_nmae: Option<BTreeMap<String, f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    results: Option<Vec<TimestampResult>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sweep: Option<SweepJson>,
}

fn means(results: &[TimestampResult], methods: &[Method]) -> BTreeMap<String, f64> {
    methods.iter().filter_map(|&m| mean_nmae(results, m).map(|v| (m.report_key().to_string(), v))).collect()
}

pub fn eval(cfg: &RunConfig) -> Result<(), CliError> {
    let matrix = load_matrix(cfg)?;
    let settings = cfg.eval_settings()?;
    let methods = cfg.methods()?;
    let timestamps: Vec<usize> = cfg.list("timestamps")?;
    if timestamps.is_empty() {
        return Err(CliError::usage("no timestamps selected"));
    }
    // (sweep value, results) pairs; a plain run is a single unnamed point.
    let sweep_spec = cfg.sweep()?;
    let points: Vec<(Option<f64>, Vec<TimestampResult>)> = match &sweep_spec {
        Some((param, values)) => sweep(&matrix, &timestamps, &methods, &settings, *param, values)?
            .into_iter()
            .map(|SweepPoint { value, results }| (Some(value), results))
            .collect(),
        None => vec![(None, evaluate(&matrix, &timestamps, &methods, &settings)?)],
    };
    let param_name = sweep_spec.as_ref().map(|(p, _)| p.as_str());

    let runtime = |r: Option<f64>| r.map(num).unwrap_or_default();
    write_output(cfg.get("output"), |w| {
        let mut header = vec!["timestamp", "method", "nmae", "runtime_seconds"];
        if param_name.is_some() {
            header.splice(0..0, ["sweep", "value"]);
        }
        let mut t = Table::new(w, &header)?;
        for (value, results) in &points {
            let prefix: Vec<String> = match value {
                Some(v) => vec![param_name.unwrap_or_default().to_string(), num(*v)],
                None => Vec::new(),
            };
            for r in results {
                for m in &r.methods {
                    let mut row = prefix.clone();
                    row.extend([r.timestamp.to_string(), m.method.clone(), num(m.nmae), runtime(m.runtime_seconds)]);
                    t.row(row)?;
                }
            }
            for (method, mean) in means(results, &methods) {
                let mut row = prefix.clone();
                row.extend(["mean".to_string(), method, num(mean), String::new()]);
                t.row(row)?;
            }
        }
        t.finish()
    })?;

    if let Some(path) = cfg.get("errors") {
        write_atomic(Path::new(path), |w| {
            let mut header = vec!["timestamp", "method", "cell_id", "truth", "prediction", "abs_error"];
            if param_name.is_some() {
                header.splice(0..0, ["sweep", "value"]);
            }
            let mut t = Table::new(w, &header)?;
            for (value, results) in &points {
                for r in results {
                    for m in &r.methods {
                        for (i, cell) in matrix.cells().iter().enumerate() {
                            let mut row: Vec<String> = match value {
                                Some(v) => vec![param_name.unwrap_or_default().to_string(), num(*v)],
                                None => Vec::new(),
                            };
                            row.extend([
                                r.timestamp.to_string(),
                                m.method.clone(),
                                cell.cell_id.clone(),
                                num(r.truth[i]),
                                num(m.prediction[i]),
                                num(m.abs_errors[i]),
                            ]);
                            t.row(row)?;
                        }
                    }
                }
            }
            t.finish()
        })?;
    }

    if let Some(path) = cfg.get("json") {
        let source = SourceJson {
            kind: if cfg.get("traffic").is_some() { "csv" } else { "synthetic" },
            service: matrix.service().to_string(),
            n_cells: matrix.n_cells(),
            n_intervals: matrix.n_intervals(),
            resolution_seconds: matrix.resolution_seconds(),
            start_timestamp: matrix.start_timestamp(),
        };
        let mut report = EvalJson {
            seed: cfg.seed()?,
            config: cfg.values(),
            source,
            cell_ids: matrix.cells().iter().map(|c| c.cell_id.clone()).collect(),
            timestamps: timestamps.clone(),
            methods: methods.iter().map(|m| m.report_key().to_string()).collect(),
            mean_nmae: None,
            results: None,
            sweep: None,
        };
        match param_name {
            Some(param) => {
                report.sweep = Some(SweepJson {
                    param: param.to_string(),
                    points: points
                        .into_iter()
                        .map(|(value, results)| SweepPointJson {
                            value: value.unwrap_or(f64::NAN),
                            mean_nmae: means(&results, &methods),
                            results,
                        })
                        .collect(),
                })
            }
            None => {
                let (_, results) = points.into_iter().next().expect("one evaluation point");
                report.mean_nmae = Some(means(&results, &methods));
                report.results = Some(results);
            }
        }
        write_json(Path::new(path), &report)?;
    }
    Ok(())
}

pub fn sparsity(cfg: &RunConfig) -> Result<(), CliError> {
    let matrix = load_matrix(cfg)?;
    let t: usize = cfg.require_parsed("timestamp")?;
    let report = voronoi_sparsity(&matrix, t)?;
    let to_stdout = cfg.get("output").is_none();
    write_output(cfg.get("output"), |w| {
        let mut table = Table::new(w, &["cell_id", "density", "voronoi_area"])?;
        for d in &report.per_cell_density {
            table.row([d.cell_id.clone(), num(d.density), num(d.voronoi_area)])?;
        }
        table.finish()
    })?;
    if let Some(path) = cfg.get("json") {
        write_json(Path::new(path), &report)?;
    }
    if to_stdout {
        eprintln!("gini {}", report.gini);
    } else {
        println!("gini {}", report.gini);
    }
    Ok(())
}
