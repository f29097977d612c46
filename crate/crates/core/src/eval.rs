//! Evaluation harness: NMAE of each forecasting method at chosen timestamps,
//! with optional parameter sweeps.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::adm::{refine, AdmConfig, AdmError, SparseMethod};
use crate::linear_prediction::{effective_alpha, forecast_with_alphas, ls_ar_forecast, LinearPredictorSpec, PredictionError};
use crate::stable::estimate;
use crate::traffic::TrafficMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("ground truth is all zero, NMAE undefined")]
    ZeroTruth,
    #[error("length mismatch: {prediction} predictions for {truth} truths")]
    LengthMismatch { prediction: usize, truth: usize },
    #[error("timestamp {timestamp} is not predictable: {reason}")]
    BadTimestamp { timestamp: usize, reason: String },
    #[error("unknown method '{0}', expected one of adm-lars, adm-omp, linear, ls-ar")]
    UnknownMethod(String),
    #[error("unknown sweep parameter '{0}', expected one of n, m, k, lambda1, lambda2, gamma0, eta0, rho, outer, inner")]
    UnknownSweep(String),
    #[error("invalid sweep value {value} for {param}")]
    BadSweepValue { param: String, value: f64 },
    #[error(transparent)]
    Prediction(#[from] PredictionError),
    #[error(transparent)]
    Adm(#[from] AdmError),
}

/// `Σ|x̂ − x| / Σ|x|`.
pub fn nmae(prediction: &[f64], truth: &[f64]) -> Result<f64, EvalError> {
    if prediction.len() != truth.len() {
        return Err(EvalError::LengthMismatch { prediction: prediction.len(), truth: truth.len() });
    }
    let den: f64 = truth.iter().map(|v| v.abs()).sum();
    if den == 0.0 {
        return Err(EvalError::ZeroTruth);
    }
    let num: f64 = prediction.iter().zip(truth).map(|(p, t)| (p - t).abs()).sum();
    Ok(num / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    AdmLars,
    AdmOmp,
    Linear,
    LsAr,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::AdmLars, Method::AdmOmp, Method::Linear, Method::LsAr];

    /// Command-line spelling.
    pub fn as_str(self) -> &'static str {
        match self {
            Method::AdmLars => "adm-lars",
            Method::AdmOmp => "adm-omp",
            Method::Linear => "linear",
            Method::LsAr => "ls-ar",
        }
    }

    /// Report column name.
    pub fn report_key(self) -> &'static str {
        match self {
            Method::AdmLars => "adm_lars",
            Method::AdmOmp => "adm_omp",
            Method::Linear => "linear_baseline",
            Method::LsAr => "ls_ar_baseline",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = EvalError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| EvalError::UnknownMethod(s.to_string()))
    }
}

/// Where the predictor's exponent comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlphaSource {
    /// Use `LinearPredictorSpec::alpha` for every cell.
    Fixed,
    /// Fit each cell's history before the window end; cells with too little
    /// usable history fall back to the pooled fit, then to the fixed value.
    #[default]
    PerCell,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EvalSettings {
    pub predictor: LinearPredictorSpec<f64>,
    pub adm: AdmConfig<f64>,
    pub alpha_source: AlphaSource,
    pub timing: bool,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            predictor: LinearPredictorSpec::default(),
            adm: AdmConfig::default(),
            alpha_source: AlphaSource::PerCell,
            timing: false,
        }
    }
}

/// 7AM, 9AM, 12PM, 4PM and 9PM at five-minute resolution.
pub const DEFAULT_TIMESTAMPS: [usize; 5] = [84, 108, 144, 192, 252];

/// Exponents for each cell from the history `[0, t_end)`.
pub fn prediction_alphas(matrix: &TrafficMatrix<f64>, t_end: usize, settings: &EvalSettings) -> Vec<f64> {
    let n = matrix.n_cells();
    let fixed = settings.predictor.alpha;
    if settings.alpha_source == AlphaSource::Fixed {
        return vec![fixed; n];
    }
    let pooled: Vec<f64> = (0..n).flat_map(|i| (0..t_end).map(move |t| (i, t))).map(|(i, t)| matrix.value(i, t)).collect();
    let pooled_alpha = estimate(&pooled).map(|(p, _)| effective_alpha(&p)).unwrap_or(fixed);
    (0..n)
        .into_par_iter()
        .map(|i| {
            let row: Vec<f64> = (0..t_end).map(|t| matrix.value(i, t)).collect();
            estimate(&row).map(|(p, _)| effective_alpha(&p)).unwrap_or(pooled_alpha)
        })
        .collect()
}

/// One method's forecast for one timestamp.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct MethodResult {
    pub method: String,
    pub nmae: f64,
    pub prediction: Vec<f64>,
    pub abs_errors: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct TimestampResult {
    /// Index of the predicted interval.
    pub timestamp: usize,
    pub truth: Vec<f64>,
    pub methods: Vec<MethodResult>,
}

impl TimestampResult {
    pub fn nmae(&self, method: Method) -> Option<f64> {
        self.methods.iter().find(|m| m.method == method.report_key()).map(|m| m.nmae)
    }
}

/// Predicts interval `timestamp` with every requested method.
pub fn evaluate_timestamp(
    matrix: &TrafficMatrix<f64>,
    timestamp: usize,
    methods: &[Method],
    settings: &EvalSettings,
) -> Result<TimestampResult, EvalError> {
    let p = &settings.predictor;
    p.validate()?;
    settings.adm.validate()?;
    let bad = |reason: String| EvalError::BadTimestamp { timestamp, reason };
    if timestamp >= matrix.n_intervals() {
        return Err(bad(format!("only {} intervals available", matrix.n_intervals())));
    }
    if timestamp + 1 < p.k + p.n {
        return Err(bad(format!("needs at least n + k - 1 = {} earlier intervals", p.n + p.k - 1)));
    }
    let t_end = timestamp + 1 - p.k;
    let truth = matrix.column(timestamp).to_vec();

    let needs_alpha = methods.iter().any(|m| *m != Method::LsAr);
    let alphas = if needs_alpha { prediction_alphas(matrix, t_end, settings) } else { Vec::new() };
    let linear = if needs_alpha {
        let start = Instant::now();
        Some((forecast_with_alphas(matrix, t_end, p, &alphas)?, start.elapsed().as_secs_f64()))
    } else {
        None
    };

    let mut out = Vec::with_capacity(methods.len());
    for &method in methods {
        let start = Instant::now();
        let prediction = match method {
            Method::Linear => linear.as_ref().map(|(c, _)| c.values.clone()).unwrap_or_default(),
            Method::LsAr => ls_ar_forecast(matrix, t_end, p)?.values,
            Method::AdmLars | Method::AdmOmp => {
                let coarse = &linear.as_ref().expect("coarse forecast computed").0;
                let mut config = settings.adm;
                config.method = if method == Method::AdmLars { SparseMethod::Lars } else { SparseMethod::Omp };
                refine(&coarse.values, matrix.values(), t_end, &config, None)?.x_p
            }
        };
        let mut runtime = start.elapsed().as_secs_f64();
        if matches!(method, Method::AdmLars | Method::AdmOmp | Method::Linear) {
            runtime += linear.as_ref().map(|(_, t)| *t).unwrap_or(0.0);
        }
        let abs_errors: Vec<f64> = prediction.iter().zip(&truth).map(|(a, b)| (a - b).abs()).collect();
        out.push(MethodResult {
            method: method.report_key().to_string(),
            nmae: nmae(&prediction, &truth)?,
            prediction,
            abs_errors,
            runtime_seconds: settings.timing.then_some(runtime),
        });
    }
    Ok(TimestampResult { timestamp, truth, methods: out })
}

/// Evaluation over several timestamps.
pub fn evaluate(
    matrix: &TrafficMatrix<f64>,
    timestamps: &[usize],
    methods: &[Method],
    settings: &EvalSettings,
) -> Result<Vec<TimestampResult>, EvalError> {
    timestamps.iter().map(|&t| evaluate_timestamp(matrix, t, methods, settings)).collect()
}

/// Mean NMAE of `method` over the results.
pub fn mean_nmae(results: &[TimestampResult], method: Method) -> Option<f64> {
    let vals: Vec<f64> = results.iter().filter_map(|r| r.nmae(method)).collect();
    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
}

/// Parameter that a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    N,
    M,
    K,
    Lambda1,
    Lambda2,
    Gamma0,
    Eta0,
    Rho,
    Outer,
    Inner,
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::N => "n",
            SweepParam::M => "m",
            SweepParam::K => "k",
            SweepParam::Lambda1 => "lambda1",
            SweepParam::Lambda2 => "lambda2",
            SweepParam::Gamma0 => "gamma0",
            SweepParam::Eta0 => "eta0",
            SweepParam::Rho => "rho",
            SweepParam::Outer => "outer",
            SweepParam::Inner => "inner",
        }
    }

    /// Settings with this parameter set to `value`.
    pub fn apply(self, settings: &EvalSettings, value: f64) -> Result<EvalSettings, EvalError> {
        let bad = || EvalError::BadSweepValue { param: self.as_str().to_string(), value };
        let count = || -> Result<usize, EvalError> {
            if value >= 0.0 && value.fract() == 0.0 && value <= usize::MAX as f64 {
                Ok(value as usize)
            } else {
                Err(bad())
            }
        };
        let mut s = *settings;
        match self {
            SweepParam::N => s.predictor.n = count()?,
            SweepParam::M => s.predictor.m = count()?,
            SweepParam::K => s.predictor.k = count()?,
            SweepParam::Lambda1 => s.adm.lambda1 = value,
            SweepParam::Lambda2 => s.adm.lambda2 = value,
            SweepParam::Gamma0 => s.adm.gamma0 = value,
            SweepParam::Eta0 => s.adm.eta0 = value,
            SweepParam::Rho => s.adm.rho = value,
            SweepParam::Outer => s.adm.outer_iterations = count()?,
            SweepParam::Inner => s.adm.inner_iterations = count()?,
        }
        s.predictor.validate().map_err(|_| bad())?;
        s.adm.validate().map_err(|_| bad())?;
        Ok(s)
    }
}

impl FromStr for SweepParam {
    type Err = EvalError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        use SweepParam::*;
        [N, M, K, Lambda1, Lambda2, Gamma0, Eta0, Rho, Outer, Inner]
            .into_iter()
            .find(|p| p.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| EvalError::UnknownSweep(s.to_string()))
    }
}

/// One point of a sweep.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SweepPoint {
    pub value: f64,
    pub results: Vec<TimestampResult>,
}

pub fn sweep(
    matrix: &TrafficMatrix<f64>,
    timestamps: &[usize],
    methods: &[Method],
    settings: &EvalSettings,
    param: SweepParam,
    values: &[f64],
) -> Result<Vec<SweepPoint>, EvalError> {
    values
        .iter()
        .map(|&value| {
            let s = param.apply(settings, value)?;
            Ok(SweepPoint { value, results: evaluate(matrix, timestamps, methods, &s)? })
        })
        .collect()
}
