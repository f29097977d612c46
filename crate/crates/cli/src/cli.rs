use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Flags that set configuration keys. Unset flags leave the config file (or
/// the default) in charge.
pub trait ConfigFlags {
    fn pairs(&self, out: &mut Vec<(String, String)>);
}

macro_rules! push_set {
    ($out:ident, $self:ident; $($field:ident),* $(,)?) => {
        $(
            if let Some(v) = &$self.$field {
                $out.push((stringify!($field).to_string(), v.to_string()));
            }
        )*
    };
}

macro_rules! push_switch {
    ($out:ident, $self:ident; $($field:ident => $key:literal = $value:literal),* $(,)?) => {
        $(
            if $self.$field {
                $out.push(($key.to_string(), $value.to_string()));
            }
        )*
    };
}

#[derive(Debug, Parser)]
#[command(name = "alphacast", version, about = "Stable-law traffic modeling and sparse ADM forecasting for cellular networks")]
#[command(after_help = "Every setting can also come from a config file of `key = value` lines (see --config) \
or from --set KEY=VALUE. Priority: flags, then --set, then the config file, then ALPHACAST_SEED (seed only), \
then built-in defaults.\n\nExit status: 0 success, 2 usage, 3 data format, 4 numerical failure.")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Config file of `key = value` lines; `#` starts a comment
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Set any config key (repeatable)
    #[arg(long = "set", global = true, value_name = "KEY=VALUE", value_parser = parse_key_value)]
    pub set: Vec<(String, String)>,
    /// Random seed [default: $ALPHACAST_SEED, else 0]
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

fn parse_key_value(s: &str) -> Result<(String, String), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected KEY=VALUE, got '{s}'"))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a stable law to every cell and to the pooled data
    FitStable(FitStableArgs),
    /// Write a synthetic scenario as traffic and cells CSV files
    Generate(GenerateArgs),
    /// Forecast one interval for every cell
    Predict(PredictArgs),
    /// Score forecasting methods by NMAE, optionally over a parameter sweep
    Eval(EvalArgs),
    /// Voronoi traffic density of every cell at one interval
    Sparsity(SparsityArgs),
}

impl Command {
    pub fn pairs(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        match self {
            Command::FitStable(a) => {
                a.input.pairs(&mut out);
                push_set!(out, a; quantization_levels, output, json);
            }
            Command::Generate(a) => {
                a.scenario.pairs(&mut out);
                push_set!(out, a; output, cells, wide);
            }
            Command::Predict(a) => {
                a.input.pairs(&mut out);
                a.predictor.pairs(&mut out);
                a.adm.pairs(&mut out);
                push_set!(out, a; method, t_end, output);
            }
            Command::Eval(a) => {
                a.input.pairs(&mut out);
                a.predictor.pairs(&mut out);
                a.adm.pairs(&mut out);
                push_set!(out, a; timestamps, methods, sweep, sweep_values, output, json, errors);
                push_switch!(out, a; timing => "timing" = "true");
            }
            Command::Sparsity(a) => {
                a.input.pairs(&mut out);
                push_set!(out, a; timestamp, output, json);
            }
        }
        out
    }
}

/// Traffic source: CSV files, or a synthetic scenario when `--traffic` is absent.
#[derive(Debug, Args)]
pub struct InputArgs {
    /// Long-form traffic CSV (timestamp,cell_id,service,bytes)
    #[arg(long, value_name = "PATH")]
    pub traffic: Option<String>,
    /// Cells CSV (cell_id,lat,lon)
    #[arg(long, value_name = "PATH")]
    pub cells: Option<String>,
    /// Keep only records of this service (IM, web, video, other)
    #[arg(long)]
    pub service: Option<String>,
    /// Interval length in seconds [default: inferred]
    #[arg(long)]
    pub resolution_seconds: Option<i64>,
    /// Merge cells that share coordinates
    #[arg(long)]
    pub merge_colocated: bool,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
}

impl ConfigFlags for InputArgs {
    fn pairs(&self, out: &mut Vec<(String, String)>) {
        push_set!(out, self; traffic, cells, service, resolution_seconds);
        push_switch!(out, self; merge_colocated => "merge_colocated" = "true");
        self.scenario.pairs(out);
    }
}

/// Synthetic scenario (used when no traffic file is given). Less common
/// knobs are config keys only.
#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// Synthetic service: im, web, video or other [default: im]
    #[arg(long)]
    pub scenario: Option<String>,
    /// Synthetic cell count [default: 113]
    #[arg(long)]
    pub n_cells: Option<usize>,
    /// Synthetic interval count [default: 288]
    #[arg(long)]
    pub n_intervals: Option<usize>,
    /// Non-zeros per ground-truth code column
    #[arg(long)]
    pub hotspot_count: Option<usize>,
}

impl ConfigFlags for ScenarioArgs {
    fn pairs(&self, out: &mut Vec<(String, String)>) {
        push_set!(out, self; scenario, n_cells, n_intervals, hotspot_count);
    }
}

#[derive(Debug, Args)]
pub struct PredictorArgs {
    /// Training window length [default: 36]
    #[arg(long)]
    pub n: Option<usize>,
    /// Prediction coefficients [default: 10]
    #[arg(long)]
    pub m: Option<usize>,
    /// Forecast lag [default: 1]
    #[arg(long)]
    pub k: Option<usize>,
    /// Fixed exponent; also the fallback of per-cell fits [default: 2]
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Relative ridge of the coefficient system [default: 1e-8]
    #[arg(long)]
    pub ridge: Option<f64>,
    /// Exponent source [default: per-cell]
    #[arg(long, value_parser = ["per-cell", "fixed"])]
    pub alpha_source: Option<String>,
}

impl ConfigFlags for PredictorArgs {
    fn pairs(&self, out: &mut Vec<(String, String)>) {
        push_set!(out, self; n, m, k, alpha, ridge, alpha_source);
    }
}

#[derive(Debug, Args)]
pub struct AdmArgs {
    /// Noise weight [default: 10]
    #[arg(long)]
    pub lambda1: Option<f64>,
    /// Sparse-term weight [default: 1]
    #[arg(long)]
    pub lambda2: Option<f64>,
    /// Initial l1 weight [default: 1]
    #[arg(long)]
    pub gamma0: Option<f64>,
    /// Initial penalty [default: 1e-4]
    #[arg(long)]
    pub eta0: Option<f64>,
    /// Penalty growth ratio [default: 1.1]
    #[arg(long)]
    pub rho: Option<f64>,
    /// ADM iterations [default: 20]
    #[arg(long)]
    pub outer_iterations: Option<usize>,
    /// Dictionary rounds per ADM iteration [default: 3]
    #[arg(long)]
    pub inner_iterations: Option<usize>,
    /// Relative change that stops the iteration early [default: 1e-6]
    #[arg(long)]
    pub early_stop_tol: Option<f64>,
    /// OMP support size [default: min(N, K)]
    #[arg(long)]
    pub omp_max_nonzeros: Option<usize>,
    /// Number of dictionary atoms [default: N]
    #[arg(long)]
    pub dictionary_size: Option<usize>,
    /// Initial dictionary [default: snapshots]
    #[arg(long, value_parser = ["snapshots", "zero"])]
    pub dictionary_init: Option<String>,
    /// Keep negative forecasts instead of flooring them at zero
    #[arg(long)]
    pub no_clamp: bool,
}

impl ConfigFlags for AdmArgs {
    fn pairs(&self, out: &mut Vec<(String, String)>) {
        push_set!(out, self; lambda1, lambda2, gamma0, eta0, rho, outer_iterations, inner_iterations,
            early_stop_tol, omp_max_nonzeros, dictionary_size, dictionary_init);
        push_switch!(out, self; no_clamp => "clamp_nonnegative" = "false");
    }
}

#[derive(Debug, Args)]
pub struct FitStableArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Bins of the quantized CDF used by the K-S test [default: 100]
    #[arg(long)]
    pub quantization_levels: Option<usize>,
    /// Output CSV [default: stdout]
    #[arg(long, short, value_name = "PATH")]
    pub output: Option<String>,
    /// Also write the fits as JSON
    #[arg(long, value_name = "PATH")]
    pub json: Option<String>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Traffic CSV to write
    #[arg(long, short, value_name = "PATH")]
    pub output: Option<String>,
    /// Cells CSV to write
    #[arg(long, value_name = "PATH")]
    pub cells: Option<String>,
    /// Also write the cells x intervals matrix in wide form
    #[arg(long, value_name = "PATH")]
    pub wide: Option<String>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub predictor: PredictorArgs,
    #[command(flatten)]
    pub adm: AdmArgs,
    /// Forecasting method [default: adm-lars]
    #[arg(long, value_parser = ["adm-lars", "adm-omp", "linear", "ls-ar"])]
    pub method: Option<String>,
    /// Training window end, exclusive; the forecast is for interval t_end + k - 1
    /// [default: number of intervals]
    #[arg(long)]
    pub t_end: Option<usize>,
    /// Output CSV [default: stdout]
    #[arg(long, short, value_name = "PATH")]
    pub output: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub predictor: PredictorArgs,
    #[command(flatten)]
    pub adm: AdmArgs,
    /// Comma-separated interval indices to predict [default: 84,108,144,192,252]
    #[arg(long)]
    pub timestamps: Option<String>,
    /// Comma-separated methods [default: adm-lars,adm-omp,linear,ls-ar]
    #[arg(long)]
    pub methods: Option<String>,
    /// Parameter to sweep
    #[arg(long, value_parser = ["n", "m", "k", "lambda1", "lambda2", "gamma0", "eta0", "rho", "outer", "inner"])]
    pub sweep: Option<String>,
    /// Comma-separated values of the swept parameter
    #[arg(long)]
    pub sweep_values: Option<String>,
    /// Record runtimes; reports then differ between runs
    #[arg(long)]
    pub timing: bool,
    /// Output CSV [default: stdout]
    #[arg(long, short, value_name = "PATH")]
    pub output: Option<String>,
    /// JSON report with the effective configuration
    #[arg(long, value_name = "PATH")]
    pub json: Option<String>,
    /// Per-cell absolute errors CSV
    #[arg(long, value_name = "PATH")]
    pub errors: Option<String>,
}

#[derive(Debug, Args)]
pub struct SparsityArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Interval index
    #[arg(long)]
    pub timestamp: Option<usize>,
    /// Output CSV [default: stdout]
    #[arg(long, short, value_name = "PATH")]
    pub output: Option<String>,
    /// Also write the report as JSON
    #[arg(long, value_name = "PATH")]
    pub json: Option<String>,
}
