//! Flat `key = value` run configuration.
//!
//! Values are resolved from, in increasing priority: built-in defaults, the
//! `ALPHACAST_SEED` environment variable (seed only), the `--config` file and
//! command-line flags. Every key must appear in [`SCHEMA`].

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use alphacast::eval::{AlphaSource, EvalSettings, SweepParam};
use alphacast::traffic::{IngestOptions, Profile, ScenarioSpec};
use alphacast::{AdmConfig, DictionaryInit, LinearPredictorSpec, Method, Service, StableParams};

use crate::error::CliError;

pub const SEED_ENV: &str = "ALPHACAST_SEED";

/// `(key, default, description)`. An empty default means "unset".
pub const SCHEMA: &[(&str, &str, &str)] = &[
    ("seed", "0", "random seed"),
    ("traffic", "", "traffic CSV (long form)"),
    ("cells", "", "cells CSV"),
    ("output", "", "output path"),
    ("json", "", "JSON report path"),
    ("errors", "", "per-cell error CSV path"),
    ("wide", "", "wide-form matrix CSV path"),
    ("service", "", "keep only records of this service"),
    ("resolution_seconds", "", "interval length in seconds (inferred when unset; 300 for generate)"),
    ("merge_colocated", "false", "merge cells sharing coordinates"),
    ("quantization_levels", "100", "bins of the quantized CDF"),
    ("n", "36", "training window length"),
    ("m", "10", "number of prediction coefficients"),
    ("k", "1", "forecast lag"),
    ("alpha", "2", "fixed exponent, also the last fallback of per-cell fits"),
    ("ridge", "1e-8", "relative ridge of the coefficient system"),
    ("alpha_source", "per-cell", "per-cell or fixed"),
    ("lambda1", "10", "weight of the noise term"),
    ("lambda2", "1", "weight of the sparse term"),
    ("gamma0", "1", "initial l1 weight"),
    ("eta0", "1e-4", "initial penalty"),
    ("rho", "1.1", "penalty growth ratio"),
    ("outer_iterations", "20", "ADM iterations"),
    ("inner_iterations", "3", "dictionary-learning rounds per ADM iteration"),
    ("early_stop_tol", "1e-6", "relative change that stops the iteration"),
    ("sparsity_budget", "0", "reported l1 budget"),
    ("clamp_nonnegative", "true", "floor forecasts at zero"),
    ("omp_max_nonzeros", "", "OMP support size (min(N, K) when unset)"),
    ("dictionary_size", "", "number of atoms (N when unset)"),
    ("dictionary_init", "snapshots", "snapshots or zero"),
    ("method", "adm-lars", "adm-lars, adm-omp, linear or ls-ar"),
    ("t_end", "", "end of the training window (exclusive)"),
    ("timestamps", "84,108,144,192,252", "interval indices to predict"),
    ("methods", "adm-lars,adm-omp,linear,ls-ar", "methods to evaluate"),
    ("sweep", "", "parameter to sweep: n, m, k, lambda1, lambda2, gamma0, eta0, rho, outer, inner"),
    ("sweep_values", "", "comma-separated sweep values"),
    ("timing", "false", "record runtimes (makes reports run-dependent)"),
    ("timestamp", "", "interval index for the sparsity report"),
    ("scenario", "im", "synthetic service: im, web, video or other"),
    ("n_cells", "113", "synthetic cells"),
    ("n_intervals", "288", "synthetic intervals"),
    ("start_timestamp", "1420070400", "epoch seconds of the first interval"),
    ("hotspot_count", "", "non-zeros per code column (service default when unset)"),
    ("dictionary_rank", "12", "ground-truth atoms"),
    ("hotspot_gain", "1.5", "hotspot amplitude relative to the profile"),
    ("persistence", "0.3", "AR(1) coefficient of the innovations"),
    ("stable_alpha", "", "innovation alpha (service default when unset)"),
    ("stable_beta", "", "innovation beta"),
    ("stable_sigma", "", "innovation sigma"),
    ("stable_mu", "", "innovation mu"),
    ("profile", "diurnal", "diurnal or flat"),
    ("profile_base", "", "profile base, or flat level (2 sigma when unset)"),
    ("profile_amplitude", "", "diurnal amplitude (sigma when unset)"),
    ("center_lat", "30.27", "latitude of the layout centre"),
    ("center_lon", "120.15", "longitude of the layout centre"),
    ("spread_deg", "0.08", "layout spread in degrees"),
    ("capacity_factor", "1000", "volume ceiling as a multiple of the profile peak; none disables it"),
];

/// Resolved configuration. Every schema key is present.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

fn known(key: &str) -> bool {
    SCHEMA.iter().any(|(k, _, _)| *k == key)
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str, origin: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("{origin}:{}: expected 'key = value'", idx + 1)))?;
        let key = key.trim().replace('-', "_");
        let value = value.trim().trim_matches('"').to_string();
        if !known(&key) {
            return Err(CliError::usage(format!("{origin}:{}: unknown key '{key}'", idx + 1)));
        }
        if out.insert(key.clone(), value).is_some() {
            return Err(CliError::usage(format!("{origin}:{}: duplicate key '{key}'", idx + 1)));
        }
    }
    Ok(out)
}

impl RunConfig {
    /// Defaults, then the seed variable, then `file`, then `flags`.
    pub fn resolve(
        file: Option<&Path>,
        env_seed: Option<String>,
        flags: &[(String, String)],
    ) -> Result<Self, CliError> {
        let mut values: BTreeMap<String, String> =
            SCHEMA.iter().map(|(k, d, _)| (k.to_string(), d.to_string())).collect();
        if let Some(seed) = env_seed {
            values.insert("seed".into(), seed);
        }
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
            values.extend(parse_config_text(&text, &path.display().to_string())?);
        }
        for (k, v) in flags {
            let key = k.replace('-', "_");
            if !known(&key) {
                return Err(CliError::usage(format!("unknown key '{k}'")));
            }
            values.insert(key, v.clone());
        }
        let cfg = Self { values };
        cfg.get_parsed::<u64>("seed")?;
        Ok(cfg)
    }

    pub fn values(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    /// Raw value, `None` when empty.
    pub fn get(&self, key: &str) -> Option<&str> {
        debug_assert!(known(key), "key {key} missing from schema");
        self.values.get(key).map(String::as_str).filter(|v| !v.is_empty())
    }

    pub fn require(&self, key: &str) -> Result<&str, CliError> {
        self.get(key).ok_or_else(|| CliError::usage(format!("missing required value '{key}'")))
    }

    pub fn get_parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|e| CliError::usage(format!("invalid value '{v}' for {key}: {e}"))))
            .transpose()
    }

    fn parsed_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.get_parsed(key)?.unwrap_or(default))
    }

    pub fn require_parsed<T: FromStr>(&self, key: &str) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.get_parsed(key)?.ok_or_else(|| CliError::usage(format!("missing required value '{key}'")))
    }

    pub fn flag(&self, key: &str) -> Result<bool, CliError> {
        match self.get(key).map(str::to_ascii_lowercase).as_deref() {
            None | Some("false") | Some("0") | Some("no") => Ok(false),
            Some("true") | Some("1") | Some("yes") => Ok(true),
            Some(other) => Err(CliError::usage(format!("invalid boolean '{other}' for {key}"))),
        }
    }

    pub fn seed(&self) -> Result<u64, CliError> {
        self.require_parsed("seed")
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .unwrap_or("")
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<T>().map_err(|e| CliError::usage(format!("invalid entry '{s}' in {key}: {e}"))))
            .collect()
    }

    pub fn ingest_options(&self) -> Result<IngestOptions, CliError> {
        let service = self.get("service").map(Service::from_str).transpose().map_err(CliError::usage)?;
        Ok(IngestOptions {
            resolution_seconds: self.get_parsed("resolution_seconds")?,
            service,
            merge_colocated: self.flag("merge_colocated")?,
        })
    }

    pub fn predictor(&self) -> Result<LinearPredictorSpec, CliError> {
        let spec = LinearPredictorSpec::new(self.require_parsed("n")?, self.require_parsed("m")?, self.require_parsed("k")?, self.require_parsed("alpha")?)?;
        Ok(spec.with_ridge(self.require_parsed("ridge")?)?)
    }

    pub fn adm(&self) -> Result<AdmConfig, CliError> {
        let init = match self.require("dictionary_init")? {
            "snapshots" => DictionaryInit::Snapshots,
            "zero" => DictionaryInit::Zero,
            other => return Err(CliError::usage(format!("invalid dictionary_init '{other}' (snapshots or zero)"))),
        };
        let config = AdmConfig {
            lambda1: self.require_parsed("lambda1")?,
            lambda2: self.require_parsed("lambda2")?,
            gamma0: self.require_parsed("gamma0")?,
            eta0: self.require_parsed("eta0")?,
            rho: self.require_parsed("rho")?,
            outer_iterations: self.require_parsed("outer_iterations")?,
            inner_iterations: self.require_parsed("inner_iterations")?,
            early_stop_tol: self.require_parsed("early_stop_tol")?,
            sparsity_budget: self.require_parsed("sparsity_budget")?,
            clamp_nonnegative: self.flag("clamp_nonnegative")?,
            omp_max_nonzeros: self.get_parsed("omp_max_nonzeros")?,
            dictionary_size: self.get_parsed("dictionary_size")?,
            dictionary_init: init,
            ..AdmConfig::default()
        };
        config.validate()?;
        Ok(config)
    }

    pub fn eval_settings(&self) -> Result<EvalSettings, CliError> {
        let alpha_source = match self.require("alpha_source")? {
            "per-cell" => AlphaSource::PerCell,
            "fixed" => AlphaSource::Fixed,
            other => return Err(CliError::usage(format!("invalid alpha_source '{other}' (per-cell or fixed)"))),
        };
        Ok(EvalSettings {
            predictor: self.predictor()?,
            adm: self.adm()?,
            alpha_source,
            timing: self.flag("timing")?,
        })
    }

    pub fn method(&self) -> Result<Method, CliError> {
        Ok(self.require("method")?.parse::<Method>()?)
    }

    pub fn methods(&self) -> Result<Vec<Method>, CliError> {
        let methods: Vec<Method> = self
            .require("methods")?
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<Method>().map_err(CliError::from))
            .collect::<Result<_, _>>()?;
        if methods.is_empty() {
            return Err(CliError::usage("no methods selected"));
        }
        Ok(methods)
    }

    pub fn sweep(&self) -> Result<Option<(SweepParam, Vec<f64>)>, CliError> {
        let Some(param) = self.get("sweep") else {
            return Ok(None);
        };
        let param: SweepParam = param.parse()?;
        let values: Vec<f64> = self.list("sweep_values")?;
        if values.is_empty() {
            return Err(CliError::usage("sweep needs sweep_values"));
        }
        Ok(Some((param, values)))
    }

    pub fn scenario(&self) -> Result<ScenarioSpec, CliError> {
        let service: Service = self.require("scenario")?.parse().map_err(CliError::usage)?;
        let mut spec = ScenarioSpec::for_service(service);
        let d = spec.params;
        spec.params = StableParams::new(
            self.parsed_or("stable_alpha", d.alpha)?,
            self.parsed_or("stable_beta", d.beta)?,
            self.parsed_or("stable_sigma", d.sigma)?,
            self.parsed_or("stable_mu", d.mu)?,
        )?;
        let sigma = spec.params.sigma;
        spec.n_cells = self.require_parsed("n_cells")?;
        spec.n_intervals = self.require_parsed("n_intervals")?;
        spec.resolution_seconds = self.parsed_or("resolution_seconds", 300)?;
        spec.start_timestamp = self.require_parsed("start_timestamp")?;
        spec.hotspot_count = self.parsed_or("hotspot_count", spec.hotspot_count)?;
        spec.dictionary_rank = self.require_parsed("dictionary_rank")?;
        spec.hotspot_gain = self.require_parsed("hotspot_gain")?;
        spec.persistence = self.require_parsed("persistence")?;
        spec.center = (self.require_parsed("center_lat")?, self.require_parsed("center_lon")?);
        spec.spread_deg = self.require_parsed("spread_deg")?;
        let base = self.parsed_or("profile_base", 2.0 * sigma)?;
        let amplitude = self.parsed_or("profile_amplitude", sigma)?;
        spec.profile = match self.require("profile")? {
            "diurnal" => Profile::Diurnal { base, amplitude },
            "flat" => Profile::Flat { level: base },
            other => return Err(CliError::usage(format!("invalid profile '{other}' (diurnal or flat)"))),
        };
        let peak = match spec.profile {
            Profile::Diurnal { base, amplitude } => base + amplitude,
            Profile::Flat { level } => level,
        };
        spec.capacity = match self.require("capacity_factor")? {
            "none" => None,
            v => Some(v.parse::<f64>().map_err(|e| CliError::usage(format!("invalid capacity_factor '{v}': {e}")))? * peak),
        };
        spec.validate().map_err(CliError::usage)?;
        Ok(spec)
    }
}
