//! Synthetic traffic scenarios with known ground truth.
//!
//! Each entry is
//!
//! ```text
//! X(i, t) = max(0, p(t) + (D_true s_t)_i + ξ_i(t))
//! ```
//!
//! where `p` is a diurnal profile, `D_true` holds unit-norm spatial hotspot
//! atoms, `s_t` has exactly `hotspot_count` non-zero entries, and every
//! `ξ_i` is a stationary stable AR(1) sequence whose marginal law is exactly
//! the scenario's stable parameters. Observed volumes saturate at an optional
//! per-cell capacity.

use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CellMeta, Service, TrafficMatrix};
use crate::linalg::Matrix;
use crate::scalar::Scalar;
use crate::stable::{StableParams, StableSampler};

/// Shape of the deterministic time profile.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// `base` plus two daily harmonics with late-morning and evening peaks,
    /// floored at a tenth of the peak and scaled so the peak adds `amplitude`.
    Diurnal { base: f64, amplitude: f64 },
    /// Constant `level`.
    Flat { level: f64 },
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ScenarioSpec {
    pub n_cells: usize,
    pub n_intervals: usize,
    pub resolution_seconds: i64,
    pub start_timestamp: i64,
    pub service: Service,
    /// Marginal law of the per-cell innovations.
    pub params: StableParams<f64>,
    /// Non-zeros per column of the hotspot code (K_true).
    pub hotspot_count: usize,
    /// Number of hotspot atoms in `D_true`.
    pub dictionary_rank: usize,
    /// Hotspot code magnitude in units of σ at the profile peak.
    pub hotspot_gain: f64,
    /// Lag-one coefficient of the innovation sequences, in `[0, 1)`.
    pub persistence: f64,
    pub profile: Profile,
    /// Centre of the cell layout, degrees.
    pub center: (f64, f64),
    /// Half-width of the square cell layout, degrees.
    pub spread_deg: f64,
    /// Per-interval ceiling on every cell's volume; `None` leaves it unbounded.
    pub capacity: Option<f64>,
}

/// Default capacity as a multiple of the diurnal peak.
pub const CAPACITY_FACTOR: f64 = 1000.0;

impl ScenarioSpec {
    fn base(service: Service, params: StableParams<f64>, hotspot_count: usize) -> Self {
        Self {
            n_cells: 113,
            n_intervals: 288,
            resolution_seconds: 300,
            start_timestamp: 1_420_070_400,
            service,
            params,
            hotspot_count,
            dictionary_rank: 12,
            hotspot_gain: 1.5,
            persistence: 0.3,
            profile: Profile::Diurnal { base: 2.0 * params.sigma, amplitude: params.sigma },
            center: (30.27, 120.15),
            spread_deg: 0.08,
            capacity: Some(CAPACITY_FACTOR * 3.0 * params.sigma),
        }
    }

    /// Instant messaging: α = 1.61, β = 1, σ = 188.67, μ = 221.83.
    pub fn im() -> Self {
        Self::base(Service::Im, StableParams { alpha: 1.61, beta: 1.0, sigma: 188.67, mu: 221.83 }, 8)
    }

    /// Web browsing: α = 1.60, β = 1, σ = 32.33, μ = 42.75.
    pub fn web() -> Self {
        Self::base(Service::Web, StableParams { alpha: 1.60, beta: 1.0, sigma: 32.33, mu: 42.75 }, 6)
    }

    /// Video: α = 0.51, β = 1, σ = 136.52, μ = −341.15.
    pub fn video() -> Self {
        Self::base(Service::Video, StableParams { alpha: 0.51, beta: 1.0, sigma: 136.52, mu: -341.15 }, 3)
    }

    pub fn for_service(service: Service) -> Self {
        match service {
            Service::Im => Self::im(),
            Service::Web => Self::web(),
            Service::Video => Self::video(),
            Service::Other => Self { service: Service::Other, ..Self::web() },
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        self.params.validate().map_err(|e| e.to_string())?;
        if self.n_cells == 0 || self.n_intervals == 0 {
            return Err("n_cells and n_intervals must be > 0".into());
        }
        if self.resolution_seconds <= 0 {
            return Err("resolution_seconds must be > 0".into());
        }
        if self.dictionary_rank == 0 || self.hotspot_count > self.dictionary_rank {
            return Err(format!(
                "need 0 < dictionary_rank and hotspot_count <= dictionary_rank, got {} and {}",
                self.dictionary_rank, self.hotspot_count
            ));
        }
        if !(0.0..1.0).contains(&self.persistence) {
            return Err(format!("persistence must be in [0, 1), got {}", self.persistence));
        }
        if !(self.hotspot_gain >= 0.0) {
            return Err("hotspot_gain must be >= 0".into());
        }
        let levels = match self.profile {
            Profile::Diurnal { base, amplitude } => [base, amplitude],
            Profile::Flat { level } => [level, 0.0],
        };
        if levels.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err("profile levels must be finite and >= 0".into());
        }
        if !(self.spread_deg > 0.0) {
            return Err("spread_deg must be > 0".into());
        }
        if let Some(c) = self.capacity {
            if !(c > 0.0) {
                return Err(format!("capacity must be > 0, got {c}"));
            }
        }
        Ok(())
    }
}

/// Unscaled two-harmonic day shape at hour-of-day `h`.
fn day_shape(h: f64) -> f64 {
    use std::f64::consts::TAU;
    0.6 * (TAU * (h - 15.0) / 24.0).cos() + 0.4 * (2.0 * TAU * (h - 10.5) / 24.0).cos()
}

/// Profile value at epoch second `ts`.
pub fn diurnal_profile(profile: Profile, ts: i64) -> f64 {
    match profile {
        Profile::Flat { level } => level,
        Profile::Diurnal { base, amplitude } => {
            // extremes of the day shape on a one-minute grid
            let (lo, hi) = (0..1440).map(|m| day_shape(m as f64 / 60.0)).fold((f64::MAX, f64::MIN), |(a, b), v| {
                (a.min(v), b.max(v))
            });
            let h = ts.rem_euclid(86_400) as f64 / 3600.0;
            let unit = (day_shape(h) - lo) / (hi - lo);
            base + amplitude * unit.max(0.1)
        }
    }
}

/// Hidden structure of a generated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth<T = f64> {
    /// `N × R` hotspot atoms, unit-norm columns.
    pub dictionary: Matrix<T>,
    /// `R × T` codes; every column has exactly `hotspot_count` non-zeros.
    pub codes: Matrix<T>,
    /// Profile value per interval.
    pub profile: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScenario<T = f64> {
    pub matrix: TrafficMatrix<T>,
    pub truth: GroundTruth<T>,
}

/// Builds a scenario deterministically from `seed`.
pub fn generate_synthetic<T: Scalar>(spec: &ScenarioSpec, seed: u64) -> Result<SyntheticScenario<T>, String> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = spec.n_cells;
    let len = spec.n_intervals;
    let r = spec.dictionary_rank;

    let cells: Vec<CellMeta> = (0..n)
        .map(|i| {
            let lat = spec.center.0 + rng.random_range(-spec.spread_deg..spec.spread_deg);
            let lon = spec.center.1 + rng.random_range(-spec.spread_deg..spec.spread_deg);
            CellMeta { cell_id: format!("cell_{i:03}"), latitude: lat, longitude: lon }
        })
        .collect();

    // Gaussian bumps centred on random cells
    let width = spec.spread_deg * 0.35;
    let mut atoms = Matrix::<f64>::zeros(n, r);
    for j in 0..r {
        let c = &cells[rng.random_range(0..n)];
        let col = atoms.column_mut(j);
        for (v, cell) in col.iter_mut().zip(&cells) {
            let d2 = (cell.latitude - c.latitude).powi(2) + (cell.longitude - c.longitude).powi(2);
            *v = (-d2 / (2.0 * width * width)).exp();
        }
        let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        col.iter_mut().for_each(|v| *v /= norm);
    }

    let profile: Vec<f64> =
        (0..len).map(|t| diurnal_profile(spec.profile, spec.start_timestamp + t as i64 * spec.resolution_seconds)).collect();
    let peak = profile.iter().copied().fold(0.0, f64::max);

    let p = spec.params;
    let phi = spec.persistence;
    let marginal = StableSampler::new(p);
    let innovation = StableSampler::new(innovation_params(&p, phi));

    let cap = spec.capacity.unwrap_or(f64::INFINITY);
    let mut xi: Vec<f64> = (0..n).map(|_| marginal.draw(&mut rng)).collect();
    let mut codes = Matrix::<f64>::zeros(r, len);
    let mut values = Matrix::<T>::zeros(n, len);
    for t in 0..len {
        if t > 0 {
            for v in xi.iter_mut() {
                *v = phi * *v + innovation.draw(&mut rng);
            }
        }
        let scale = if peak > 0.0 { spec.hotspot_gain * p.sigma * profile[t] / peak } else { 0.0 };
        for j in sample_indices(&mut rng, r, spec.hotspot_count).into_iter() {
            codes[(j, t)] = scale * rng.random_range(0.5..1.5);
        }
        let spatial = atoms.mul_vec(codes.column(t));
        for i in 0..n {
            values[(i, t)] = T::lit((profile[t] + spatial[i] + xi[i]).clamp(0.0, cap));
        }
    }

    let matrix = TrafficMatrix::new(cells, spec.resolution_seconds, spec.start_timestamp, values, spec.service)
        .map_err(|e| e.to_string())?;
    Ok(SyntheticScenario {
        matrix,
        truth: GroundTruth {
            dictionary: atoms.map_into(),
            codes: codes.map_into(),
            profile: profile.into_iter().map(T::lit).collect(),
        },
    })
}

/// Innovation law keeping `ξ_t = φ ξ_{t−1} + ε_t` marginally `p`.
fn innovation_params(p: &StableParams<f64>, phi: f64) -> StableParams<f64> {
    if phi == 0.0 {
        return *p;
    }
    let a = p.alpha;
    let sigma = p.sigma * (1.0 - phi.powf(a)).powf(1.0 / a);
    let mu = if a == 1.0 {
        p.mu * (1.0 - phi) + std::f64::consts::FRAC_2_PI * p.beta * p.sigma * phi * phi.ln()
    } else {
        p.mu * (1.0 - phi)
    };
    StableParams { sigma, mu, ..*p }
}
