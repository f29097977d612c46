//! Alternating direction method that refines the coarse α-stable forecast
//! with a Gaussian noise split and a learned sparse representation.

use thiserror::Error;

use crate::linalg::Matrix;
use crate::linear_prediction::{forecast, LinearPredictorSpec, PredictionError};
use crate::scalar::{norm1, norm2, sub, Scalar};
use crate::sparse::{initial_dictionary, learn, Coder, DictionaryInit, DictionaryState, SparseCode, SparseError};
use crate::traffic::TrafficMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdmError {
    #[error("invalid ADM config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Prediction(#[from] PredictionError),
    #[error(transparent)]
    Sparse(#[from] SparseError),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite value in iteration {0}")]
    NonFinite(usize),
}

/// Sparse coder run inside the dictionary-learning step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SparseMethod {
    #[default]
    Lars,
    Omp,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AdmConfig<T = f64> {
    pub lambda1: T,
    pub lambda2: T,
    pub gamma0: T,
    pub eta0: T,
    pub rho: T,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub early_stop_tol: T,
    /// Reported against `‖s‖₁`, never enforced.
    pub sparsity_budget: T,
    pub clamp_nonnegative: bool,
    pub method: SparseMethod,
    /// OMP support size; `None` means `min(N, K)`.
    pub omp_max_nonzeros: Option<usize>,
    /// Number of atoms; `None` means one per cell.
    pub dictionary_size: Option<usize>,
    pub dictionary_init: DictionaryInit,
}

impl<T: Scalar> AdmConfig<T> {
    /// Default settings for any scalar type.
    pub fn standard() -> Self {
        Self {
            lambda1: T::lit(10.0),
            lambda2: T::one(),
            gamma0: T::one(),
            eta0: T::lit(1e-4),
            rho: T::lit(1.1),
            outer_iterations: 20,
            inner_iterations: 3,
            early_stop_tol: T::lit(1e-6),
            sparsity_budget: T::zero(),
            clamp_nonnegative: true,
            method: SparseMethod::Lars,
            omp_max_nonzeros: None,
            dictionary_size: None,
            dictionary_init: DictionaryInit::Snapshots,
        }
    }

    pub fn validate(&self) -> Result<(), AdmError> {
        let bad = |msg: String| Err(AdmError::InvalidConfig(msg));
        let nonneg = [
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("gamma0", self.gamma0),
            ("early_stop_tol", self.early_stop_tol),
            ("sparsity_budget", self.sparsity_budget),
        ];
        for (name, v) in nonneg {
            if !(v >= T::zero()) || !v.is_finite() {
                return bad(format!("{name} must be finite and >= 0, got {v}"));
            }
        }
        if !(self.eta0 > T::zero()) || !self.eta0.is_finite() {
            return bad(format!("eta0 must be > 0, got {}", self.eta0));
        }
        if !(self.rho >= T::one()) || !self.rho.is_finite() {
            return bad(format!("rho must be >= 1, got {}", self.rho));
        }
        if self.outer_iterations == 0 || self.inner_iterations == 0 {
            return bad("iteration counts must be at least 1".into());
        }
        if self.dictionary_size == Some(0) {
            return bad("dictionary_size must be at least 1".into());
        }
        if self.omp_max_nonzeros == Some(0) {
            return bad("omp_max_nonzeros must be at least 1".into());
        }
        Ok(())
    }

    /// `η` after `t` completed steps.
    pub fn eta_at(&self, t: usize) -> T {
        self.eta0 * self.rho.powi(t as i32)
    }

    fn coder(&self, n: usize, k: usize) -> Coder {
        match self.method {
            SparseMethod::Lars => Coder::LarsLasso,
            SparseMethod::Omp => Coder::Omp { max_nonzeros: self.omp_max_nonzeros.unwrap_or(n.min(k)).min(n.min(k)) },
        }
    }
}

impl Default for AdmConfig<f64> {
    fn default() -> Self {
        Self::standard()
    }
}

/// Iterate of the method. `x_tilde` is the coarse forecast the state was
/// started from; it enters the Lagrangian.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmState<T = f64> {
    pub x_tilde: Vec<T>,
    pub x_p: Vec<T>,
    pub x_alpha: Vec<T>,
    pub z: Vec<T>,
    pub mult: Vec<T>,
    pub gamma: T,
    pub eta: T,
    pub dict: DictionaryState<T>,
    pub code: SparseCode<T>,
    /// `‖x̂_p − x̂_α − z‖₂`.
    pub residual: T,
    pub lagrangian: T,
    /// Completed steps.
    pub iteration: usize,
}

/// Augmented Lagrangian at the given point.
#[allow(clippy::too_many_arguments)]
pub fn lagrangian_at<T: Scalar>(
    x_tilde: &[T],
    x_p: &[T],
    x_alpha: &[T],
    z: &[T],
    ds: &[T],
    s: &[T],
    mult: &[T],
    gamma: T,
    eta: T,
    config: &AdmConfig<T>,
) -> T {
    let mut fit = T::zero();
    let mut noise = T::zero();
    let mut sparse = T::zero();
    let mut inner = T::zero();
    let mut penalty = T::zero();
    for i in 0..x_p.len() {
        let r = x_p[i] - x_alpha[i] - z[i];
        fit += (x_alpha[i] - x_tilde[i]) * (x_alpha[i] - x_tilde[i]);
        noise += z[i] * z[i];
        sparse += (x_p[i] - ds[i]) * (x_p[i] - ds[i]);
        inner += mult[i] * r;
        penalty += r * r;
    }
    fit + config.lambda1 * noise + config.lambda2 * sparse + inner + gamma * norm1(s) + eta * penalty
}

impl<T: Scalar> AdmState<T> {
    /// Starts from `x̂_p = x̂_α = x̃`, `z = m = 0`, with the code of `x̃` under
    /// the given dictionary as `s⁰`.
    pub fn initial(x_tilde: &[T], dict: DictionaryState<T>, config: &AdmConfig<T>) -> Result<Self, AdmError> {
        config.validate()?;
        let n = x_tilde.len();
        if dict.n() != n {
            return Err(AdmError::DimensionMismatch(format!("dictionary has {} rows for {n} cells", dict.n())));
        }
        let code = config.coder(n, dict.k()).code(&dict.d, x_tilde, config.lambda2.max(T::min_positive_value()), config.gamma0)?;
        let mut state = Self {
            x_tilde: x_tilde.to_vec(),
            x_p: x_tilde.to_vec(),
            x_alpha: x_tilde.to_vec(),
            z: vec![T::zero(); n],
            mult: vec![T::zero(); n],
            gamma: config.gamma0,
            eta: config.eta0,
            dict,
            code,
            residual: T::zero(),
            lagrangian: T::zero(),
            iteration: 0,
        };
        state.refresh(config);
        Ok(state)
    }

    /// `D s` for the current dictionary and code.
    pub fn reconstruction(&self) -> Vec<T> {
        self.dict.d.mul_vec(&self.code.s)
    }

    pub fn constraint_gap(&self) -> Vec<T> {
        sub(&sub(&self.x_p, &self.x_alpha), &self.z)
    }

    pub fn lagrangian(&self, config: &AdmConfig<T>) -> T {
        lagrangian_at(
            &self.x_tilde,
            &self.x_p,
            &self.x_alpha,
            &self.z,
            &self.reconstruction(),
            &self.code.s,
            &self.mult,
            self.gamma,
            self.eta,
            config,
        )
    }

    /// Recomputes `residual` and `lagrangian` from the other fields.
    pub fn refresh(&mut self, config: &AdmConfig<T>) {
        self.residual = norm2(&self.constraint_gap());
        self.lagrangian = self.lagrangian(config);
    }
}

/// `x̂_α = (x̃ + η J) / (η + 1)` with `J = x̂_p − z + m / (2η)`.
pub fn update_x_alpha<T: Scalar>(state: &AdmState<T>, x_tilde: &[T]) -> Vec<T> {
    let eta = state.eta;
    (0..x_tilde.len())
        .map(|i| {
            let j = state.x_p[i] - state.z[i] + state.mult[i] / (T::lit(2.0) * eta);
            (x_tilde[i] + eta * j) / (eta + T::one())
        })
        .collect()
}

/// `z = J_z / (λ1/η + 1)` with `J_z = x̂_p − x̂_α + m / (2η)`.
pub fn update_z<T: Scalar>(state: &AdmState<T>, lambda1: T) -> Vec<T> {
    let eta = state.eta;
    let w = lambda1 / eta + T::one();
    (0..state.z.len())
        .map(|i| (state.x_p[i] - state.x_alpha[i] + state.mult[i] / (T::lit(2.0) * eta)) / w)
        .collect()
}

/// `x̂_p = ((λ2/η) D s + J) / (λ2/η + 1)` with `J = x̂_α + z − m / (2η)`.
pub fn update_x_p<T: Scalar>(state: &AdmState<T>, lambda2: T) -> Vec<T> {
    let eta = state.eta;
    let r = lambda2 / eta;
    let ds = state.reconstruction();
    (0..state.x_p.len())
        .map(|i| {
            let j = state.x_alpha[i] + state.z[i] - state.mult[i] / (T::lit(2.0) * eta);
            (r * ds[i] + j) / (r + T::one())
        })
        .collect()
}

/// One outer iteration: `x̂_α`, `z`, `x̂_p`, `{D, s}`, `m`, `γ`, then `η`.
pub fn step<T: Scalar>(mut state: AdmState<T>, x_tilde: &[T], config: &AdmConfig<T>) -> Result<AdmState<T>, AdmError> {
    if x_tilde.len() != state.x_p.len() {
        return Err(AdmError::DimensionMismatch(format!(
            "forecast has {} entries, state has {}",
            x_tilde.len(),
            state.x_p.len()
        )));
    }
    state.x_tilde = x_tilde.to_vec();
    state.x_alpha = update_x_alpha(&state, x_tilde);
    state.z = update_z(&state, config.lambda1);
    state.x_p = update_x_p(&state, config.lambda2);

    let coder = config.coder(state.dict.n(), state.dict.k());
    let lambda2 = config.lambda2.max(T::min_positive_value());
    let (dict, code) = learn(state.dict, &state.x_p, lambda2, state.gamma, config.inner_iterations, coder)?;
    state.dict = dict;
    state.code = code;

    let eta = state.eta;
    for i in 0..state.mult.len() {
        state.mult[i] += eta * (state.x_p[i] - state.x_alpha[i] - state.z[i]);
    }
    state.gamma += eta * norm1(&state.code.s);
    state.iteration += 1;
    state.eta = config.eta_at(state.iteration);

    if state.x_p.iter().any(|v| !v.is_finite()) {
        return Err(AdmError::NonFinite(state.iteration));
    }
    state.refresh(config);
    Ok(state)
}

/// Result of [`predict`].
#[derive(Debug, Clone, PartialEq)]
pub struct AdmForecast<T = f64> {
    /// Final forecast, floored at zero when clamping is on.
    pub x_p: Vec<T>,
    /// Coarse forecast the refinement started from.
    pub x_tilde: Vec<T>,
    /// Final iterate with the unclamped `x̂_p`.
    pub state: AdmState<T>,
    /// Steps actually run.
    pub iterations: usize,
}

impl<T: Scalar> AdmForecast<T> {
    /// `‖s‖₁` against the configured budget.
    pub fn sparsity(&self) -> T {
        norm1(&self.state.code.s)
    }
}

/// Runs the full iteration from a given coarse forecast. `history` supplies
/// the snapshots for dictionary seeding when `warm_dict` is absent.
pub fn refine<T: Scalar>(
    x_tilde: &[T],
    history: &Matrix<T>,
    t_end: usize,
    config: &AdmConfig<T>,
    warm_dict: Option<DictionaryState<T>>,
) -> Result<AdmForecast<T>, AdmError> {
    config.validate()?;
    let n = x_tilde.len();
    let dict = match warm_dict {
        Some(d) => d,
        None => {
            let k = config.dictionary_size.unwrap_or(n);
            DictionaryState::new(initial_dictionary(history, t_end, k, config.dictionary_init))
        }
    };
    let mut state = AdmState::initial(x_tilde, dict, config)?;
    let mut iterations = 0;
    for _ in 0..config.outer_iterations {
        let prev = state.x_p.clone();
        state = step(state, x_tilde, config)?;
        iterations += 1;
        let change = norm2(&sub(&state.x_p, &prev)) / norm2(&prev).max(T::one());
        if change < config.early_stop_tol {
            break;
        }
    }
    let x_p = if config.clamp_nonnegative {
        state.x_p.iter().map(|&v| v.max(T::zero())).collect()
    } else {
        state.x_p.clone()
    };
    Ok(AdmForecast { x_p, x_tilde: x_tilde.to_vec(), state, iterations })
}

/// Coarse linear forecast over `[t_end − n, t_end)` followed by [`refine`].
pub fn predict<T: Scalar>(
    matrix: &TrafficMatrix<T>,
    t_end: usize,
    predictor: &LinearPredictorSpec<T>,
    config: &AdmConfig<T>,
    warm_dict: Option<DictionaryState<T>>,
) -> Result<AdmForecast<T>, AdmError> {
    config.validate()?;
    let coarse = forecast(matrix, t_end, predictor)?;
    refine(&coarse.values, matrix.values(), t_end, config, warm_dict)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_state(n: usize, seed: u64) -> (AdmState<f64>, AdmConfig<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v = |lo: f64, hi: f64| -> Vec<f64> { (0..n).map(|_| rng.random_range(lo..hi)).collect() };
        let x_tilde = v(0.0, 5.0);
        let config = AdmConfig { lambda1: 3.0, lambda2: 2.0, eta0: 0.7, ..AdmConfig::default() };
        let d = initial_dictionary(&Matrix::zeros(n, 0), 0, n, DictionaryInit::Snapshots);
        let mut st = AdmState::initial(&x_tilde, DictionaryState::new(d), &config).unwrap();
        st.x_p = v(0.0, 5.0);
        st.z = v(-1.0, 1.0);
        st.mult = v(-2.0, 2.0);
        st.refresh(&config);
        (st, config)
    }

    #[test]
    fn closed_form_examples() {
        let (mut st, config) = random_state(1, 1);
        st.eta = 1.0;
        st.x_p = vec![4.0];
        st.z = vec![0.0];
        st.mult = vec![0.0];
        assert_eq!(update_x_alpha(&st, &[2.0]), vec![3.0]);
        st.eta = 1e-12;
        assert!((update_x_alpha(&st, &[2.0])[0] - 2.0).abs() < 1e-9);
        st.eta = 1.0;
        st.x_alpha = vec![1.5];
        st.mult = vec![0.5];
        assert_eq!(update_z(&st, 0.0), vec![4.0 - 1.5 + 0.25]);
        assert!(update_z(&st, 1e12)[0].abs() < 1e-9);
        let j = 1.5 + st.z[0] - 0.25;
        assert_eq!(update_x_p(&st, 0.0), vec![j]);
        let ds = st.reconstruction()[0];
        let _ = config;
        assert!((update_x_p(&st, 1e12)[0] - ds).abs() <= 1e-6 * ds.abs().max(1.0));
    }

    #[test]
    fn block_updates_do_not_increase_lagrangian() {
        for seed in 0..50 {
            let (mut st, config) = random_state(6, seed);
            let x_tilde = st.x_tilde.clone();
            let l0 = st.lagrangian(&config);
            st.x_alpha = update_x_alpha(&st, &x_tilde);
            let l1 = st.lagrangian(&config);
            st.z = update_z(&st, config.lambda1);
            let l2 = st.lagrangian(&config);
            st.x_p = update_x_p(&st, config.lambda2);
            let l3 = st.lagrangian(&config);
            assert!(l1 <= l0 + 1e-9 && l2 <= l1 + 1e-9 && l3 <= l2 + 1e-9, "seed {seed}");
        }
    }

    #[test]
    fn eta_grows_geometrically_and_multipliers_follow_gap() {
        let (st, config) = random_state(5, 3);
        let x_tilde = st.x_tilde.clone();
        let mut cur = st;
        for t in 1..=6 {
            let before = cur.clone();
            cur = step(cur, &x_tilde, &config).unwrap();
            assert_eq!(cur.eta, config.eta0 * config.rho.powi(t));
            let gap = cur.constraint_gap();
            for i in 0..gap.len() {
                let dm = cur.mult[i] - before.mult[i];
                assert!((dm - before.eta * gap[i]).abs() <= 1e-12 * dm.abs().max(1.0));
            }
            assert!((cur.residual - norm2(&gap)).abs() < 1e-12);
            assert!((cur.lagrangian - cur.lagrangian(&config)).abs() < 1e-9);
        }
    }

    #[test]
    fn tiny_weights_return_the_coarse_forecast() {
        let config = AdmConfig { lambda1: 1e-12, lambda2: 1e-12, ..AdmConfig::default() };
        let x_tilde = vec![3.0, 0.5, 7.25, 1.0];
        let history = Matrix::from_columns(4, &[vec![1.0, 2.0, 3.0, 4.0], vec![2.0, 1.0, 0.0, 5.0]]);
        let out = refine(&x_tilde, &history, 2, &config, None).unwrap();
        for (a, b) in out.x_p.iter().zip(&x_tilde) {
            assert!((a - b).abs() <= 1e-6 * b.abs());
        }
    }

    #[test]
    fn clamp_floors_output_but_keeps_raw_state() {
        let config = AdmConfig { lambda1: 1e-12, lambda2: 1e-12, ..AdmConfig::default() };
        let x_tilde = vec![-1.0, 2.0, 3.0];
        let history = Matrix::from_columns(3, &[vec![1.0, 2.0, 3.0]]);
        let out = refine(&x_tilde, &history, 1, &config, None).unwrap();
        assert_eq!(out.x_p[0], 0.0);
        assert!(out.state.x_p[0] < 0.0);
        let raw = refine(&x_tilde, &history, 1, &AdmConfig { clamp_nonnegative: false, ..config }, None).unwrap();
        assert!(raw.x_p[0] < 0.0);
    }

    #[test]
    fn rejects_bad_config() {
        let c = AdmConfig { rho: 0.9, ..AdmConfig::default() };
        assert!(matches!(c.validate(), Err(AdmError::InvalidConfig(_))));
        assert!(AdmConfig { eta0: 0.0, ..AdmConfig::default() }.validate().is_err());
        assert!(AdmConfig { outer_iterations: 0, ..AdmConfig::default() }.validate().is_err());
        assert!(AdmConfig::default().validate().is_ok());
    }
}
