use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{lars_lasso, omp, SparseCode, SparseError};
use crate::linalg::Matrix;
use crate::scalar::{dot, Scalar};

const MIN_DIAGONAL: f64 = 1e-12;
const FALLBACK_SEED: u64 = 0x5eed_d1c7;

/// Dictionary with the code accumulators `A = Σ s sᵀ` and `B = Σ x sᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct DictionaryState<T = f64> {
    /// N×K dictionary.
    pub d: Matrix<T>,
    /// K×K code Gram accumulator.
    pub a: Matrix<T>,
    /// N×K signal-code accumulator.
    pub b: Matrix<T>,
}

impl<T: Scalar> DictionaryState<T> {
    /// Fresh state with zero accumulators.
    pub fn new(d: Matrix<T>) -> Self {
        let (n, k) = (d.rows(), d.cols());
        Self { d, a: Matrix::zeros(k, k), b: Matrix::zeros(n, k) }
    }

    pub fn k(&self) -> usize {
        self.d.cols()
    }

    pub fn n(&self) -> usize {
        self.d.rows()
    }

    /// Adds one code to the accumulators.
    pub fn accumulate(&mut self, x: &[T], s: &[T]) {
        let k = self.k();
        for j in 0..k {
            if s[j] == T::zero() {
                continue;
            }
            for i in 0..k {
                self.a[(i, j)] += s[i] * s[j];
            }
            for (i, &xi) in x.iter().enumerate() {
                self.b[(i, j)] += xi * s[j];
            }
        }
    }
}

/// `Tr(DᵀDA) − 2 Tr(DᵀB)`.
pub fn surrogate<T: Scalar>(state: &DictionaryState<T>) -> T {
    let dtd = state.d.gram();
    let k = state.k();
    let mut quad = T::zero();
    let mut lin = T::zero();
    for j in 0..k {
        for i in 0..k {
            quad += dtd[(i, j)] * state.a[(j, i)];
        }
        lin += dot(state.d.column(j), state.b.column(j));
    }
    quad - T::lit(2.0) * lin
}

/// One block-coordinate sweep over the columns of `D`, each projected back
/// onto the unit ball. Columns whose `A_jj` is numerically zero are skipped.
pub fn dictionary_update<T: Scalar>(mut state: DictionaryState<T>) -> DictionaryState<T> {
    let (n, k) = (state.n(), state.k());
    for j in 0..k {
        let ajj = state.a[(j, j)];
        if ajj < T::lit(MIN_DIAGONAL) {
            continue;
        }
        let aj: Vec<T> = (0..k).map(|i| state.a[(i, j)]).collect();
        let da = state.d.mul_vec(&aj);
        let mut u: Vec<T> = (0..n).map(|i| (state.b[(i, j)] - da[i]) / ajj + state.d[(i, j)]).collect();
        let norm = dot(&u, &u).sqrt();
        if norm > T::one() {
            u.iter_mut().for_each(|v| *v /= norm);
        }
        state.d.column_mut(j).copy_from_slice(&u);
    }
    state
}

/// Sparse coder used inside [`learn`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coder {
    LarsLasso,
    Omp { max_nonzeros: usize },
}

impl Coder {
    pub fn code<T: Scalar>(&self, d: &Matrix<T>, x: &[T], lambda2: T, gamma: T) -> Result<SparseCode<T>, SparseError> {
        match *self {
            Coder::LarsLasso => lars_lasso(d, x, lambda2, gamma),
            Coder::Omp { max_nonzeros } => {
                let code = omp(d, x, max_nonzeros)?;
                Ok(SparseCode::from_dense(d, x, code.s, lambda2, gamma))
            }
        }
    }
}

/// Alternates sparse coding, accumulator updates and a dictionary sweep for
/// `inner_iterations` rounds. The accumulators carry over from `state`.
pub fn learn<T: Scalar>(
    mut state: DictionaryState<T>,
    x: &[T],
    lambda2: T,
    gamma: T,
    inner_iterations: usize,
    coder: Coder,
) -> Result<(DictionaryState<T>, SparseCode<T>), SparseError> {
    if inner_iterations == 0 {
        return Err(SparseError::InvalidArgument("inner_iterations must be at least 1".into()));
    }
    let mut code = SparseCode::zeros(state.k());
    for _ in 0..inner_iterations {
        code = coder.code(&state.d, x, lambda2, gamma)?;
        state.accumulate(x, &code.s);
        state = dictionary_update(state);
    }
    Ok((state, code))
}

/// How to build the starting dictionary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DictionaryInit {
    /// Most recent distinct snapshots, normalized, topped up with
    /// deterministic random unit columns.
    #[default]
    Snapshots,
    /// All-zero dictionary.
    Zero,
}

/// Builds an N×K dictionary from the columns of `history` before `t_end`.
pub fn initial_dictionary<T: Scalar>(history: &Matrix<T>, t_end: usize, k: usize, init: DictionaryInit) -> Matrix<T> {
    let n = history.rows();
    let mut d = Matrix::zeros(n, k);
    if init == DictionaryInit::Zero || k == 0 {
        return d;
    }
    let mut filled = 0;
    let tol = T::lit(1e-12);
    for t in (0..t_end.min(history.cols())).rev() {
        if filled == k {
            break;
        }
        let col = history.column(t);
        let norm = dot(col, col).sqrt();
        if !(norm > tol) {
            continue;
        }
        let unit: Vec<T> = col.iter().map(|&v| v / norm).collect();
        let duplicate = (0..filled).any(|j| {
            d.column(j).iter().zip(&unit).all(|(&a, &b)| (a - b).abs() <= tol)
        });
        if !duplicate {
            d.column_mut(filled).copy_from_slice(&unit);
            filled += 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(FALLBACK_SEED);
    while filled < k {
        let v: Vec<T> = (0..n).map(|_| T::lit(rng.random_range(-1.0..1.0))).collect();
        let norm = dot(&v, &v).sqrt();
        if norm > tol {
            d.column_mut(filled).iter_mut().zip(&v).for_each(|(c, &x)| *c = x / norm);
            filled += 1;
        }
    }
    d
}
