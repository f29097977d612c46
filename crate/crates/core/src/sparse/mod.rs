//! Sparse coding and online dictionary learning.

mod dictionary;
mod lars;
mod omp;

use thiserror::Error;

use crate::linalg::Matrix;
use crate::scalar::{norm1, Scalar};

pub use dictionary::{
    dictionary_update, initial_dictionary, learn, surrogate, Coder, DictionaryInit, DictionaryState,
};
pub use lars::lars_lasso;
pub use omp::omp;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SparseError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Sparse coefficient vector with its support and penalized objective.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCode<T = f64> {
    pub s: Vec<T>,
    /// Indices of the non-zero entries, ascending.
    pub support: Vec<usize>,
    /// `λ2‖x − Ds‖² + γ‖s‖₁` for the weights the code was computed with.
    pub objective: T,
}

impl<T: Scalar> SparseCode<T> {
    pub fn zeros(k: usize) -> Self {
        Self { s: vec![T::zero(); k], support: Vec::new(), objective: T::zero() }
    }

    /// Builds a code from a dense vector and evaluates the objective.
    pub fn from_dense(d: &Matrix<T>, x: &[T], s: Vec<T>, lambda2: T, gamma: T) -> Self {
        let support = s.iter().enumerate().filter(|(_, &v)| v != T::zero()).map(|(i, _)| i).collect();
        let objective = lasso_objective(d, x, &s, lambda2, gamma);
        Self { s, support, objective }
    }
}

/// `λ2‖x − Ds‖² + γ‖s‖₁`.
pub fn lasso_objective<T: Scalar>(d: &Matrix<T>, x: &[T], s: &[T], lambda2: T, gamma: T) -> T {
    let ds = d.mul_vec(s);
    let r2: T = x.iter().zip(&ds).map(|(&a, &b)| (a - b) * (a - b)).sum();
    lambda2 * r2 + gamma * norm1(s)
}

fn check_dims<T: Scalar>(d: &Matrix<T>, x: &[T]) -> Result<(), SparseError> {
    if d.rows() != x.len() {
        return Err(SparseError::DimensionMismatch(format!(
            "dictionary has {} rows, signal has {} entries",
            d.rows(),
            x.len()
        )));
    }
    if d.cols() == 0 {
        return Err(SparseError::DimensionMismatch("dictionary has no columns".into()));
    }
    Ok(())
}
