use super::{check_dims, SparseCode, SparseError};
use crate::linalg::{least_squares, Matrix};
use crate::scalar::{dot, Scalar};

/// Orthogonal matching pursuit with at most `max_nonzeros` atoms.
///
/// Each step adds the column with the largest normalized correlation to the
/// residual (lowest index on ties) and refits the support by least squares.
/// The returned objective is the squared residual `‖x − Ds‖²`.
pub fn omp<T: Scalar>(d: &Matrix<T>, x: &[T], max_nonzeros: usize) -> Result<SparseCode<T>, SparseError> {
    check_dims(d, x)?;
    let (n, k) = (d.rows(), d.cols());
    if max_nonzeros == 0 || max_nonzeros > n.min(k) {
        return Err(SparseError::InvalidArgument(format!(
            "max_nonzeros must lie in [1, {}], got {max_nonzeros}",
            n.min(k)
        )));
    }
    let norms: Vec<T> = (0..k).map(|j| dot(d.column(j), d.column(j)).sqrt()).collect();
    let scale = norms.iter().copied().fold(T::zero(), T::max);
    let x_norm = dot(x, x).sqrt();
    let floor = T::lit(1e-12) * x_norm.max(T::min_positive_value());

    let mut support: Vec<usize> = Vec::new();
    let mut coeffs: Vec<T> = Vec::new();
    let mut residual = x.to_vec();
    while support.len() < max_nonzeros {
        let mut best: Option<(usize, T)> = None;
        for j in 0..k {
            if support.contains(&j) || norms[j] <= scale * T::lit(1e-12) {
                continue;
            }
            let c = dot(d.column(j), &residual).abs() / norms[j];
            if best.is_none_or(|(_, b)| c > b) {
                best = Some((j, c));
            }
        }
        let Some((j, c)) = best else { break };
        if c <= floor {
            break;
        }
        support.push(j);
        let sub = Matrix::from_columns(n, &support.iter().map(|&i| d.column(i).to_vec()).collect::<Vec<_>>());
        match least_squares(&sub, x) {
            Some(sol) => coeffs = sol,
            None => {
                support.pop();
                break;
            }
        }
        let fit = sub.mul_vec(&coeffs);
        residual = x.iter().zip(&fit).map(|(&a, &b)| a - b).collect();
    }

    let mut s = vec![T::zero(); k];
    for (&j, &v) in support.iter().zip(&coeffs) {
        s[j] = v;
    }
    let mut support: Vec<usize> = support.into_iter().filter(|&j| s[j] != T::zero()).collect();
    support.sort_unstable();
    let objective = dot(&residual, &residual);
    Ok(SparseCode { s, support, objective })
}
