use super::{check_dims, SparseCode, SparseError};
use crate::linalg::{GrowingCholesky, Matrix};
use crate::scalar::Scalar;

/// Minimizes `λ2‖x − Ds‖² + γ‖s‖₁` by following the lasso homotopy path
/// (LARS with the lasso drop rule) from `s = 0` down to the penalty
/// `λ = γ / (2λ2)` of the equivalent `½‖x − Ds‖² + λ‖s‖₁` problem.
///
/// Zero columns never enter. Ties between entering or leaving variables go
/// to the lowest index.
pub fn lars_lasso<T: Scalar>(d: &Matrix<T>, x: &[T], lambda2: T, gamma: T) -> Result<SparseCode<T>, SparseError> {
    check_dims(d, x)?;
    if !(lambda2 > T::zero()) || !(gamma >= T::zero()) {
        return Err(SparseError::InvalidArgument(format!(
            "need lambda2 > 0 and gamma >= 0, got {lambda2} and {gamma}"
        )));
    }
    let k = d.cols();
    let target = gamma / (T::lit(2.0) * lambda2);
    let gram = d.gram();
    let scale = (0..k).map(|j| gram[(j, j)]).fold(T::zero(), T::max);
    let mut usable: Vec<bool> = (0..k).map(|j| gram[(j, j)] > scale * T::lit(1e-24)).collect();

    let mut corr = d.tr_mul_vec(x);
    let mut s = vec![T::zero(); k];
    let mut lambda = T::zero();
    let mut first = None;
    for j in 0..k {
        if usable[j] && corr[j].abs() > lambda {
            lambda = corr[j].abs();
            first = Some(j);
        }
    }
    let Some(first) = first else {
        return Ok(SparseCode::from_dense(d, x, s, lambda2, gamma));
    };
    if T::lit(2.0) * lambda2 * lambda <= gamma {
        return Ok(SparseCode::from_dense(d, x, s, lambda2, gamma));
    }

    let mut active: Vec<usize> = Vec::new();
    let mut chol = GrowingCholesky::new();
    let mut pending = Some(first);
    // A variable just dropped sits exactly at the boundary; round-off must
    // not let it re-enter on the very next step.
    let mut just_dropped: Option<usize> = None;
    let tiny = T::epsilon() * T::lit(64.0);

    for _ in 0..(20 * k + 20) {
        if let Some(j) = pending.take() {
            let cross: Vec<T> = active.iter().map(|&i| gram[(i, j)]).collect();
            if chol.push(&cross, gram[(j, j)]) {
                active.push(j);
            } else {
                usable[j] = false;
            }
        }
        if active.is_empty() {
            break;
        }
        let signs: Vec<T> = active.iter().map(|&j| corr[j].sgn()).collect();
        let w = chol.solve(&signs);
        // a = Dᵀ D_A w
        let mut a = vec![T::zero(); k];
        for (pos, &i) in active.iter().enumerate() {
            for (j, aj) in a.iter_mut().enumerate() {
                *aj += gram[(j, i)] * w[pos];
            }
        }

        let mut step = lambda - target;
        let mut event: Option<(bool, usize)> = None; // (is_drop, index)
        for j in 0..k {
            if !usable[j] || active.contains(&j) || just_dropped == Some(j) {
                continue;
            }
            for cand in [(lambda - corr[j]) / (T::one() - a[j]), (lambda + corr[j]) / (T::one() + a[j])] {
                if cand > tiny * lambda && cand < step {
                    step = cand;
                    event = Some((false, j));
                }
            }
        }
        for (pos, &j) in active.iter().enumerate() {
            if w[pos] != T::zero() {
                let cand = -s[j] / w[pos];
                if cand > T::zero() && cand < step {
                    step = cand;
                    event = Some((true, pos));
                }
            }
        }

        for (pos, &j) in active.iter().enumerate() {
            s[j] += step * w[pos];
        }
        for j in 0..k {
            corr[j] -= step * a[j];
        }
        lambda -= step;

        just_dropped = None;
        match event {
            None => break,
            Some((false, j)) => pending = Some(j),
            Some((true, pos)) => {
                let j = active.remove(pos);
                s[j] = T::zero();
                just_dropped = Some(j);
                if !chol.rebuild(&gram, &active) {
                    break;
                }
            }
        }
        if lambda <= target {
            break;
        }
    }

    polish(d, x, &gram, &active, &mut s, target);
    Ok(SparseCode::from_dense(d, x, s, lambda2, gamma))
}

/// Re-solves the stationarity system on the final active set,
/// `G_AA s_A = D_Aᵀx − λ sgn(s_A)`, keeping the result only if no sign flips.
fn polish<T: Scalar>(d: &Matrix<T>, x: &[T], gram: &Matrix<T>, active: &[usize], s: &mut [T], lambda: T) {
    if active.is_empty() {
        return;
    }
    let mut chol = GrowingCholesky::new();
    if !chol.rebuild(gram, active) {
        return;
    }
    let dtx = d.tr_mul_vec(x);
    let rhs: Vec<T> = active.iter().map(|&j| dtx[j] - lambda * s[j].sgn()).collect();
    let sol = chol.solve(&rhs);
    let consistent = active.iter().zip(&sol).all(|(&j, &v)| s[j] == T::zero() || v.sgn() == s[j].sgn());
    if consistent {
        for (&j, &v) in active.iter().zip(&sol) {
            s[j] = v;
        }
    }
}
