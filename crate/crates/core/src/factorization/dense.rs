//! Packed dense LDL^T without pivoting.

use super::{packed_index, FactorError};
use crate::scalar::Scalar;

/// Factors the packed lower triangle in place: D ends up on the diagonal,
/// the multipliers of unit-lower L strictly below it. Returns a copy of D.
pub fn factor<T: Scalar>(n: usize, p: &mut [T]) -> Result<Vec<T>, FactorError> {
    let floor = T::min_positive_value().sqrt();
    let mut d = vec![T::zero(); n];
    for j in 0..n {
        let dj = p[packed_index(j, j)];
        // NaN compares false, so this also traps non-finite pivots.
        if !(dj.abs() >= floor) {
            return Err(FactorError::FactorizationBreakdown { index: j });
        }
        d[j] = dj;
        // trailing update with the raw column, then scale the column
        for i in (j + 1)..n {
            let s = p[packed_index(i, j)] / dj;
            for k in (j + 1)..=i {
                let upd = s * p[packed_index(k, j)];
                p[packed_index(i, k)] -= upd;
            }
        }
        for i in (j + 1)..n {
            p[packed_index(i, j)] /= dj;
        }
    }
    Ok(d)
}

/// Solves L D L^T x = b in place given the packed factor output.
pub fn solve<T: Scalar>(n: usize, p: &[T], d: &[T], b: &mut [T]) {
    for j in 0..n {
        let bj = b[j];
        for i in (j + 1)..n {
            b[i] -= p[packed_index(i, j)] * bj;
        }
    }
    for j in 0..n {
        b[j] /= d[j];
    }
    for j in (0..n).rev() {
        let mut acc = b[j];
        for i in (j + 1)..n {
            acc -= p[packed_index(i, j)] * b[i];
        }
        b[j] = acc;
    }
}
