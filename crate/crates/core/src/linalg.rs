//! Small dense helpers: a rectangular matrix type, eigenvalues of 2x2 systems
//! and a Jacobi eigenvalue sweep for symmetric matrices. These back diagnostics
//! and finite-difference checks; the factorization module has its own storage.

use crate::scalar::Scalar;

/// Dense row-major rectangular matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Mat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// y = A x
    pub fn matvec(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(y.len(), self.rows);
        for i in 0..self.rows {
            let mut acc = T::zero();
            for j in 0..self.cols {
                acc += self[(i, j)] * x[j];
            }
            y[i] = acc;
        }
    }

    /// C = A^T A scaled by `scale`.
    pub fn gram_scaled(&self, scale: T) -> Mat<T> {
        let n = self.cols;
        let mut c = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let mut acc = T::zero();
                for k in 0..self.rows {
                    acc += self[(k, i)] * self[(k, j)];
                }
                c[(i, j)] = acc * scale;
                c[(j, i)] = acc * scale;
            }
        }
        c
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
    }
}

impl<T> std::ops::Index<(usize, usize)> for Mat<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Mat<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Eigenvalues of a 2x2 (possibly nonsymmetric) matrix as (re, im) pairs.
pub fn eig2x2<T: Scalar>(a: &Mat<T>) -> [(T, T); 2] {
    assert_eq!((a.rows(), a.cols()), (2, 2));
    let tr = a[(0, 0)] + a[(1, 1)];
    let det = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
    let half = T::cast(0.5);
    let disc = tr * tr - T::cast(4.0) * det;
    if disc >= T::zero() {
        let s = disc.sqrt();
        [((tr + s) * half, T::zero()), ((tr - s) * half, T::zero())]
    } else {
        let s = (-disc).sqrt() * half;
        [(tr * half, s), (tr * half, -s)]
    }
}

/// Spectral radius of a 2x2 matrix.
pub fn spectral_radius_2x2<T: Scalar>(a: &Mat<T>) -> T {
    eig2x2(a)
        .iter()
        .map(|&(re, im)| (re * re + im * im).sqrt())
        .fold(T::zero(), |m, v| m.max(v))
}

/// Eigenvalues of a symmetric matrix by the cyclic Jacobi method.
///
/// Returns the eigenvalues in no particular order. Intended for the small
/// matrices that show up in diagnostics, not as a general-purpose solver.
pub fn sym_eigenvalues<T: Scalar>(a: &Mat<T>) -> Vec<T> {
    let n = a.rows();
    assert_eq!(n, a.cols());
    let mut m = a.clone();
    let tol = T::cast(1e-14) * (T::one() + m.max_abs());
    for _sweep in 0..100 {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(m[(p, q)].abs());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() <= tol {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (T::cast(2.0) * apq);
                let t = {
                    let sign = if theta >= T::zero() { T::one() } else { -T::one() };
                    sign / (theta.abs() + (theta * theta + T::one()).sqrt())
                };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
            }
        }
    }
    (0..n).map(|i| m[(i, i)]).collect()
}

/// Largest eigenvalue of a symmetric matrix.
pub fn sym_lambda_max<T: Scalar>(a: &Mat<T>) -> T {
    sym_eigenvalues(a)
        .into_iter()
        .fold(T::neg_infinity(), |m, v| m.max(v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eig2x2_real_and_complex() {
        let a = Mat::from_fn(2, 2, |i, j| if i == j { [2.0, -3.0][i] } else { 0.0 });
        let e = eig2x2(&a);
        assert_eq!(e[0], (2.0, 0.0));
        assert_eq!(e[1], (-3.0, 0.0));

        // rotation-like matrix with eigenvalues 1.5 +/- 1.5i
        let m = Mat::from_fn(2, 2, |i, j| [[6.0f64, -15.0], [1.5, -3.0]][i][j]);
        let e = eig2x2(&m);
        assert!((e[0].0 - 1.5).abs() < 1e-12);
        assert!((e[0].1.abs() - 1.5).abs() < 1e-12);
        assert!((spectral_radius_2x2(&m) - (4.5f64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn jacobi_matches_known_spectrum() {
        // A = Q diag(3, -1, 0.5) Q' with Q a Givens product
        let d = [3.0f64, -1.0, 0.5];
        let (c, s) = (0.8f64, 0.6);
        // rotate in the (0,1) plane
        let q = Mat::from_fn(3, 3, |i, j| {
            [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]][i][j]
        });
        let mut a = Mat::zeros(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = 0.0;
                for k in 0..3 {
                    acc += q[(i, k)] * d[k] * q[(j, k)];
                }
                a[(i, j)] = acc;
            }
        }
        let mut eigs = sym_eigenvalues(&a);
        eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((eigs[0] - -1.0).abs() < 1e-10);
        assert!((eigs[1] - 0.5).abs() < 1e-10);
        assert!((eigs[2] - 3.0).abs() < 1e-10);
        assert!((sym_lambda_max(&a) - 3.0).abs() < 1e-10);
    }
}
