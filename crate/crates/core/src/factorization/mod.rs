//! Symmetric-indefinite LDL^T factorization with diagonal regularization.
//!
//! The factorization serves two purposes: solving the modified KKT systems and
//! reading off the inertia of a symmetric matrix from the signs of the D
//! pivots. No pivoting is performed; a small signed diagonal `Gamma` is added
//! instead to keep the elimination stable, at the price of an inertia
//! distortion of order `gamma` that callers can diagnose via
//! [`LdltFactors::suspicious_pivots`].
//!
//! Two storage paths exist: a packed dense lower triangle, and a compressed
//! sparse column lower triangle with a fill-reducing minimum-degree ordering
//! and a symbolic analysis that is reused across refactorizations with the
//! same pattern.

mod dense;
mod ordering;
mod sparse;

use std::io::Write as _;
use std::path::Path;
use std::sync::Arc;

use thiserror::Error;

use crate::scalar::Scalar;

pub use ordering::min_degree;
pub use sparse::Symbolic;

/// Below this dimension the dense path is always used.
const DENSE_DIM_CUTOFF: usize = 64;
/// At or above this lower-triangle density the dense path is used.
const DENSE_DENSITY_CUTOFF: f64 = 0.25;

#[derive(Debug, Error)]
pub enum FactorError {
    /// A pivot magnitude fell below the machine-safety floor even with the
    /// Gamma regularization in place.
    #[error("LDL^T breakdown: pivot {index} underflowed the safety floor")]
    FactorizationBreakdown { index: usize },
    /// Solve was requested on factors whose D contains zero pivots.
    #[error("singular system: {zero} pivot(s) within the zero tolerance")]
    SingularSystem { zero: usize },
}

/// Sparsity pattern of the lower triangle in compressed sparse column form.
///
/// Invariants: row indices are sorted within each column, `row >= col` for
/// every entry, and every diagonal entry is present.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparsityPattern {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
}

impl SparsityPattern {
    /// Builds a pattern from arbitrary (row, col) index pairs. Entries are
    /// mirrored into the lower triangle, deduplicated, and the diagonal is
    /// completed.
    pub fn from_entries(n: usize, entries: impl IntoIterator<Item = (usize, usize)>) -> Arc<Self> {
        let mut pairs: Vec<(usize, usize)> = entries
            .into_iter()
            .map(|(i, j)| if i >= j { (i, j) } else { (j, i) })
            .collect();
        pairs.extend((0..n).map(|i| (i, i)));
        // sort by column then row for CSC order
        pairs.sort_unstable_by_key(|&(i, j)| (j, i));
        pairs.dedup();
        let mut col_ptr = vec![0usize; n + 1];
        for &(i, j) in &pairs {
            assert!(i < n && j < n, "pattern index out of bounds");
            col_ptr[j + 1] += 1;
        }
        for j in 0..n {
            col_ptr[j + 1] += col_ptr[j];
        }
        let row_idx = pairs.into_iter().map(|(i, _)| i).collect();
        Arc::new(SparsityPattern { n, col_ptr, row_idx })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of stored lower-triangle entries.
    pub fn nnz_lower(&self) -> usize {
        self.row_idx.len()
    }

    /// Fraction of the lower triangle that is stored.
    pub fn density(&self) -> f64 {
        if self.n == 0 {
            return 1.0;
        }
        self.nnz_lower() as f64 / (self.n * (self.n + 1) / 2) as f64
    }

    /// Storage slot of entry (i, j) with i >= j, if present.
    pub fn slot(&self, i: usize, j: usize) -> Option<usize> {
        debug_assert!(i >= j);
        let lo = self.col_ptr[j];
        let hi = self.col_ptr[j + 1];
        self.row_idx[lo..hi].binary_search(&i).ok().map(|k| lo + k)
    }

    pub fn col_rows(&self, j: usize) -> &[usize] {
        &self.row_idx[self.col_ptr[j]..self.col_ptr[j + 1]]
    }
}

/// Symmetric matrix storing only its lower triangle, densely or sparsely.
#[derive(Debug, Clone)]
pub struct SymMatrix<T> {
    n: usize,
    storage: SymStorage<T>,
}

#[derive(Debug, Clone)]
pub enum SymStorage<T> {
    /// Packed lower triangle, row-major: entry (i, j) at `i (i + 1) / 2 + j`.
    Dense(Vec<T>),
    Sparse {
        pattern: Arc<SparsityPattern>,
        values: Vec<T>,
    },
}

#[inline]
pub(crate) fn packed_index(i: usize, j: usize) -> usize {
    debug_assert!(i >= j);
    i * (i + 1) / 2 + j
}

impl<T: Scalar> SymMatrix<T> {
    pub fn dense_zeros(n: usize) -> Self {
        SymMatrix { n, storage: SymStorage::Dense(vec![T::zero(); n * (n + 1) / 2]) }
    }

    /// Dense matrix from a closure over the lower triangle (i >= j).
    pub fn dense_from_lower(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::dense_zeros(n);
        for i in 0..n {
            for j in 0..=i {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn sparse_zeros(pattern: Arc<SparsityPattern>) -> Self {
        let nnz = pattern.nnz_lower();
        SymMatrix {
            n: pattern.dim(),
            storage: SymStorage::Sparse { pattern, values: vec![T::zero(); nnz] },
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, SymStorage::Sparse { .. })
    }

    pub fn pattern(&self) -> Option<&Arc<SparsityPattern>> {
        match &self.storage {
            SymStorage::Sparse { pattern, .. } => Some(pattern),
            SymStorage::Dense(_) => None,
        }
    }

    /// Sets entry (i, j); indices are canonicalized to the lower triangle.
    /// Panics if a sparse matrix has no slot for the entry.
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        match &mut self.storage {
            SymStorage::Dense(p) => p[packed_index(i, j)] = v,
            SymStorage::Sparse { pattern, values } => {
                let slot = pattern.slot(i, j).expect("entry outside sparsity pattern");
                values[slot] = v;
            }
        }
    }

    pub fn add(&mut self, i: usize, j: usize, v: T) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        match &mut self.storage {
            SymStorage::Dense(p) => p[packed_index(i, j)] += v,
            SymStorage::Sparse { pattern, values } => {
                let slot = pattern.slot(i, j).expect("entry outside sparsity pattern");
                values[slot] += v;
            }
        }
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        match &self.storage {
            SymStorage::Dense(p) => p[packed_index(i, j)],
            SymStorage::Sparse { pattern, values } => {
                pattern.slot(i, j).map_or(T::zero(), |s| values[s])
            }
        }
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        match &mut self.storage {
            SymStorage::Dense(p) => p,
            SymStorage::Sparse { values, .. } => values,
        }
    }

    /// Visits every stored lower-triangle entry as (i, j, value).
    pub fn for_each_lower(&self, mut f: impl FnMut(usize, usize, T)) {
        match &self.storage {
            SymStorage::Dense(p) => {
                for i in 0..self.n {
                    for j in 0..=i {
                        f(i, j, p[packed_index(i, j)]);
                    }
                }
            }
            SymStorage::Sparse { pattern, values } => {
                for j in 0..self.n {
                    for (k, &i) in pattern.col_rows(j).iter().enumerate() {
                        f(i, j, values[pattern.col_ptr[j] + k]);
                    }
                }
            }
        }
    }

    /// y = A x + diag(shift) x, exploiting symmetry.
    pub fn matvec_shifted(&self, x: &[T], y: &mut [T], shift: Option<&[T]>) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        y.iter_mut().for_each(|v| *v = T::zero());
        self.for_each_lower(|i, j, v| {
            y[i] += v * x[j];
            if i != j {
                y[j] += v * x[i];
            }
        });
        if let Some(s) = shift {
            for k in 0..self.n {
                y[k] += s[k] * x[k];
            }
        }
    }

    pub fn matvec(&self, x: &[T], y: &mut [T]) {
        self.matvec_shifted(x, y, None);
    }

    /// Infinity norm (maximum absolute row sum) of the full symmetric matrix.
    pub fn inf_norm(&self) -> T {
        let mut rows = vec![T::zero(); self.n];
        self.for_each_lower(|i, j, v| {
            rows[i] += v.abs();
            if i != j {
                rows[j] += v.abs();
            }
        });
        rows.into_iter().fold(T::zero(), |m, v| m.max(v))
    }

    pub fn max_abs_diag(&self) -> T {
        let mut m = T::zero();
        for i in 0..self.n {
            m = m.max(self.get(i, i).abs());
        }
        m
    }

    /// Median of |A_ii|, the scale anchor for the regularization magnitude
    /// and the zero tolerance. Interior-point systems carry barrier entries
    /// that grow like 1/b on parts of the diagonal; anchoring on the maximum
    /// (or on the norm) would let the regularization swamp the order-one
    /// eigenvalues the inertia test cares about, while the median tracks the
    /// problem scale.
    pub fn median_abs_diag(&self) -> T {
        if self.n == 0 {
            return T::zero();
        }
        let mut d: Vec<T> = (0..self.n).map(|i| self.get(i, i).abs()).collect();
        d.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        d[self.n / 2]
    }

    pub fn all_finite(&self) -> bool {
        let mut ok = true;
        self.for_each_lower(|_, _, v| ok &= v.is_finite());
        ok
    }

    /// Dense principal submatrix over a contiguous index range.
    pub fn principal_range(&self, lo: usize, hi: usize) -> SymMatrix<T> {
        assert!(lo <= hi && hi <= self.n);
        SymMatrix::dense_from_lower(hi - lo, |i, j| self.get(lo + i, lo + j))
    }

    fn to_packed_lower(&self) -> Vec<T> {
        match &self.storage {
            SymStorage::Dense(p) => p.clone(),
            SymStorage::Sparse { .. } => {
                let mut p = vec![T::zero(); self.n * (self.n + 1) / 2];
                self.for_each_lower(|i, j, v| p[packed_index(i, j)] = v);
                p
            }
        }
    }

    /// Writes the pattern (or "dense") and dimensions to a text file.
    pub fn dump_pattern(&self, path: &Path) -> std::io::Result<()> {
        let mut f = std::fs::File::create(path)?;
        writeln!(f, "n {}", self.n)?;
        match &self.storage {
            SymStorage::Dense(_) => writeln!(f, "storage dense")?,
            SymStorage::Sparse { pattern, .. } => {
                writeln!(f, "storage sparse nnz_lower {}", pattern.nnz_lower())?;
                let mut line = String::new();
                self.for_each_lower(|i, j, _| {
                    line.push_str(&format!("{} {}\n", i, j));
                });
                f.write_all(line.as_bytes())?;
            }
        }
        Ok(())
    }
}

/// Signed diagonal regularization `Gamma = gamma * diag(signs)`.
#[derive(Debug, Clone)]
pub struct GammaPolicy<T> {
    pub signs: Vec<i8>,
    pub gamma: T,
}

impl<T: Scalar> GammaPolicy<T> {
    pub fn new(signs: Vec<i8>, gamma: T) -> Self {
        assert!(gamma >= T::zero(), "gamma must be nonnegative");
        GammaPolicy { signs, gamma }
    }

    /// All-positive signs (minimization-style blocks).
    pub fn uniform(n: usize, gamma: T) -> Self {
        GammaPolicy::new(vec![1; n], gamma)
    }

    /// Default magnitude `1e-8 * (1 + median |A_ii|)` with the given signs.
    pub fn scaled_default(a: &SymMatrix<T>, signs: Vec<i8>) -> Self {
        assert_eq!(signs.len(), a.dim());
        let gamma = T::cast(1e-8) * (T::one() + a.median_abs_diag());
        GammaPolicy::new(signs, gamma)
    }

    pub fn shift(&self) -> Vec<T> {
        self.signs
            .iter()
            .map(|&s| {
                if s >= 0 {
                    self.gamma
                } else {
                    -self.gamma
                }
            })
            .collect()
    }

    pub fn negated(&self) -> Self {
        GammaPolicy { signs: self.signs.iter().map(|&s| -s).collect(), gamma: self.gamma }
    }
}

/// Inertia triple: counts of positive, negative and zero pivots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Inertia {
    pub pos: usize,
    pub neg: usize,
    pub zero: usize,
}

impl Inertia {
    pub fn new(pos: usize, neg: usize, zero: usize) -> Self {
        Inertia { pos, neg, zero }
    }
}

impl std::fmt::Display for Inertia {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{},{})", self.pos, self.neg, self.zero)
    }
}

#[derive(Debug, Clone)]
enum LStorage<T> {
    /// Packed lower triangle holding L strictly below the diagonal and D on it.
    Dense(Vec<T>),
    Sparse {
        symbolic: Arc<Symbolic>,
        lx: Vec<T>,
    },
}

/// Unit-lower-triangular / diagonal factors of `P (A + shift) P^T`.
#[derive(Debug, Clone)]
pub struct LdltFactors<T> {
    n: usize,
    l: LStorage<T>,
    d: Vec<T>,
    perm: Option<Vec<usize>>,
    /// Pivots with |d| at or below this count as zero in the inertia.
    pub zero_tol: T,
    /// Gamma magnitude used when factoring, kept for diagnostics.
    pub gamma: T,
}

impl<T: Scalar> LdltFactors<T> {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn pivots(&self) -> &[T] {
        &self.d
    }

    /// Permutation applied before elimination: `perm[k]` is the original index
    /// of the k-th pivot. `None` means identity.
    pub fn perm(&self) -> Option<&[usize]> {
        self.perm.as_deref()
    }

    /// Inertia of D under the zero tolerance.
    pub fn inertia(&self) -> Inertia {
        let mut it = Inertia::new(0, 0, 0);
        for &d in &self.d {
            if d > self.zero_tol {
                it.pos += 1;
            } else if d < -self.zero_tol {
                it.neg += 1;
            } else {
                it.zero += 1;
            }
        }
        it
    }

    /// Pivots within `10 * gamma` of zero: their sign may be an artifact of the
    /// regularization rather than of A itself.
    pub fn suspicious_pivots(&self) -> usize {
        let thr = T::cast(10.0) * self.gamma;
        self.d.iter().filter(|d| d.abs() <= thr).count()
    }

    /// Number of stored entries of L including the unit diagonal.
    pub fn l_nnz(&self) -> usize {
        match &self.l {
            LStorage::Dense(_) => self.n * (self.n + 1) / 2,
            LStorage::Sparse { lx, .. } => lx.len() + self.n,
        }
    }

    /// Visits the strictly-lower entries of L as (i, j, value) in original
    /// (unpermuted) row/column indices of the permuted factor, i.e. indices
    /// into the permuted system.
    pub fn for_each_l_strict(&self, mut f: impl FnMut(usize, usize, T)) {
        match &self.l {
            LStorage::Dense(p) => {
                for i in 0..self.n {
                    for j in 0..i {
                        f(i, j, p[packed_index(i, j)]);
                    }
                }
            }
            LStorage::Sparse { symbolic, lx } => {
                symbolic.for_each_l(lx, &mut f);
            }
        }
    }

    /// Solves `(A + shift) v = rhs` in place. Requires nonsingular factors.
    pub fn solve_inplace(&self, rhs: &mut [T]) -> Result<(), FactorError> {
        assert_eq!(rhs.len(), self.n);
        let it = self.inertia();
        if it.zero > 0 {
            return Err(FactorError::SingularSystem { zero: it.zero });
        }
        match &self.l {
            LStorage::Dense(p) => dense::solve(self.n, p, &self.d, rhs),
            LStorage::Sparse { symbolic, lx } => {
                symbolic.solve(lx, &self.d, self.perm.as_deref(), rhs)
            }
        }
        Ok(())
    }

    pub fn solve(&self, rhs: &[T]) -> Result<Vec<T>, FactorError> {
        let mut v = rhs.to_vec();
        self.solve_inplace(&mut v)?;
        Ok(v)
    }

    /// Solve with one step of iterative refinement against the matrix
    /// represented by `matvec` (typically `A + shift` without Gamma).
    pub fn solve_refined(
        &self,
        matvec: impl Fn(&[T], &mut [T]),
        rhs: &[T],
    ) -> Result<Vec<T>, FactorError> {
        let mut v = self.solve(rhs)?;
        let mut av = vec![T::zero(); self.n];
        matvec(&v, &mut av);
        let r: Vec<T> = rhs.iter().zip(&av).map(|(&b, &a)| b - a).collect();
        let dv = self.solve(&r)?;
        for (vi, di) in v.iter_mut().zip(dv) {
            *vi += di;
        }
        Ok(v)
    }

    /// Writes the D pivots and factor statistics to a text file.
    pub fn dump_debug(&self, path: &Path) -> std::io::Result<()> {
        let mut f = std::fs::File::create(path)?;
        writeln!(f, "n {} l_nnz {} inertia {}", self.n, self.l_nnz(), self.inertia())?;
        writeln!(f, "zero_tol {:e} gamma {:e}", self.zero_tol, self.gamma)?;
        for (k, d) in self.d.iter().enumerate() {
            writeln!(f, "d {} {:e}", k, d)?;
        }
        Ok(())
    }
}

fn zero_tol_for<T: Scalar>(a: &SymMatrix<T>) -> T {
    T::cast(1e-11) * (T::one() + a.median_abs_diag())
}

fn prefer_sparse(pattern: &SparsityPattern) -> bool {
    pattern.dim() >= DENSE_DIM_CUTOFF && pattern.density() < DENSE_DENSITY_CUTOFF
}

/// Factors `A + Gamma`.
pub fn ldlt_factor<T: Scalar>(
    a: &SymMatrix<T>,
    gamma: &GammaPolicy<T>,
) -> Result<LdltFactors<T>, FactorError> {
    assert_eq!(gamma.signs.len(), a.dim());
    LdltEngine::new().factor_shifted(a, &gamma.shift(), gamma.gamma)
}

/// Fill-reducing ordering and elimination structure for a pattern, reusable
/// across numeric refactorizations with the identical pattern.
pub fn symbolic_analyze(pattern: &Arc<SparsityPattern>) -> Arc<Symbolic> {
    Arc::new(Symbolic::analyze(pattern))
}

/// Factorization driver that caches the symbolic analysis per pattern.
#[derive(Default)]
pub struct LdltEngine {
    cache: Option<(Arc<SparsityPattern>, Arc<Symbolic>)>,
}

impl LdltEngine {
    pub fn new() -> Self {
        LdltEngine { cache: None }
    }

    /// Factors `A + diag(shift)`. `gamma` is only recorded for diagnostics;
    /// callers fold the regularization into `shift`.
    pub fn factor_shifted<T: Scalar>(
        &mut self,
        a: &SymMatrix<T>,
        shift: &[T],
        gamma: T,
    ) -> Result<LdltFactors<T>, FactorError> {
        let n = a.dim();
        assert_eq!(shift.len(), n);
        let zero_tol = zero_tol_for(a);
        match &a.storage {
            SymStorage::Sparse { pattern, values } if prefer_sparse(pattern) => {
                let symbolic = match &self.cache {
                    Some((p, s)) if Arc::ptr_eq(p, pattern) => s.clone(),
                    _ => {
                        let s = symbolic_analyze(pattern);
                        self.cache = Some((pattern.clone(), s.clone()));
                        s
                    }
                };
                let (lx, d) = symbolic.factor(pattern, values, shift)?;
                Ok(LdltFactors {
                    n,
                    perm: Some(symbolic.perm().to_vec()),
                    l: LStorage::Sparse { symbolic, lx },
                    d,
                    zero_tol,
                    gamma,
                })
            }
            _ => {
                let mut packed = a.to_packed_lower();
                for k in 0..n {
                    packed[packed_index(k, k)] += shift[k];
                }
                let d = dense::factor(n, &mut packed)?;
                Ok(LdltFactors {
                    n,
                    l: LStorage::Dense(packed),
                    d,
                    perm: None,
                    zero_tol,
                    gamma,
                })
            }
        }
    }
}
