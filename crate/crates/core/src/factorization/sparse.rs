//! Up-looking sparse LDL^T with a precomputed symbolic structure.
//!
//! The symbolic phase permutes the pattern by a minimum-degree ordering,
//! builds the elimination tree and the full row/column structure of L, so the
//! numeric phase is a straight replay: scatter values, walk the stored row
//! patterns, append multipliers at precomputed slots.

use std::sync::Arc;

use super::{ordering::min_degree, FactorError, SparsityPattern};
use crate::scalar::Scalar;

const NONE: usize = usize::MAX;

#[derive(Debug)]
pub struct Symbolic {
    n: usize,
    perm: Vec<usize>,
    /// Elimination tree over permuted indices.
    parent: Vec<usize>,
    /// Permuted upper-triangle CSC (column k holds rows <= k, sorted).
    up: Vec<usize>,
    ui: Vec<usize>,
    /// Map from a pattern slot (lower CSC) to its permuted-upper slot.
    a_slot: Vec<usize>,
    /// Position of the diagonal entry inside each upper column.
    diag_slot: Vec<usize>,
    /// Column pointers / row indices of strict-lower L (permuted).
    lp: Vec<usize>,
    li: Vec<usize>,
    /// Concatenated per-row elimination patterns in processing order.
    row_ptr: Vec<usize>,
    row_pat: Vec<usize>,
}

impl Symbolic {
    pub fn analyze(pattern: &Arc<SparsityPattern>) -> Symbolic {
        let n = pattern.dim();
        let perm = min_degree(pattern);
        let mut iperm = vec![0usize; n];
        for (k, &orig) in perm.iter().enumerate() {
            iperm[orig] = k;
        }

        // permuted upper pattern with slot mapping back into the input pattern
        let mut triples: Vec<(usize, usize, usize)> = Vec::with_capacity(pattern.nnz_lower());
        let mut slot = 0usize;
        for j in 0..n {
            for &i in pattern.col_rows(j) {
                let (pi, pj) = (iperm[i], iperm[j]);
                let (row, col) = if pi <= pj { (pi, pj) } else { (pj, pi) };
                triples.push((col, row, slot));
                slot += 1;
            }
        }
        triples.sort_unstable();
        let nnz = triples.len();
        let mut up = vec![0usize; n + 1];
        for &(col, _, _) in &triples {
            up[col + 1] += 1;
        }
        for k in 0..n {
            up[k + 1] += up[k];
        }
        let mut ui = vec![0usize; nnz];
        let mut a_slot = vec![0usize; nnz];
        let mut diag_slot = vec![NONE; n];
        for (pos, &(col, row, orig_slot)) in triples.iter().enumerate() {
            ui[pos] = row;
            a_slot[orig_slot] = pos;
            if row == col {
                diag_slot[col] = pos;
            }
        }
        debug_assert!(diag_slot.iter().all(|&s| s != NONE));

        // elimination tree (Liu) with ancestor path compression
        let mut parent = vec![NONE; n];
        let mut ancestor = vec![NONE; n];
        for k in 0..n {
            for p in up[k]..up[k + 1] {
                let mut i = ui[p];
                while i != k {
                    let next = ancestor[i];
                    ancestor[i] = k;
                    if next == NONE {
                        parent[i] = k;
                        break;
                    }
                    i = next;
                }
            }
        }

        // row patterns of L in the order the numeric phase consumes them
        let mut flag = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        let mut stack = vec![0usize; n];
        let mut pat = vec![0usize; n];
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut row_pat = Vec::new();
        row_ptr.push(0usize);
        for k in 0..n {
            flag[k] = k;
            let mut top = n;
            for p in up[k]..up[k + 1] {
                let mut i = ui[p];
                if i == k {
                    continue;
                }
                let mut len = 0usize;
                while flag[i] != k {
                    stack[len] = i;
                    len += 1;
                    flag[i] = k;
                    i = parent[i];
                }
                while len > 0 {
                    len -= 1;
                    top -= 1;
                    pat[top] = stack[len];
                }
            }
            for &j in &pat[top..n] {
                lnz[j] += 1;
                row_pat.push(j);
            }
            row_ptr.push(row_pat.len());
        }

        let mut lp = vec![0usize; n + 1];
        for j in 0..n {
            lp[j + 1] = lp[j] + lnz[j];
        }
        let mut cursor = lp.clone();
        let mut li = vec![0usize; lp[n]];
        for k in 0..n {
            for &j in &row_pat[row_ptr[k]..row_ptr[k + 1]] {
                li[cursor[j]] = k;
                cursor[j] += 1;
            }
        }

        Symbolic { n, perm, parent, up, ui, a_slot, diag_slot, lp, li, row_ptr, row_pat }
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// Elimination tree over permuted indices; `usize::MAX` marks a root.
    pub fn etree(&self) -> &[usize] {
        &self.parent
    }

    /// Strict-lower nonzeros of L determined by the pattern alone.
    pub fn l_nnz_strict(&self) -> usize {
        self.li.len()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Numeric factorization of `A + diag(shift)`; `values` are the stored
    /// entries of the pattern the analysis was built for.
    pub fn factor<T: Scalar>(
        &self,
        pattern: &SparsityPattern,
        values: &[T],
        shift: &[T],
    ) -> Result<(Vec<T>, Vec<T>), FactorError> {
        let n = self.n;
        assert_eq!(pattern.nnz_lower(), values.len());
        assert_eq!(values.len(), self.a_slot.len());
        let floor = T::min_positive_value().sqrt();

        let mut ax = vec![T::zero(); self.ui.len()];
        for (e, &v) in values.iter().enumerate() {
            ax[self.a_slot[e]] = v;
        }
        for k in 0..n {
            ax[self.diag_slot[k]] += shift[self.perm[k]];
        }

        let mut y = vec![T::zero(); n];
        let mut lx = vec![T::zero(); self.li.len()];
        let mut d = vec![T::zero(); n];
        let mut cursor = self.lp[..n].to_vec();
        for k in 0..n {
            for p in self.up[k]..self.up[k + 1] {
                y[self.ui[p]] += ax[p];
            }
            d[k] = y[k];
            y[k] = T::zero();
            for &i in &self.row_pat[self.row_ptr[k]..self.row_ptr[k + 1]] {
                let yi = y[i];
                y[i] = T::zero();
                for p in self.lp[i]..cursor[i] {
                    y[self.li[p]] -= lx[p] * yi;
                }
                let lki = yi / d[i];
                d[k] -= lki * yi;
                lx[cursor[i]] = lki;
                cursor[i] += 1;
            }
            if !(d[k].abs() >= floor) {
                return Err(FactorError::FactorizationBreakdown { index: k });
            }
        }
        Ok((lx, d))
    }

    /// Solves `P A P^T = L D L^T` against an unpermuted right-hand side.
    pub fn solve<T: Scalar>(&self, lx: &[T], d: &[T], perm: Option<&[usize]>, rhs: &mut [T]) {
        let n = self.n;
        let perm = perm.unwrap_or(&self.perm);
        let mut w = vec![T::zero(); n];
        for k in 0..n {
            w[k] = rhs[perm[k]];
        }
        for j in 0..n {
            let wj = w[j];
            for p in self.lp[j]..self.lp[j + 1] {
                w[self.li[p]] -= lx[p] * wj;
            }
        }
        for k in 0..n {
            w[k] /= d[k];
        }
        for j in (0..n).rev() {
            let mut acc = w[j];
            for p in self.lp[j]..self.lp[j + 1] {
                acc -= lx[p] * w[self.li[p]];
            }
            w[j] = acc;
        }
        for k in 0..n {
            rhs[perm[k]] = w[k];
        }
    }

    pub fn for_each_l<T: Scalar>(&self, lx: &[T], f: &mut impl FnMut(usize, usize, T)) {
        for j in 0..self.n {
            for p in self.lp[j]..self.lp[j + 1] {
                f(self.li[p], j, lx[p]);
            }
        }
    }
}
