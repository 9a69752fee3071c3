//! Assembly of the first-order residual g(z, b) and the scaled second-order
//! system J_zz, with the diagonal modification E and the regularization signs.
//!
//! Block order of z is fixed: (x, s_x, y, s_y, nu_y, lambda_y, nu_x, lambda_x).
//! The residual rows follow the same order:
//!
//! ```text
//! [ grad_x L, lam_x*s_x - b, grad_y L, -lam_y*s_y + b,
//!   G_y, -F_y - s_y, G_x, F_x + s_x ]
//! ```
//!
//! `J_zz = S^{-1} (dg/dz)^T` with `S = diag(1, s_x, 1, s_y, 1, 1, 1, 1)` per
//! block; equivalently `S^{-1/2} H_zz S^{-1/2}` for the unscaled matrix
//! assembled by [`assemble_hzz_direct`], which is kept as an independent
//! algebraic route for consistency checks.

use std::sync::Arc;

use thiserror::Error;

use super::{Dims, MinmaxProblem, PrimalDualPoint, TripletSink, ZLayout};
use crate::factorization::{SparsityPattern, SymMatrix};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error("callback produced a non-finite value in {0}")]
    CallbackFailure(&'static str),
    #[error("domain violation: {0}")]
    DomainViolation(&'static str),
}

/// Diagonal Hessian modification (eps_x on the x block, -eps_y on the y block).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Modification<T> {
    pub eps_x: T,
    pub eps_y: T,
}

impl<T: Scalar> Modification<T> {
    pub fn new(eps_x: T, eps_y: T) -> Self {
        assert!(eps_x >= T::zero() && eps_y >= T::zero());
        Modification { eps_x, eps_y }
    }

    pub fn zero() -> Self {
        Modification { eps_x: T::zero(), eps_y: T::zero() }
    }

    pub fn is_zero(&self) -> bool {
        self.eps_x == T::zero() && self.eps_y == T::zero()
    }
}

/// Diagonal of E over the full z layout.
pub fn e_diag<T: Scalar>(dims: Dims, m: Modification<T>) -> Vec<T> {
    let l = ZLayout::new(dims);
    let mut e = vec![T::zero(); l.total];
    e[l.x..l.x + dims.n_x].iter_mut().for_each(|v| *v = m.eps_x);
    e[l.y..l.y + dims.n_y].iter_mut().for_each(|v| *v = -m.eps_y);
    e
}

/// Diagonal of E_y over the maximizer subsystem (eps_y on the y block). The
/// subsystem condition subtracts it: inertia(J_yy - E_y).
pub fn ey_diag<T: Scalar>(dims: Dims, m: Modification<T>) -> Vec<T> {
    let mut e = vec![T::zero(); dims.y_dim()];
    e[..dims.n_y].iter_mut().for_each(|v| *v = m.eps_y);
    e
}

/// Regularization signs for the full system: + on (x, s_x), - on (y, s_y),
/// + on (nu_y, lambda_y), - on (nu_x, lambda_x), matching the expected
/// inertia of the modified matrix.
pub fn gamma_signs_zz(dims: Dims) -> Vec<i8> {
    let mut s = Vec::with_capacity(dims.z_dim());
    s.extend(std::iter::repeat(1).take(dims.n_x + dims.m_x));
    s.extend(std::iter::repeat(-1).take(dims.n_y + dims.m_y));
    s.extend(std::iter::repeat(1).take(dims.l_y + dims.m_y));
    s.extend(std::iter::repeat(-1).take(dims.l_x + dims.m_x));
    s
}

/// Regularization signs for the maximizer subsystem: - on (y, s_y), + on
/// (nu_y, lambda_y).
pub fn gamma_signs_yy(dims: Dims) -> Vec<i8> {
    let mut s = Vec::with_capacity(dims.y_dim());
    s.extend(std::iter::repeat(-1).take(dims.n_y + dims.m_y));
    s.extend(std::iter::repeat(1).take(dims.l_y + dims.m_y));
    s
}

/// Assembled KKT system at an iterate.
#[derive(Debug, Clone)]
pub struct KktSystem<T> {
    pub dims: Dims,
    pub g: Vec<T>,
    pub jzz: SymMatrix<T>,
    pub jyy: SymMatrix<T>,
    /// Diagonal scaling S (ones except the slack blocks).
    pub scaling: Vec<T>,
    pub b: T,
    pub modification: Modification<T>,
}

impl<T: Scalar> KktSystem<T> {
    pub fn e_shift(&self) -> Vec<T> {
        e_diag(self.dims, self.modification)
    }
}

#[derive(Debug)]
struct Scratch<T> {
    grad_x: Vec<T>,
    grad_y: Vec<T>,
    gx: Vec<T>,
    fx: Vec<T>,
    gy: Vec<T>,
    fy: Vec<T>,
    hxx: TripletSink<T>,
    hxy: TripletSink<T>,
    hyy: TripletSink<T>,
    jgx: TripletSink<T>,
    jfx: TripletSink<T>,
    jgy_x: TripletSink<T>,
    jgy_y: TripletSink<T>,
    jfy_x: TripletSink<T>,
    jfy_y: TripletSink<T>,
}

impl<T: Scalar> Scratch<T> {
    fn new(dims: Dims) -> Self {
        Scratch {
            grad_x: vec![T::zero(); dims.n_x],
            grad_y: vec![T::zero(); dims.n_y],
            gx: vec![T::zero(); dims.l_x],
            fx: vec![T::zero(); dims.m_x],
            gy: vec![T::zero(); dims.l_y],
            fy: vec![T::zero(); dims.m_y],
            hxx: TripletSink::new(),
            hxy: TripletSink::new(),
            hyy: TripletSink::new(),
            jgx: TripletSink::new(),
            jfx: TripletSink::new(),
            jgy_x: TripletSink::new(),
            jgy_y: TripletSink::new(),
            jfy_x: TripletSink::new(),
            jfy_y: TripletSink::new(),
        }
    }
}

#[derive(Debug)]
struct MatrixCache {
    pattern: Arc<SparsityPattern>,
    /// Slot in the pattern for each emitted entry, in emission order.
    slots: Vec<usize>,
}

/// Reusable assembler: callbacks are structurally deterministic, so the
/// sparsity pattern and the emission-order slot map are computed once and
/// reused for every subsequent assembly on the same problem.
pub struct KktAssembler<T> {
    dims: Dims,
    layout: ZLayout,
    scratch: Scratch<T>,
    entries: Vec<(usize, usize, T)>,
    zz_cache: Option<MatrixCache>,
    yy_cache: Option<MatrixCache>,
}

impl<T: Scalar> KktAssembler<T> {
    pub fn new(dims: Dims) -> Self {
        dims.validate();
        KktAssembler {
            dims,
            layout: ZLayout::new(dims),
            scratch: Scratch::new(dims),
            entries: Vec::new(),
            zz_cache: None,
            yy_cache: None,
        }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    fn run_first_order(
        &mut self,
        p: &dyn MinmaxProblem<T>,
        z: &PrimalDualPoint<T>,
    ) -> Result<(), AssemblyError> {
        let s = &mut self.scratch;
        p.grad_x(&z.x, &z.y, &mut s.grad_x);
        p.grad_y(&z.x, &z.y, &mut s.grad_y);
        p.eq_x(&z.x, &mut s.gx);
        p.ineq_x(&z.x, &mut s.fx);
        p.eq_y(&z.x, &z.y, &mut s.gy);
        p.ineq_y(&z.x, &z.y, &mut s.fy);
        s.jgx.clear();
        s.jfx.clear();
        s.jgy_x.clear();
        s.jgy_y.clear();
        s.jfy_x.clear();
        s.jfy_y.clear();
        p.jac_eq_x(&z.x, &mut s.jgx);
        p.jac_ineq_x(&z.x, &mut s.jfx);
        p.jac_eq_y(&z.x, &z.y, &mut s.jgy_x, &mut s.jgy_y);
        p.jac_ineq_y(&z.x, &z.y, &mut s.jfy_x, &mut s.jfy_y);
        let finite = s.grad_x.iter().chain(&s.grad_y).chain(&s.gx).chain(&s.fx).chain(&s.gy).chain(&s.fy).all(|v| v.is_finite())
            && s.jgx.all_finite()
            && s.jfx.all_finite()
            && s.jgy_x.all_finite()
            && s.jgy_y.all_finite()
            && s.jfy_x.all_finite()
            && s.jfy_y.all_finite();
        if !finite {
            return Err(AssemblyError::CallbackFailure("first-order callbacks"));
        }
        Ok(())
    }

    /// The residual g(z, b) in the fixed block order.
    pub fn residual(
        &mut self,
        p: &dyn MinmaxProblem<T>,
        z: &PrimalDualPoint<T>,
        b: T,
    ) -> Result<Vec<T>, AssemblyError> {
        self.run_first_order(p, z)?;
        let l = self.layout;
        let s = &self.scratch;
        let mut g = vec![T::zero(); l.total];

        // stationarity rows: grad_x L and grad_y L
        g[l.x..l.x + self.dims.n_x].copy_from_slice(&s.grad_x);
        g[l.y..l.y + self.dims.n_y].copy_from_slice(&s.grad_y);
        for &(i, k, v) in s.jgx.entries() {
            g[l.x + i] += v * z.nu_x[k];
        }
        for &(i, k, v) in s.jfx.entries() {
            g[l.x + i] += v * z.lam_x[k];
        }
        for &(i, k, v) in s.jgy_x.entries() {
            g[l.x + i] += v * z.nu_y[k];
        }
        for &(i, k, v) in s.jfy_x.entries() {
            g[l.x + i] -= v * z.lam_y[k];
        }
        for &(i, k, v) in s.jgy_y.entries() {
            g[l.y + i] += v * z.nu_y[k];
        }
        for &(i, k, v) in s.jfy_y.entries() {
            g[l.y + i] -= v * z.lam_y[k];
        }

        // complementarity rows
        for k in 0..self.dims.m_x {
            g[l.s_x + k] = z.lam_x[k] * z.s_x[k] - b;
        }
        for k in 0..self.dims.m_y {
            g[l.s_y + k] = -z.lam_y[k] * z.s_y[k] + b;
        }

        // constraint rows
        g[l.nu_y..l.nu_y + self.dims.l_y].copy_from_slice(&s.gy);
        for k in 0..self.dims.m_y {
            g[l.lam_y + k] = -s.fy[k] - z.s_y[k];
        }
        g[l.nu_x..l.nu_x + self.dims.l_x].copy_from_slice(&s.gx);
        for k in 0..self.dims.m_x {
            g[l.lam_x + k] = s.fx[k] + z.s_x[k];
        }
        Ok(g)
    }

    fn run_hessians(
        &mut self,
        p: &dyn MinmaxProblem<T>,
        z: &PrimalDualPoint<T>,
    ) -> Result<(), AssemblyError> {
        let s = &mut self.scratch;
        s.hxx.clear();
        s.hxy.clear();
        s.hyy.clear();
        let m = z.multipliers();
        p.lag_hess_xx(&z.x, &z.y, &m, &mut s.hxx);
        p.lag_hess_xy(&z.x, &z.y, &m, &mut s.hxy);
        p.lag_hess_yy(&z.x, &z.y, &m, &mut s.hyy);
        if !(s.hxx.all_finite() && s.hxy.all_finite() && s.hyy.all_finite()) {
            return Err(AssemblyError::CallbackFailure("Hessian callbacks"));
        }
        Ok(())
    }

    fn build_matrix(
        n: usize,
        entries: &[(usize, usize, T)],
        cache: &mut Option<MatrixCache>,
    ) -> SymMatrix<T> {
        match cache {
            Some(c) => {
                debug_assert_eq!(c.slots.len(), entries.len(), "pattern changed between assemblies");
                let mut m = SymMatrix::sparse_zeros(c.pattern.clone());
                let values = m.values_mut();
                for (&slot, &(_, _, v)) in c.slots.iter().zip(entries) {
                    values[slot] += v;
                }
                m
            }
            None => {
                let pattern =
                    SparsityPattern::from_entries(n, entries.iter().map(|&(i, j, _)| (i, j)));
                let dense = pattern.dim() < 64 || pattern.density() >= 0.25;
                if dense {
                    let mut m = SymMatrix::dense_zeros(n);
                    for &(i, j, v) in entries {
                        m.add(i, j, v);
                    }
                    m
                } else {
                    let slots = entries
                        .iter()
                        .map(|&(i, j, _)| {
                            let (i, j) = if i >= j { (i, j) } else { (j, i) };
                            pattern.slot(i, j).expect("entry missing from own pattern")
                        })
                        .collect();
                    *cache = Some(MatrixCache { pattern: pattern.clone(), slots });
                    let mut m = SymMatrix::sparse_zeros(pattern);
                    let values = m.values_mut();
                    for (&slot, &(_, _, v)) in
                        cache.as_ref().unwrap().slots.iter().zip(entries)
                    {
                        values[slot] += v;
                    }
                    m
                }
            }
        }
    }

    /// Assembles the full scaled system with residual, J_zz, J_yy and S.
    pub fn scaled_kkt(
        &mut self,
        p: &dyn MinmaxProblem<T>,
        z: &PrimalDualPoint<T>,
        b: T,
        m: Modification<T>,
    ) -> Result<KktSystem<T>, AssemblyError> {
        let dims = self.dims;
        if dims.m_x + dims.m_y > 0 && z.min_positive_blocks() <= T::zero() {
            return Err(AssemblyError::DomainViolation(
                "slack or inequality multiplier not strictly positive",
            ));
        }
        let g = self.residual(p, z, b)?;
        self.run_hessians(p, z)?;
        let l = self.layout;

        // J_zz entries, lower triangle, deterministic emission order
        self.entries.clear();
        let mut entries = std::mem::take(&mut self.entries);
        {
            let s = &self.scratch;
            for &(i, j, v) in s.hxx.entries() {
                debug_assert!(i >= j);
                entries.push((l.x + i, l.x + j, v));
            }
            for &(i, j, v) in s.hyy.entries() {
                debug_assert!(i >= j);
                entries.push((l.y + i, l.y + j, v));
            }
            for &(i, j, v) in s.hxy.entries() {
                entries.push((l.y + j, l.x + i, v));
            }
            for &(i, k, v) in s.jgx.entries() {
                entries.push((l.nu_x + k, l.x + i, v));
            }
            for &(i, k, v) in s.jfx.entries() {
                entries.push((l.lam_x + k, l.x + i, v));
            }
            for &(i, k, v) in s.jgy_x.entries() {
                entries.push((l.nu_y + k, l.x + i, v));
            }
            for &(i, k, v) in s.jgy_y.entries() {
                entries.push((l.nu_y + k, l.y + i, v));
            }
            for &(i, k, v) in s.jfy_x.entries() {
                entries.push((l.lam_y + k, l.x + i, -v));
            }
            for &(i, k, v) in s.jfy_y.entries() {
                entries.push((l.lam_y + k, l.y + i, -v));
            }
            for k in 0..dims.m_x {
                entries.push((l.s_x + k, l.s_x + k, z.lam_x[k] / z.s_x[k]));
                entries.push((l.lam_x + k, l.s_x + k, T::one()));
            }
            for k in 0..dims.m_y {
                entries.push((l.s_y + k, l.s_y + k, -z.lam_y[k] / z.s_y[k]));
                entries.push((l.lam_y + k, l.s_y + k, -T::one()));
            }
        }
        let jzz = Self::build_matrix(l.total, &entries, &mut self.zz_cache);

        // maximizer subsystem in its local layout
        entries.clear();
        {
            let s = &self.scratch;
            let (yo, syo, nuo, lamo) = l.y_sub();
            for &(i, j, v) in s.hyy.entries() {
                entries.push((yo + i, yo + j, v));
            }
            for &(i, k, v) in s.jgy_y.entries() {
                entries.push((nuo + k, yo + i, v));
            }
            for &(i, k, v) in s.jfy_y.entries() {
                entries.push((lamo + k, yo + i, -v));
            }
            for k in 0..dims.m_y {
                entries.push((syo + k, syo + k, -z.lam_y[k] / z.s_y[k]));
                entries.push((lamo + k, syo + k, -T::one()));
            }
        }
        let jyy = Self::build_matrix(dims.y_dim(), &entries, &mut self.yy_cache);
        entries.clear();
        self.entries = entries;

        let mut scaling = vec![T::one(); l.total];
        scaling[l.s_x..l.s_x + dims.m_x].copy_from_slice(&z.s_x);
        scaling[l.s_y..l.s_y + dims.m_y].copy_from_slice(&z.s_y);

        Ok(KktSystem { dims, g, jzz, jyy, scaling, b, modification: m })
    }
}

/// One-shot residual assembly (see [`KktAssembler::residual`]).
pub fn assemble_residual<T: Scalar>(
    p: &dyn MinmaxProblem<T>,
    z: &PrimalDualPoint<T>,
    b: T,
) -> Result<Vec<T>, AssemblyError> {
    KktAssembler::new(p.dims()).residual(p, z, b)
}

/// One-shot scaled-system assembly (see [`KktAssembler::scaled_kkt`]).
pub fn assemble_scaled_kkt<T: Scalar>(
    p: &dyn MinmaxProblem<T>,
    z: &PrimalDualPoint<T>,
    b: T,
    m: Modification<T>,
) -> Result<KktSystem<T>, AssemblyError> {
    KktAssembler::new(p.dims()).scaled_kkt(p, z, b, m)
}

/// Unscaled H_zz assembled directly from its block definition, with
/// `diag(lambda)` slack blocks and `diag(sqrt(s))` couplings. Kept dense and
/// separate from the J_zz route so the two can be checked against each other
/// through `S^{1/2} J S^{1/2} = H`.
pub fn assemble_hzz_direct<T: Scalar>(
    p: &dyn MinmaxProblem<T>,
    z: &PrimalDualPoint<T>,
) -> Result<SymMatrix<T>, AssemblyError> {
    let dims = p.dims();
    let l = ZLayout::new(dims);
    let mut asm = KktAssembler::new(dims);
    asm.run_first_order(p, z)?;
    asm.run_hessians(p, z)?;
    let s = &asm.scratch;
    let mut h = SymMatrix::dense_zeros(l.total);
    for &(i, j, v) in s.hxx.entries() {
        h.add(l.x + i, l.x + j, v);
    }
    for &(i, j, v) in s.hyy.entries() {
        h.add(l.y + i, l.y + j, v);
    }
    for &(i, j, v) in s.hxy.entries() {
        h.add(l.y + j, l.x + i, v);
    }
    for &(i, k, v) in s.jgx.entries() {
        h.add(l.nu_x + k, l.x + i, v);
    }
    for &(i, k, v) in s.jfx.entries() {
        h.add(l.lam_x + k, l.x + i, v);
    }
    for &(i, k, v) in s.jgy_x.entries() {
        h.add(l.nu_y + k, l.x + i, v);
    }
    for &(i, k, v) in s.jgy_y.entries() {
        h.add(l.nu_y + k, l.y + i, v);
    }
    for &(i, k, v) in s.jfy_x.entries() {
        h.add(l.lam_y + k, l.x + i, -v);
    }
    for &(i, k, v) in s.jfy_y.entries() {
        h.add(l.lam_y + k, l.y + i, -v);
    }
    for k in 0..dims.m_x {
        h.add(l.s_x + k, l.s_x + k, z.lam_x[k]);
        h.add(l.lam_x + k, l.s_x + k, z.s_x[k].sqrt());
    }
    for k in 0..dims.m_y {
        h.add(l.s_y + k, l.s_y + k, -z.lam_y[k]);
        h.add(l.lam_y + k, l.s_y + k, -z.s_y[k].sqrt());
    }
    Ok(h)
}
