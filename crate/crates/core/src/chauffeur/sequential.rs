//! Sequential horizon formulation: only the stage controls are decision
//! variables and the trajectories are substituted by composing the dynamics.
//! No equality constraints remain, but every control couples to every later
//! stage, so the Hessian blocks are dense.
//!
//! Variable layout: x = (u_0..u_{T-1}), y = (d_0, .., d_{T-1}) with each d_i
//! a 2-vector, so n_x = T and n_y = 2T.

use super::{ChauffeurParams};
use crate::problem::{Dims, MinmaxProblem, Multipliers, TripletSink};
use crate::scalar::Scalar;

pub struct SequentialProblem<T> {
    pub params: ChauffeurParams<T>,
    pub x_p: [T; 3],
    pub x_e: [T; 2],
}

/// Rolled-out quantities reused by every derivative: headings, trig prefix
/// sums and the stage residuals r_i = p^{(1,2)}_{i+1} - e_{i+1}.
struct Rollout<T> {
    /// cos/sin prefix sums: c[m] = sum_{k<m} cos(theta_k), likewise s m.
    c: Vec<T>,
    s: Vec<T>,
    /// r[i] = pursuer position minus evader position after stage i.
    r: Vec<[T; 2]>,
}

impl<T: Scalar> SequentialProblem<T> {
    pub fn new(params: ChauffeurParams<T>, x_p: [T; 3], x_e: [T; 2]) -> Self {
        SequentialProblem { params, x_p, x_e }
    }

    fn horizon(&self) -> usize {
        self.params.horizon
    }

    fn rollout(&self, u: &[T], d: &[T]) -> Rollout<T> {
        let t = self.horizon();
        let v = self.params.v;
        let mut theta = self.x_p[2];
        let mut c = Vec::with_capacity(t + 1);
        let mut s = Vec::with_capacity(t + 1);
        c.push(T::zero());
        s.push(T::zero());
        for i in 0..t {
            c.push(c[i] + theta.cos());
            s.push(s[i] + theta.sin());
            theta += u[i];
        }
        let mut r = Vec::with_capacity(t);
        let mut e = self.x_e;
        for i in 0..t {
            e[0] += d[2 * i];
            e[1] += d[2 * i + 1];
            let p1 = self.x_p[0] + v * c[i + 1];
            let p2 = self.x_p[1] + v * s[i + 1];
            r.push([p1 - e[0], p2 - e[1]]);
        }
        Rollout { c, s, r }
    }

    /// d p^{(1,2)}_{i+1} / d u_j, nonzero for j < i... strictly j <= i-1.
    #[inline]
    fn dp_du(&self, ro: &Rollout<T>, i: usize, j: usize) -> [T; 2] {
        if j + 1 > i {
            return [T::zero(); 2];
        }
        let v = self.params.v;
        // sum_{k=j+1}^{i} of (-sin, cos)(theta_k)
        [-v * (ro.s[i + 1] - ro.s[j + 1]), v * (ro.c[i + 1] - ro.c[j + 1])]
    }

    /// d^2 p^{(1,2)}_{i+1} / d u_j d u_l.
    #[inline]
    fn d2p_dudu(&self, ro: &Rollout<T>, i: usize, j: usize, l: usize) -> [T; 2] {
        let m = j.max(l);
        if m + 1 > i {
            return [T::zero(); 2];
        }
        let v = self.params.v;
        [-v * (ro.c[i + 1] - ro.c[m + 1]), -v * (ro.s[i + 1] - ro.s[m + 1])]
    }

    pub fn first_controls(x: &[T], y: &[T]) -> (T, [T; 2]) {
        (x[0], [y[0], y[1]])
    }
}

impl<T: Scalar> MinmaxProblem<T> for SequentialProblem<T> {
    fn dims(&self) -> Dims {
        let t = self.horizon();
        Dims { n_x: t, n_y: 2 * t, l_x: 0, l_y: 0, m_x: t, m_y: t }
    }

    fn name(&self) -> &str {
        "chauffeur_sequential"
    }

    fn objective(&self, x: &[T], y: &[T]) -> T {
        let ro = self.rollout(x, y);
        let mut acc = T::zero();
        for i in 0..self.horizon() {
            let [r1, r2] = ro.r[i];
            acc += r1 * r1 + r2 * r2 + self.params.gamma_u * x[i] * x[i]
                - self.params.gamma_d * (y[2 * i] * y[2 * i] + y[2 * i + 1] * y[2 * i + 1]);
        }
        acc
    }

    fn grad_x(&self, x: &[T], y: &[T], g: &mut [T]) {
        let t = self.horizon();
        let two = T::cast(2.0);
        let ro = self.rollout(x, y);
        for j in 0..t {
            let mut acc = two * self.params.gamma_u * x[j];
            for i in (j + 1)..t {
                let a = self.dp_du(&ro, i, j);
                acc += two * (ro.r[i][0] * a[0] + ro.r[i][1] * a[1]);
            }
            g[j] = acc;
        }
    }

    fn grad_y(&self, x: &[T], y: &[T], g: &mut [T]) {
        let t = self.horizon();
        let two = T::cast(2.0);
        let ro = self.rollout(x, y);
        // suffix sums of r over stages >= j
        let mut suf = [T::zero(); 2];
        let mut sufs = vec![[T::zero(); 2]; t + 1];
        for i in (0..t).rev() {
            suf[0] += ro.r[i][0];
            suf[1] += ro.r[i][1];
            sufs[i] = suf;
        }
        for j in 0..t {
            for k in 0..2 {
                g[2 * j + k] = -two * sufs[j][k] - two * self.params.gamma_d * y[2 * j + k];
            }
        }
    }

    fn ineq_x(&self, x: &[T], out: &mut [T]) {
        let um = self.params.u_max;
        for i in 0..self.horizon() {
            out[i] = x[i] * x[i] - um * um;
        }
    }

    fn ineq_y(&self, _x: &[T], y: &[T], out: &mut [T]) {
        let dm = self.params.d_max;
        for i in 0..self.horizon() {
            out[i] = y[2 * i] * y[2 * i] + y[2 * i + 1] * y[2 * i + 1] - dm * dm;
        }
    }

    fn jac_ineq_x(&self, x: &[T], sink: &mut TripletSink<T>) {
        let two = T::cast(2.0);
        for i in 0..self.horizon() {
            sink.push(i, i, two * x[i]);
        }
    }

    fn jac_ineq_y(&self, _x: &[T], y: &[T], _sx: &mut TripletSink<T>, sy: &mut TripletSink<T>) {
        let two = T::cast(2.0);
        for i in 0..self.horizon() {
            sy.push(2 * i, i, two * y[2 * i]);
            sy.push(2 * i + 1, i, two * y[2 * i + 1]);
        }
    }

    fn lag_hess_xx(&self, x: &[T], y: &[T], m: &Multipliers<'_, T>, sink: &mut TripletSink<T>) {
        let t = self.horizon();
        let two = T::cast(2.0);
        let ro = self.rollout(x, y);
        for j in 0..t {
            for l in 0..=j {
                let mut acc = T::zero();
                for i in (j.max(l) + 1)..t {
                    let aj = self.dp_du(&ro, i, j);
                    let al = self.dp_du(&ro, i, l);
                    let b = self.d2p_dudu(&ro, i, j, l);
                    acc += two
                        * (aj[0] * al[0] + aj[1] * al[1] + ro.r[i][0] * b[0] + ro.r[i][1] * b[1]);
                }
                if j == l {
                    acc += two * self.params.gamma_u + two * m.lam_x[j];
                }
                sink.push(j, l, acc);
            }
        }
    }

    fn lag_hess_xy(&self, x: &[T], y: &[T], _m: &Multipliers<'_, T>, sink: &mut TripletSink<T>) {
        let t = self.horizon();
        let two = T::cast(2.0);
        let ro = self.rollout(x, y);
        // d^2 f / du_j d d_{l,k} = -2 sum_{i >= max(j+1, l)} (dp_du)_k
        for j in 0..t {
            for l in 0..t {
                let mut acc = [T::zero(); 2];
                for i in (j + 1).max(l)..t {
                    let a = self.dp_du(&ro, i, j);
                    acc[0] += a[0];
                    acc[1] += a[1];
                }
                // always emit so the sparsity pattern is state-independent
                for k in 0..2 {
                    sink.push(j, 2 * l + k, -two * acc[k]);
                }
            }
        }
    }

    fn lag_hess_yy(&self, _x: &[T], _y: &[T], m: &Multipliers<'_, T>, sink: &mut TripletSink<T>) {
        let t = self.horizon();
        let two = T::cast(2.0);
        // d^2 f / d d_{j,k} d d_{l,m} = 2 (T - max(j,l)) [k == m]
        for j in 0..t {
            for l in 0..=j {
                let shared = two * T::cast((t - j.max(l)) as f64);
                for k in 0..2 {
                    let mut v = shared;
                    if j == l {
                        v -= two * self.params.gamma_d + two * m.lam_y[j];
                    }
                    sink.push(2 * j + k, 2 * l + k, v);
                }
            }
        }
    }
}
