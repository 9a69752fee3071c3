//! Simultaneous horizon formulation: stage controls and trajectory states are
//! decision variables, dynamics enter as equality constraints, so every
//! derivative block is sparse and stage-local.
//!
//! Per-stage variable layout (stage i = 0..T-1):
//!   x side: [u_i, p_{i+1} (3)]  ->  n_x = 4T
//!   y side: [d_i (2), e_{i+1} (2)]  ->  n_y = 4T
//! Constraints per stage: u_i^2 <= u_max^2 (m_x = T), pursuer dynamics
//! (l_x = 3T), |d_i|^2 <= d_max^2 (m_y = T), evader dynamics (l_y = 2T).

use super::{evader_step, pursuer_step, ChauffeurParams};
use crate::problem::{Dims, MinmaxProblem, Multipliers, TripletSink};
use crate::scalar::Scalar;

pub struct SimultaneousProblem<T> {
    pub params: ChauffeurParams<T>,
    /// Current pursuer state (stage-0 parameter).
    pub x_p: [T; 3],
    /// Current evader state (stage-0 parameter).
    pub x_e: [T; 2],
}

impl<T: Scalar> SimultaneousProblem<T> {
    pub fn new(params: ChauffeurParams<T>, x_p: [T; 3], x_e: [T; 2]) -> Self {
        SimultaneousProblem { params, x_p, x_e }
    }

    fn horizon(&self) -> usize {
        self.params.horizon
    }

    #[inline]
    fn xu(i: usize) -> usize {
        4 * i
    }

    #[inline]
    fn xp(i: usize) -> usize {
        4 * i + 1
    }

    #[inline]
    fn yd(i: usize) -> usize {
        4 * i
    }

    #[inline]
    fn ye(i: usize) -> usize {
        4 * i + 2
    }

    /// Pursuer state entering stage i: the parameter for i = 0, otherwise the
    /// stage i-1 trajectory variable.
    fn p_in<'a>(&'a self, x: &'a [T], i: usize) -> [T; 3] {
        if i == 0 {
            self.x_p
        } else {
            let o = Self::xp(i - 1);
            [x[o], x[o + 1], x[o + 2]]
        }
    }

    fn e_in<'a>(&'a self, y: &'a [T], i: usize) -> [T; 2] {
        if i == 0 {
            self.x_e
        } else {
            let o = Self::ye(i - 1);
            [y[o], y[o + 1]]
        }
    }

    /// Primal initialization: small nonzero controls (the squared-norm
    /// constraint rows are flat at zero controls, which leaves the first
    /// linearized step unmoderated), trajectories rolled out consistently.
    pub fn initial_primal(&self) -> (Vec<T>, Vec<T>) {
        let t = self.horizon();
        let u0 = T::cast(0.1) * self.params.u_max;
        let d0 = [T::cast(0.1) * self.params.d_max, T::cast(0.05) * self.params.d_max];
        let mut x = vec![T::zero(); 4 * t];
        let mut y = vec![T::zero(); 4 * t];
        let mut p = self.x_p;
        let mut e = self.x_e;
        for i in 0..t {
            x[Self::xu(i)] = u0;
            p = pursuer_step(&p, u0, self.params.v);
            x[Self::xp(i)] = p[0];
            x[Self::xp(i) + 1] = p[1];
            x[Self::xp(i) + 2] = p[2];
            y[Self::yd(i)] = d0[0];
            y[Self::yd(i) + 1] = d0[1];
            e = evader_step(&e, &d0);
            y[Self::ye(i)] = e[0];
            y[Self::ye(i) + 1] = e[1];
        }
        (x, y)
    }

    /// First-stage controls from a solution.
    pub fn first_controls(x: &[T], y: &[T]) -> (T, [T; 2]) {
        (x[Self::xu(0)], [y[Self::yd(0)], y[Self::yd(0) + 1]])
    }
}

impl<T: Scalar> MinmaxProblem<T> for SimultaneousProblem<T> {
    fn dims(&self) -> Dims {
        let t = self.horizon();
        Dims { n_x: 4 * t, n_y: 4 * t, l_x: 3 * t, l_y: 2 * t, m_x: t, m_y: t }
    }

    fn name(&self) -> &str {
        "chauffeur_simultaneous"
    }

    fn objective(&self, x: &[T], y: &[T]) -> T {
        let t = self.horizon();
        let (gu, gd) = (self.params.gamma_u, self.params.gamma_d);
        let mut acc = T::zero();
        for i in 0..t {
            let u = x[Self::xu(i)];
            let (p1, p2) = (x[Self::xp(i)], x[Self::xp(i) + 1]);
            let (e1, e2) = (y[Self::ye(i)], y[Self::ye(i) + 1]);
            let (d1, d2) = (y[Self::yd(i)], y[Self::yd(i) + 1]);
            let (r1, r2) = (p1 - e1, p2 - e2);
            acc += r1 * r1 + r2 * r2 + gu * u * u - gd * (d1 * d1 + d2 * d2);
        }
        acc
    }

    fn grad_x(&self, x: &[T], y: &[T], g: &mut [T]) {
        let t = self.horizon();
        let two = T::cast(2.0);
        g.iter_mut().for_each(|v| *v = T::zero());
        for i in 0..t {
            g[Self::xu(i)] = two * self.params.gamma_u * x[Self::xu(i)];
            let (p1, p2) = (x[Self::xp(i)], x[Self::xp(i) + 1]);
            let (e1, e2) = (y[Self::ye(i)], y[Self::ye(i) + 1]);
            g[Self::xp(i)] = two * (p1 - e1);
            g[Self::xp(i) + 1] = two * (p2 - e2);
        }
    }

    fn grad_y(&self, x: &[T], y: &[T], g: &mut [T]) {
        let t = self.horizon();
        let two = T::cast(2.0);
        g.iter_mut().for_each(|v| *v = T::zero());
        for i in 0..t {
            let (p1, p2) = (x[Self::xp(i)], x[Self::xp(i) + 1]);
            let (e1, e2) = (y[Self::ye(i)], y[Self::ye(i) + 1]);
            g[Self::ye(i)] = -two * (p1 - e1);
            g[Self::ye(i) + 1] = -two * (p2 - e2);
            g[Self::yd(i)] = -two * self.params.gamma_d * y[Self::yd(i)];
            g[Self::yd(i) + 1] = -two * self.params.gamma_d * y[Self::yd(i) + 1];
        }
    }

    fn eq_x(&self, x: &[T], out: &mut [T]) {
        for i in 0..self.horizon() {
            let pin = self.p_in(x, i);
            let next = pursuer_step(&pin, x[Self::xu(i)], self.params.v);
            for k in 0..3 {
                out[3 * i + k] = x[Self::xp(i) + k] - next[k];
            }
        }
    }

    fn ineq_x(&self, x: &[T], out: &mut [T]) {
        let um = self.params.u_max;
        for i in 0..self.horizon() {
            let u = x[Self::xu(i)];
            out[i] = u * u - um * um;
        }
    }

    fn eq_y(&self, _x: &[T], y: &[T], out: &mut [T]) {
        for i in 0..self.horizon() {
            let ein = self.e_in(y, i);
            for k in 0..2 {
                out[2 * i + k] = y[Self::ye(i) + k] - ein[k] - y[Self::yd(i) + k];
            }
        }
    }

    fn ineq_y(&self, _x: &[T], y: &[T], out: &mut [T]) {
        let dm = self.params.d_max;
        for i in 0..self.horizon() {
            let (d1, d2) = (y[Self::yd(i)], y[Self::yd(i) + 1]);
            out[i] = d1 * d1 + d2 * d2 - dm * dm;
        }
    }

    fn jac_eq_x(&self, x: &[T], sink: &mut TripletSink<T>) {
        let v = self.params.v;
        for i in 0..self.horizon() {
            for k in 0..3 {
                sink.push(Self::xp(i) + k, 3 * i + k, T::one());
            }
            sink.push(Self::xu(i), 3 * i + 2, -T::one());
            if i > 0 {
                let theta = x[Self::xp(i - 1) + 2];
                // d/d p_i of -(p_i + v [cos th, sin th, 0]) and -(th + u)
                for k in 0..3 {
                    sink.push(Self::xp(i - 1) + k, 3 * i + k, -T::one());
                }
                sink.push(Self::xp(i - 1) + 2, 3 * i, v * theta.sin());
                sink.push(Self::xp(i - 1) + 2, 3 * i + 1, -v * theta.cos());
            }
        }
    }

    fn jac_ineq_x(&self, x: &[T], sink: &mut TripletSink<T>) {
        let two = T::cast(2.0);
        for i in 0..self.horizon() {
            sink.push(Self::xu(i), i, two * x[Self::xu(i)]);
        }
    }

    fn jac_eq_y(&self, _x: &[T], _y: &[T], _sx: &mut TripletSink<T>, sy: &mut TripletSink<T>) {
        for i in 0..self.horizon() {
            for k in 0..2 {
                sy.push(Self::ye(i) + k, 2 * i + k, T::one());
                sy.push(Self::yd(i) + k, 2 * i + k, -T::one());
                if i > 0 {
                    sy.push(Self::ye(i - 1) + k, 2 * i + k, -T::one());
                }
            }
        }
    }

    fn jac_ineq_y(&self, _x: &[T], y: &[T], _sx: &mut TripletSink<T>, sy: &mut TripletSink<T>) {
        let two = T::cast(2.0);
        for i in 0..self.horizon() {
            sy.push(Self::yd(i), i, two * y[Self::yd(i)]);
            sy.push(Self::yd(i) + 1, i, two * y[Self::yd(i) + 1]);
        }
    }

    fn lag_hess_xx(&self, x: &[T], _y: &[T], m: &Multipliers<'_, T>, sink: &mut TripletSink<T>) {
        let two = T::cast(2.0);
        let v = self.params.v;
        for i in 0..self.horizon() {
            // objective: control weight and position tracking
            sink.push(Self::xu(i), Self::xu(i), two * self.params.gamma_u);
            sink.push(Self::xp(i), Self::xp(i), two);
            sink.push(Self::xp(i) + 1, Self::xp(i) + 1, two);
            // inequality curvature: 2 lambda_i on u_i
            sink.push(Self::xu(i), Self::xu(i), two * m.lam_x[i]);
            // dynamics curvature: the heading enters rows 3i, 3i+1 of stage i
            // through -v cos/sin of theta_{i-1}
            if i > 0 {
                let theta = x[Self::xp(i - 1) + 2];
                let w = m.nu_x[3 * i] * v * theta.cos() + m.nu_x[3 * i + 1] * v * theta.sin();
                sink.push(Self::xp(i - 1) + 2, Self::xp(i - 1) + 2, w);
            }
        }
    }

    fn lag_hess_xy(&self, _x: &[T], _y: &[T], _m: &Multipliers<'_, T>, sink: &mut TripletSink<T>) {
        let two = T::cast(2.0);
        for i in 0..self.horizon() {
            sink.push(Self::xp(i), Self::ye(i), -two);
            sink.push(Self::xp(i) + 1, Self::ye(i) + 1, -two);
        }
    }

    fn lag_hess_yy(&self, _x: &[T], y: &[T], m: &Multipliers<'_, T>, sink: &mut TripletSink<T>) {
        let _ = y;
        let two = T::cast(2.0);
        for i in 0..self.horizon() {
            sink.push(Self::ye(i), Self::ye(i), two);
            sink.push(Self::ye(i) + 1, Self::ye(i) + 1, two);
            // objective -gamma_d |d|^2 and inequality curvature -2 lambda |d|^2
            let w = -two * self.params.gamma_d - two * m.lam_y[i];
            sink.push(Self::yd(i), Self::yd(i), w);
            sink.push(Self::yd(i) + 1, Self::yd(i) + 1, w);
        }
    }
}
