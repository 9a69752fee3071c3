//! Built-in problems: the four benchmark functions, the scalar cubic used for
//! the minimization regime study, and the hand-solvable constrained fixture.

use std::sync::Arc;

use thiserror::Error;

use crate::problem::{Dims, MinmaxProblem, Multipliers, TripletSink};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
#[error("unknown problem {0:?}")]
pub struct UnknownProblem(pub String);

/// Looks up a built-in problem by name: `f1`, `f2`, `f3`, `f4`, `cubic_min`
/// or `constrained_fixture`.
pub fn builtin_problem<T: Scalar>(
    name: &str,
) -> Result<Arc<dyn MinmaxProblem<T>>, UnknownProblem> {
    match name {
        "f1" => Ok(Arc::new(F1)),
        "f2" => Ok(Arc::new(F2)),
        "f3" => Ok(Arc::new(F3)),
        "f4" => Ok(Arc::new(F4)),
        "cubic_min" => Ok(Arc::new(CubicMin)),
        "constrained_fixture" => Ok(Arc::new(ConstrainedFixture)),
        other => Err(UnknownProblem(other.to_string())),
    }
}

pub const BENCHMARK_FUNCTIONS: [&str; 4] = ["f1", "f2", "f3", "f4"];

macro_rules! c {
    ($v:expr) => {
        T::cast($v)
    };
}

/// f1(x, y) = 2x^2 - y^2 + 4xy + 4/3 y^3 - 1/4 y^4
pub struct F1;

impl<T: Scalar> MinmaxProblem<T> for F1 {
    fn dims(&self) -> Dims {
        Dims::unconstrained(1, 1)
    }

    fn name(&self) -> &str {
        "f1"
    }

    fn objective(&self, x: &[T], y: &[T]) -> T {
        let (x, y) = (x[0], y[0]);
        c!(2.0) * x * x - y * y + c!(4.0) * x * y + c!(4.0 / 3.0) * y * y * y
            - c!(0.25) * y * y * y * y
    }

    fn grad_x(&self, x: &[T], y: &[T], g: &mut [T]) {
        g[0] = c!(4.0) * x[0] + c!(4.0) * y[0];
    }

    fn grad_y(&self, x: &[T], y: &[T], g: &mut [T]) {
        let y = y[0];
        g[0] = -c!(2.0) * y + c!(4.0) * x[0] + c!(4.0) * y * y - y * y * y;
    }

    fn lag_hess_xx(&self, _x: &[T], _y: &[T], _m: &Multipliers<'_, T>, s: &mut TripletSink<T>) {
        s.push(0, 0, c!(4.0));
    }

    fn lag_hess_xy(&self, _x: &[T], _y: &[T], _m: &Multipliers<'_, T>, s: &mut TripletSink<T>) {
        s.push(0, 0, c!(4.0));
    }

    fn lag_hess_yy(&self, _x: &[T], y: &[T], _m: &Multipliers<'_, T>, s: &mut TripletSink<T>) {
        let y = y[0];
        s.push(0, 0, -c!(2.0) + c!(8.0) * y - c!(3.0) * y * y);
    }
}

/// f2(x, y) = (4x^2 - (y - 3x + 0.05x^3)^2 - 0.1 y^4) exp(-0.01 (x^2 + y^2))
pub struct F2;

struct F2Parts<T> {
    p: T,
    px: T,
    py: T,
    pxx: T,
    pxy: T,
    pyy: T,
    e: T,
    ex: T,
    ey: T,
    exx: T,
    exy: T,
    eyy: T,
}

impl F2 {
    fn parts<T: Scalar>(x: T, y: T) -> F2Parts<T> {
        let u = y - c!(3.0) * x + c!(0.05) * x * x * x;
        let ux = -c!(3.0) + c!(0.15) * x * x;
        let uxx = c!(0.3) * x;
        let p = c!(4.0) * x * x - u * u - c!(0.1) * y * y * y * y;
        let px = c!(8.0) * x - c!(2.0) * u * ux;
        let py = -c!(2.0) * u - c!(0.4) * y * y * y;
        let pxx = c!(8.0) - c!(2.0) * (ux * ux + u * uxx);
        let pxy = -c!(2.0) * ux;
        let pyy = -c!(2.0) - c!(1.2) * y * y;
        let e = (-c!(0.01) * (x * x + y * y)).exp();
        let ex = -c!(0.02) * x * e;
        let ey = -c!(0.02) * y * e;
        let exx = (-c!(0.02) + c!(0.0004) * x * x) * e;
        let exy = c!(0.0004) * x * y * e;
        let eyy = (-c!(0.02) + c!(0.0004) * y * y) * e;
        F2Parts { p, px, py, pxx, pxy, pyy, e, ex, ey, exx, exy, eyy }
    }
}

impl<T: Scalar> MinmaxProblem<T> for F2 {
    fn dims(&self) -> Dims {
        Dims::unconstrained(1, 1)
    }

    fn name(&self) -> &str {
        "f2"
    }

    fn objective(&self, x: &[T], y: &[T]) -> T {
        let w = Self::parts(x[0], y[0]);
        w.p * w.e
    }

    fn grad_x(&self, x: &[T], y: &[T], g: &mut [T]) {
        let w = Self::parts(x[0], y[0]);
        g[0] = w.px * w.e + w.p * w.ex;
    }

    fn grad_y(&self, x: &[T], y: &[T], g: &mut [T]) {
        let w = Self::parts(x[0], y[0]);
        g[0] = w.py * w.e + w.p * w.ey;
    }

    fn lag_hess_xx(&self, x: &[T], y: &[T], _m: &Multipliers<'_, T>, s: &mut TripletSink<T>) {
        let w = Self::parts(x[0], y[0]);
        s.push(0, 0, w.pxx * w.e + c!(2.0) * w.px * w.ex + w.p * w.exx);
    }

    fn lag_hess_xy(&self, x: &[T], y: &[T], _m: &Multipliers<'_, T>, s: &mut TripletSink<T>) {
        let w = Self::parts(x[0], y[0]);
        s.push(0, 0, w.pxy * w.e + w.px * w.ey + w.py * w.ex + w.p * w.exy);
    }

    fn lag_hess_yy(&self, x: &[T], y: &[T], _m: &Multipliers<'_, T>, s: &mut TripletSink<T>) {
        let w = Self::parts(x[0], y[0]);
        s.push(0, 0, w.pyy * w.e + c!(2.0) * w.py * w.ey + w.p * w.eyy);
    }
}

/// f3(x, y) = (x - 0.5)(y - 0.5) + exp(-(x - 0.25)^2 - (y - 0.75)^2)
pub struct F3;

impl F3 {
    fn bump<T: Scalar>(x: T, y: T) -> (T, T, T) {
        let dx = x - c!(0.25);
        let dy = y - c!(0.75);
        ((-dx * dx - dy * dy).exp(), dx, dy)
    }
}

impl<T: Scalar> MinmaxProblem<T> for F3 {
    fn dims(&self) -> Dims {
        Dims::unconstrained(1, 1)
    }

    fn name(&self) -> &str {
        "f3"
    }

    fn objective(&self, x: &[T], y: &[T]) -> T {
        let (b, _, _) = Self::bump(x[0], y[0]);
        (x[0] - c!(0.5)) * (y[0] - c!(0.5)) + b
    }

    fn grad_x(&self, x: &[T], y: &[T], g: &mut [T]) {
        let (b, dx, _) = Self::bump(x[0], y[0]);
        g[0] = (y[0] - c!(0.5)) - c!(2.0) * dx * b;
    }

    fn grad_y(&self, x: &[T], y: &[T], g: &mut [T]) {
        let (b, _, dy) = Self::bump(x[0], y[0]);
        g[0] = (x[0] - c!(0.5)) - c!(2.0) * dy * b;
    }

    fn lag_hess_xx(&self, x: &[T], y: &[T], _m: &Multipliers<'_, T>, s: &mut TripletSink<T>) {
        let (b, dx, _) = Self::bump(x[0], y[0]);
        s.push(0, 0, (-c!(2.0) + c!(4.0) * dx * dx) * b);
    }

    fn lag_hess_xy(&self, x: &[T], y: &[T], _m: &Multipliers<'_, T>, s: &mut TripletSink<T>) {
        let (b, dx, dy) = Self::bump(x[0], y[0]);
        s.push(0, 0, T::one() + c!(4.0) * dx * dy * b);
    }

    fn lag_hess_yy(&self, x: &[T], y: &[T], _m: &Multipliers<'_, T>, s: &mut TripletSink<T>) {
        let (b, _, dy) = Self::bump(x[0], y[0]);
        s.push(0, 0, (-c!(2.0) + c!(4.0) * dy * dy) * b);
    }
}

/// f4(x, y) = xy, the classic bilinear saddle.
pub struct F4;

impl<T: Scalar> MinmaxProblem<T> for F4 {
    fn dims(&self) -> Dims {
        Dims::unconstrained(1, 1)
    }

    fn name(&self) -> &str {
        "f4"
    }

    fn objective(&self, x: &[T], y: &[T]) -> T {
        x[0] * y[0]
    }

    fn grad_x(&self, _x: &[T], y: &[T], g: &mut [T]) {
        g[0] = y[0];
    }

    fn grad_y(&self, x: &[T], _y: &[T], g: &mut [T]) {
        g[0] = x[0];
    }

    fn lag_hess_xx(&self, _x: &[T], _y: &[T], _m: &Multipliers<'_, T>, _s: &mut TripletSink<T>) {}

    fn lag_hess_xy(&self, _x: &[T], _y: &[T], _m: &Multipliers<'_, T>, s: &mut TripletSink<T>) {
        s.push(0, 0, T::one());
    }
}

/// min_x x^3 - 3x, the scalar nonconvex cubic with a minimum at 1 and a
/// maximum at -1.
pub struct CubicMin;

impl<T: Scalar> MinmaxProblem<T> for CubicMin {
    fn dims(&self) -> Dims {
        Dims::unconstrained(1, 0)
    }

    fn name(&self) -> &str {
        "cubic_min"
    }

    fn objective(&self, x: &[T], _y: &[T]) -> T {
        x[0] * x[0] * x[0] - c!(3.0) * x[0]
    }

    fn grad_x(&self, x: &[T], _y: &[T], g: &mut [T]) {
        g[0] = c!(3.0) * x[0] * x[0] - c!(3.0);
    }

    fn grad_y(&self, _x: &[T], _y: &[T], _g: &mut [T]) {}

    fn lag_hess_xx(&self, x: &[T], _y: &[T], _m: &Multipliers<'_, T>, s: &mut TripletSink<T>) {
        s.push(0, 0, c!(6.0) * x[0]);
    }
}

/// min_{x >= 1} max_{y <= 0.5} x^2 - y^2, whose unique local minmax sits at
/// (1, 0) with the x-bound active.
pub struct ConstrainedFixture;

impl<T: Scalar> MinmaxProblem<T> for ConstrainedFixture {
    fn dims(&self) -> Dims {
        Dims { n_x: 1, n_y: 1, l_x: 0, l_y: 0, m_x: 1, m_y: 1 }
    }

    fn name(&self) -> &str {
        "constrained_fixture"
    }

    fn objective(&self, x: &[T], y: &[T]) -> T {
        x[0] * x[0] - y[0] * y[0]
    }

    fn grad_x(&self, x: &[T], _y: &[T], g: &mut [T]) {
        g[0] = c!(2.0) * x[0];
    }

    fn grad_y(&self, _x: &[T], y: &[T], g: &mut [T]) {
        g[0] = -c!(2.0) * y[0];
    }

    fn ineq_x(&self, x: &[T], out: &mut [T]) {
        out[0] = T::one() - x[0];
    }

    fn ineq_y(&self, _x: &[T], y: &[T], out: &mut [T]) {
        out[0] = y[0] - c!(0.5);
    }

    fn jac_ineq_x(&self, _x: &[T], sink: &mut TripletSink<T>) {
        sink.push(0, 0, -T::one());
    }

    fn jac_ineq_y(&self, _x: &[T], _y: &[T], _sx: &mut TripletSink<T>, sy: &mut TripletSink<T>) {
        sy.push(0, 0, T::one());
    }

    fn lag_hess_xx(&self, _x: &[T], _y: &[T], _m: &Multipliers<'_, T>, s: &mut TripletSink<T>) {
        s.push(0, 0, c!(2.0));
    }

    fn lag_hess_yy(&self, _x: &[T], _y: &[T], _m: &Multipliers<'_, T>, s: &mut TripletSink<T>) {
        s.push(0, 0, -c!(2.0));
    }
}
