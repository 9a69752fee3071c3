//! Selection of the diagonal Hessian modification from matrix inertia.
//!
//! The selection drives both solvers. Starting from zero, `eps_y` grows until
//! the maximizer subsystem has the inertia of a strictly concave inner
//! problem, then `eps_x` grows until the full modified system has the minmax
//! inertia (the local quadratic approximation conditions). When the
//! *unmodified* system already carries the target inertia while the maximizer
//! subsystem does not, the quadratic conditions alone would leave the current
//! point attractive even if it is not a local minmax; in that case `eps_x`
//! keeps growing until some `mu` in (0,1) changes the inertia of
//! `J + mu E`, which certifies that every such equilibrium repels the
//! iteration.
//!
//! All inertia queries factor with the signed regularization added with both
//! signs whenever a pivot sits at the regularization scale; a disagreement
//! between the two marks the matrix as numerically singular, in which case
//! the instability branch does not apply (its premise requires an invertible
//! maximizer block) and the quadratic-approximation values are kept.

use thiserror::Error;

use crate::factorization::{Inertia, LdltEngine, SymMatrix};
use crate::problem::kkt::{e_diag, ey_diag, gamma_signs_yy, gamma_signs_zz, KktSystem, Modification};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum EpsilonError {
    #[error("epsilon growth cap exceeded while adjusting {which}")]
    CapExceeded { which: &'static str },
}

/// Growth-schedule knobs shared by the solvers.
#[derive(Debug, Clone)]
pub struct SelectorConfig<T> {
    pub eps_growth: T,
    pub eps_cap_steps: usize,
    pub mu_grid: Vec<T>,
    pub enforce_instability: bool,
}

impl<T: Scalar> Default for SelectorConfig<T> {
    fn default() -> Self {
        SelectorConfig {
            eps_growth: T::cast(10.0),
            eps_cap_steps: 40,
            mu_grid: (1..10).map(|k| T::cast(k as f64 / 10.0)).collect(),
            enforce_instability: true,
        }
    }
}

/// Outcome of one selection.
#[derive(Debug, Clone)]
pub struct Selection<T> {
    pub modification: Modification<T>,
    /// Instability branch ran and achieved its inertia-change certificate.
    pub instability_enforced: bool,
    /// Maximizer block is singular at the regularization scale; the branch
    /// does not apply there.
    pub singular_yy: bool,
    /// Branch was entered but no growth step achieved the certificate within
    /// the cap (the quadratic-approximation values are kept).
    pub instability_unreachable: bool,
}

/// Two inertia readings of the same matrix, regularized with opposite signs.
/// `None` marks a factorization breakdown.
#[derive(Debug, Clone, Copy)]
pub struct DualInertia {
    pub plus: Option<Inertia>,
    pub minus: Option<Inertia>,
}

impl DualInertia {
    /// The inertia when both readings exist and agree.
    pub fn consistent(&self) -> Option<Inertia> {
        match (self.plus, self.minus) {
            (Some(a), Some(b)) if a == b => Some(a),
            _ => None,
        }
    }
}

/// Base regularization magnitude `1e-8 (1 + median |diag|)`.
pub fn gamma_scale<T: Scalar>(a: &SymMatrix<T>, extra: Option<&[T]>) -> T {
    let n = a.dim();
    let mut d: Vec<T> = (0..n)
        .map(|i| (a.get(i, i) + extra.map_or(T::zero(), |e| e[i])).abs())
        .collect();
    d.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    let med = if n == 0 { T::zero() } else { d[n / 2] };
    T::cast(1e-8) * (T::one() + med)
}

/// Inertia of `A + extra + Gamma`, re-checked with `-Gamma` whenever a pivot
/// lands at the regularization scale.
///
/// Without pivoting the elimination can pass through near-zero pivots even
/// when the matrix itself is comfortably nonsingular (badly scaled
/// interior-point systems do this routinely); in that case the reading is
/// retried on a ladder of larger `gamma`. Agreement of the two opposite-sign
/// regularizations certifies the reading at that scale; a matrix that keeps
/// disagreeing through the ladder is reported as it stands, which the callers
/// treat as numerically singular.
pub fn dual_inertia<T: Scalar>(
    engine: &mut LdltEngine,
    a: &SymMatrix<T>,
    extra: Option<&[T]>,
    signs: &[i8],
) -> DualInertia {
    let n = a.dim();
    debug_assert_eq!(signs.len(), n);
    // anchor on the matrix itself: the caller-controlled shift must not
    // inflate the regularization scale, its Schur pivots shrink like 1/shift
    let gamma0 = gamma_scale(a, None);
    let mut reading = DualInertia { plus: None, minus: None };
    for level in 0..4 {
        let gamma = gamma0 * T::cast(100.0).powi(level);
        let factor_side = |engine: &mut LdltEngine, sign: T| {
            let shift: Vec<T> = (0..n)
                .map(|i| {
                    let g = if signs[i] >= 0 { gamma } else { -gamma };
                    sign * g + extra.map_or(T::zero(), |e| e[i])
                })
                .collect();
            engine.factor_shifted(a, &shift, gamma).ok()
        };
        let plus = factor_side(engine, T::one());
        let (plus_it, clean, suspicious) = match &plus {
            Some(f) => {
                let it = f.inertia();
                (Some(it), it.zero == 0, f.suspicious_pivots() > 0)
            }
            None => (None, false, true),
        };
        if !clean {
            reading = DualInertia { plus: plus_it, minus: None };
            continue; // unresolved at this scale, escalate
        }
        if !suspicious {
            return DualInertia { plus: plus_it, minus: plus_it };
        }
        let minus_it = factor_side(engine, -T::one()).map(|f| f.inertia());
        reading = DualInertia { plus: plus_it, minus: minus_it };
        match (plus_it, minus_it) {
            (Some(p), Some(m)) if p == m && m.zero == 0 => return reading,
            _ => {} // disagreement: escalate; a truly singular matrix keeps it
        }
    }
    reading
}

/// Tightens a passing growth value by log-space bisection inside the bracket
/// `(hi / growth, hi]`, then pads the result by a verified safety factor.
///
/// A coarse growth factor can overshoot the minimal admissible value by an
/// order of magnitude, which turns the modified step into heavily damped
/// gradient descent; a value too close to the minimal one leaves the modified
/// system near-singular and the step wild. The padded value keeps the
/// conditioning while staying within a small factor of minimal.
fn refine_bracket<T: Scalar>(
    hi: T,
    known_fail: Option<T>,
    mut passes: impl FnMut(T) -> bool,
) -> T {
    // when even the first growth candidate passed there is no failing value;
    // search the decades below it as well
    let (mut lo, steps) = match known_fail {
        Some(f) => (f, 5),
        None => (hi * T::cast(1e-9), 12),
    };
    let mut hi = hi;
    for _ in 0..steps {
        let mid = (lo.ln() + (hi.ln() - lo.ln()) / T::cast(2.0)).exp();
        if !mid.is_finite() || mid <= T::zero() {
            break;
        }
        if passes(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let padded = hi * T::cast(2.0);
    if padded.is_finite() && passes(padded) {
        padded
    } else {
        hi
    }
}

/// Stateful selector that reuses the symbolic factorizations of the full
/// system and of the maximizer subsystem across calls.
#[derive(Default)]
pub struct EpsilonSelector {
    zz_engine: LdltEngine,
    yy_engine: LdltEngine,
}

impl EpsilonSelector {
    pub fn new() -> Self {
        Self::default()
    }

    fn yy_reading<T: Scalar>(&mut self, k: &KktSystem<T>, eps_y: T) -> DualInertia {
        let dims = k.dims;
        let signs = gamma_signs_yy(dims);
        if eps_y == T::zero() {
            dual_inertia(&mut self.yy_engine, &k.jyy, None, &signs)
        } else {
            // subsystem condition subtracts E_y
            let shift: Vec<T> = ey_diag(dims, Modification::new(T::zero(), eps_y))
                .into_iter()
                .map(|v| -v)
                .collect();
            dual_inertia(&mut self.yy_engine, &k.jyy, Some(&shift), &signs)
        }
    }

    fn zz_reading<T: Scalar>(&mut self, k: &KktSystem<T>, m: Modification<T>, mu: T) -> DualInertia {
        let signs = gamma_signs_zz(k.dims);
        if m.is_zero() {
            dual_inertia(&mut self.zz_engine, &k.jzz, None, &signs)
        } else {
            let shift: Vec<T> = e_diag(k.dims, m).into_iter().map(|v| mu * v).collect();
            dual_inertia(&mut self.zz_engine, &k.jzz, Some(&shift), &signs)
        }
    }

    fn yy_ok<T: Scalar>(&mut self, k: &KktSystem<T>, eps_y: T) -> bool {
        self.yy_reading(k, eps_y).consistent() == Some(k.dims.yy_target())
    }

    fn zz_ok<T: Scalar>(&mut self, k: &KktSystem<T>, m: Modification<T>) -> bool {
        self.zz_reading(k, m, T::one()).consistent() == Some(k.dims.zz_target())
    }

    /// Whether the quadratic-approximation conditions hold unmodified.
    pub fn lqac_zero_holds<T: Scalar>(&mut self, k: &KktSystem<T>) -> bool {
        self.yy_ok(k, T::zero()) && self.zz_ok(k, Modification::zero())
    }

    /// Some `mu` on the grid at which `J + mu E` robustly leaves the target
    /// inertia.
    fn mu_certificate<T: Scalar>(
        &mut self,
        k: &KktSystem<T>,
        m: Modification<T>,
        mu_grid: &[T],
    ) -> Option<T> {
        let target = k.dims.zz_target();
        for &mu in mu_grid {
            let reading = self.zz_reading(k, m, mu);
            match reading.consistent() {
                Some(it) if it != target => return Some(mu),
                _ => {}
            }
        }
        None
    }

    /// Runs the full selection at the current iterate.
    pub fn select<T: Scalar>(
        &mut self,
        k: &KktSystem<T>,
        cfg: &SelectorConfig<T>,
    ) -> Result<Selection<T>, EpsilonError> {
        let growth = cfg.eps_growth;
        let yy_zero_reading = self.yy_reading(k, T::zero());
        let yy_zero_ok = yy_zero_reading.consistent() == Some(k.dims.yy_target());
        if yy_zero_ok && self.zz_ok(k, Modification::zero()) {
            return Ok(Selection {
                modification: Modification::zero(),
                instability_enforced: false,
                singular_yy: false,
                instability_unreachable: false,
            });
        }

        // grow eps_y until the maximizer subsystem is strictly concave
        let mut eps_y = T::zero();
        if !yy_zero_ok {
            let mut val = T::cast(1e-3) * (T::one() + k.jyy.inf_norm());
            let mut prev_fail = None;
            let mut found = false;
            for _ in 0..cfg.eps_cap_steps {
                if !val.is_finite() {
                    break;
                }
                if self.yy_ok(k, val) {
                    eps_y = refine_bracket(val, prev_fail, |m| self.yy_ok(k, m));
                    found = true;
                    break;
                }
                prev_fail = Some(val);
                val *= growth;
            }
            if !found {
                return Err(EpsilonError::CapExceeded { which: "eps_y" });
            }
        }

        // grow eps_x until the full modified system has the minmax inertia
        let mut eps_x = T::zero();
        if !self.zz_ok(k, Modification::new(eps_x, eps_y)) {
            let mut val = T::cast(1e-3) * (T::one() + k.jzz.inf_norm());
            let mut prev_fail = None;
            let mut found = false;
            for _ in 0..cfg.eps_cap_steps {
                if !val.is_finite() {
                    break;
                }
                if self.zz_ok(k, Modification::new(val, eps_y)) {
                    eps_x = refine_bracket(val, prev_fail, |m| {
                        self.zz_ok(k, Modification::new(m, eps_y))
                    });
                    found = true;
                    break;
                }
                prev_fail = Some(val);
                val *= growth;
            }
            if !found {
                return Err(EpsilonError::CapExceeded { which: "eps_x" });
            }
        }

        let mut selection = Selection {
            modification: Modification::new(eps_x, eps_y),
            instability_enforced: false,
            singular_yy: false,
            instability_unreachable: false,
        };
        if !cfg.enforce_instability {
            return Ok(selection);
        }

        // instability branch: only when the unmodified system already has the
        // target inertia (otherwise the quadratic conditions suffice) and the
        // maximizer block is robustly invertible.
        if yy_zero_reading.consistent().is_none() {
            selection.singular_yy = true;
            return Ok(selection);
        }
        if self.zz_reading(k, Modification::zero(), T::one()).consistent() != Some(k.dims.zz_target())
        {
            return Ok(selection);
        }

        let floor = T::cast(1e-3) * (T::one() + k.jzz.inf_norm());
        let mut val = eps_x;
        for step in 0..=cfg.eps_cap_steps {
            let m = Modification::new(val, eps_y);
            if self.zz_ok(k, m) && self.mu_certificate(k, m, &cfg.mu_grid).is_some() {
                selection.modification = m;
                selection.instability_enforced = true;
                return Ok(selection);
            }
            if step == cfg.eps_cap_steps || !val.is_finite() {
                break;
            }
            val = if val < floor { floor } else { val * growth };
        }
        selection.instability_unreachable = true;
        Ok(selection)
    }
}
