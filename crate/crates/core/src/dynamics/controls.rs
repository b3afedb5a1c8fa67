use std::sync::Arc;

use super::paths::StepState;
use crate::Result;

/// Function of `(t, x, y, a)`.
pub type StateFn = Arc<dyn Fn(f64, f64, f64, f64) -> f64 + Send + Sync>;

/// Control values at one time step. `alpha` and `beta` drive `a` itself and
/// are only reported for the boundedness check.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Controls {
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
    pub beta: f64,
}

/// Supplies the controls of the target position `dY = b dt + a dW`.
pub trait ControlLaw: Sync {
    /// Controls at the initial state.
    fn initial(&self, t: f64, s: &StepState) -> Result<Controls>;

    /// Controls at state `s` and time `t` given the previous controls and the
    /// Brownian increment `dw` of the step that just finished.
    fn next(&self, t: f64, s: &StepState, prev: &Controls, dt: f64, dw: f64) -> Result<Controls>;

    /// Bound `k` enforced on `|a|, |b|, |alpha|, |beta|`, if any.
    fn bound(&self) -> Option<f64> {
        None
    }
}

/// `a = a0 + int beta ds + int alpha dW`, `b = b(t, X, Y, a)`.
#[derive(Clone)]
pub struct ItoControls {
    pub a0: f64,
    pub b: StateFn,
    pub alpha: StateFn,
    pub beta: StateFn,
    pub bound: f64,
}

impl std::fmt::Debug for ItoControls {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ItoControls")
            .field("a0", &self.a0)
            .field("bound", &self.bound)
            .finish_non_exhaustive()
    }
}

impl ItoControls {
    pub fn new<B, Al, Be>(a0: f64, b: B, alpha: Al, beta: Be, bound: f64) -> Self
    where
        B: Fn(f64, f64, f64, f64) -> f64 + Send + Sync + 'static,
        Al: Fn(f64, f64, f64, f64) -> f64 + Send + Sync + 'static,
        Be: Fn(f64, f64, f64, f64) -> f64 + Send + Sync + 'static,
    {
        ItoControls {
            a0,
            b: Arc::new(b),
            alpha: Arc::new(alpha),
            beta: Arc::new(beta),
            bound,
        }
    }

    /// `a` and `b` frozen at constants.
    pub fn constant(a: f64, b: f64) -> Self {
        let bound = a.abs().max(b.abs());
        Self::new(a, move |_, _, _, _| b, |_, _, _, _| 0.0, |_, _, _, _| 0.0, bound)
    }

    /// Smooth bounded controls: `a` mean-reverts to 0.3 with volatility
    /// `0.1 sin x`, and `b = 0.2 cos(2 pi t)`.
    pub fn smooth_default() -> Self {
        Self::new(
            0.3,
            |t, _, _, _| 0.2 * (2.0 * std::f64::consts::PI * t).cos(),
            |_, x, _, _| 0.1 * x.sin(),
            |_, _, _, a| -(a - 0.3),
            2.0,
        )
    }
}

impl ControlLaw for ItoControls {
    fn initial(&self, t: f64, s: &StepState) -> Result<Controls> {
        let (x, y) = (s.x, s.y);
        let a = self.a0;
        Ok(Controls {
            a,
            b: (self.b)(t, x, y, a),
            alpha: (self.alpha)(t, x, y, a),
            beta: (self.beta)(t, x, y, a),
        })
    }

    fn next(&self, t: f64, s: &StepState, prev: &Controls, dt: f64, dw: f64) -> Result<Controls> {
        let (x, y) = (s.x, s.y);
        let a = prev.a + prev.beta * dt + prev.alpha * dw;
        Ok(Controls {
            a,
            b: (self.b)(t, x, y, a),
            alpha: (self.alpha)(t, x, y, a),
            beta: (self.beta)(t, x, y, a),
        })
    }

    fn bound(&self) -> Option<f64> {
        Some(self.bound)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(x: f64, y: f64) -> StepState {
        StepState { x, y, v: 0.0, r: 0.0 }
    }

    #[test]
    fn ito_update_uses_previous_coefficients() {
        let c = ItoControls::new(1.0, |_, _, _, a| 2.0 * a, |_, _, _, _| 0.5, |_, _, _, _| -1.0, 10.0);
        let c0 = c.initial(0.0, &state(0.0, 0.0)).unwrap();
        assert_eq!(c0, Controls { a: 1.0, b: 2.0, alpha: 0.5, beta: -1.0 });
        let c1 = c.next(0.1, &state(0.0, 0.0), &c0, 0.1, 0.2).unwrap();
        assert!((c1.a - (1.0 - 0.1 + 0.1)).abs() < 1e-15);
        assert!((c1.b - 2.0 * c1.a).abs() < 1e-15);
    }

    #[test]
    fn constant_controls() {
        let c = ItoControls::constant(0.3, -0.2);
        let c0 = c.initial(0.0, &state(1.0, 2.0)).unwrap();
        let c1 = c.next(0.5, &state(3.0, 1.0), &c0, 0.5, 1.7).unwrap();
        assert_eq!(c0, c1);
        assert_eq!(c.bound(), Some(0.3));
    }
}
