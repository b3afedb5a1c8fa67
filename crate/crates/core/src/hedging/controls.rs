use super::derivs::{NodeDerivatives, SurfaceDerivatives};
use crate::dynamics::{ControlLaw, Controls, StepState};
use crate::model::{GammaCap, ImpactMarket};
use crate::{Error, Result};

/// Slack allowed below `f_min * iota` for the control denominator.
pub const DENOMINATOR_TOL: f64 = 1e-9;

/// `gamma = a / (sigma + f a)`, the sensitivity of the position to the price
/// induced by the diffusion control `a`.
pub fn gamma_of_a(a: f64, x: f64, market: &ImpactMarket) -> Result<f64> {
    let d = market.sigma(x) + market.f(x) * a;
    if d == 0.0 || !d.is_finite() {
        return Err(Error::InvalidInput(format!("sigma + f a vanishes at x = {x} (a = {a})")));
    }
    Ok(a / d)
}

fn hat_controls(
    d: &NodeDerivatives,
    market: &ImpactMarket,
    iota: f64,
    t: f64,
    x: f64,
    drift: f64,
) -> Result<(f64, f64)> {
    let f = market.f(x);
    let sigma = market.sigma(x);
    let denom = 1.0 - f * d.v_xx;
    if !(denom >= market.f_min * iota - DENOMINATOR_TOL) {
        return Err(Error::Denominator { t, x, v_xx: d.v_xx, denominator: denom });
    }
    let a = sigma * d.v_xx / denom;
    let vol = sigma + a * f;
    let b = (d.v_tx + d.v_xx * (drift + a * sigma * market.f_prime(x)) + 0.5 * d.v_xxx * vol * vol) / denom;
    Ok((a, b))
}

/// The verification controls `(a, b)` at `(t, x)`, with derivatives
/// interpolated from the grid.
pub fn controls_from_surface(
    derivs: &SurfaceDerivatives,
    market: &ImpactMarket,
    cap: &GammaCap,
    t: f64,
    x: f64,
) -> Result<(f64, f64)> {
    let d = derivs.at(t, x)?;
    hat_controls(&d, market, cap.iota, t, x, market.mu(x))
}

/// The verification controls as a [`ControlLaw`]. Under resilience the
/// price drift seen by the hedger is `mu - rho R`.
pub struct SurfaceControls<'a> {
    pub derivs: &'a SurfaceDerivatives,
    pub market: &'a ImpactMarket,
    pub iota: f64,
    pub rho: Option<f64>,
    /// Paths are stopped once they come within this distance of the grid's
    /// spatial edges, where the frozen boundary data is not a solution.
    pub edge: f64,
}

impl SurfaceControls<'_> {
    fn eval(&self, t: f64, s: &StepState) -> Result<Controls> {
        let g = &self.derivs.grid;
        if s.x < g.x_min + self.edge || s.x > g.x_max - self.edge {
            return Err(Error::OutsideGrid { t, x: s.x });
        }
        let d = self.derivs.at(t.min(g.horizon), s.x)?;
        let drift = self.market.mu(s.x) - self.rho.map_or(0.0, |rho| rho * s.r);
        let (a, b) = hat_controls(&d, self.market, self.iota, t, s.x, drift)?;
        Ok(Controls { a, b, alpha: 0.0, beta: 0.0 })
    }
}

impl ControlLaw for SurfaceControls<'_> {
    fn initial(&self, t: f64, s: &StepState) -> Result<Controls> {
        self.eval(t, s)
    }

    fn next(&self, t: f64, s: &StepState, _prev: &Controls, _dt: f64, _dw: f64) -> Result<Controls> {
        self.eval(t, s)
    }
}
