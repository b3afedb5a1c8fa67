//! Market primitives, payoffs, face-lifting and the analytic bounds that
//! clamp the pricing scheme.

mod bounds;
mod coef;
mod envelope;
mod facelift;
mod market;
mod payoff;

pub use bounds::{growth_bounds, GrowthBounds};
pub use coef::CoefFn;
pub use envelope::{concave_envelope, upper_hull};
pub use facelift::{
    default_margin, face_lift, gamma_antiderivative, ClosedFormFaceLift, FaceLiftedPayoff,
    GammaAntiderivative,
};
pub use market::{GammaCap, ImpactMarket};
pub use payoff::{Payoff, PayoffKind};

/// Checks that `xs` is strictly increasing and finite.
pub(crate) fn check_increasing(xs: &[f64]) -> crate::Result<()> {
    for (i, w) in xs.windows(2).enumerate() {
        if !(w[1] > w[0]) || !w[0].is_finite() || !w[1].is_finite() {
            return Err(crate::Error::NonMonotoneGrid { index: i + 1 });
        }
    }
    Ok(())
}
