use super::market::{GammaCap, ImpactMarket};
use super::payoff::Payoff;
use crate::{Error, Result};

/// Analytic sub- and supersolution used to clamp the scheme:
/// `w_low = inf g` and
/// `w_high(x) = (1 + 2 c0 + c1 |x| - eta x^2 / 2)^conc + eta x^2 / 2 + 1 + A`
/// with `A = T sup sigma^2 gamma_bar / (2 (1 - f gamma_bar))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthBounds {
    pub w_low: f64,
    pub c0: f64,
    pub c1: f64,
    pub eta: f64,
    pub a_const: f64,
}

impl GrowthBounds {
    /// Kink of the envelope: inside `[-x_o, x_o]` it is flat.
    pub fn x_o(&self) -> f64 {
        self.c1 / self.eta
    }

    /// Upper bound; it does not depend on `t` because `A` already carries the
    /// full horizon.
    pub fn w_high(&self, _t: f64, x: f64) -> f64 {
        let x_o = self.x_o();
        let lin = |z: f64| 1.0 + 2.0 * self.c0 + self.c1 * z;
        let quad = 0.5 * self.eta * x * x;
        let env = if x.abs() <= x_o {
            lin(x_o) - 0.5 * self.eta * x_o * x_o
        } else {
            lin(x.abs()) - quad
        };
        env + quad + 1.0 + self.a_const
    }
}

/// Computes the clamp bounds; suprema are taken over the sample points `xs`.
pub fn growth_bounds(
    payoff: &Payoff,
    cap: &GammaCap,
    market: &ImpactMarket,
    horizon: f64,
    xs: &[f64],
) -> Result<GrowthBounds> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidInput(format!("horizon must be positive, got {horizon}")));
    }
    if xs.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    cap.validate(market, xs)?;
    let inv_f_inf = xs.iter().map(|&x| 1.0 / market.f(x)).fold(f64::INFINITY, f64::min);
    let eta = 0.5 * cap.iota.min(inv_f_inf);
    let sup = xs
        .iter()
        .map(|&x| {
            let (s, f, g) = (market.sigma(x), market.f(x), cap.value(x));
            s * s * g / (2.0 * (1.0 - f * g))
        })
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(GrowthBounds {
        w_low: payoff.inf(),
        c0: payoff.c0,
        c1: payoff.c1,
        eta,
        a_const: horizon * sup,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::coef::CoefFn;
    use crate::model::envelope::concave_envelope;

    fn setup() -> (ImpactMarket, GammaCap, Vec<f64>) {
        let m = ImpactMarket::bachelier(0.2, 0.5).unwrap();
        let xs: Vec<f64> = (0..=600).map(|k| -3.0 + 0.01 * k as f64).collect();
        let c = GammaCap::new(CoefFn::Constant(1.75), 0.25, 0.0, &m, &xs).unwrap();
        (m, c, xs)
    }

    #[test]
    fn horizon_constant_matches_arithmetic() {
        let (m, c, xs) = setup();
        let p = Payoff::call_spread(-1.0, 1.0).unwrap();
        let b = growth_bounds(&p, &c, &m, 2.0, &xs).unwrap();
        assert!((b.a_const - 0.56).abs() < 1e-12);
        assert_eq!(b.w_low, 0.0);
        assert_eq!(b.eta, 0.125);
        let bf = Payoff::butterfly(-1.0, 0.0, 1.0).unwrap();
        assert_eq!(growth_bounds(&bf, &c, &m, 2.0, &xs).unwrap().w_low, 0.0);
    }

    #[test]
    fn explicit_envelope_matches_hull() {
        let (m, c, _) = setup();
        let p = Payoff::new(crate::model::PayoffKind::PiecewiseLinear {
            knots: vec![(-1.0, 1.0), (0.0, 0.0), (1.0, 1.0)],
        })
        .unwrap();
        let wide: Vec<f64> = (0..=4000).map(|k| -20.0 + 0.01 * k as f64).collect();
        let b = growth_bounds(&p, &c, &m, 2.0, &wide).unwrap();
        assert!(b.x_o() > 1.0 && b.x_o() < 19.0);
        let ys: Vec<f64> = wide
            .iter()
            .map(|&x| 1.0 + 2.0 * b.c0 + b.c1 * x.abs() - 0.5 * b.eta * x * x)
            .collect();
        let env = concave_envelope(&wide, &ys).unwrap();
        for (k, &x) in wide.iter().enumerate() {
            let hull = env[k] + 0.5 * b.eta * x * x + 1.0 + b.a_const;
            // the grid envelope is exact away from the flat-top kinks
            assert!((hull - b.w_high(0.0, x)).abs() < 1e-3, "x = {x}");
        }
    }
}
