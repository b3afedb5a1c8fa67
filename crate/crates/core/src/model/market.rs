use super::coef::CoefFn;
use crate::{Error, Result};

/// Number of sample points used to estimate coefficient bounds on a domain.
const BOUND_SAMPLES: usize = 2001;

/// The impacted market: `dX = mu dt + sigma dW` between trades, and buying
/// `delta` shares at price `x` moves the price by `delta * f(x)`.
#[derive(Debug, Clone)]
pub struct ImpactMarket {
    pub mu: CoefFn,
    pub sigma: CoefFn,
    pub impact: CoefFn,
    pub f_min: f64,
    pub f_max: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub mu_max: f64,
    /// Empirical Lipschitz constant of `(mu, sigma)` on the validation domain.
    pub lipschitz_bound: f64,
    pub domain: (f64, f64),
}

impl ImpactMarket {
    /// Builds a market and estimates its bounds on `domain`.
    pub fn new(mu: CoefFn, sigma: CoefFn, impact: CoefFn, domain: (f64, f64)) -> Result<Self> {
        let (lo, hi) = domain;
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidMarket(format!("bad domain [{lo}, {hi}]")));
        }
        let h = (hi - lo) / (BOUND_SAMPLES - 1) as f64;
        let mut f_min = f64::INFINITY;
        let mut f_max = f64::NEG_INFINITY;
        let mut s_min = f64::INFINITY;
        let mut s_max = f64::NEG_INFINITY;
        let mut mu_max: f64 = 0.0;
        let mut lip: f64 = 0.0;
        let mut prev: Option<(f64, f64)> = None;
        for k in 0..BOUND_SAMPLES {
            let x = lo + k as f64 * h;
            let (m, s, f) = (mu.value(x), sigma.value(x), impact.value(x));
            if !(m.is_finite() && s.is_finite() && f.is_finite()) {
                return Err(Error::InvalidMarket(format!("non-finite coefficient at x = {x}")));
            }
            f_min = f_min.min(f);
            f_max = f_max.max(f);
            s_min = s_min.min(s);
            s_max = s_max.max(s);
            mu_max = mu_max.max(m.abs());
            if let Some((pm, ps)) = prev {
                lip = lip.max((m - pm).abs() / h).max((s - ps).abs() / h);
            }
            prev = Some((m, s));
        }
        if f_min <= 0.0 {
            return Err(Error::InvalidMarket(format!(
                "impact must be bounded away from zero, min f = {f_min}"
            )));
        }
        if s_min <= 0.0 {
            return Err(Error::InvalidMarket(format!(
                "volatility must be bounded away from zero, min sigma = {s_min}"
            )));
        }
        Ok(ImpactMarket {
            mu,
            sigma,
            impact,
            f_min,
            f_max,
            sigma_min: s_min,
            sigma_max: s_max,
            mu_max,
            lipschitz_bound: lip,
            domain,
        })
    }

    /// Driftless market with constant volatility and constant impact.
    pub fn bachelier(sigma: f64, lambda: f64) -> Result<Self> {
        Self::new(
            CoefFn::Constant(0.0),
            CoefFn::Constant(sigma),
            CoefFn::Constant(lambda),
            (-1.0, 1.0),
        )
    }

    #[inline]
    pub fn mu(&self, x: f64) -> f64 {
        self.mu.value(x)
    }

    #[inline]
    pub fn sigma(&self, x: f64) -> f64 {
        self.sigma.value(x)
    }

    #[inline]
    pub fn f(&self, x: f64) -> f64 {
        self.impact.value(x)
    }

    #[inline]
    pub fn f_prime(&self, x: f64) -> f64 {
        self.impact.derivative(x)
    }

    /// Same market with the impact function replaced.
    pub fn with_impact(&self, impact: CoefFn) -> Result<Self> {
        Self::new(self.mu.clone(), self.sigma.clone(), impact, self.domain)
    }
}

/// Upper bound `gamma_bar` on the hedge's gamma, with margin `iota` from both
/// zero and the singularity `1/f`, plus the (monitored) lower bound `-k`.
#[derive(Debug, Clone)]
pub struct GammaCap {
    pub gamma_bar: CoefFn,
    pub iota: f64,
    pub k_lower: f64,
}

impl GammaCap {
    /// Validates `iota <= gamma_bar <= 1/f - iota` at every point of `xs`.
    pub fn new(
        gamma_bar: CoefFn,
        iota: f64,
        k_lower: f64,
        market: &ImpactMarket,
        xs: &[f64],
    ) -> Result<Self> {
        if !(iota > 0.0) || !iota.is_finite() {
            return Err(Error::InvalidInput(format!("iota must be positive, got {iota}")));
        }
        if !(k_lower >= 0.0) {
            return Err(Error::InvalidInput(format!("k must be nonnegative, got {k_lower}")));
        }
        let cap = GammaCap {
            gamma_bar,
            iota,
            k_lower,
        };
        cap.validate(market, xs)?;
        Ok(cap)
    }

    pub fn validate(&self, market: &ImpactMarket, xs: &[f64]) -> Result<()> {
        for &x in xs {
            let g = self.value(x);
            let lower = self.iota;
            let upper = 1.0 / market.f(x) - self.iota;
            let slack = 1e-12 * upper.abs().max(1.0);
            if !g.is_finite() || g < lower - slack || g > upper + slack {
                return Err(Error::CapOutOfRange {
                    x,
                    gamma_bar: g,
                    lower,
                    upper,
                });
            }
        }
        Ok(())
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        self.gamma_bar.value(x)
    }

    pub fn sup_over(&self, xs: &[f64]) -> f64 {
        xs.iter().map(|&x| self.value(x)).fold(f64::NEG_INFINITY, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_vanishing_impact() {
        let err = ImpactMarket::bachelier(0.2, 0.0).unwrap_err();
        assert!(matches!(err, Error::InvalidMarket(_)));
    }

    #[test]
    fn cap_must_stay_below_inverse_impact() {
        let m = ImpactMarket::bachelier(0.2, 0.5).unwrap();
        let xs = [-1.0, 0.0, 1.0];
        assert!(GammaCap::new(CoefFn::Constant(1.75), 0.25, 0.0, &m, &xs).is_ok());
        let err = GammaCap::new(CoefFn::Constant(1.9), 0.25, 0.0, &m, &xs).unwrap_err();
        assert!(matches!(err, Error::CapOutOfRange { .. }));
        let err = GammaCap::new(CoefFn::Constant(0.1), 0.25, 0.0, &m, &xs).unwrap_err();
        assert!(matches!(err, Error::CapOutOfRange { .. }));
    }

    #[test]
    fn bounds_are_sampled() {
        let m = ImpactMarket::new(
            CoefFn::Constant(0.0),
            CoefFn::custom(|x: f64| 0.2 + 0.05 * x.sin()),
            CoefFn::Constant(0.5),
            (-3.0, 3.0),
        )
        .unwrap();
        assert!((m.sigma_max - 0.25).abs() < 1e-4);
        assert!((m.sigma_min - 0.15).abs() < 1e-4);
        assert!(m.lipschitz_bound <= 0.05 + 1e-9);
    }
}
