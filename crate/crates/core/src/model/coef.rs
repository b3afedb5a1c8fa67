use std::fmt;
use std::sync::Arc;

/// A scalar coefficient function of the price.
///
/// The catalog variants carry analytic derivatives; `Custom` falls back to
/// central differences.
#[derive(Clone)]
pub enum CoefFn {
    Constant(f64),
    /// `clamp(intercept + slope * x, lower, upper)`.
    AffineSaturated {
        intercept: f64,
        slope: f64,
        lower: f64,
        upper: f64,
    },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl CoefFn {
    pub fn custom<F>(f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        CoefFn::Custom(Arc::new(f))
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        match self {
            CoefFn::Constant(c) => *c,
            CoefFn::AffineSaturated {
                intercept,
                slope,
                lower,
                upper,
            } => (intercept + slope * x).clamp(*lower, *upper),
            CoefFn::Custom(f) => f(x),
        }
    }

    #[inline]
    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            CoefFn::Constant(_) => 0.0,
            CoefFn::AffineSaturated {
                intercept,
                slope,
                lower,
                upper,
            } => {
                let lin = intercept + slope * x;
                if lin > *lower && lin < *upper {
                    *slope
                } else {
                    0.0
                }
            }
            CoefFn::Custom(f) => {
                let h = 1e-6 * x.abs().max(1.0);
                (f(x + h) - f(x - h)) / (2.0 * h)
            }
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            CoefFn::Constant(c) => Some(*c),
            _ => None,
        }
    }
}

impl fmt::Debug for CoefFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoefFn::Constant(c) => write!(f, "Constant({c})"),
            CoefFn::AffineSaturated {
                intercept,
                slope,
                lower,
                upper,
            } => write!(
                f,
                "AffineSaturated {{ intercept: {intercept}, slope: {slope}, lower: {lower}, upper: {upper} }}"
            ),
            CoefFn::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl From<f64> for CoefFn {
    fn from(c: f64) -> Self {
        CoefFn::Constant(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn saturated_derivative_matches_finite_difference() {
        let c = CoefFn::AffineSaturated {
            intercept: 0.5,
            slope: 0.1,
            lower: 0.3,
            upper: 0.8,
        };
        let fd = CoefFn::custom(move |x| (0.5 + 0.1 * x).clamp(0.3, 0.8));
        for &x in &[-1.0, 0.0, 2.0] {
            assert!((c.derivative(x) - fd.derivative(x)).abs() < 1e-8);
        }
        assert_eq!(c.derivative(10.0), 0.0);
        assert_eq!(c.value(10.0), 0.8);
    }
}
