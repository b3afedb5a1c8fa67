use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum PayoffKind {
    /// `(x - k1)^+ - (x - k2)^+`.
    CallSpread { k1: f64, k2: f64 },
    /// `(x - k1)^+ - 2 (x - k2)^+ + (x - k3)^+`.
    Butterfly { k1: f64, k2: f64, k3: f64 },
    /// `1_{x >= strike}`.
    Digital { strike: f64 },
    /// Linear interpolation between knots, extrapolated along the end segments.
    PiecewiseLinear { knots: Vec<(f64, f64)> },
    /// Grid samples, treated as piecewise linear between samples.
    Sampled { xs: Vec<f64>, ys: Vec<f64> },
}

/// Terminal claim `g` together with constants `c0, c1` such that
/// `|g(x)| <= c0 + c1 |x|`.
#[derive(Debug, Clone, PartialEq)]
pub struct Payoff {
    pub kind: PayoffKind,
    pub c0: f64,
    pub c1: f64,
}

/// Floor on `c0` so that the bound is never degenerate.
const C0_FLOOR: f64 = 1e-12;

impl Payoff {
    pub fn new(kind: PayoffKind) -> Result<Self> {
        match &kind {
            PayoffKind::CallSpread { k1, k2 } => {
                if !(k1 < k2) {
                    return Err(Error::InvalidPayoff(format!("call spread needs k1 < k2, got {k1}, {k2}")));
                }
            }
            PayoffKind::Butterfly { k1, k2, k3 } => {
                if !(k1 < k2 && k2 < k3) {
                    return Err(Error::InvalidPayoff(format!(
                        "butterfly needs k1 < k2 < k3, got {k1}, {k2}, {k3}"
                    )));
                }
            }
            PayoffKind::Digital { strike } => {
                if !strike.is_finite() {
                    return Err(Error::InvalidPayoff("digital strike must be finite".into()));
                }
            }
            PayoffKind::PiecewiseLinear { knots } => {
                if knots.len() < 2 {
                    return Err(Error::InvalidPayoff("piecewise linear payoff needs two knots".into()));
                }
                let xs: Vec<f64> = knots.iter().map(|k| k.0).collect();
                super::check_increasing(&xs)?;
                if knots.iter().any(|k| !k.1.is_finite()) {
                    return Err(Error::InvalidPayoff("non-finite knot value".into()));
                }
            }
            PayoffKind::Sampled { xs, ys } => {
                if xs.len() < 2 || xs.len() != ys.len() {
                    return Err(Error::InvalidPayoff(format!(
                        "sampled payoff needs matching xs/ys of length >= 2, got {} and {}",
                        xs.len(),
                        ys.len()
                    )));
                }
                super::check_increasing(xs)?;
                if ys.iter().any(|y| !y.is_finite()) {
                    return Err(Error::InvalidPayoff("non-finite sample value".into()));
                }
            }
        }
        let mut p = Payoff { kind, c0: 0.0, c1: 0.0 };
        let (c0, c1) = p.growth_constants();
        p.c0 = c0;
        p.c1 = c1;
        Ok(p)
    }

    pub fn call_spread(k1: f64, k2: f64) -> Result<Self> {
        Self::new(PayoffKind::CallSpread { k1, k2 })
    }

    pub fn butterfly(k1: f64, k2: f64, k3: f64) -> Result<Self> {
        Self::new(PayoffKind::Butterfly { k1, k2, k3 })
    }

    pub fn digital(strike: f64) -> Result<Self> {
        Self::new(PayoffKind::Digital { strike })
    }

    /// `g(x) = slope * x + intercept`. Not bounded below unless `slope == 0`.
    pub fn affine(slope: f64, intercept: f64) -> Result<Self> {
        Self::new(PayoffKind::PiecewiseLinear {
            knots: vec![(-1.0, intercept - slope), (1.0, intercept + slope)],
        })
    }

    pub fn value(&self, x: f64) -> f64 {
        match &self.kind {
            PayoffKind::CallSpread { k1, k2 } => (x - k1).max(0.0) - (x - k2).max(0.0),
            PayoffKind::Butterfly { k1, k2, k3 } => {
                (x - k1).max(0.0) - 2.0 * (x - k2).max(0.0) + (x - k3).max(0.0)
            }
            PayoffKind::Digital { strike } => {
                if x >= *strike {
                    1.0
                } else {
                    0.0
                }
            }
            PayoffKind::PiecewiseLinear { knots } => {
                let (xs, ys): (Vec<f64>, Vec<f64>) = knots.iter().copied().unzip();
                interp_extrapolate(&xs, &ys, x)
            }
            PayoffKind::Sampled { xs, ys } => interp_extrapolate(xs, ys, x),
        }
    }

    /// Points where `g` is not affine.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            PayoffKind::CallSpread { k1, k2 } => vec![*k1, *k2],
            PayoffKind::Butterfly { k1, k2, k3 } => vec![*k1, *k2, *k3],
            PayoffKind::Digital { strike } => vec![*strike],
            PayoffKind::PiecewiseLinear { knots } => knots.iter().map(|k| k.0).collect(),
            PayoffKind::Sampled { xs, .. } => xs.clone(),
        }
    }

    /// Slopes of the left and right affine tails.
    pub fn tail_slopes(&self) -> (f64, f64) {
        match &self.kind {
            PayoffKind::CallSpread { .. } => (0.0, 0.0),
            PayoffKind::Butterfly { .. } => (0.0, 0.0),
            PayoffKind::Digital { .. } => (0.0, 0.0),
            PayoffKind::PiecewiseLinear { knots } => {
                let n = knots.len();
                (
                    (knots[1].1 - knots[0].1) / (knots[1].0 - knots[0].0),
                    (knots[n - 1].1 - knots[n - 2].1) / (knots[n - 1].0 - knots[n - 2].0),
                )
            }
            PayoffKind::Sampled { xs, ys } => {
                let n = xs.len();
                (
                    (ys[1] - ys[0]) / (xs[1] - xs[0]),
                    (ys[n - 1] - ys[n - 2]) / (xs[n - 1] - xs[n - 2]),
                )
            }
        }
    }

    /// Whether `g` is bounded from below, i.e. whether `inf g` is finite.
    pub fn is_bounded_below(&self) -> bool {
        let (left, right) = self.tail_slopes();
        left <= 0.0 && right >= 0.0
    }

    /// `inf g`, or `-inf` when `g` is unbounded below.
    pub fn inf(&self) -> f64 {
        if !self.is_bounded_below() {
            return f64::NEG_INFINITY;
        }
        match &self.kind {
            PayoffKind::Digital { .. } => 0.0,
            _ => self
                .breakpoints()
                .into_iter()
                .map(|x| self.value(x))
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Whether the face-lift may sample `g` between grid nodes.
    pub(crate) fn is_analytic(&self) -> bool {
        !matches!(self.kind, PayoffKind::Sampled { .. })
    }

    fn growth_constants(&self) -> (f64, f64) {
        if let PayoffKind::Digital { .. } = self.kind {
            return (1.0, 0.0);
        }
        let (left, right) = self.tail_slopes();
        let c1 = left.abs().max(right.abs());
        // |g| - c1|x| is convex between breakpoints and zero, and
        // non-increasing on the tails, so its maximum sits on those points.
        let c0 = self
            .breakpoints()
            .into_iter()
            .chain(std::iter::once(0.0))
            .map(|x| self.value(x).abs() - c1 * x.abs())
            .fold(C0_FLOOR, f64::max);
        (c0, c1)
    }
}

fn interp_extrapolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    let k = match xs.partition_point(|&v| v <= x) {
        0 => 0,
        p if p >= n => n - 2,
        p => p - 1,
    };
    let w = (x - xs[k]) / (xs[k + 1] - xs[k]);
    ys[k] + w * (ys[k + 1] - ys[k])
}
