//! Face-lifting `g_hat = (g - Gamma_bar)^conc + Gamma_bar`, where
//! `Gamma_bar'' = gamma_bar`.

use super::coef::CoefFn;
use super::envelope::{eval_hull, upper_hull};
use super::market::GammaCap;
use super::payoff::{Payoff, PayoffKind};
use crate::{Error, Result};

/// Sub-samples inserted around each bridge endpoint per refinement round.
const REFINE_POINTS: usize = 256;
const REFINE_ROUNDS: usize = 3;

/// Sampled second antiderivative of `gamma_bar`, normalised so that its value
/// and slope vanish at `anchor`.
#[derive(Debug, Clone)]
pub struct GammaAntiderivative {
    pub xs: Vec<f64>,
    pub values: Vec<f64>,
    pub slopes: Vec<f64>,
    pub anchor: usize,
    gamma: CoefFn,
}

impl GammaAntiderivative {
    /// Evaluates off-grid by a Taylor expansion from the nearest node on the
    /// left, with the remainder integrated by Simpson's rule.
    pub fn eval(&self, x: f64) -> f64 {
        let j = self
            .xs
            .partition_point(|&v| v <= x)
            .saturating_sub(1)
            .min(self.xs.len() - 1);
        let d = x - self.xs[j];
        let g0 = self.gamma.value(self.xs[j]);
        let gm = self.gamma.value(self.xs[j] + 0.5 * d);
        self.values[j] + self.slopes[j] * d + d * d / 6.0 * (g0 + 2.0 * gm)
    }
}

/// Double integral of the cap on `xs`, anchored at the node closest to the
/// middle of the grid.
pub fn gamma_antiderivative(cap: &GammaCap, xs: &[f64]) -> Result<GammaAntiderivative> {
    if xs.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: xs.len(),
        });
    }
    super::check_increasing(xs)?;
    let mid = 0.5 * (xs[0] + xs[xs.len() - 1]);
    Ok(antiderivative_anchored(&cap.gamma_bar, xs, nearest(xs, mid)))
}

fn nearest(xs: &[f64], x: f64) -> usize {
    let p = xs.partition_point(|&v| v < x);
    if p == 0 {
        0
    } else if p == xs.len() || (x - xs[p - 1]) <= (xs[p] - x) {
        p - 1
    } else {
        p
    }
}

fn antiderivative_anchored(gamma: &CoefFn, xs: &[f64], anchor: usize) -> GammaAntiderivative {
    let n = xs.len();
    let mut values = vec![0.0; n];
    let mut slopes = vec![0.0; n];
    for j in anchor..n - 1 {
        let h = xs[j + 1] - xs[j];
        let (g0, gm, g1) = (
            gamma.value(xs[j]),
            gamma.value(xs[j] + 0.5 * h),
            gamma.value(xs[j + 1]),
        );
        slopes[j + 1] = slopes[j] + h / 6.0 * (g0 + 4.0 * gm + g1);
        values[j + 1] = values[j] + h * slopes[j] + h * h / 6.0 * (g0 + 2.0 * gm);
    }
    for j in (0..anchor).rev() {
        let h = xs[j + 1] - xs[j];
        let (g0, gm, g1) = (
            gamma.value(xs[j]),
            gamma.value(xs[j] + 0.5 * h),
            gamma.value(xs[j + 1]),
        );
        slopes[j] = slopes[j + 1] - h / 6.0 * (g0 + 4.0 * gm + g1);
        values[j] = values[j + 1] - h * slopes[j + 1] + h * h / 6.0 * (2.0 * gm + g1);
    }
    GammaAntiderivative {
        xs: xs.to_vec(),
        values,
        slopes,
        anchor,
        gamma: gamma.clone(),
    }
}

/// Closed-form face-lifts for constant caps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClosedFormFaceLift {
    Digital { strike: f64, gamma: f64 },
    CallSpread { k1: f64, k2: f64, gamma: f64 },
    Butterfly { k1: f64, k2: f64, k3: f64, gamma: f64 },
}

impl ClosedFormFaceLift {
    /// Returns the closed form when the payoff/cap pair admits one.
    pub fn detect(payoff: &Payoff, cap: &GammaCap) -> Option<Self> {
        let gamma = cap.gamma_bar.as_constant()?;
        let half_width = 0.5 / gamma;
        match payoff.kind {
            PayoffKind::Digital { strike } => Some(ClosedFormFaceLift::Digital { strike, gamma }),
            PayoffKind::CallSpread { k1, k2 } if k1 + half_width <= k2 => {
                Some(ClosedFormFaceLift::CallSpread { k1, k2, gamma })
            }
            PayoffKind::Butterfly { k1, k2, k3 }
                if k1 + half_width <= k2 && k2 <= k3 - half_width =>
            {
                Some(ClosedFormFaceLift::Butterfly { k1, k2, k3, gamma })
            }
            _ => None,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            ClosedFormFaceLift::Digital { strike, gamma } => {
                let x_o = strike - (2.0 / gamma).sqrt();
                if x >= x_o {
                    (0.5 * gamma * (x - x_o).powi(2)).min(1.0)
                } else {
                    0.0
                }
            }
            ClosedFormFaceLift::CallSpread { k1, k2, gamma } => {
                let (lo, hi) = (k1 - 0.5 / gamma, k1 + 0.5 / gamma);
                if x < lo {
                    0.0
                } else if x < hi {
                    0.5 * gamma * (x - lo).powi(2)
                } else if x < k2 {
                    x - k1
                } else {
                    k2 - k1
                }
            }
            ClosedFormFaceLift::Butterfly { k1, k2, k3, gamma } => {
                let (x1m, x1p) = (k1 - 0.5 / gamma, k1 + 0.5 / gamma);
                let (x2m, x2p) = (k3 - 0.5 / gamma, k3 + 0.5 / gamma);
                let tail = 2.0 * k2 - (k1 + k3);
                if x < x1m {
                    0.0
                } else if x < x1p {
                    0.5 * gamma * (x - x1m).powi(2)
                } else if x < k2 {
                    x - k1
                } else if x < x2m {
                    x - k1 - 2.0 * (x - k2)
                } else if x < x2p {
                    0.5 * gamma * (x - x2p).powi(2) + tail
                } else {
                    tail
                }
            }
        }
    }
}

/// Face-lifted payoff sampled on an extended grid.
#[derive(Debug, Clone)]
pub struct FaceLiftedPayoff {
    pub xs: Vec<f64>,
    pub g: Vec<f64>,
    pub g_hat: Vec<f64>,
    pub gamma_bar: Vec<f64>,
    pub big_gamma: Vec<f64>,
    /// Index in `xs` of the first node of the requested grid.
    pub grid_start: usize,
    pub grid_len: usize,
    pub closed_form: Option<ClosedFormFaceLift>,
    pub cap: GammaCap,
}

impl FaceLiftedPayoff {
    /// `g_hat` on the nodes of the grid the face-lift was requested for.
    pub fn on_grid(&self) -> &[f64] {
        &self.g_hat[self.grid_start..self.grid_start + self.grid_len]
    }

    pub fn grid_xs(&self) -> &[f64] {
        &self.xs[self.grid_start..self.grid_start + self.grid_len]
    }

    /// Linear interpolation of `g_hat`; exact at sample nodes.
    pub fn value_at(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let p = self.xs.partition_point(|&v| v < x);
        if p < n && self.xs[p] == x {
            return self.g_hat[p];
        }
        let k = p.clamp(1, n - 1) - 1;
        let w = (x - self.xs[k]) / (self.xs[k + 1] - self.xs[k]);
        self.g_hat[k] + w * (self.g_hat[k + 1] - self.g_hat[k])
    }

    /// CSV with header `x,g,g_hat,gamma_bar`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,g,g_hat,gamma_bar\n");
        for k in 0..self.xs.len() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                self.xs[k], self.g[k], self.g_hat[k], self.gamma_bar[k]
            ));
        }
        out
    }
}

/// Margin that makes the envelope on the extended grid exact on the grid.
pub fn default_margin(payoff: &Payoff, cap: &GammaCap, xs: &[f64]) -> f64 {
    let reach = xs
        .first()
        .map(|a| a.abs())
        .unwrap_or(0.0)
        .max(xs.last().map(|b| b.abs()).unwrap_or(0.0));
    2.0 * (payoff.c1 / cap.iota + reach)
}

pub fn face_lift(
    payoff: &Payoff,
    cap: &GammaCap,
    xs: &[f64],
    margin: f64,
) -> Result<FaceLiftedPayoff> {
    if xs.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: xs.len(),
        });
    }
    super::check_increasing(xs)?;
    if !(margin >= 0.0) || !margin.is_finite() {
        return Err(Error::InvalidInput(format!("margin must be nonnegative, got {margin}")));
    }
    let n = xs.len();
    let (h_l, h_r) = (xs[1] - xs[0], xs[n - 1] - xs[n - 2]);
    let m_l = (margin / h_l).ceil() as usize;
    let m_r = (margin / h_r).ceil() as usize;
    let mut ext = Vec::with_capacity(n + m_l + m_r);
    ext.extend((1..=m_l).rev().map(|k| xs[0] - k as f64 * h_l));
    ext.extend_from_slice(xs);
    ext.extend((1..=m_r).map(|k| xs[n - 1] + k as f64 * h_r));

    let mid = 0.5 * (xs[0] + xs[n - 1]);
    let big = antiderivative_anchored(&cap.gamma_bar, &ext, nearest(&ext, mid));

    // Sample set: extended nodes plus interior breakpoints of g.
    let scale = ext[ext.len() - 1].abs().max(ext[0].abs()).max(1.0);
    let mut px: Vec<f64> = ext.clone();
    let mut py: Vec<f64> = ext
        .iter()
        .zip(&big.values)
        .map(|(&x, &gb)| payoff.value(x) - gb)
        .collect();
    let extra: Vec<f64> = payoff
        .breakpoints()
        .into_iter()
        .filter(|&b| b > ext[0] && b < ext[ext.len() - 1])
        .collect();
    merge_points(&mut px, &mut py, &extra, |x| payoff.value(x) - big.eval(x), 1e-14 * scale);

    if payoff.is_analytic() {
        for _ in 0..REFINE_ROUNDS {
            let hull = upper_hull(&px, &py);
            let mut inserts = Vec::new();
            for w in hull.windows(2) {
                if w[1] > w[0] + 1 {
                    for &v in w {
                        if v > 0 && v + 1 < px.len() {
                            let (a, b) = (px[v - 1], px[v + 1]);
                            let step = (b - a) / REFINE_POINTS as f64;
                            inserts.extend((1..REFINE_POINTS).map(|k| a + k as f64 * step));
                        }
                    }
                }
            }
            if inserts.is_empty() {
                break;
            }
            inserts.sort_by(f64::total_cmp);
            inserts.dedup();
            merge_points(&mut px, &mut py, &inserts, |x| payoff.value(x) - big.eval(x), 0.0);
        }
    }

    let hull = upper_hull(&px, &py);
    let env_at_points = eval_hull(&hull, &px, &py, &px);
    let tol = 1e-12 * py.iter().fold(1.0_f64, |m, y| m.max(y.abs()));
    let last = px.len() - 1;
    if env_at_points[1] - py[1] > tol {
        return Err(Error::MarginTooSmall {
            side: "left",
            x: px[0],
        });
    }
    if env_at_points[last - 1] - py[last - 1] > tol {
        return Err(Error::MarginTooSmall {
            side: "right",
            x: px[last],
        });
    }

    let env = eval_hull(&hull, &px, &py, &ext);
    let g: Vec<f64> = ext.iter().map(|&x| payoff.value(x)).collect();
    let g_hat: Vec<f64> = env
        .iter()
        .zip(&big.values)
        .zip(&g)
        .map(|((e, gb), &gv)| (e + gb).max(gv))
        .collect();
    let gamma_bar = ext.iter().map(|&x| cap.value(x)).collect();

    Ok(FaceLiftedPayoff {
        xs: ext,
        g,
        g_hat,
        gamma_bar,
        big_gamma: big.values,
        grid_start: m_l,
        grid_len: n,
        closed_form: ClosedFormFaceLift::detect(payoff, cap),
        cap: cap.clone(),
    })
}

/// Merges sorted `extra` abscissae into the sorted point set, keeping the
/// larger value when two abscissae coincide within `eps`.
fn merge_points<F: Fn(f64) -> f64>(
    px: &mut Vec<f64>,
    py: &mut Vec<f64>,
    extra: &[f64],
    value: F,
    eps: f64,
) {
    if extra.is_empty() {
        return;
    }
    let mut nx = Vec::with_capacity(px.len() + extra.len());
    let mut ny = Vec::with_capacity(px.len() + extra.len());
    let (mut i, mut k) = (0, 0);
    while i < px.len() || k < extra.len() {
        let take_old = k >= extra.len() || (i < px.len() && px[i] <= extra[k]);
        let (x, y) = if take_old {
            i += 1;
            (px[i - 1], py[i - 1])
        } else {
            k += 1;
            (extra[k - 1], value(extra[k - 1]))
        };
        match nx.last() {
            Some(&lx) if x - lx <= eps => {
                let last = ny.len() - 1;
                if y > ny[last] {
                    ny[last] = y;
                }
            }
            _ => {
                nx.push(x);
                ny.push(y);
            }
        }
    }
    *px = nx;
    *py = ny;
}
