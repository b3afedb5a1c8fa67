//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use impact_hedge::pde::NodeCoeffs;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

/// Concave envelope by brute force: the best chord over every pair of
/// samples bracketing each abscissa. O(n^3).
pub fn chord_envelope(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    (0..n)
        .map(|k| {
            let mut best = ys[k];
            for i in 0..=k {
                for j in k..n {
                    if j > i {
                        let w = (xs[k] - xs[i]) / (xs[j] - xs[i]);
                        best = best.max(ys[i] + w * (ys[j] - ys[i]));
                    }
                }
            }
            best
        })
        .collect()
}

/// Closed-form face-lift of the butterfly `(K1, K2, K3)` for constant cap.
pub fn butterfly_hat(x: f64, k1: f64, k2: f64, k3: f64, gb: f64) -> f64 {
    let (x1m, x1p) = (k1 - 0.5 / gb, k1 + 0.5 / gb);
    let (x2m, x2p) = (k3 - 0.5 / gb, k3 + 0.5 / gb);
    let c = 2.0 * k2 - (k1 + k3);
    if x < x1m {
        0.0
    } else if x < x1p {
        0.5 * gb * (x - x1m).powi(2)
    } else if x < k2 {
        x - k1
    } else if x < x2m {
        x - k1 - 2.0 * (x - k2)
    } else if x < x2p {
        0.5 * gb * (x - x2p).powi(2) + c
    } else {
        c
    }
}

/// Closed-form face-lift of the call spread `(K1, K2)` for constant cap.
pub fn call_spread_hat(x: f64, k1: f64, k2: f64, gb: f64) -> f64 {
    let (xm, xp) = (k1 - 0.5 / gb, k1 + 0.5 / gb);
    if x < xm {
        0.0
    } else if x < xp {
        0.5 * gb * (x - xm).powi(2)
    } else if x < k2 {
        x - k1
    } else {
        k2 - k1
    }
}

/// Face-lift of the digital `1_{x >= K}`.
pub fn digital_hat(x: f64, k: f64, gb: f64) -> f64 {
    let xo = k - (2.0 / gb).sqrt();
    if x < xo {
        0.0
    } else {
        (0.5 * gb * (x - xo).powi(2)).min(1.0)
    }
}

/// `E[(x + s Z - k)^+]`.
pub fn bachelier_call(x: f64, k: f64, s: f64) -> f64 {
    let n = Normal::standard();
    let d = (x - k) / s;
    (x - k) * n.cdf(d) + s * n.pdf(d)
}

pub fn bachelier_call_spread(x: f64, k1: f64, k2: f64, s: f64) -> f64 {
    bachelier_call(x, k1, s) - bachelier_call(x, k2, s)
}

fn l1(phi: &[f64; 3], c: &NodeCoeffs, y: f64) -> f64 {
    let g = (phi[0] + phi[2] - 2.0 * y) / (c.h_x * c.h_x);
    (y - phi[1]) / c.h_t - c.sigma * c.sigma * g / (2.0 * (1.0 - c.f * g))
}

fn l2(phi: &[f64; 3], c: &NodeCoeffs, y: f64) -> f64 {
    c.gamma_bar - (phi[0] + phi[2] - 2.0 * y) / (c.h_x * c.h_x)
}

/// Unconstrained root of `L1` from the quadratic obtained by clearing the
/// denominator, taking the branch with `1 - f G > 0`.
pub fn quadratic_root(phi: &[f64; 3], c: &NodeCoeffs) -> f64 {
    let h2 = c.h_x * c.h_x;
    let g0 = (phi[0] + phi[2] - 2.0 * phi[1]) / h2;
    let s2 = c.sigma * c.sigma;
    // In d = y - phi[1]: (4f/h^2) d^2 + 2(1 - f g0 + h_t s2 / h^2) d - h_t s2 g0 = 0.
    let qa = 4.0 * c.f / h2;
    let qb = 2.0 * (1.0 - c.f * g0 + c.h_t * s2 / h2);
    let qc = -c.h_t * s2 * g0;
    let disc = (qb * qb - 4.0 * qa * qc).sqrt();
    // Numerically stable form of the larger root.
    let d = if qb >= 0.0 { -2.0 * qc / (qb + disc) } else { (-qb + disc) / (2.0 * qa) };
    phi[1] + d
}

/// Root of `min(L1, L2)` by scanning then bisecting, without using the
/// solver's bracketing logic.
pub fn scan_root(phi: &[f64; 3], c: &NodeCoeffs) -> f64 {
    let y2 = 0.5 * (phi[0] + phi[2] - c.gamma_bar * c.h_x * c.h_x);
    let fval = |y: f64| if y < y2 { -1.0 } else { l1(phi, c, y).min(l2(phi, c, y)) };
    let span = 1.0 + (phi[0] - phi[1]).abs() + (phi[2] - phi[1]).abs();
    let mut lo = y2 - span;
    let mut step = span / 64.0;
    let mut hi = lo;
    while fval(hi) < 0.0 {
        lo = hi;
        hi += step;
        step *= 1.5;
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if fval(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
