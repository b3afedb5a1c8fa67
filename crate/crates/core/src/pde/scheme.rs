//! Per-node operators of the scheme.
//!
//! For a node `(t_i, x_j)` with next-row data `phi`,
//!
//! ```text
//! G(y)  = (phi[j+1] + phi[j-1] - 2y) / h_x^2
//! L1(y) = -(phi[j] - y) / h_t - sigma^2 G(y) / (2 (1 - f G(y)))
//! L2(y) = gamma_bar - G(y)
//! ```
//!
//! and the node value is the root of `min(L1, L2)`, clamped to
//! `[w_low, w_high]`. Both operators are increasing in `y` on
//! `{L2 >= 0}` and decreasing in every entry of `phi`, which makes the
//! scheme monotone.

use crate::{Error, Result};

/// `(phi[j+1] + phi[j-1] - 2y) / h_x^2`.
pub fn discrete_gamma(next_row: &[f64], j: usize, y: f64, h_x: f64) -> Result<f64> {
    if j == 0 || j + 1 >= next_row.len() {
        return Err(Error::IndexOutOfRange {
            index: j,
            lo: 1,
            hi: next_row.len().saturating_sub(2),
        });
    }
    Ok((next_row[j + 1] + next_row[j - 1] - 2.0 * y) / (h_x * h_x))
}

/// Coefficients of one node, frozen at `x_j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeCoeffs {
    pub t: f64,
    pub x: f64,
    pub sigma: f64,
    pub f: f64,
    pub gamma_bar: f64,
    pub h_t: f64,
    pub h_x: f64,
    pub w_low: f64,
    pub w_high: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[repr(u8)]
pub enum Clamp {
    #[default]
    None = 0,
    Lower = 1,
    Upper = 2,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NodeSolution {
    /// Clamped node value.
    pub y: f64,
    /// Unclamped root of `min(L1, L2)`.
    pub root: f64,
    pub clamp: Clamp,
    /// The gamma constraint is active (`L2(root) = 0`).
    pub binding: bool,
    pub res_l1: f64,
    pub res_l2: f64,
}

#[derive(Debug, Clone, Copy)]
struct Stencil {
    sum: f64,
    center: f64,
    inv_hx2: f64,
    c: NodeCoeffs,
}

impl Stencil {
    #[inline]
    fn gamma(&self, y: f64) -> f64 {
        (self.sum - 2.0 * y) * self.inv_hx2
    }

    #[inline]
    fn l1(&self, y: f64) -> f64 {
        let g = self.gamma(y);
        (y - self.center) / self.c.h_t - self.c.sigma * self.c.sigma * g / (2.0 * (1.0 - self.c.f * g))
    }

    #[inline]
    fn l1_prime(&self, y: f64) -> f64 {
        let d = 1.0 - self.c.f * self.gamma(y);
        1.0 / self.c.h_t + self.c.sigma * self.c.sigma * self.inv_hx2 / (d * d)
    }

    #[inline]
    fn l2(&self, y: f64) -> f64 {
        self.c.gamma_bar - self.gamma(y)
    }
}

/// Solves one node. `tol` is the relative step tolerance of the root finder.
pub fn node_solve(next_row: &[f64], j: usize, c: &NodeCoeffs, tol: f64) -> Result<NodeSolution> {
    if j == 0 || j + 1 >= next_row.len() {
        return Err(Error::IndexOutOfRange {
            index: j,
            lo: 1,
            hi: next_row.len().saturating_sub(2),
        });
    }
    let (lo_n, mid_n, hi_n) = (next_row[j - 1], next_row[j], next_row[j + 1]);
    if !(lo_n.is_finite() && mid_n.is_finite() && hi_n.is_finite()) {
        return Err(Error::NonFinite {
            what: "next-row value",
            t: c.t,
            x: c.x,
        });
    }
    let s = Stencil {
        sum: lo_n + hi_n,
        center: mid_n,
        inv_hx2: 1.0 / (c.h_x * c.h_x),
        c: *c,
    };

    // Root of L2; above it the L1 denominator stays >= f * iota.
    let y2 = 0.5 * (s.sum - c.gamma_bar * c.h_x * c.h_x);
    let (root, binding) = if s.l1(y2) >= 0.0 {
        (y2, true)
    } else {
        (solve_l1(&s, y2, tol)?, false)
    };
    if !root.is_finite() {
        return Err(Error::NonFinite {
            what: "node root",
            t: c.t,
            x: c.x,
        });
    }
    let (y, clamp) = if root < c.w_low {
        (c.w_low, Clamp::Lower)
    } else if root > c.w_high {
        (c.w_high, Clamp::Upper)
    } else {
        (root, Clamp::None)
    };
    Ok(NodeSolution {
        y,
        root,
        clamp,
        binding,
        res_l1: s.l1(root),
        res_l2: s.l2(root),
    })
}

/// Root of `L1` on `(y2, hi]`, where `L1(y2) < 0`. `L1` is increasing and
/// concave there, so Newton from the left is monotone; bisection guards it.
fn solve_l1(s: &Stencil, y2: f64, tol: f64) -> Result<f64> {
    let mut lo = y2;
    // At hi we have G <= 0 and y >= phi[j], hence L1(hi) >= 0.
    let mut hi = s.center.max(0.5 * s.sum);
    if !(s.l1(hi) >= 0.0) {
        return Err(Error::RootBracket { t: s.c.t, x: s.c.x });
    }
    let mut y = lo;
    for _ in 0..200 {
        let v = s.l1(y);
        if v == 0.0 {
            return Ok(y);
        }
        if v < 0.0 {
            lo = y;
        } else {
            hi = y;
        }
        let newton = y - v / s.l1_prime(y);
        let next = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let done = (next - y).abs() <= tol * next.abs().max(1.0) || hi - lo <= tol * hi.abs().max(1.0);
        y = next;
        if done {
            return Ok(y);
        }
    }
    Err(Error::RootBracket { t: s.c.t, x: s.c.x })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coeffs(gamma_bar: f64) -> NodeCoeffs {
        NodeCoeffs {
            t: 0.0,
            x: 0.0,
            sigma: 0.2,
            f: 0.5,
            gamma_bar,
            h_t: 0.01,
            h_x: 0.1,
            w_low: f64::NEG_INFINITY,
            w_high: f64::INFINITY,
        }
    }

    #[test]
    fn discrete_gamma_of_affine_and_quadratic() {
        let xs: Vec<f64> = (0..11).map(|k| -0.5 + 0.1 * k as f64).collect();
        let affine: Vec<f64> = xs.iter().map(|x| 3.0 * x - 1.0).collect();
        assert!(discrete_gamma(&affine, 4, affine[4], 0.1).unwrap().abs() < 1e-12);
        let quad: Vec<f64> = xs.iter().map(|x| x * x).collect();
        assert!((discrete_gamma(&quad, 5, quad[5], 0.1).unwrap() - 2.0).abs() < 1e-10);
        assert!(discrete_gamma(&quad, 0, 0.0, 0.1).is_err());
        assert!(discrete_gamma(&quad, 10, 0.0, 0.1).is_err());
    }

    #[test]
    fn affine_row_is_a_fixed_point() {
        let row = [0.9, 1.0, 1.1];
        let sol = node_solve(&row, 1, &coeffs(1.75), 1e-14).unwrap();
        assert!((sol.y - 1.0).abs() < 1e-13);
        assert!(!sol.binding);
        assert_eq!(sol.clamp, Clamp::None);
    }

    #[test]
    fn binding_node_uses_explicit_root() {
        // second difference 10 >> gamma_bar
        let row = [0.1, 0.0, 0.1];
        let c = coeffs(1.75);
        let sol = node_solve(&row, 1, &c, 1e-14).unwrap();
        assert!(sol.binding);
        let y2 = 0.5 * (0.2 - 1.75 * 0.01);
        assert_eq!(sol.y, y2);
        assert!(sol.res_l2.abs() < 1e-12);
        assert!(sol.res_l1 >= 0.0);
    }

    #[test]
    fn clamps_are_reported() {
        let row = [1.0, 1.0, 1.0];
        let mut c = coeffs(1.75);
        c.w_high = 0.5;
        let sol = node_solve(&row, 1, &c, 1e-14).unwrap();
        assert_eq!((sol.y, sol.clamp), (0.5, Clamp::Upper));
        c.w_high = f64::INFINITY;
        c.w_low = 2.0;
        let sol = node_solve(&row, 1, &c, 1e-14).unwrap();
        assert_eq!((sol.y, sol.clamp), (2.0, Clamp::Lower));
    }

    #[test]
    fn nan_input_is_rejected() {
        let row = [1.0, f64::NAN, 1.0];
        assert!(matches!(
            node_solve(&row, 1, &coeffs(1.0), 1e-14),
            Err(Error::NonFinite { .. })
        ));
    }
}
