//! Concave envelope of sampled data via the upper convex hull.

use crate::{Error, Result};

/// Indices of the upper hull vertices of `(xs, ys)` (monotone chain).
///
/// `xs` must be strictly increasing. Collinear middle points are dropped.
pub fn upper_hull(xs: &[f64], ys: &[f64]) -> Vec<usize> {
    let mut hull: Vec<usize> = Vec::with_capacity(xs.len());
    for k in 0..xs.len() {
        while hull.len() >= 2 {
            let o = hull[hull.len() - 2];
            let a = hull[hull.len() - 1];
            let cross = (xs[a] - xs[o]) * (ys[k] - ys[o]) - (ys[a] - ys[o]) * (xs[k] - xs[o]);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(k);
    }
    hull
}

/// Smallest concave piecewise-linear function above the samples, evaluated
/// at every sample abscissa.
pub fn concave_envelope(xs: &[f64], ys: &[f64]) -> Result<Vec<f64>> {
    if xs.len() < 2 || xs.len() != ys.len() {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: xs.len().min(ys.len()),
        });
    }
    super::check_increasing(xs)?;
    if ys.iter().any(|y| !y.is_finite()) {
        return Err(Error::InvalidInput("envelope input must be finite".into()));
    }
    let hull = upper_hull(xs, ys);
    Ok(eval_hull(&hull, xs, ys, xs))
}

/// Evaluates the hull polyline at `at` (sorted, inside the hull's x-range).
pub(crate) fn eval_hull(hull: &[usize], xs: &[f64], ys: &[f64], at: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(at.len());
    let mut seg = 0;
    for &x in at {
        while seg + 2 < hull.len() && xs[hull[seg + 1]] < x {
            seg += 1;
        }
        let (a, b) = (hull[seg], hull[seg + 1]);
        out.push(if x == xs[a] {
            ys[a]
        } else if x == xs[b] {
            ys[b]
        } else {
            let w = (x - xs[a]) / (xs[b] - xs[a]);
            ys[a] + w * (ys[b] - ys[a])
        });
    }
    out
}
