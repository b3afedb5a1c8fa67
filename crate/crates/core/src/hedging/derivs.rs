use crate::pde::{Grid, PriceSurface};
use crate::{Error, Result};

/// Derivatives of a surface at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NodeDerivatives {
    pub v: f64,
    pub v_x: f64,
    pub v_xx: f64,
    pub v_tx: f64,
    pub v_xxx: f64,
}

/// Finite-difference derivatives of a price surface, tabulated on its grid
/// (row-major, `n_x + 1` columns).
#[derive(Debug, Clone)]
pub struct SurfaceDerivatives {
    pub grid: Grid,
    pub v: Vec<f64>,
    pub v_x: Vec<f64>,
    pub v_xx: Vec<f64>,
    pub v_tx: Vec<f64>,
    pub v_xxx: Vec<f64>,
    pub smoothing_delta: f64,
}

impl SurfaceDerivatives {
    /// Mollifies `surface` with window `smoothing_delta` (identity for zero)
    /// and differentiates: central differences in `x`, forward in `t` for
    /// `v_tx` (backward on the terminal row). Edge columns copy the nearest
    /// interior value.
    pub fn from_surface(surface: &PriceSurface, smoothing_delta: f64) -> Result<Self> {
        let smoothed;
        let s = if smoothing_delta > 0.0 {
            smoothed = mollify_surface(surface, smoothing_delta)?;
            &smoothed
        } else if smoothing_delta == 0.0 {
            surface
        } else {
            return Err(Error::InvalidInput(format!(
                "smoothing window must be nonnegative, got {smoothing_delta}"
            )));
        };
        let grid = s.grid;
        let (rows, cols) = (grid.n_t + 1, grid.n_x + 1);
        let h = grid.h_x();
        let mut v_x = vec![0.0; rows * cols];
        let mut v_xx = vec![0.0; rows * cols];
        let mut v_xxx = vec![0.0; rows * cols];
        for i in 0..rows {
            let v = s.row(i);
            let o = i * cols;
            for j in 1..cols - 1 {
                v_x[o + j] = (v[j + 1] - v[j - 1]) / (2.0 * h);
                v_xx[o + j] = (v[j + 1] - 2.0 * v[j] + v[j - 1]) / (h * h);
            }
            v_x[o] = (v[1] - v[0]) / h;
            v_x[o + cols - 1] = (v[cols - 1] - v[cols - 2]) / h;
            v_xx[o] = v_xx[o + 1];
            v_xx[o + cols - 1] = v_xx[o + cols - 2];
            for j in 2..cols - 2 {
                v_xxx[o + j] = (v_xx[o + j + 1] - v_xx[o + j - 1]) / (2.0 * h);
            }
            for j in [0, 1] {
                v_xxx[o + j] = v_xxx[o + 2];
                v_xxx[o + cols - 1 - j] = v_xxx[o + cols - 3];
            }
        }
        let mut v_tx = vec![0.0; rows * cols];
        for i in 0..rows {
            let (lo, hi) = if i + 1 < rows { (i, i + 1) } else { (i - 1, i) };
            let dt = grid.t(hi) - grid.t(lo);
            for j in 0..cols {
                v_tx[i * cols + j] = (v_x[hi * cols + j] - v_x[lo * cols + j]) / dt;
            }
        }
        Ok(SurfaceDerivatives {
            grid,
            v: s.values.clone(),
            v_x,
            v_xx,
            v_tx,
            v_xxx,
            smoothing_delta,
        })
    }

    /// Whether `(t, x)` lies in the grid's rectangle.
    pub fn contains(&self, t: f64, x: f64) -> bool {
        let g = &self.grid;
        (0.0..=g.horizon).contains(&t) && (g.x_min..=g.x_max).contains(&x)
    }

    /// Bilinear interpolation of all derivatives at `(t, x)`.
    pub fn at(&self, t: f64, x: f64) -> Result<NodeDerivatives> {
        if !self.contains(t, x) {
            return Err(Error::OutsideGrid { t, x });
        }
        let g = &self.grid;
        let sx = (x - g.x_min) / g.h_x();
        let j = (sx.floor() as usize).min(g.n_x - 1);
        let wx = sx - j as f64;
        let i = ((t / g.h_t()).floor() as usize).min(g.n_t - 1);
        let wt = ((t - g.t(i)) / (g.t(i + 1) - g.t(i))).clamp(0.0, 1.0);
        let cols = g.n_x + 1;
        let (k00, k01) = (i * cols + j, i * cols + j + 1);
        let (k10, k11) = (k00 + cols, k01 + cols);
        let bl = |a: &[f64]| {
            let lo = a[k00] + wx * (a[k01] - a[k00]);
            let hi = a[k10] + wx * (a[k11] - a[k10]);
            lo + wt * (hi - lo)
        };
        Ok(NodeDerivatives {
            v: bl(&self.v),
            v_x: bl(&self.v_x),
            v_xx: bl(&self.v_xx),
            v_tx: bl(&self.v_tx),
            v_xxx: bl(&self.v_xxx),
        })
    }

    /// Largest excess of `v_xx` over the cap at interior nodes.
    pub fn max_gamma_excess(&self, cap: impl Fn(f64) -> f64) -> f64 {
        let cols = self.grid.n_x + 1;
        let caps: Vec<f64> = (0..cols).map(|j| cap(self.grid.x(j))).collect();
        self.v_xx
            .iter()
            .enumerate()
            .filter(|(k, _)| {
                let j = k % cols;
                j > 0 && j + 1 < cols
            })
            .map(|(k, &g)| g - caps[k % cols])
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Discrete mollification: each node becomes the average over the time
/// levels in `[t - delta, t]` (levels before zero repeat the first row) and a
/// symmetric spatial window of half-width `delta`, shrunk near the edges so
/// it stays symmetric. The result is clipped to the surface's clamp bounds.
pub fn mollify_surface(surface: &PriceSurface, delta: f64) -> Result<PriceSurface> {
    let g = surface.grid;
    let limit = 0.25 * (g.x_max - g.x_min);
    if !(delta >= 0.0) {
        return Err(Error::InvalidInput(format!("smoothing window must be nonnegative, got {delta}")));
    }
    if delta > limit {
        return Err(Error::SmoothingTooWide { delta, limit });
    }
    let mt = (delta / g.h_t()).round() as usize;
    let mx = (delta / g.h_x()).round() as usize;
    if mt == 0 && mx == 0 {
        return Ok(surface.clone());
    }
    let (rows, cols) = (g.n_t + 1, g.n_x + 1);

    // Time pass with running column sums.
    let mut timed = vec![0.0; rows * cols];
    let mut acc = vec![0.0; cols];
    let first = surface.row(0);
    for (j, a) in acc.iter_mut().enumerate() {
        *a = first[j] * mt as f64;
    }
    for i in 0..rows {
        let add = surface.row(i);
        for j in 0..cols {
            acc[j] += add[j];
        }
        if i > mt {
            let drop = surface.row(i - mt - 1);
            for j in 0..cols {
                acc[j] -= drop[j];
            }
        } else if i > 0 {
            for j in 0..cols {
                acc[j] -= first[j];
            }
        }
        for j in 0..cols {
            timed[i * cols + j] = acc[j] / (mt + 1) as f64;
        }
    }

    // Space pass with prefix sums.
    let mut out = surface.clone();
    let mut prefix = vec![0.0; cols + 1];
    for i in 0..rows {
        let row = &timed[i * cols..(i + 1) * cols];
        for j in 0..cols {
            prefix[j + 1] = prefix[j] + row[j];
        }
        for j in 0..cols {
            let w = mx.min(j).min(cols - 1 - j);
            let value = if w == 0 {
                row[j]
            } else {
                (prefix[j + w + 1] - prefix[j - w]) / (2 * w + 1) as f64
            };
            out.values[i * cols + j] = value.clamp(surface.w_low, surface.w_high[j]);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pde::Clamp;

    fn surface_from(grid: Grid, f: impl Fn(f64, f64) -> f64) -> PriceSurface {
        let cols = grid.n_x + 1;
        let n = (grid.n_t + 1) * cols;
        let mut values = vec![0.0; n];
        for i in 0..=grid.n_t {
            for j in 0..cols {
                values[i * cols + j] = f(grid.t(i), grid.x(j));
            }
        }
        PriceSurface {
            grid,
            values,
            w_low: f64::NEG_INFINITY,
            w_high: vec![f64::INFINITY; cols],
            clamp: vec![Clamp::None; n],
            binding: vec![false; n],
            res_l1: vec![0.0; n],
            res_l2: vec![0.0; n],
        }
    }

    fn grid() -> Grid {
        Grid::new(-2.0, 2.0, 80, 50, 1.0).unwrap()
    }

    #[test]
    fn zero_delta_is_identity() {
        let s = surface_from(grid(), |t, x| (x * 3.0).sin() + t);
        assert_eq!(mollify_surface(&s, 0.0).unwrap().values, s.values);
    }

    #[test]
    fn affine_surface_unchanged() {
        let s = surface_from(grid(), |t, x| 0.3 * x - 1.0 + 0.0 * t);
        let m = mollify_surface(&s, 0.2).unwrap();
        for (a, b) in m.values.iter().zip(&s.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn too_wide_window_rejected() {
        let s = surface_from(grid(), |_, x| x);
        assert_eq!(
            mollify_surface(&s, 1.5).unwrap_err(),
            Error::SmoothingTooWide { delta: 1.5, limit: 1.0 }
        );
    }

    #[test]
    fn time_window_looks_backward() {
        // v = t: averaging levels t - delta .. t lowers the value by delta / 2
        // once the window is full.
        let s = surface_from(grid(), |t, _| t);
        let m = mollify_surface(&s, 0.1).unwrap();
        let cols = 81;
        let i = 40;
        assert!((m.values[i * cols + 40] - (0.8 - 0.05)).abs() < 1e-12);
        // The first row only sees itself.
        assert_eq!(m.values[40], 0.0);
    }

    #[test]
    fn smoothing_does_not_create_curvature() {
        let g = grid();
        let s = surface_from(g, |t, x| {
            let noise = ((x * 97.0).sin() * 1e3).fract() * 0.01;
            -(x * x) * 0.5 + x.abs() + noise + t
        });
        let max_in = (0..=g.n_t)
            .flat_map(|i| s.row_second_differences(i))
            .fold(f64::NEG_INFINITY, f64::max);
        let m = mollify_surface(&s, 0.1).unwrap();
        // Away from the edges every window is full.
        for i in 0..=g.n_t {
            let d2 = m.row_second_differences(i);
            for &d in &d2[4..d2.len() - 4] {
                assert!(d <= max_in + 1e-9);
            }
        }
    }

    #[test]
    fn derivatives_of_a_cubic() {
        let s = surface_from(grid(), |t, x| x * x * x + t * x);
        let d = SurfaceDerivatives::from_surface(&s, 0.0).unwrap();
        let p = d.at(0.5, 0.3).unwrap();
        let h2 = 0.05f64 * 0.05;
        assert!((p.v - (0.027 + 0.15)).abs() < 0.1 * h2 + 1e-3);
        assert!((p.v_x - (0.27 + 0.5)).abs() < 3.0 * h2 + 1e-2);
        assert!((p.v_xx - 1.8).abs() < 0.2);
        assert!((p.v_xxx - 6.0).abs() < 1e-9);
        assert!((p.v_tx - 1.0).abs() < 1e-9);
        assert_eq!(d.at(1.5, 0.0).unwrap_err(), Error::OutsideGrid { t: 1.5, x: 0.0 });
    }

    #[test]
    fn stored_first_derivative_matches_central_differences() {
        let g = grid();
        let s = surface_from(g, |t, x| (x * 2.0).cos() * (1.0 + t));
        let d = SurfaceDerivatives::from_surface(&s, 0.0).unwrap();
        let h = g.h_x();
        for j in 1..g.n_x {
            let exact = -2.0 * (2.0 * g.x(j)).sin() * 1.5;
            let k = 25 * (g.n_x + 1) + j;
            assert!((d.v_x[k] - exact).abs() < 2.0 * h * h);
        }
    }
}
