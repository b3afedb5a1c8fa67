use crate::{Error, Result};

/// Uniform space-time grid `{(i h_t, x_min + j h_x)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    pub n_x: usize,
    pub n_t: usize,
    pub horizon: f64,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n_x: usize, n_t: usize, horizon: f64) -> Result<Self> {
        if n_x < 4 || n_t < 1 {
            return Err(Error::InvalidInput(format!(
                "grid needs n_x >= 4 and n_t >= 1, got n_x = {n_x}, n_t = {n_t}"
            )));
        }
        if !(x_min < x_max) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::InvalidInput(format!("bad spatial range [{x_min}, {x_max}]")));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidInput(format!("horizon must be positive, got {horizon}")));
        }
        Ok(Grid {
            x_min,
            x_max,
            n_x,
            n_t,
            horizon,
        })
    }

    #[inline]
    pub fn h_x(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_x as f64
    }

    #[inline]
    pub fn h_t(&self) -> f64 {
        self.horizon / self.n_t as f64
    }

    #[inline]
    pub fn x(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.h_x()
    }

    #[inline]
    pub fn t(&self, i: usize) -> f64 {
        if i == self.n_t {
            self.horizon
        } else {
            i as f64 * self.h_t()
        }
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..=self.n_x).map(|j| self.x(j)).collect()
    }

    /// `h_t / h_x^2`, which must vanish along a refinement sequence.
    pub fn parabolic_ratio(&self) -> f64 {
        self.h_t() / (self.h_x() * self.h_x())
    }

    /// Whether `x` lies in the central half `[x_min + W/4, x_max - W/4]`.
    pub fn in_central_half(&self, x: f64) -> bool {
        let quarter = 0.25 * (self.x_max - self.x_min);
        x >= self.x_min + quarter - 1e-12 && x <= self.x_max - quarter + 1e-12
    }
}
