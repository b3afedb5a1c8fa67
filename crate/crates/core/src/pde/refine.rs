use super::grid::Grid;
use super::solver::{price, PriceSurface, SolveOptions};
use crate::model::{GammaCap, ImpactMarket, Payoff};
use crate::{Error, Result};

/// `h_t` shrinks like `h_x^REFINEMENT_EXPONENT`, so `h_t / h_x^2 -> 0`.
pub const REFINEMENT_EXPONENT: f64 = 2.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub level: usize,
    pub h_t: f64,
    pub h_x: f64,
    /// Max difference of the `t = 0` price against the previous level on the
    /// central half of the domain (NaN on level 0).
    pub max_diff: f64,
    /// `max_diff` divided by the previous level's `max_diff`.
    pub ratio: f64,
}

#[derive(Debug, Clone)]
pub struct RefinementReport {
    pub rows: Vec<ConvergenceRow>,
    pub finest: PriceSurface,
}

impl RefinementReport {
    /// CSV with header `level,h_t,h_x,max_diff,ratio`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("level,h_t,h_x,max_diff,ratio\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{},{}\n", r.level, r.h_t, r.h_x, r.max_diff, r.ratio));
        }
        out
    }
}

/// Grid of refinement level `level` relative to `base`.
pub fn level_grid(base: &Grid, level: usize) -> Result<Grid> {
    let factor = 1usize << level;
    let h_t = base.h_t() * (0.5f64).powf(REFINEMENT_EXPONENT * level as f64);
    let n_t = (base.horizon / h_t - 1e-9).ceil() as usize;
    Grid::new(base.x_min, base.x_max, base.n_x * factor, n_t, base.horizon)
}

/// Solves on `levels` successively refined grids and reports self-convergence.
pub fn refine_and_estimate(
    market: &ImpactMarket,
    cap: &GammaCap,
    payoff: &Payoff,
    base: &Grid,
    levels: usize,
    opts: &SolveOptions,
) -> Result<RefinementReport> {
    if levels < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 levels, got {levels}")));
    }
    let mut rows = Vec::with_capacity(levels);
    let mut prev: Option<PriceSurface> = None;
    for level in 0..levels {
        let grid = level_grid(base, level)?;
        let (surface, _) = price(market, cap, payoff, &grid, opts)?;
        let (max_diff, ratio) = match &prev {
            None => (f64::NAN, f64::NAN),
            Some(coarse) => {
                let diff = (0..=coarse.grid.n_x)
                    .filter(|&j| grid.in_central_half(coarse.grid.x(j)))
                    .map(|j| (coarse.value(0, j) - surface.value(0, 2 * j)).abs())
                    .fold(0.0, f64::max);
                let last: f64 = rows.last().map(|r: &ConvergenceRow| r.max_diff).unwrap_or(f64::NAN);
                (diff, diff / last)
            }
        };
        rows.push(ConvergenceRow {
            level,
            h_t: grid.h_t(),
            h_x: grid.h_x(),
            max_diff,
            ratio,
        });
        prev = Some(surface);
    }
    Ok(RefinementReport {
        rows,
        finest: prev.expect("levels >= 2"),
    })
}
