use super::grid::Grid;
use super::scheme::{node_solve, Clamp, NodeCoeffs, NodeSolution};
use crate::exec::Execution;
use crate::model::{
    default_margin, face_lift, growth_bounds, FaceLiftedPayoff, GammaCap, GrowthBounds,
    ImpactMarket, Payoff,
};
use crate::{Error, Result};

/// Absolute tolerance on node residuals used by the surface invariants.
pub const TOL_SOLVE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Relative step tolerance of the per-node root finder.
    pub root_tol: f64,
    pub execution: Execution,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            root_tol: 1e-12,
            execution: Execution::Parallel,
        }
    }
}

/// Grid solution of the scheme with per-node diagnostics. All node arrays are
/// row-major with `n_x + 1` columns; row `i` is time `t_i`.
#[derive(Debug, Clone)]
pub struct PriceSurface {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub w_low: f64,
    /// Upper clamp at each spatial node.
    pub w_high: Vec<f64>,
    pub clamp: Vec<Clamp>,
    /// Gamma cap active: the constraint branch solved the node, or, on the
    /// terminal row, the face-lift raised the payoff there.
    pub binding: Vec<bool>,
    pub res_l1: Vec<f64>,
    pub res_l2: Vec<f64>,
}

impl PriceSurface {
    #[inline]
    pub fn cols(&self) -> usize {
        self.grid.n_x + 1
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.cols() + j
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[self.index(i, j)]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.cols();
        &self.values[i * c..(i + 1) * c]
    }

    /// Linear interpolation of row `i` in `x`.
    pub fn row_value_at(&self, i: usize, x: f64) -> f64 {
        let g = &self.grid;
        let s = ((x - g.x_min) / g.h_x()).clamp(0.0, g.n_x as f64);
        let j = (s.floor() as usize).min(g.n_x - 1);
        let w = s - j as f64;
        let row = self.row(i);
        row[j] + w * (row[j + 1] - row[j])
    }

    /// Row-wise second differences `(v[j+1] + v[j-1] - 2 v[j]) / h_x^2`.
    pub fn row_second_differences(&self, i: usize) -> Vec<f64> {
        let row = self.row(i);
        let inv = 1.0 / (self.grid.h_x() * self.grid.h_x());
        (1..self.grid.n_x)
            .map(|j| (row[j + 1] + row[j - 1] - 2.0 * row[j]) * inv)
            .collect()
    }

    /// Nodes where the clamp bounds fail (should be none).
    pub fn clamp_violations(&self) -> usize {
        let c = self.cols();
        self.values
            .iter()
            .enumerate()
            .filter(|(k, &v)| v < self.w_low || v > self.w_high[k % c])
            .count()
    }

    /// CSV with header `t,x,v,clamped,res_L1,res_L2`, writing every
    /// `row_stride`-th time row (the terminal row is always included).
    pub fn to_csv(&self, row_stride: usize) -> String {
        let stride = row_stride.max(1);
        let mut out = String::from("t,x,v,clamped,res_L1,res_L2\n");
        let n_t = self.grid.n_t;
        for i in (0..=n_t).filter(|i| i % stride == 0 || *i == n_t) {
            for j in 0..self.cols() {
                let k = self.index(i, j);
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    self.grid.t(i),
                    self.grid.x(j),
                    self.values[k],
                    self.clamp[k] as u8,
                    self.res_l1[k],
                    self.res_l2[k]
                ));
            }
        }
        out
    }
}

/// Solves the scheme backward from `g_hat`, with boundary columns frozen at
/// `g_hat(x_min)` and `g_hat(x_max)`.
pub fn solve_surface(
    market: &ImpactMarket,
    cap: &GammaCap,
    lifted: &FaceLiftedPayoff,
    bounds: &GrowthBounds,
    grid: &Grid,
    opts: &SolveOptions,
) -> Result<PriceSurface> {
    let cols = grid.n_x + 1;
    let rows = grid.n_t + 1;
    let xs = grid.xs();
    let (h_t, h_x) = (grid.h_t(), grid.h_x());
    let w_high: Vec<f64> = xs.iter().map(|&x| bounds.w_high(0.0, x)).collect();
    let base: Vec<NodeCoeffs> = xs
        .iter()
        .zip(&w_high)
        .map(|(&x, &wh)| NodeCoeffs {
            t: 0.0,
            x,
            sigma: market.sigma(x),
            f: market.f(x),
            gamma_bar: cap.value(x),
            h_t,
            h_x,
            w_low: bounds.w_low,
            w_high: wh,
        })
        .collect();

    let mut values = vec![0.0; rows * cols];
    let mut clamp = vec![Clamp::None; rows * cols];
    let mut binding = vec![false; rows * cols];
    let mut res_l1 = vec![0.0; rows * cols];
    let mut res_l2 = vec![0.0; rows * cols];

    let terminal: Vec<f64> = xs.iter().map(|&x| lifted.value_at(x)).collect();
    if terminal.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "terminal value",
            t: grid.horizon,
            x: f64::NAN,
        });
    }
    values[(rows - 1) * cols..].copy_from_slice(&terminal);
    // At maturity the cap acts through the face-lift: flag nodes it raised.
    if lifted.grid_len == cols {
        let g = &lifted.g[lifted.grid_start..lifted.grid_start + cols];
        for j in 0..cols {
            let tol = 1e-12 * (1.0 + g[j].abs());
            binding[(rows - 1) * cols + j] = terminal[j] > g[j] + tol;
        }
    }
    let (left, right) = (terminal[0], terminal[cols - 1]);

    let mut solved: Vec<Result<NodeSolution>> = vec![Ok(NodeSolution::default()); cols - 2];
    for i in (0..grid.n_t).rev() {
        let t = grid.t(i);
        {
            let next = &values[(i + 1) * cols..(i + 2) * cols];
            opts.execution.fill(&mut solved, |k| {
                let j = k + 1;
                let mut c = base[j];
                c.t = t;
                node_solve(next, j, &c, opts.root_tol)
            });
        }
        let off = i * cols;
        values[off] = left;
        values[off + cols - 1] = right;
        for (k, r) in solved.iter().enumerate() {
            let sol = r.clone()?;
            let idx = off + k + 1;
            values[idx] = sol.y;
            clamp[idx] = sol.clamp;
            binding[idx] = sol.binding;
            res_l1[idx] = sol.res_l1;
            res_l2[idx] = sol.res_l2;
        }
    }

    Ok(PriceSurface {
        grid: *grid,
        values,
        w_low: bounds.w_low,
        w_high,
        clamp,
        binding,
        res_l1,
        res_l2,
    })
}

/// Face-lift, clamp bounds and backward solve in one call.
pub fn price(
    market: &ImpactMarket,
    cap: &GammaCap,
    payoff: &Payoff,
    grid: &Grid,
    opts: &SolveOptions,
) -> Result<(PriceSurface, FaceLiftedPayoff)> {
    let xs = grid.xs();
    cap.validate(market, &xs)?;
    let lifted = face_lift(payoff, cap, &xs, default_margin(payoff, cap, &xs))?;
    let bounds = growth_bounds(payoff, cap, market, grid.horizon, &xs)?;
    let surface = solve_surface(market, cap, &lifted, &bounds, grid, opts)?;
    Ok((surface, lifted))
}

/// Warns when the payoff's breakpoints come within 20% of the domain width
/// of either boundary, where the frozen boundary values distort the price.
pub fn boundary_warning(payoff: &Payoff, grid: &Grid) -> Option<String> {
    let width = grid.x_max - grid.x_min;
    let (lo, hi) = (grid.x_min + 0.2 * width, grid.x_max - 0.2 * width);
    let bps = payoff.breakpoints();
    let near: Vec<f64> = bps.into_iter().filter(|&b| b < lo || b > hi).collect();
    if near.is_empty() {
        None
    } else {
        Some(format!(
            "payoff breakpoints {near:?} lie within 20% of the boundary of [{}, {}]; widen the grid",
            grid.x_min, grid.x_max
        ))
    }
}
