//! Backward monotone finite-difference solver for the gamma-constrained
//! pricing equation
//! `min{ -v_t - sigma^2 v_xx / (2 (1 - f v_xx)), gamma_bar - v_xx } = 0`,
//! `v(T, .) = g_hat`.

mod grid;
mod heat;
mod refine;
mod scheme;
mod solver;

pub use grid::Grid;
pub use heat::heat_price_oracle;
pub use refine::{level_grid, refine_and_estimate, ConvergenceRow, RefinementReport, REFINEMENT_EXPONENT};
pub use scheme::{discrete_gamma, node_solve, Clamp, NodeCoeffs, NodeSolution};
pub use solver::{boundary_warning, price, solve_surface, PriceSurface, SolveOptions, TOL_SOLVE};
