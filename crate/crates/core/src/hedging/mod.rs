//! Verification hedging from a numerical price surface.
//!
//! The surface is (optionally) mollified, its derivatives are tabulated on
//! the grid, and the controls
//!
//! ```text
//! a = sigma v_xx / (1 - f v_xx)
//! b = (v_tx + v_xx (mu + a sigma f') + v_xxx (sigma + a f)^2 / 2) / (1 - f v_xx)
//! ```
//!
//! keep the position `Y` on `v_x(t, X)`. Simulating them from the initial
//! wealth `v(0, x0) + eps` must super-replicate the payoff.

mod controls;
mod derivs;
mod verify;

pub use controls::{controls_from_surface, gamma_of_a, SurfaceControls, DENOMINATOR_TOL};
pub use derivs::{mollify_surface, NodeDerivatives, SurfaceDerivatives};
pub use verify::{verify_superhedge, HedgeReport, TerminalRecord, VerifyOptions};
