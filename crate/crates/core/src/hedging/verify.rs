use super::controls::{gamma_of_a, SurfaceControls};
use super::derivs::SurfaceDerivatives;
use crate::dynamics::{brownian_increments, path_rng, simulate_continuous, simulate_resilience, SimPath};
use crate::exec::Execution;
use crate::model::{GammaCap, ImpactMarket, Payoff};
use crate::pde::PriceSurface;
use crate::{Error, Result};

/// Largest tolerated fraction of paths leaving the grid.
const MAX_EXIT_FRACTION: f64 = 0.2;
/// Relative slack before a step counts as breaking the gamma cap.
const GAMMA_REL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    /// Extra initial wealth on top of `v(0, x0)`.
    pub eps: f64,
    pub n_paths: usize,
    pub dt: f64,
    pub seed: u64,
    /// Mollification window; `None` uses two spatial steps.
    pub smoothing: Option<f64>,
    /// Resilience rate; `None` simulates the permanent-impact dynamics.
    pub rho: Option<f64>,
    pub execution: Execution,
    /// Keep per-path terminal records in the report.
    pub keep_terminal: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            eps: 0.0,
            n_paths: 10_000,
            dt: 1e-3,
            seed: 0,
            smoothing: None,
            rho: None,
            execution: Execution::Parallel,
            keep_terminal: false,
        }
    }
}

/// Terminal state of one simulated path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerminalRecord {
    pub path_id: usize,
    pub x_t: f64,
    pub v_t: f64,
    /// `V_T - g(X_T)`.
    pub slack: f64,
    pub exited: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HedgeReport {
    pub n_paths: usize,
    pub n_exited: usize,
    /// Fraction of the paths that stayed on the grid with
    /// `V_T >= g(X_T) - tol_pay`.
    pub success_rate: f64,
    pub success_stderr: f64,
    /// Quantiles of the shortfall `g(X_T) - V_T`.
    pub shortfall_q50: f64,
    pub shortfall_q95: f64,
    pub shortfall_q99: f64,
    pub mean_slack: f64,
    /// Fraction of (path, step) pairs with `gamma(a) > gamma_bar (1 + 1e-6)`.
    pub gamma_violation_rate: f64,
    /// Fraction of (path, step) pairs with `gamma(a) < -k`.
    pub lower_gamma_rate: f64,
    pub k_lower: f64,
    /// Largest gap between the simulated position and `v_x(t, X_t)`.
    pub max_delta_gap: f64,
    pub mean_delta_gap: f64,
    pub price: f64,
    pub x0: f64,
    pub eps: f64,
    pub dt: f64,
    pub seed: u64,
    pub rho: f64,
    pub smoothing_delta: f64,
    pub tol_pay: f64,
    pub terminal: Vec<TerminalRecord>,
}

const FIELDS: [&str; 22] = [
    "n_paths",
    "n_exited",
    "success_rate",
    "success_stderr",
    "shortfall_q50",
    "shortfall_q95",
    "shortfall_q99",
    "mean_slack",
    "gamma_violation_rate",
    "lower_gamma_rate",
    "k_lower",
    "max_delta_gap",
    "mean_delta_gap",
    "price",
    "x0",
    "eps",
    "dt",
    "seed",
    "rho",
    "smoothing_delta",
    "tol_pay",
    "n_used",
];

impl HedgeReport {
    fn values(&self) -> [String; 22] {
        [
            self.n_paths.to_string(),
            self.n_exited.to_string(),
            self.success_rate.to_string(),
            self.success_stderr.to_string(),
            self.shortfall_q50.to_string(),
            self.shortfall_q95.to_string(),
            self.shortfall_q99.to_string(),
            self.mean_slack.to_string(),
            self.gamma_violation_rate.to_string(),
            self.lower_gamma_rate.to_string(),
            self.k_lower.to_string(),
            self.max_delta_gap.to_string(),
            self.mean_delta_gap.to_string(),
            self.price.to_string(),
            self.x0.to_string(),
            self.eps.to_string(),
            self.dt.to_string(),
            self.seed.to_string(),
            self.rho.to_string(),
            self.smoothing_delta.to_string(),
            self.tol_pay.to_string(),
            (self.n_paths - self.n_exited).to_string(),
        ]
    }

    /// One `key=value` line per field.
    pub fn to_key_values(&self) -> String {
        FIELDS
            .iter()
            .zip(self.values())
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }

    pub fn csv_header() -> String {
        FIELDS.join(",")
    }

    pub fn to_csv_row(&self) -> String {
        self.values().join(",")
    }

    /// CSV with header `path_id,X_T,V_T,slack,exited`; empty body unless
    /// terminal records were kept.
    pub fn terminal_csv(&self) -> String {
        let mut out = String::from("path_id,X_T,V_T,slack,exited\n");
        for r in &self.terminal {
            out.push_str(&format!("{},{},{},{},{}\n", r.path_id, r.x_t, r.v_t, r.slack, r.exited as u8));
        }
        out
    }
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

struct PathOutcome {
    record: TerminalRecord,
    steps: usize,
    gamma_violations: usize,
    lower_violations: usize,
    delta_gap: f64,
}

/// Simulates the verification strategy from `(x0, v_x(0, x0), v(0, x0) + eps)`
/// and checks super-replication of `payoff` at maturity.
///
/// Paths that come within two spatial steps of the grid edges are stopped,
/// flagged and excluded from the success rate; more than 20% of such exits
/// is an error.
pub fn verify_superhedge(
    surface: &PriceSurface,
    market: &ImpactMarket,
    cap: &GammaCap,
    payoff: &Payoff,
    x0: f64,
    opts: &VerifyOptions,
) -> Result<HedgeReport> {
    if !(opts.eps >= 0.0) {
        return Err(Error::InvalidInput(format!("eps must be nonnegative, got {}", opts.eps)));
    }
    if opts.n_paths == 0 || !(opts.dt > 0.0) {
        return Err(Error::InvalidInput("n_paths and dt must be positive".into()));
    }
    let grid = surface.grid;
    let delta = opts.smoothing.unwrap_or(2.0 * grid.h_x());
    let derivs = SurfaceDerivatives::from_surface(surface, delta)?;
    let horizon = grid.horizon;
    let steps = ((horizon / opts.dt).round() as usize).max(1);
    let dt = horizon / steps as f64;

    let d0 = derivs.at(0.0, x0)?;
    let price = d0.v;
    let tol_pay = 1e-4 * (1.0 + price.abs());
    let k_lower = 10.0 * cap.sup_over(&grid.xs());
    let law = SurfaceControls {
        derivs: &derivs,
        market,
        iota: cap.iota,
        rho: opts.rho,
        edge: 2.0 * grid.h_x(),
    };

    let outcomes: Vec<Result<PathOutcome>> = opts.execution.map(opts.n_paths, |p| {
        let noise = brownian_increments(&mut path_rng(opts.seed, p as u64), steps, dt);
        let run: Result<SimPath> = match opts.rho {
            None => simulate_continuous(market, &law, d0.v_x, x0, price + opts.eps, &noise, dt, 0.0),
            Some(rho) => simulate_resilience(market, rho, 0.0, &law, d0.v_x, x0, price + opts.eps, &noise, dt, 0.0),
        };
        let path = match run {
            Ok(path) => path,
            Err(Error::OutsideGrid { .. }) => {
                return Ok(PathOutcome {
                    record: TerminalRecord { path_id: p, x_t: f64::NAN, v_t: f64::NAN, slack: f64::NAN, exited: true },
                    steps: 0,
                    gamma_violations: 0,
                    lower_violations: 0,
                    delta_gap: 0.0,
                });
            }
            Err(e) => return Err(e),
        };
        let mut gamma_violations = 0;
        let mut lower_violations = 0;
        let mut delta_gap: f64 = 0.0;
        for k in 0..path.len() {
            let x = path.x[k];
            let gamma = gamma_of_a(path.a[k], x, market)?;
            if gamma > cap.value(x) * (1.0 + GAMMA_REL_TOL) {
                gamma_violations += 1;
            }
            if gamma < -k_lower {
                lower_violations += 1;
            }
            let lookup = derivs.at(path.times[k].min(horizon), x)?.v_x;
            delta_gap = delta_gap.max((path.y[k] - lookup).abs());
        }
        let last = path.last();
        Ok(PathOutcome {
            record: TerminalRecord {
                path_id: p,
                x_t: last.x,
                v_t: last.v,
                slack: last.v - payoff.value(last.x),
                exited: false,
            },
            steps: path.len(),
            gamma_violations,
            lower_violations,
            delta_gap,
        })
    });
    let outcomes: Vec<PathOutcome> = outcomes.into_iter().collect::<Result<_>>()?;

    let n_exited = outcomes.iter().filter(|o| o.record.exited).count();
    if n_exited as f64 > MAX_EXIT_FRACTION * opts.n_paths as f64 {
        return Err(Error::TooManyExits { exited: n_exited, total: opts.n_paths });
    }
    let kept: Vec<&PathOutcome> = outcomes.iter().filter(|o| !o.record.exited).collect();
    let n_used = kept.len();
    let successes = kept.iter().filter(|o| o.record.slack >= -tol_pay).count();
    let success_rate = if n_used > 0 { successes as f64 / n_used as f64 } else { 0.0 };
    let success_stderr = if n_used > 0 {
        (success_rate * (1.0 - success_rate) / n_used as f64).sqrt()
    } else {
        0.0
    };
    let mut shortfall: Vec<f64> = kept.iter().map(|o| -o.record.slack).collect();
    shortfall.sort_by(f64::total_cmp);
    let mean_slack = -shortfall.iter().sum::<f64>() / n_used.max(1) as f64;
    let total_steps: usize = kept.iter().map(|o| o.steps).sum();
    let rate = |count: usize| if total_steps > 0 { count as f64 / total_steps as f64 } else { 0.0 };

    Ok(HedgeReport {
        n_paths: opts.n_paths,
        n_exited,
        success_rate,
        success_stderr,
        shortfall_q50: quantile(&shortfall, 0.5),
        shortfall_q95: quantile(&shortfall, 0.95),
        shortfall_q99: quantile(&shortfall, 0.99),
        mean_slack,
        gamma_violation_rate: rate(kept.iter().map(|o| o.gamma_violations).sum()),
        lower_gamma_rate: rate(kept.iter().map(|o| o.lower_violations).sum()),
        k_lower,
        max_delta_gap: kept.iter().map(|o| o.delta_gap).fold(0.0, f64::max),
        mean_delta_gap: kept.iter().map(|o| o.delta_gap).sum::<f64>() / n_used.max(1) as f64,
        price,
        x0,
        eps: opts.eps,
        dt,
        seed: opts.seed,
        rho: opts.rho.unwrap_or(0.0),
        smoothing_delta: delta,
        tol_pay,
        terminal: if opts.keep_terminal { outcomes.iter().map(|o| o.record).collect() } else { Vec::new() },
    })
}
