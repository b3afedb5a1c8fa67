use super::controls::ControlLaw;
use super::paths::{brownian_increments, path_rng, simulate_continuous, simulate_discrete};
use crate::exec::Execution;
use crate::model::ImpactMarket;
use crate::{Error, Result};

/// Minimum number of paths accepted by [`convergence_study`].
pub const MIN_PATHS: usize = 100;

/// One line of the convergence table.
#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub n: usize,
    /// Max over the comparison mesh of the estimated `E|Z^n - Z|^2`.
    pub sup_mse: f64,
    /// Standard error of the estimate at the maximizing mesh point.
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    /// Least-squares slope of `ln sup_mse` against `ln n`.
    pub slope: f64,
    pub rows: Vec<RateRow>,
}

impl ConvergenceStudy {
    /// CSV with header `n,sup_mse,stderr`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,sup_mse,stderr\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{}\n", r.n, r.sup_mse, r.stderr));
        }
        out
    }
}

/// Setup shared by every path of a convergence study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudySetup {
    pub horizon: f64,
    pub x0: f64,
    pub y0: f64,
    pub v0: f64,
    pub seed: u64,
    pub execution: Execution,
}

impl Default for StudySetup {
    fn default() -> Self {
        StudySetup { horizon: 1.0, x0: 0.0, y0: 0.0, v0: 0.0, seed: 0, execution: Execution::Parallel }
    }
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Estimates `sup_t E|Z^n_t - Z_t|^2` for each `n` by coupling
/// [`simulate_discrete`] with [`simulate_continuous`] on shared noise.
///
/// Each path draws `T / dt_fine` increments once. The continuous path is
/// simulated on the fine mesh; for every `n` the discrete path holds the
/// continuous `Y` sampled at the rebalancing dates and consumes the same
/// increments. Errors are compared at the rebalancing dates and the
/// midpoints between them.
pub fn convergence_study(
    market: &ImpactMarket,
    controls: &dyn ControlLaw,
    n_values: &[usize],
    n_paths: usize,
    dt_fine: f64,
    setup: StudySetup,
) -> Result<ConvergenceStudy> {
    if n_paths < MIN_PATHS {
        return Err(Error::InsufficientPaths { needed: MIN_PATHS, got: n_paths });
    }
    if n_values.len() < 2 || n_values[0] == 0 || n_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("n_values must be at least two increasing positive integers".into()));
    }
    let t = setup.horizon;
    let steps_f = t / dt_fine;
    let steps = steps_f.round() as usize;
    if !(dt_fine > 0.0) || steps == 0 || (steps_f - steps as f64).abs() > 1e-9 * steps_f {
        return Err(Error::InvalidInput(format!("dt_fine = {dt_fine} must divide the horizon {t}")));
    }
    let n_max = *n_values.last().unwrap();
    if steps < 16 * n_max {
        return Err(Error::InvalidInput(format!(
            "dt_fine = {dt_fine} must be at most (T / n_max) / 16 = {}",
            t / n_max as f64 / 16.0
        )));
    }
    for &n in n_values {
        if !steps.is_multiple_of(n) {
            return Err(Error::InvalidInput(format!("n = {n} does not divide {steps} fine steps")));
        }
    }
    let dt = t / steps as f64;

    // Per path, per n: squared errors at each comparison index.
    let per_path: Vec<Result<Vec<Vec<f64>>>> = setup.execution.map(n_paths, |p| {
        let noise = brownian_increments(&mut path_rng(setup.seed, p as u64), steps, dt);
        let cont = simulate_continuous(market, controls, setup.y0, setup.x0, setup.v0, &noise, dt, 0.0)?;
        n_values
            .iter()
            .map(|&n| {
                let sub = steps / n;
                let y_path: Vec<f64> = (0..=n).map(|i| cont.y[i * sub]).collect();
                let disc = simulate_discrete(market, &y_path, n, &noise, sub, dt, setup.x0, setup.v0)?;
                Ok(comparison_indices(n, sub)
                    .map(|k| {
                        let dx = disc.x[k] - cont.x[k];
                        let dy = disc.y[k] - cont.y[k];
                        let dv = disc.v[k] - cont.v[k];
                        dx * dx + dy * dy + dv * dv
                    })
                    .collect())
            })
            .collect()
    });
    let per_path: Vec<Vec<Vec<f64>>> = per_path.into_iter().collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(n_values.len());
    for (q, &n) in n_values.iter().enumerate() {
        let m = per_path[0][q].len();
        let mut best = RateRow { n, sup_mse: f64::NEG_INFINITY, stderr: 0.0 };
        for k in 0..m {
            let mean = per_path.iter().map(|p| p[q][k]).sum::<f64>() / n_paths as f64;
            if mean > best.sup_mse {
                let var = per_path.iter().map(|p| (p[q][k] - mean).powi(2)).sum::<f64>()
                    / (n_paths - 1) as f64;
                best.sup_mse = mean;
                best.stderr = (var / n_paths as f64).sqrt();
            }
        }
        rows.push(best);
    }
    let lx: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let ly: Vec<f64> = rows.iter().map(|r| r.sup_mse.ln()).collect();
    Ok(ConvergenceStudy { slope: slope(&lx, &ly), rows })
}

/// Rebalancing dates and midpoints, as fine-mesh indices.
fn comparison_indices(n: usize, sub: usize) -> impl Iterator<Item = usize> {
    (0..n).flat_map(move |i| [i * sub, i * sub + sub / 2]).chain(std::iter::once(n * sub))
}
