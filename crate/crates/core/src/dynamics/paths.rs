use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::controls::{ControlLaw, Controls};
use crate::model::ImpactMarket;
use crate::{Error, Result};

/// A simulated trajectory. All vectors have the same length.
#[derive(Debug, Clone, PartialEq)]
pub struct SimPath {
    pub times: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub v: Vec<f64>,
    pub a: Vec<f64>,
    /// Impact state; zero when resilience is disabled.
    pub r: Vec<f64>,
    /// Profit `delta^2 f(X-) / 2` of the trade executed at each date, zero
    /// between trades and for the continuous simulators.
    pub profit: Vec<f64>,
}

impl SimPath {
    fn with_capacity(n: usize) -> Self {
        SimPath {
            times: Vec::with_capacity(n),
            x: Vec::with_capacity(n),
            y: Vec::with_capacity(n),
            v: Vec::with_capacity(n),
            a: Vec::with_capacity(n),
            r: Vec::with_capacity(n),
            profit: Vec::with_capacity(n),
        }
    }

    fn push(&mut self, t: f64, s: &StepState, a: f64, profit: f64) {
        self.times.push(t);
        self.x.push(s.x);
        self.y.push(s.y);
        self.v.push(s.v);
        self.a.push(a);
        self.r.push(s.r);
        self.profit.push(profit);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> StepState {
        let k = self.len() - 1;
        StepState { x: self.x[k], y: self.y[k], v: self.v[k], r: self.r[k] }
    }

    /// `V[k+1] - V[k] - Y[k] (X[k+1] - X[k]) - a[k]^2 f(X[k]) dt / 2 - profit[k+1]`
    /// for every step, recomputed from the stored trajectory.
    pub fn wealth_residuals(&self, market: &ImpactMarket) -> Vec<f64> {
        (0..self.len().saturating_sub(1))
            .map(|k| {
                let dt = self.times[k + 1] - self.times[k];
                self.v[k + 1]
                    - self.v[k]
                    - self.y[k] * (self.x[k + 1] - self.x[k])
                    - 0.5 * self.a[k] * self.a[k] * market.f(self.x[k]) * dt
                    - self.profit[k + 1]
            })
            .collect()
    }

    /// CSV with header `t,X,Y,V,a,R`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,X,Y,V,a,R\n");
        for k in 0..self.len() {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                self.times[k], self.x[k], self.y[k], self.v[k], self.a[k], self.r[k]
            ));
        }
        out
    }
}

/// State carried from one Euler step to the next.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepState {
    pub x: f64,
    pub y: f64,
    pub v: f64,
    pub r: f64,
}

impl StepState {
    fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.v.is_finite() && self.r.is_finite()
    }
}

/// Per-path random stream: the master seed selects the generator, the path
/// index selects the stream, so paths are independent of scheduling.
pub fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

/// `n` independent `N(0, dt)` increments.
pub fn brownian_increments(rng: &mut ChaCha8Rng, n: usize, dt: f64) -> Vec<f64> {
    let sd = dt.sqrt();
    (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            sd * z
        })
        .collect()
}

/// One Euler–Maruyama step of the continuous-limit dynamics.
///
/// With `rho = Some(_)` the impact state `R` is integrated and its decay
/// enters the price drift; with `None`, `R` is left untouched.
pub fn euler_step(
    market: &ImpactMarket,
    s: &StepState,
    c: &Controls,
    dt: f64,
    dw: f64,
    rho: Option<f64>,
) -> StepState {
    let f = market.f(s.x);
    let sigma = market.sigma(s.x);
    let fp = market.f_prime(s.x);
    let impact_drift = c.a * sigma * fp;
    let mut drift = market.mu(s.x) + c.b * f + impact_drift;
    if let Some(rho) = rho {
        drift -= rho * s.r;
    }
    let dy = c.b * dt + c.a * dw;
    let dx = drift * dt + (sigma + c.a * f) * dw;
    let r = match rho {
        Some(rho) => s.r + f * dy + (impact_drift - rho * s.r) * dt,
        None => s.r,
    };
    StepState {
        x: s.x + dx,
        y: s.y + dy,
        v: s.v + s.y * dx + 0.5 * c.a * c.a * f * dt,
        r,
    }
}

fn check_bound(c: &Controls, bound: Option<f64>, step: usize) -> Result<()> {
    let Some(k) = bound else { return Ok(()) };
    for (name, value) in [("a", c.a), ("b", c.b), ("alpha", c.alpha), ("beta", c.beta)] {
        if value.abs() > k {
            return Err(Error::ControlBound { name, value, bound: k, step });
        }
    }
    Ok(())
}

/// Discrete rebalancing: the holding is `y_path[i]` on the `i`-th of `n`
/// rebalancing intervals, each split into `substeps` Euler steps of size
/// `dt` for `dX = mu dt + sigma dW`. At the end of interval `i` the position
/// moves by `delta = y_path[i+1] - y_path[i]`, the price jumps by
/// `delta f(X-)` and the wealth gains `delta^2 f(X-) / 2`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_discrete(
    market: &ImpactMarket,
    y_path: &[f64],
    n: usize,
    noise: &[f64],
    substeps: usize,
    dt: f64,
    x0: f64,
    v0: f64,
) -> Result<SimPath> {
    if n == 0 || substeps == 0 || !(dt > 0.0) {
        return Err(Error::InvalidInput("n, substeps and dt must be positive".into()));
    }
    if y_path.len() != n + 1 {
        return Err(Error::InvalidInput(format!(
            "y_path needs n + 1 = {} entries, got {}",
            n + 1,
            y_path.len()
        )));
    }
    if noise.len() != n * substeps {
        return Err(Error::NoiseLength { expected: n * substeps, got: noise.len() });
    }
    let mut path = SimPath::with_capacity(noise.len() + 1);
    let mut s = StepState { x: x0, y: y_path[0], v: v0, r: 0.0 };
    path.push(0.0, &s, 0.0, 0.0);
    for i in 0..n {
        for m in 0..substeps {
            let k = i * substeps + m;
            let dw = noise[k];
            let mut x_new = s.x + market.mu(s.x) * dt + market.sigma(s.x) * dw;
            let mut profit = 0.0;
            let mut y_new = s.y;
            if m + 1 == substeps {
                let delta = y_path[i + 1] - s.y;
                let f_minus = market.f(x_new);
                x_new += delta * f_minus;
                profit = 0.5 * delta * delta * f_minus;
                y_new = y_path[i + 1];
            }
            let next = StepState {
                x: x_new,
                y: y_new,
                v: s.v + s.y * (x_new - s.x) + profit,
                r: 0.0,
            };
            if !next.is_finite() {
                return Err(Error::SimulationNaN { step: k });
            }
            s = next;
            path.push((k + 1) as f64 * dt, &s, 0.0, profit);
        }
    }
    Ok(path)
}

fn simulate_controlled(
    market: &ImpactMarket,
    controls: &dyn ControlLaw,
    start: StepState,
    noise: &[f64],
    dt: f64,
    t0: f64,
    rho: Option<f64>,
) -> Result<SimPath> {
    if !(dt > 0.0) {
        return Err(Error::InvalidInput(format!("dt must be positive, got {dt}")));
    }
    let bound = controls.bound();
    let mut path = SimPath::with_capacity(noise.len() + 1);
    let mut s = start;
    let mut c = controls.initial(t0, &s)?;
    check_bound(&c, bound, 0)?;
    path.push(t0, &s, c.a, 0.0);
    for (k, &dw) in noise.iter().enumerate() {
        let next = euler_step(market, &s, &c, dt, dw, rho);
        if !next.is_finite() {
            return Err(Error::SimulationNaN { step: k });
        }
        s = next;
        let t = t0 + (k + 1) as f64 * dt;
        c = controls.next(t, &s, &c, dt, dw)?;
        check_bound(&c, bound, k + 1)?;
        path.push(t, &s, c.a, 0.0);
    }
    Ok(path)
}

/// Euler–Maruyama scheme for the continuous-limit dynamics, one step per
/// noise increment, starting at time `t0`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_continuous(
    market: &ImpactMarket,
    controls: &dyn ControlLaw,
    y0: f64,
    x0: f64,
    v0: f64,
    noise: &[f64],
    dt: f64,
    t0: f64,
) -> Result<SimPath> {
    let start = StepState { x: x0, y: y0, v: v0, r: 0.0 };
    simulate_controlled(market, controls, start, noise, dt, t0, None)
}

/// Continuous-limit dynamics with an impact state `R` decaying at rate
/// `rho`. With `rho = 0` and `r0 = 0` the output coincides with
/// [`simulate_continuous`] in `X`, `Y`, `V` and `a`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_resilience(
    market: &ImpactMarket,
    rho: f64,
    r0: f64,
    controls: &dyn ControlLaw,
    y0: f64,
    x0: f64,
    v0: f64,
    noise: &[f64],
    dt: f64,
    t0: f64,
) -> Result<SimPath> {
    if !(rho >= 0.0) {
        return Err(Error::InvalidInput(format!("rho must be nonnegative, got {rho}")));
    }
    let start = StepState { x: x0, y: y0, v: v0, r: r0 };
    simulate_controlled(market, controls, start, noise, dt, t0, Some(rho))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::ItoControls;
    use crate::model::CoefFn;

    fn market(f: f64) -> ImpactMarket {
        ImpactMarket::new(CoefFn::Constant(0.0), CoefFn::Constant(0.2), CoefFn::Constant(f), (-5.0, 5.0))
            .unwrap()
    }

    fn noise(n: usize, dt: f64, seed: u64) -> Vec<f64> {
        brownian_increments(&mut path_rng(seed, 0), n, dt)
    }

    #[test]
    fn single_trade_jump_and_profit() {
        let m = market(0.5);
        let path = simulate_discrete(&m, &[0.0, 0.2], 1, &[0.0], 1, 0.1, 1.0, 0.0).unwrap();
        assert!((path.x[1] - 1.1).abs() < 1e-15);
        assert!((path.profit[1] - 0.01).abs() < 1e-15);
        // Position held before the trade was zero.
        assert!((path.v[1] - 0.01).abs() < 1e-15);
        assert_eq!(path.y[1], 0.2);
    }

    #[test]
    fn discrete_without_impact_is_stochastic_integral() {
        let m = ImpactMarket::new(
            CoefFn::Constant(0.0),
            CoefFn::Constant(0.3),
            CoefFn::Constant(1e-300),
            (-5.0, 5.0),
        )
        .unwrap();
        let n = 8;
        let sub = 4;
        let dt = 1.0 / 32.0;
        let w = noise(n * sub, dt, 3);
        let ys: Vec<f64> = (0..=n).map(|i| (i as f64).sin()).collect();
        let p = simulate_discrete(&m, &ys, n, &w, sub, dt, 0.5, 1.0).unwrap();
        let mut x = 0.5;
        let mut v = 1.0;
        for (k, dw) in w.iter().enumerate() {
            let dx = 0.3 * dw;
            v += ys[k / sub] * dx;
            x += dx;
            assert!((p.x[k + 1] - x).abs() < 1e-12);
            assert!((p.v[k + 1] - v).abs() < 1e-12);
        }
    }

    #[test]
    fn discrete_rejects_bad_noise() {
        let m = market(0.5);
        let err = simulate_discrete(&m, &[0.0, 1.0], 1, &[0.0; 3], 2, 0.1, 0.0, 0.0).unwrap_err();
        assert_eq!(err, Error::NoiseLength { expected: 2, got: 3 });
        assert!(simulate_discrete(&m, &[0.0], 1, &[0.0; 2], 2, 0.1, 0.0, 0.0).is_err());
    }

    #[test]
    fn frozen_portfolio() {
        let m = market(0.5);
        let c = ItoControls::constant(0.0, 0.0);
        let w = noise(200, 0.01, 1);
        let p = simulate_continuous(&m, &c, 0.7, 0.1, 2.0, &w, 0.01, 0.0).unwrap();
        assert!(p.y.iter().all(|&y| y == 0.7));
        for k in 0..p.len() {
            assert!((p.v[k] - (2.0 + 0.7 * (p.x[k] - 0.1))).abs() < 1e-12);
        }
    }

    #[test]
    fn liquidity_cost_accrual_per_step() {
        let m = market(0.5);
        let c = ItoControls::smooth_default();
        let w = noise(500, 0.004, 2);
        let p = simulate_continuous(&m, &c, 0.0, 0.0, 0.0, &w, 0.004, 0.0).unwrap();
        let max = p.wealth_residuals(&m).iter().fold(0.0f64, |m, r| m.max(r.abs()));
        assert!(max < 1e-12, "{max}");
    }

    #[test]
    fn increment_variance_matches_effective_volatility() {
        let m = market(0.5);
        let c = ItoControls::constant(0.4, 0.0);
        let n = 100_000;
        let dt = 1e-5;
        let w = noise(n, dt, 7);
        let p = simulate_continuous(&m, &c, 0.0, 0.0, 0.0, &w, dt, 0.0).unwrap();
        let inc: Vec<f64> = p.x.windows(2).map(|w| w[1] - w[0]).collect();
        let mean = inc.iter().sum::<f64>() / n as f64;
        let var = inc.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n - 1) as f64;
        let target = (0.2f64 + 0.4 * 0.5).powi(2) * dt;
        // Standard error of a sample variance of Gaussian data.
        let se = target * (2.0 / (n - 1) as f64).sqrt();
        assert!((var - target).abs() < 3.0 * se, "{var} vs {target}");
    }

    #[test]
    fn resilience_with_zero_rate_is_bitwise_continuous() {
        let m = market(0.5);
        let c = ItoControls::smooth_default();
        let w = noise(400, 0.005, 9);
        let a = simulate_continuous(&m, &c, 0.1, 0.2, 0.3, &w, 0.005, 0.0).unwrap();
        let b = simulate_resilience(&m, 0.0, 0.0, &c, 0.1, 0.2, 0.3, &w, 0.005, 0.0).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.y, b.y);
        assert_eq!(a.v, b.v);
        assert_eq!(a.a, b.a);
        assert_eq!(a.times, b.times);
    }

    #[test]
    fn resilience_state_decays() {
        let m = market(0.5);
        let c = ItoControls::constant(0.0, 0.0);
        let dt = 1e-4;
        let w = vec![0.0; 10_000];
        let p = simulate_resilience(&m, 2.0, 0.5, &c, 0.0, 0.0, 0.0, &w, dt, 0.0).unwrap();
        let r_t = *p.r.last().unwrap();
        assert!((r_t - 0.5 * (-2.0f64).exp()).abs() < 1e-4);
        // dX = -rho R dt, so X_T = -(R_0 - R_T).
        assert!((p.x.last().unwrap() + (0.5 - r_t)).abs() < 1e-12);
    }

    #[test]
    fn control_bound_is_enforced() {
        let m = market(0.5);
        let c = ItoControls::new(0.5, |_, _, _, _| 0.0, |_, _, _, _| 0.0, |_, _, _, _| 100.0, 1.0);
        let err = simulate_continuous(&m, &c, 0.0, 0.0, 0.0, &[0.0; 10], 0.1, 0.0).unwrap_err();
        assert!(matches!(err, Error::ControlBound { name: "beta", step: 0, .. }));
    }

    #[test]
    fn nan_aborts_with_step() {
        let m = market(0.5);
        let c = ItoControls::constant(0.0, 0.0);
        let err = simulate_continuous(&m, &c, 0.0, 0.0, 0.0, &[0.0, f64::NAN], 0.1, 0.0).unwrap_err();
        assert_eq!(err, Error::SimulationNaN { step: 1 });
    }

    #[test]
    fn deterministic_given_seed() {
        assert_eq!(noise(50, 0.1, 11), noise(50, 0.1, 11));
        assert_ne!(noise(50, 0.1, 11), noise(50, 0.1, 12));
        let a = brownian_increments(&mut path_rng(11, 1), 50, 0.1);
        assert_ne!(a, noise(50, 0.1, 11));
    }
}
