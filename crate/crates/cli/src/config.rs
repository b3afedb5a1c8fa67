//! Experiment configuration: TOML with one section per concern. Every field
//! has a default, so an empty file is a valid configuration.

use std::fmt;

use impact_hedge::model::{CoefFn, Payoff};
use impact_hedge::pde::{Grid, REFINEMENT_EXPONENT};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Facelift,
    Price,
    Convergence,
    Simulate,
    Verify,
    Figure1,
    Figure2,
    Rate,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Mode::Facelift => "facelift",
            Mode::Price => "price",
            Mode::Convergence => "convergence",
            Mode::Simulate => "simulate",
            Mode::Verify => "verify",
            Mode::Figure1 => "figure1",
            Mode::Figure2 => "figure2",
            Mode::Rate => "rate",
        };
        f.write_str(s)
    }
}

/// A coefficient given either as a bare number or as a named function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoefSpec {
    Value(f64),
    Function(NamedFn),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NamedFn {
    Constant { value: f64 },
    /// `clamp(intercept + slope * x, lower, upper)`.
    AffineSaturated { intercept: f64, slope: f64, lower: f64, upper: f64 },
}

impl CoefSpec {
    pub fn to_coef(&self) -> CoefFn {
        match *self {
            CoefSpec::Value(value) | CoefSpec::Function(NamedFn::Constant { value }) => CoefFn::Constant(value),
            CoefSpec::Function(NamedFn::AffineSaturated { intercept, slope, lower, upper }) => {
                CoefFn::AffineSaturated { intercept, slope, lower, upper }
            }
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match *self {
            CoefSpec::Value(v) | CoefSpec::Function(NamedFn::Constant { value: v }) => Some(v),
            _ => None,
        }
    }

    fn check(&self, field: &str, errs: &mut Vec<String>) {
        match *self {
            CoefSpec::Value(v) | CoefSpec::Function(NamedFn::Constant { value: v }) => finite(field, v, errs),
            CoefSpec::Function(NamedFn::AffineSaturated { intercept, slope, lower, upper }) => {
                finite(&format!("{field}.intercept"), intercept, errs);
                finite(&format!("{field}.slope"), slope, errs);
                finite(&format!("{field}.lower"), lower, errs);
                finite(&format!("{field}.upper"), upper, errs);
                if !(lower <= upper) {
                    errs.push(format!("{field}: lower ({lower}) must not exceed upper ({upper})"));
                }
            }
        }
    }

    /// Smallest value the coefficient can take.
    fn min_value(&self) -> f64 {
        match *self {
            CoefSpec::Value(v) | CoefSpec::Function(NamedFn::Constant { value: v }) => v,
            CoefSpec::Function(NamedFn::AffineSaturated { lower, .. }) => lower,
        }
    }

    /// Largest value the coefficient can take.
    fn max_value(&self) -> f64 {
        match *self {
            CoefSpec::Value(v) | CoefSpec::Function(NamedFn::Constant { value: v }) => v,
            CoefSpec::Function(NamedFn::AffineSaturated { upper, .. }) => upper,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MarketSpec {
    pub mu: CoefSpec,
    pub sigma: CoefSpec,
    /// The impact function `f`.
    pub impact: CoefSpec,
    /// Interval on which the coefficients are validated; defaults to the grid.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub domain: Option<[f64; 2]>,
}

impl Default for MarketSpec {
    fn default() -> Self {
        MarketSpec {
            mu: CoefSpec::Value(0.0),
            sigma: CoefSpec::Value(0.2),
            impact: CoefSpec::Value(0.5),
            domain: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CapSpec {
    pub gamma_bar: CoefSpec,
    pub iota: f64,
    /// Lower gamma bound used by the verification diagnostics; defaults to
    /// ten times the largest cap.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_lower: Option<f64>,
}

impl Default for CapSpec {
    fn default() -> Self {
        CapSpec { gamma_bar: CoefSpec::Value(1.75), iota: 0.1, k_lower: None }
    }
}

impl CapSpec {
    pub fn k_lower(&self) -> f64 {
        self.k_lower.unwrap_or(10.0 * self.gamma_bar.max_value())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PayoffSpec {
    CallSpread { k1: f64, k2: f64 },
    Butterfly { k1: f64, k2: f64, k3: f64 },
    Digital { strike: f64 },
    Affine { slope: f64, intercept: f64 },
    PiecewiseLinear { knots: Vec<[f64; 2]> },
}

impl Default for PayoffSpec {
    fn default() -> Self {
        PayoffSpec::CallSpread { k1: -1.0, k2: 1.0 }
    }
}

impl PayoffSpec {
    pub fn to_payoff(&self) -> impact_hedge::Result<Payoff> {
        use impact_hedge::model::PayoffKind;
        match self {
            PayoffSpec::CallSpread { k1, k2 } => Payoff::call_spread(*k1, *k2),
            PayoffSpec::Butterfly { k1, k2, k3 } => Payoff::butterfly(*k1, *k2, *k3),
            PayoffSpec::Digital { strike } => Payoff::digital(*strike),
            PayoffSpec::Affine { slope, intercept } => Payoff::affine(*slope, *intercept),
            PayoffSpec::PiecewiseLinear { knots } => Payoff::new(PayoffKind::PiecewiseLinear {
                knots: knots.iter().map(|k| (k[0], k[1])).collect(),
            }),
        }
    }

    fn numbers(&self) -> Vec<(String, f64)> {
        match self {
            PayoffSpec::CallSpread { k1, k2 } => vec![("k1".into(), *k1), ("k2".into(), *k2)],
            PayoffSpec::Butterfly { k1, k2, k3 } => {
                vec![("k1".into(), *k1), ("k2".into(), *k2), ("k3".into(), *k3)]
            }
            PayoffSpec::Digital { strike } => vec![("strike".into(), *strike)],
            PayoffSpec::Affine { slope, intercept } => {
                vec![("slope".into(), *slope), ("intercept".into(), *intercept)]
            }
            PayoffSpec::PiecewiseLinear { knots } => knots
                .iter()
                .enumerate()
                .flat_map(|(i, k)| [(format!("knots[{i}][0]"), k[0]), (format!("knots[{i}][1]"), k[1])])
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub n_x: usize,
    /// Number of time steps; defaults to `ceil(T / h_x^2.5)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_t: Option<usize>,
    pub horizon: f64,
    /// Refinement levels used by `convergence`.
    pub levels: usize,
    /// Write every `row_stride`-th time row of a surface; defaults to about
    /// 100 rows.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub row_stride: Option<usize>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { x_min: -4.0, x_max: 4.0, n_x: 160, n_t: None, horizon: 2.0, levels: 3, row_stride: None }
    }
}

impl GridSpec {
    pub fn n_t(&self) -> usize {
        self.n_t.unwrap_or_else(|| {
            let h = (self.x_max - self.x_min) / self.n_x as f64;
            (self.horizon / h.powf(REFINEMENT_EXPONENT)).ceil() as usize
        })
    }

    pub fn row_stride(&self) -> usize {
        self.row_stride.unwrap_or_else(|| (self.n_t() / 100).max(1))
    }

    pub fn to_grid(&self) -> impact_hedge::Result<Grid> {
        Grid::new(self.x_min, self.x_max, self.n_x, self.n_t(), self.horizon)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSpec {
    pub n_paths: usize,
    pub dt: f64,
    pub seed: u64,
    /// Extra initial capital as fractions of the price at `x0`.
    pub eps: Vec<f64>,
    pub x0: f64,
    /// Resilience rate; absent means permanent impact.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    /// Mollification window; defaults to two spatial steps.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub smoothing: Option<f64>,
    /// Number of paths written by `simulate`.
    pub paths_to_write: usize,
    /// Write per-path terminal records in `verify`.
    pub terminal: bool,
}

impl Default for SimulationSpec {
    fn default() -> Self {
        SimulationSpec {
            n_paths: 10_000,
            dt: 1e-3,
            seed: 0,
            eps: vec![0.0, 0.01, 0.02, 0.05],
            x0: 0.0,
            rho: None,
            smoothing: None,
            paths_to_write: 5,
            terminal: false,
        }
    }
}

/// Strong-rate study of the discrete simulator against its continuous limit
/// under smooth Ito controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RateSpec {
    pub n_values: Vec<usize>,
    pub n_paths: usize,
    pub horizon: f64,
    /// Step of the reference simulation; defaults to `horizon / (16 max n)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt_fine: Option<f64>,
    pub x0: f64,
}

impl Default for RateSpec {
    fn default() -> Self {
        RateSpec { n_values: vec![16, 32, 64, 128, 256, 512, 1024], n_paths: 1000, horizon: 1.0, dt_fine: None, x0: 0.0 }
    }
}

impl RateSpec {
    pub fn dt_fine(&self) -> f64 {
        self.dt_fine.unwrap_or_else(|| {
            let n_max = self.n_values.iter().copied().max().unwrap_or(1);
            self.horizon / (16 * n_max) as f64
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    pub market: MarketSpec,
    pub cap: CapSpec,
    pub payoff: PayoffSpec,
    pub grid: GridSpec,
    pub simulation: SimulationSpec,
    pub rate: RateSpec,
}

/// All field-level problems found in a configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub Vec<String>);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid configuration:")?;
        for e in &self.0 {
            writeln!(f, "  {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

fn finite(field: &str, v: f64, errs: &mut Vec<String>) {
    if !v.is_finite() {
        errs.push(format!("{field}: must be finite (got {v})"));
    }
}

fn positive(field: &str, v: f64, errs: &mut Vec<String>) {
    if !(v > 0.0 && v.is_finite()) {
        errs.push(format!("{field}: must be positive and finite (got {v})"));
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn market_domain(&self) -> (f64, f64) {
        match self.market.domain {
            Some([a, b]) => (a, b),
            None => (self.grid.x_min, self.grid.x_max),
        }
    }

    /// Field-level checks that do not need the numerical library. Conditions
    /// coupling the cap to the market are checked when the cap is built.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errs = Vec::new();
        let m = &self.market;
        m.mu.check("market.mu", &mut errs);
        m.sigma.check("market.sigma", &mut errs);
        m.impact.check("market.impact", &mut errs);
        if m.sigma.min_value() <= 0.0 {
            errs.push("market.sigma: must be positive everywhere".into());
        }
        if m.impact.min_value() <= 0.0 {
            errs.push("market.impact: must be positive everywhere".into());
        }
        if let Some([a, b]) = m.domain {
            finite("market.domain[0]", a, &mut errs);
            finite("market.domain[1]", b, &mut errs);
            if !(a < b) {
                errs.push(format!("market.domain: lower end {a} must be below upper end {b}"));
            }
        }

        let c = &self.cap;
        c.gamma_bar.check("cap.gamma_bar", &mut errs);
        positive("cap.iota", c.iota, &mut errs);
        if c.gamma_bar.min_value() < c.iota {
            errs.push(format!("cap.gamma_bar: must be at least iota = {}", c.iota));
        }
        if let Some(k) = c.k_lower {
            if !(k >= 0.0 && k.is_finite()) {
                errs.push(format!("cap.k_lower: must be nonnegative and finite (got {k})"));
            }
        }
        let f_max = m.impact.max_value();
        let limit = 1.0 / f_max - c.iota;
        if f_max > 0.0 && c.gamma_bar.max_value() > limit {
            errs.push(format!(
                "cap.gamma_bar: must not exceed 1/f - iota = {limit} (largest f is {f_max})"
            ));
        }

        for (name, v) in self.payoff.numbers() {
            finite(&format!("payoff.{name}"), v, &mut errs);
        }

        let g = &self.grid;
        finite("grid.x_min", g.x_min, &mut errs);
        finite("grid.x_max", g.x_max, &mut errs);
        if !(g.x_min < g.x_max) {
            errs.push(format!("grid.x_max: must exceed x_min (got {} <= {})", g.x_max, g.x_min));
        }
        if g.n_x < 4 {
            errs.push(format!("grid.n_x: must be at least 4 (got {})", g.n_x));
        }
        if g.n_t == Some(0) {
            errs.push("grid.n_t: must be positive".into());
        }
        positive("grid.horizon", g.horizon, &mut errs);
        if g.levels < 2 {
            errs.push(format!("grid.levels: must be at least 2 (got {})", g.levels));
        }
        if g.row_stride == Some(0) {
            errs.push("grid.row_stride: must be positive".into());
        }

        let s = &self.simulation;
        if s.n_paths == 0 {
            errs.push("simulation.n_paths: must be positive".into());
        }
        positive("simulation.dt", s.dt, &mut errs);
        if s.dt > 0.0 && g.horizon > 0.0 {
            let steps = g.horizon / s.dt;
            if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
                errs.push(format!("simulation.dt: must divide grid.horizon = {} (got {})", g.horizon, s.dt));
            }
        }
        if s.eps.is_empty() {
            errs.push("simulation.eps: needs at least one value".into());
        }
        for (i, &e) in s.eps.iter().enumerate() {
            if !(e >= 0.0 && e.is_finite()) {
                errs.push(format!("simulation.eps[{i}]: must be nonnegative and finite (got {e})"));
            }
        }
        finite("simulation.x0", s.x0, &mut errs);
        if !(s.x0 > g.x_min && s.x0 < g.x_max) {
            errs.push(format!("simulation.x0: must lie inside the grid (got {})", s.x0));
        }
        if let Some(rho) = s.rho {
            if !(rho >= 0.0 && rho.is_finite()) {
                errs.push(format!("simulation.rho: must be nonnegative and finite (got {rho})"));
            }
        }
        if let Some(d) = s.smoothing {
            if !(d >= 0.0 && d.is_finite()) {
                errs.push(format!("simulation.smoothing: must be nonnegative and finite (got {d})"));
            }
        }

        let r = &self.rate;
        if r.n_values.len() < 2 {
            errs.push("rate.n_values: needs at least two values".into());
        }
        if r.n_values.windows(2).any(|w| w[1] <= w[0]) || r.n_values.first() == Some(&0) {
            errs.push("rate.n_values: must be positive and strictly increasing".into());
        }
        positive("rate.horizon", r.horizon, &mut errs);
        if let Some(d) = r.dt_fine {
            positive("rate.dt_fine", d, &mut errs);
        }
        finite("rate.x0", r.x0, &mut errs);

        if errs.is_empty() {
            Ok(())
        } else {
            Err(ConfigError(errs))
        }
    }
}
