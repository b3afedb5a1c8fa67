use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("grid is not strictly increasing at index {index}")]
    NonMonotoneGrid { index: usize },

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("market coefficients invalid: {0}")]
    InvalidMarket(String),

    #[error("gamma cap {gamma_bar} at x = {x} outside [{lower}, {upper}]")]
    CapOutOfRange {
        x: f64,
        gamma_bar: f64,
        lower: f64,
        upper: f64,
    },

    #[error("invalid payoff: {0}")]
    InvalidPayoff(String),

    #[error("face-lift margin too small: concave envelope has an active chord at the {side} extension boundary x = {x}")]
    MarginTooSmall { side: &'static str, x: f64 },

    #[error("index {index} out of range (valid {lo}..={hi})")]
    IndexOutOfRange { index: usize, lo: usize, hi: usize },

    #[error("root bracket failed at t = {t}, x = {x}")]
    RootBracket { t: f64, x: f64 },

    #[error("non-finite {what} at t = {t}, x = {x}")]
    NonFinite { what: &'static str, t: f64, x: f64 },

    #[error("simulation produced NaN at step {step}")]
    SimulationNaN { step: usize },

    #[error("noise length {got} does not match expected {expected}")]
    NoiseLength { expected: usize, got: usize },

    #[error("at least {needed} paths required, got {got}")]
    InsufficientPaths { needed: usize, got: usize },

    #[error("control {name} = {value} exceeds bound {bound} at step {step}")]
    ControlBound {
        name: &'static str,
        value: f64,
        bound: f64,
        step: usize,
    },

    #[error("control denominator 1 - f v_xx = {denominator} below threshold at t = {t}, x = {x} (v_xx = {v_xx})")]
    Denominator {
        t: f64,
        x: f64,
        v_xx: f64,
        denominator: f64,
    },

    #[error("point (t = {t}, x = {x}) lies outside the surface grid")]
    OutsideGrid { t: f64, x: f64 },

    #[error("{exited} of {total} paths left the grid; enlarge the spatial domain")]
    TooManyExits { exited: usize, total: usize },

    #[error("smoothing window {delta} exceeds a quarter of the domain ({limit})")]
    SmoothingTooWide { delta: f64, limit: f64 },
}
