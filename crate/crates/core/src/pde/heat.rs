//! Impact-free, unconstrained benchmark: `E[g(x + sigma0 sqrt(T - t) Z)]`.

use crate::{Error, Result};

// Gauss-Kronrod 7/15 nodes on [-1, 1] (non-negative half).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const Z_MAX: f64 = 12.0;
const ABS_TOL: f64 = 1e-13;
const MAX_DEPTH: u32 = 60;

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for k in 0..7 {
        let d = h * XGK[k];
        let s = f(c - d) + f(c + d);
        kronrod += WGK[k] * s;
        if k % 2 == 1 {
            gauss += WG[k / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (val, err) = gk15(f, a, b);
    if err <= tol || depth >= MAX_DEPTH {
        return val;
    }
    let m = 0.5 * (a + b);
    adapt(f, a, m, 0.5 * tol, depth + 1) + adapt(f, m, b, 0.5 * tol, depth + 1)
}

/// Price of `payoff` under `dX = sigma0 dW` with no impact and no gamma cap,
/// by adaptive Gauss-Kronrod quadrature of the Gaussian expectation.
pub fn heat_price_oracle<G>(payoff: G, sigma0: f64, t: f64, x: f64, horizon: f64) -> Result<f64>
where
    G: Fn(f64) -> f64,
{
    if !(sigma0.is_finite() && t.is_finite() && x.is_finite() && horizon.is_finite()) {
        return Err(Error::NonFinite {
            what: "heat oracle input",
            t,
            x,
        });
    }
    if sigma0 < 0.0 || t > horizon {
        return Err(Error::InvalidInput(format!(
            "need sigma0 >= 0 and t <= T, got sigma0 = {sigma0}, t = {t}, T = {horizon}"
        )));
    }
    let tau = horizon - t;
    if tau == 0.0 || sigma0 == 0.0 {
        return Ok(payoff(x));
    }
    let s = sigma0 * tau.sqrt();
    let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    let integrand = |z: f64| payoff(x + s * z) * norm * (-0.5 * z * z).exp();
    // unit panels first so that no kink hides between Kronrod nodes
    let panels = (2.0 * Z_MAX) as usize;
    let tol = ABS_TOL / panels as f64;
    let total = (0..panels)
        .map(|k| {
            let a = -Z_MAX + k as f64;
            adapt(&integrand, a, a + 1.0, tol, 0)
        })
        .sum::<f64>();
    if !total.is_finite() {
        return Err(Error::NonFinite {
            what: "heat price",
            t,
            x,
        });
    }
    Ok(total)
}
