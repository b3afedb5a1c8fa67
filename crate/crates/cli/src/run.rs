use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use impact_hedge::dynamics::{
    convergence_study, path_rng, brownian_increments, simulate_continuous, simulate_resilience, ItoControls,
    StudySetup,
};
use impact_hedge::hedging::{verify_superhedge, HedgeReport, SurfaceControls, SurfaceDerivatives, VerifyOptions};
use impact_hedge::model::{default_margin, face_lift, CoefFn, GammaCap, ImpactMarket, Payoff};
use impact_hedge::pde::{boundary_warning, heat_price_oracle, price, refine_and_estimate, Grid, PriceSurface, SolveOptions};
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, Mode, PayoffSpec};

/// Impact level standing in for a frictionless market in the figure modes.
pub const FRICTIONLESS_PROXY: f64 = 1e-8;

/// Files produced by a run, kept in memory until everything succeeded.
#[derive(Debug, Default)]
pub struct Artifacts {
    pub files: Vec<(String, String)>,
    pub notes: Vec<String>,
}

impl Artifacts {
    fn add(&mut self, name: impl Into<String>, contents: String) {
        self.files.push((name.into(), contents));
    }

    fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }
}

pub struct RunInfo {
    pub mode: Mode,
    pub threads: Option<usize>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn build_market(cfg: &ExperimentConfig) -> Result<ImpactMarket> {
    let m = &cfg.market;
    ImpactMarket::new(m.mu.to_coef(), m.sigma.to_coef(), m.impact.to_coef(), cfg.market_domain())
        .context("building the market from [market]")
}

fn build_cap(cfg: &ExperimentConfig, market: &ImpactMarket, gamma_bar: CoefFn, grid: &Grid) -> Result<GammaCap> {
    GammaCap::new(gamma_bar, cfg.cap.iota, cfg.cap.k_lower(), market, &grid.xs()).context("building the gamma cap from [cap]")
}

fn build_payoff(spec: &PayoffSpec) -> Result<Payoff> {
    spec.to_payoff().context("building the payoff from [payoff]")
}

fn solve_opts() -> SolveOptions {
    SolveOptions::default()
}

struct Priced {
    market: ImpactMarket,
    cap: GammaCap,
    payoff: Payoff,
    surface: PriceSurface,
}

fn price_config(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Priced> {
    let grid = cfg.grid.to_grid().context("building the grid from [grid]")?;
    let market = build_market(cfg)?;
    let cap = build_cap(cfg, &market, cfg.cap.gamma_bar.to_coef(), &grid)?;
    let payoff = build_payoff(&cfg.payoff)?;
    if let Some(w) = boundary_warning(&payoff, &grid) {
        eprintln!("warning: {w}");
        art.note(format!("warning: {w}"));
    }
    let (surface, _) = price(&market, &cap, &payoff, &grid, &solve_opts()).context("solving the pricing scheme")?;
    Ok(Priced { market, cap, payoff, surface })
}

fn price_curve(surface: &PriceSurface) -> String {
    let g = surface.grid;
    let mut out = String::from("x,v,g_hat\n");
    for j in 0..surface.cols() {
        out.push_str(&format!("{},{},{}\n", g.x(j), surface.value(0, j), surface.value(g.n_t, j)));
    }
    out
}

fn facelift(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<()> {
    let grid = cfg.grid.to_grid().context("building the grid from [grid]")?;
    let market = build_market(cfg)?;
    let cap = build_cap(cfg, &market, cfg.cap.gamma_bar.to_coef(), &grid)?;
    let payoff = build_payoff(&cfg.payoff)?;
    let xs = grid.xs();
    let lifted = face_lift(&payoff, &cap, &xs, default_margin(&payoff, &cap, &xs)).context("face-lifting the payoff")?;
    let mut out = String::from("x,g,g_hat,gamma_bar\n");
    for (&x, &gh) in lifted.grid_xs().iter().zip(lifted.on_grid()) {
        out.push_str(&format!("{},{},{},{}\n", x, payoff.value(x), gh, cap.value(x)));
    }
    art.add("facelift.csv", out);
    Ok(())
}

fn price_mode(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<()> {
    let p = price_config(cfg, art)?;
    art.note(format!("clamp violations: {}", p.surface.clamp_violations()));
    art.add("surface.csv", p.surface.to_csv(cfg.grid.row_stride()));
    art.add("price.csv", price_curve(&p.surface));
    Ok(())
}

fn convergence(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<()> {
    let grid = cfg.grid.to_grid().context("building the grid from [grid]")?;
    let market = build_market(cfg)?;
    let payoff = build_payoff(&cfg.payoff)?;
    // The cap is validated on the finest grid, which contains every coarser node.
    let finest = impact_hedge::pde::level_grid(&grid, cfg.grid.levels - 1).context("refining the grid")?;
    let cap = build_cap(cfg, &market, cfg.cap.gamma_bar.to_coef(), &finest)?;
    let report = refine_and_estimate(&market, &cap, &payoff, &grid, cfg.grid.levels, &solve_opts())
        .context("running the refinement study")?;
    art.add("convergence.csv", report.to_csv());
    art.add("price.csv", price_curve(&report.finest));
    Ok(())
}

fn smoothing(cfg: &ExperimentConfig, surface: &PriceSurface) -> f64 {
    cfg.simulation.smoothing.unwrap_or(2.0 * surface.grid.h_x())
}

fn simulate(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<()> {
    let p = price_config(cfg, art)?;
    let s = &cfg.simulation;
    let delta = smoothing(cfg, &p.surface);
    let derivs = SurfaceDerivatives::from_surface(&p.surface, delta).context("differentiating the price surface")?;
    let controls = SurfaceControls {
        derivs: &derivs,
        market: &p.market,
        iota: p.cap.iota,
        rho: s.rho,
        edge: 2.0 * p.surface.grid.h_x(),
    };
    let start = derivs.at(0.0, s.x0).context("reading the surface at x0")?;
    let eps = s.eps[0] * start.v;
    let n = (cfg.grid.horizon / s.dt).round() as usize;
    let mut summary = String::from("path,completed,x_T,v_T,payoff,slack,max_wealth_residual\n");
    for k in 0..s.paths_to_write {
        let mut rng = path_rng(s.seed, k as u64);
        let noise = brownian_increments(&mut rng, n, s.dt);
        let sim = match s.rho {
            Some(rho) => simulate_resilience(&p.market, rho, 0.0, &controls, start.v_x, s.x0, start.v + eps, &noise, s.dt, 0.0),
            None => simulate_continuous(&p.market, &controls, start.v_x, s.x0, start.v + eps, &noise, s.dt, 0.0),
        };
        match sim {
            Ok(path) => {
                let last = path.last();
                let g = p.payoff.value(last.x);
                let resid = path.wealth_residuals(&p.market).iter().fold(0.0f64, |m, r| m.max(r.abs()));
                summary.push_str(&format!("{k},1,{},{},{},{},{}\n", last.x, last.v, g, last.v - g, resid));
                art.add(format!("path_{k}.csv"), path.to_csv());
            }
            Err(e) => {
                summary.push_str(&format!("{k},0,,,,,\n"));
                art.note(format!("path {k} stopped: {e}"));
            }
        }
    }
    art.note(format!("initial capital {} (price {} plus eps {})", start.v + eps, start.v, eps));
    art.add("paths.csv", summary);
    Ok(())
}

fn verify(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<()> {
    let p = price_config(cfg, art)?;
    let s = &cfg.simulation;
    let v0 = p.surface.row_value_at(0, s.x0);
    let mut out = HedgeReport::csv_header() + "\n";
    for (k, &frac) in s.eps.iter().enumerate() {
        let opts = VerifyOptions {
            eps: frac * v0,
            n_paths: s.n_paths,
            dt: s.dt,
            seed: s.seed,
            smoothing: s.smoothing,
            rho: s.rho,
            keep_terminal: s.terminal,
            ..VerifyOptions::default()
        };
        let report = verify_superhedge(&p.surface, &p.market, &p.cap, &p.payoff, s.x0, &opts)
            .with_context(|| format!("verifying the hedge with eps fraction {frac}"))?;
        out.push_str(&report.to_csv_row());
        out.push('\n');
        if s.terminal {
            art.add(format!("terminal_{k}.csv"), report.terminal_csv());
        }
    }
    art.note("eps values are fractions of the price at x0");
    art.add("verify.csv", out);
    Ok(())
}

fn figure(cfg: &ExperimentConfig, art: &mut Artifacts, which: Mode) -> Result<()> {
    let (name, payoff_spec) = match which {
        Mode::Figure1 => ("figure1.csv", PayoffSpec::Butterfly { k1: -1.0, k2: 0.0, k3: 1.0 }),
        _ => ("figure2.csv", PayoffSpec::CallSpread { k1: -1.0, k2: 1.0 }),
    };
    let Some(sigma) = cfg.market.sigma.as_constant() else {
        bail!("market.sigma: figure modes compare against the heat price and need a constant volatility");
    };
    if cfg.market.mu.as_constant() != Some(0.0) {
        bail!("market.mu: figure modes compare against the heat price and need zero drift");
    }
    let grid = cfg.grid.to_grid().context("building the grid from [grid]")?;
    let payoff = build_payoff(&payoff_spec)?;
    let gamma_bar = cfg.cap.gamma_bar.to_coef();

    let impacted = build_market(cfg)?;
    let cap = build_cap(cfg, &impacted, gamma_bar.clone(), &grid)?;
    let (s1, _) = price(&impacted, &cap, &payoff, &grid, &solve_opts()).context("solving with impact")?;

    let proxy = ImpactMarket::new(
        cfg.market.mu.to_coef(),
        cfg.market.sigma.to_coef(),
        CoefFn::Constant(FRICTIONLESS_PROXY),
        cfg.market_domain(),
    )
    .context("building the frictionless proxy market")?;
    let limit = 1.0 / FRICTIONLESS_PROXY - cfg.cap.iota;
    let capped = match gamma_bar {
        CoefFn::Constant(g) => CoefFn::Constant(g.min(limit)),
        other => CoefFn::custom(move |x| other.value(x).min(limit)),
    };
    let cap0 = build_cap(cfg, &proxy, capped, &grid)?;
    let (s0, _) = price(&proxy, &cap0, &payoff, &grid, &solve_opts()).context("solving the frictionless proxy")?;

    let horizon = cfg.grid.horizon;
    let mut out = String::from("x,payoff,heat,v_impact,v_frictionless,diff_impact,diff_frictionless\n");
    for j in 0..=grid.n_x {
        let x = grid.x(j);
        let heat = heat_price_oracle(|z| payoff.value(z), sigma, 0.0, x, horizon)
            .with_context(|| format!("heat price at x = {x}"))?;
        let (a, b) = (s1.value(0, j), s0.value(0, j));
        out.push_str(&format!("{x},{},{heat},{a},{b},{},{}\n", payoff.value(x), a - heat, b - heat));
    }
    art.add(name, out);
    art.note(format!("payoff fixed by the mode: {payoff_spec:?}"));
    art.note(format!(
        "frictionless curve uses f = {FRICTIONLESS_PROXY:e} with gamma_bar capped at 1/f - iota = {limit}"
    ));
    art.note("heat column is the unconstrained, impact-free price of the raw payoff");
    Ok(())
}

fn rate(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<()> {
    let r = &cfg.rate;
    let market = build_market(cfg)?;
    let controls = ItoControls::smooth_default();
    let setup = StudySetup { horizon: r.horizon, x0: r.x0, seed: cfg.simulation.seed, ..StudySetup::default() };
    let study = convergence_study(&market, &controls, &r.n_values, r.n_paths, r.dt_fine(), setup)
        .context("running the strong-rate study")?;
    let mut out = String::from("n,sup_mse,stderr,slope\n");
    for row in &study.rows {
        out.push_str(&format!("{},{},{},{}\n", row.n, row.sup_mse, row.stderr, study.slope));
    }
    art.note(format!("log-log slope {}", study.slope));
    art.add("rate.csv", out);
    Ok(())
}

pub fn execute(cfg: &ExperimentConfig, mode: Mode) -> Result<Artifacts> {
    let mut art = Artifacts::default();
    match mode {
        Mode::Facelift => facelift(cfg, &mut art)?,
        Mode::Price => price_mode(cfg, &mut art)?,
        Mode::Convergence => convergence(cfg, &mut art)?,
        Mode::Simulate => simulate(cfg, &mut art)?,
        Mode::Verify => verify(cfg, &mut art)?,
        Mode::Figure1 | Mode::Figure2 => figure(cfg, &mut art, mode)?,
        Mode::Rate => rate(cfg, &mut art)?,
    }
    Ok(art)
}

pub fn manifest(cfg: &ExperimentConfig, info: &RunInfo, art: &Artifacts) -> String {
    let config = cfg.to_toml();
    let mut out = String::new();
    out.push_str(&format!("impact-hedge {}\n", env!("CARGO_PKG_VERSION")));
    out.push_str(&format!("mode = {}\n", info.mode));
    out.push_str(&format!("seed = {}\n", cfg.simulation.seed));
    out.push_str(&format!("config_sha256 = {}\n", sha256_hex(config.as_bytes())));
    match info.threads {
        Some(n) => out.push_str(&format!("threads = {n}\n")),
        None => out.push_str("threads = default\n"),
    }
    out.push_str("\n[outputs]\n");
    for (name, contents) in &art.files {
        out.push_str(&format!("{name} sha256={}\n", sha256_hex(contents.as_bytes())));
    }
    if !art.notes.is_empty() {
        out.push_str("\n[notes]\n");
        for n in &art.notes {
            out.push_str(n);
            out.push('\n');
        }
    }
    out.push_str("\n[config]\n");
    out.push_str(&config);
    out
}

/// Runs `mode` and writes its CSVs plus `manifest.txt` into `out_dir`.
pub fn run(cfg: &ExperimentConfig, info: &RunInfo, out_dir: &Path) -> Result<Vec<String>> {
    cfg.validate()?;
    let art = execute(cfg, info.mode)?;
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let mut written = Vec::new();
    for (name, contents) in &art.files {
        let path = out_dir.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        written.push(name.clone());
    }
    let path = out_dir.join("manifest.txt");
    fs::write(&path, manifest(cfg, info, &art)).with_context(|| format!("writing {}", path.display()))?;
    written.push("manifest.txt".into());
    Ok(written)
}
