use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use impact_hedge::dynamics::{convergence_study, ItoControls, StudySetup};
use impact_hedge::hedging::{verify_superhedge, VerifyOptions};
use impact_hedge::model::{CoefFn, GammaCap, ImpactMarket, Payoff};
use impact_hedge::pde::{price, Grid, SolveOptions};
use impact_hedge::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn setup() -> (ImpactMarket, GammaCap, Payoff, Grid) {
    let market = ImpactMarket::bachelier(0.2, 0.5).unwrap();
    let grid = Grid::new(-4.0, 4.0, 320, 400, 2.0).unwrap();
    let cap = GammaCap::new(CoefFn::Constant(1.75), 0.1, 17.5, &market, &grid.xs()).unwrap();
    (market, cap, Payoff::butterfly(-1.0, 0.0, 1.0).unwrap(), grid)
}

fn solve(c: &mut Criterion) {
    let (market, cap, payoff, grid) = setup();
    let mut group = c.benchmark_group("solve_surface");
    group.sample_size(10);
    for (name, execution) in MODES {
        let opts = SolveOptions { execution, ..SolveOptions::default() };
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| price(&market, &cap, &payoff, &grid, &opts).unwrap())
        });
    }
    group.finish();
}

fn hedge(c: &mut Criterion) {
    let (market, cap, _, grid) = setup();
    let payoff = Payoff::call_spread(-1.0, 1.0).unwrap();
    let (surface, _) = price(&market, &cap, &payoff, &grid, &SolveOptions::default()).unwrap();
    let mut group = c.benchmark_group("verify_superhedge");
    group.sample_size(10);
    for (name, execution) in MODES {
        let opts = VerifyOptions { n_paths: 500, dt: 2.0 / 500.0, execution, ..VerifyOptions::default() };
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| verify_superhedge(&surface, &market, &cap, &payoff, 0.0, &opts).unwrap())
        });
    }
    group.finish();
}

fn rate(c: &mut Criterion) {
    let market = ImpactMarket::bachelier(0.2, 0.5).unwrap();
    let controls = ItoControls::smooth_default();
    let mut group = c.benchmark_group("convergence_study");
    group.sample_size(10);
    for (name, execution) in MODES {
        let setup = StudySetup { execution, ..StudySetup::default() };
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| convergence_study(&market, &controls, &[8, 16, 32, 64], 200, 1.0 / 1024.0, setup).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, solve, hedge, rate);
criterion_main!(benches);
