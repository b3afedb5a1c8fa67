mod common;

use impact_hedge::dynamics::{
    brownian_increments, path_rng, simulate_continuous, simulate_discrete, simulate_resilience, ItoControls,
};
use impact_hedge::model::{
    concave_envelope, default_margin, face_lift, CoefFn, GammaCap, ImpactMarket, Payoff, PayoffKind,
};
use impact_hedge::pde::{node_solve, Clamp, NodeCoeffs};
use proptest::prelude::*;

fn coeffs() -> impl Strategy<Value = NodeCoeffs> {
    (0.05..0.6f64, 0.01..1.0f64, 0.0..1.0f64, 1e-4..0.05f64, 0.01..0.3f64).prop_map(|(sigma, f, u, h_t, h_x)| {
        let iota = 0.05;
        NodeCoeffs {
            t: 0.0,
            x: 0.0,
            sigma,
            f,
            gamma_bar: iota + u * (1.0 / f - 2.0 * iota),
            h_t,
            h_x,
            w_low: f64::NEG_INFINITY,
            w_high: f64::INFINITY,
        }
    })
}

fn sorted_points(max: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    prop::collection::vec((-5.0..5.0f64, -3.0..3.0f64), 2..max).prop_filter_map("need two distinct xs", |mut pts| {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        pts.dedup_by(|a, b| a.0 == b.0);
        (pts.len() >= 2).then(|| pts.into_iter().unzip())
    })
}

fn grid(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn envelope_matches_chord_oracle((xs, ys) in sorted_points(120)) {
        let got = concave_envelope(&xs, &ys).unwrap();
        let want = common::chord_envelope(&xs, &ys);
        for (g, w) in got.iter().zip(&want) {
            prop_assert!((g - w).abs() <= 1e-12, "{g} vs {w}");
        }
    }

    #[test]
    fn envelope_dominates_and_is_concave((xs, ys) in sorted_points(120)) {
        let env = concave_envelope(&xs, &ys).unwrap();
        for k in 0..xs.len() {
            prop_assert!(env[k] >= ys[k] - 1e-12);
        }
        for k in 1..xs.len() - 1 {
            let s1 = (env[k] - env[k - 1]) / (xs[k] - xs[k - 1]);
            let s2 = (env[k + 1] - env[k]) / (xs[k + 1] - xs[k]);
            prop_assert!(s2 <= s1 + 1e-9 * (1.0 + s1.abs()));
        }
    }

    #[test]
    fn node_solve_is_monotone(
        c in coeffs(),
        phi in prop::array::uniform3(-1.0..2.0f64),
        bump in prop::array::uniform3(0.0..0.5f64),
        lo in -2.0..0.0f64,
        hi in 1.0..3.0f64,
    ) {
        let c = NodeCoeffs { w_low: lo, w_high: hi, ..c };
        let psi: Vec<f64> = phi.iter().zip(bump).map(|(p, b)| p + b).collect();
        let a = node_solve(&phi, 1, &c, 1e-15).unwrap().y;
        let b = node_solve(&psi, 1, &c, 1e-15).unwrap().y;
        prop_assert!(b >= a - 1e-13 * (1.0 + a.abs()), "{a} > {b}");
    }

    #[test]
    fn node_solve_matches_scan_oracle(c in coeffs(), phi in prop::array::uniform3(-1.0..2.0f64)) {
        let sol = node_solve(&phi, 1, &c, 1e-15).unwrap();
        let want = common::scan_root(&phi, &c);
        prop_assert!((sol.root - want).abs() <= 1e-10 * (1.0 + want.abs()), "{} vs {want}", sol.root);
        prop_assert_eq!(sol.clamp, Clamp::None);
    }

    #[test]
    fn unconstrained_nodes_match_quadratic_root(c in coeffs(), phi in prop::array::uniform3(-1.0..2.0f64)) {
        let sol = node_solve(&phi, 1, &c, 1e-15).unwrap();
        if !sol.binding {
            let want = common::quadratic_root(&phi, &c);
            prop_assert!((sol.root - want).abs() <= 1e-10 * (1.0 + want.abs()), "{} vs {want}", sol.root);
        }
    }

    #[test]
    fn face_lift_is_idempotent(k1 in -2.0..-0.5f64, width in 1.0..2.5f64, gb in 0.5..1.9f64, bf in any::<bool>()) {
        let market = ImpactMarket::bachelier(0.2, 0.5).unwrap();
        let xs = grid(401, -4.0, 4.0);
        let cap = GammaCap::new(CoefFn::Constant(gb), 0.1, 10.0, &market, &xs).unwrap();
        let payoff = if bf {
            Payoff::butterfly(k1, k1 + 0.5 * width, k1 + width).unwrap()
        } else {
            Payoff::call_spread(k1, k1 + width).unwrap()
        };
        let once = face_lift(&payoff, &cap, &xs, default_margin(&payoff, &cap, &xs)).unwrap();
        let sampled = Payoff::new(PayoffKind::Sampled { xs: once.xs.clone(), ys: once.g_hat.clone() }).unwrap();
        let twice = face_lift(&sampled, &cap, &xs, default_margin(&sampled, &cap, &xs)).unwrap();
        for (a, b) in once.on_grid().iter().zip(twice.on_grid()) {
            prop_assert!((a - b).abs() <= 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn face_lift_decreases_in_cap(k1 in -2.0..-0.5f64, width in 1.0..2.5f64, g1 in 0.5..1.9f64, dg in 0.0..1.0f64) {
        let market = ImpactMarket::bachelier(0.2, 0.1).unwrap();
        let xs = grid(401, -4.0, 4.0);
        let payoff = Payoff::butterfly(k1, k1 + 0.5 * width, k1 + width).unwrap();
        let lift = |gb: f64| {
            let cap = GammaCap::new(CoefFn::Constant(gb), 0.1, 10.0, &market, &xs).unwrap();
            face_lift(&payoff, &cap, &xs, default_margin(&payoff, &cap, &xs)).unwrap()
        };
        let (lo, hi) = (lift(g1), lift(g1 + dg));
        for ((a, b), &x) in lo.on_grid().iter().zip(hi.on_grid()).zip(&xs) {
            prop_assert!(*a >= b - 1e-12);
            prop_assert!(*b >= payoff.value(x) - 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn wealth_identity_on_all_simulators(seed in any::<u64>(), f in 0.05..1.0f64, rho in 0.0..3.0f64, a0 in -0.5..0.5f64) {
        let market = ImpactMarket::new(
            CoefFn::Constant(0.01),
            CoefFn::custom(|x| 0.2 + 0.05 * x.sin()),
            CoefFn::AffineSaturated { intercept: f, slope: 0.1, lower: 0.5 * f, upper: 2.0 * f },
            (-5.0, 5.0),
        )
        .unwrap();
        let controls = ItoControls::new(a0, |t, _, _, _| 0.2 * t.cos(), |_, x, _, _| 0.1 * x.cos(), |_, _, _, a| -a, 2.0);
        let dt = 1e-3;
        let noise = brownian_increments(&mut path_rng(seed, 0), 1000, dt);
        let cont = simulate_continuous(&market, &controls, 0.3, 0.1, 1.0, &noise, dt, 0.0).unwrap();
        let res = simulate_resilience(&market, rho, 0.2, &controls, 0.3, 0.1, 1.0, &noise, dt, 0.0).unwrap();
        let ys: Vec<f64> = (0..=50).map(|i| cont.y[i * 20]).collect();
        let disc = simulate_discrete(&market, &ys, 50, &noise, 20, dt, 0.1, 1.0).unwrap();
        for p in [&cont, &res, &disc] {
            let worst = p.wealth_residuals(&market).iter().fold(0.0f64, |m, r| m.max(r.abs()));
            prop_assert!(worst <= 1e-12, "{worst}");
            prop_assert!(p.times.windows(2).all(|w| w[1] > w[0]));
        }
    }

    #[test]
    fn zero_rate_resilience_reproduces_continuous(seed in any::<u64>(), a0 in -0.5..0.5f64) {
        let market = ImpactMarket::bachelier(0.2, 0.5).unwrap();
        let controls = ItoControls::new(a0, |_, x, _, _| 0.1 * x, |_, _, _, _| 0.05, |_, _, _, a| -a, 5.0);
        let noise = brownian_increments(&mut path_rng(seed, 3), 500, 2e-3);
        let a = simulate_continuous(&market, &controls, 0.0, 0.0, 0.0, &noise, 2e-3, 0.0).unwrap();
        let b = simulate_resilience(&market, 0.0, 0.0, &controls, 0.0, 0.0, 0.0, &noise, 2e-3, 0.0).unwrap();
        prop_assert_eq!(a.x, b.x);
        prop_assert_eq!(a.y, b.y);
        prop_assert_eq!(a.v, b.v);
        prop_assert_eq!(a.a, b.a);
    }
}
