use lossindex_core::backtest::*;
use lossindex_core::garch::VarForecasts;
use lossindex_core::rng;
use lossindex_core::special::norm_ppf;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

#[test]
fn gaussian_exceedance_rate() {
    let mut g = rng::stream(101, 0);
    let r: Vec<f64> = (0..100_000).map(|_| g.sample(StandardNormal)).collect();
    let var = vec![-norm_ppf(0.05); r.len()];
    let ind = count_exceedances(&r, &var).unwrap();
    let rate = ind.iter().filter(|b| **b).count() as f64 / r.len() as f64;
    assert!((rate - 0.05).abs() < 0.003, "{rate}");
}

#[test]
fn independence_test_size() {
    let accepted = (0..100u64)
        .filter(|&s| {
            let mut g = rng::stream(s, 3);
            let ind: Vec<bool> = (0..10_000).map(|_| g.random::<f64>() < 0.05).collect();
            cci_test(&ind, 0.05).unwrap().decision.accepted()
        })
        .count();
    assert!(accepted >= 90, "{accepted}");
}

#[test]
fn seven_levels_give_seven_rows() {
    let levels = vec![0.01, 0.05, 0.25, 0.50, 0.75, 0.95, 0.99];
    let n = 500;
    let mut g = rng::stream(5, 0);
    let r: Vec<f64> = (0..n).map(|_| g.sample(StandardNormal)).collect();
    let values = levels.iter().map(|&a| vec![-norm_ppf(a); n]).collect();
    let f = VarForecasts { periods: (0..n as i32).collect(), levels: levels.clone(), values };
    let out = run_backtest_suite(&r, &f, 0.05).unwrap();
    assert_eq!(out.len(), 7);
    for (row, a) in out.iter().zip(&levels) {
        assert_eq!(row.level, *a);
        assert!(row.n_exceed <= row.n_obs);
    }
}

proptest! {
    #[test]
    fn zones_monotone(n in 1usize..2000, a in 0.001..0.999f64) {
        let mut prev = Zone::Green;
        for x in (0..=n).step_by((n / 50).max(1)) {
            let z = traffic_light(n, x, a).unwrap().zone;
            prop_assert!(z >= prev);
            prev = z;
        }
    }

    #[test]
    fn pof_nonnegative(n in 1usize..5000, frac in 0.0..1.0f64, a in 0.001..0.999f64) {
        let x = ((n as f64) * frac) as usize;
        let lr = pof_test(n, x, a, 0.05).unwrap().statistic;
        prop_assert!(lr >= 0.0 && lr.is_finite());
    }

    #[test]
    fn doubling_sample_grows_z(n in 10usize..5000, frac in 0.0..1.0f64, a in 0.01..0.99f64) {
        let x = ((n as f64) * frac) as usize;
        let z1 = binomial_test(n, x, a, 0.05).unwrap().statistic;
        let z2 = binomial_test(2 * n, 2 * x, a, 0.05).unwrap().statistic;
        prop_assert!(z2.abs() >= z1.abs() - 1e-12);
    }

    #[test]
    fn decisions_depend_only_on_indicators(seed in 0u64..1000, shift in -5.0..5.0f64, scale in 0.1..10.0f64) {
        let mut g = rng::stream(seed, 0);
        let n = 300;
        let r: Vec<f64> = (0..n).map(|_| g.sample(StandardNormal)).collect();
        let levels = vec![0.05, 0.5];
        let values: Vec<Vec<f64>> = levels.iter().map(|&a| vec![-norm_ppf(a); n]).collect();
        let f = VarForecasts { periods: (0..n as i32).collect(), levels: levels.clone(), values: values.clone() };
        // strictly increasing map h applied to returns and to -VaR
        let h = |x: f64| scale * x.exp() + shift;
        let r2: Vec<f64> = r.iter().map(|x| h(*x)).collect();
        let v2: Vec<Vec<f64>> = values.iter().map(|v| v.iter().map(|x| -h(-x)).collect()).collect();
        let f2 = VarForecasts { values: v2, ..f.clone() };
        let a = run_backtest_suite(&r, &f, 0.05).unwrap();
        let b = run_backtest_suite(&r2, &f2, 0.05).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert_eq!(x.n_exceed, y.n_exceed);
            prop_assert_eq!(x.traffic.zone, y.traffic.zone);
            prop_assert_eq!(x.pof.decision, y.pof.decision);
            prop_assert_eq!(x.cci.decision, y.cci.decision);
        }
    }
}
