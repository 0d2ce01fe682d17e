use lossindex_core::nig::NigParams;
use lossindex_core::pricer::*;
use lossindex_core::quad;
use lossindex_core::rng;
use num_complex::Complex64;
use rand::Rng;

fn demo() -> NigParams {
    NigParams::new(0.0, 15.0, 0.0, 0.5).unwrap()
}

fn market() -> MarketSpec {
    MarketSpec::new(100.0, 0.02, 365.0).unwrap()
}

/// Damped-transform call price by adaptive quadrature instead of FFT.
fn call_by_quadrature(p: &NigParams, m: &MarketSpec, strike: f64, t_days: f64, a: f64) -> f64 {
    let t = m.years(t_days);
    let k = strike.ln();
    let disc = m.discount(t_days);
    let integrand = |v: f64| {
        let z = Complex64::new(v, -(a + 1.0));
        let num = risk_neutral_ln_cf(z, t, p, m).unwrap().exp() * disc;
        let den = Complex64::new(a * a + a - v * v, (2.0 * a + 1.0) * v);
        ((Complex64::new(0.0, -v * k)).exp() * num / den).re
    };
    let upper = 45.0 / (p.delta() * t);
    let mut total = 0.0;
    let mut lo = 0.0;
    while lo < upper {
        let hi = (lo + 2.0).min(upper);
        total += quad::integrate(integrand, lo, hi, 1e-13, 200).0;
        lo = hi;
    }
    (-a * k).exp() / std::f64::consts::PI * total
}

#[test]
fn fft_matches_quadrature_on_random_points() {
    let p = demo();
    let m = market();
    let cfg = CarrMadan::default();
    let mut g = rng::stream(2718, 0);
    for _ in 0..20 {
        let k: f64 = g.random_range(70.0..130.0);
        let t: f64 = g.random_range(30.0..365.0);
        let fft = carr_madan_call(&p, &m, &[k], t, &cfg).unwrap()[0];
        let direct = call_by_quadrature(&p, &m, k, t, 1.5);
        assert!((fft - direct).abs() < 1e-6 * m.s0, "K={k} T={t}: {fft} vs {direct}");
    }
}

#[test]
fn reference_prices() {
    // independent evaluation of the same transform in double precision
    let want = [
        (30.0, [20.13879, 1.915472, 0.0282783]),
        (90.0, [20.44337, 3.666153, 0.181230]),
        (365.0, [22.28306, 8.127058, 2.038038]),
    ];
    for (t, row) in want {
        let c = carr_madan_call(&demo(), &market(), &[80.0, 100.0, 120.0], t, &CarrMadan::default()).unwrap();
        for (got, w) in c.iter().zip(row) {
            assert!((got / w - 1.0).abs() < 1e-5, "T={t}: {got} vs {w}");
        }
    }
}

#[test]
fn atm_call_matches_monte_carlo() {
    // mean-corrected NIG paths; 3 standard errors at 1e6 paths
    let p = demo();
    let m = market();
    let t_days = 30.0;
    let t = m.years(t_days);
    let ln_m1 = p.ln_mgf(1.0).unwrap();
    let mut g = rng::stream(31, 0);
    let n = 1_000_000;
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..n {
        let x = p.sample_at(t, &mut g);
        let st = m.s0 * (x + (m.r - ln_m1) * t).exp();
        let pay = m.discount(t_days) * (st - 100.0).max(0.0);
        s += pay;
        s2 += pay * pay;
    }
    let mean = s / n as f64;
    let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
    let c = carr_madan_call(&p, &m, &[100.0], t_days, &CarrMadan::default()).unwrap()[0];
    assert!((c - mean).abs() < 3.0 * se, "{c} vs {mean} +- {se}");
}

#[test]
fn discounted_forward_by_monte_carlo() {
    let p = demo();
    let m = market();
    let ln_m1 = p.ln_mgf(1.0).unwrap();
    for t in [0.1, 0.5, 2.0] {
        let mut g = rng::stream(77, (t * 10.0) as u64);
        let n = 400_000;
        let xs: Vec<f64> = (0..n).map(|_| m.s0 * (p.sample_at(t, &mut g) + (m.r - ln_m1) * t).exp() * (-m.r * t).exp()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt();
        assert!((mean - m.s0).abs() < 3.0 * sd / (n as f64).sqrt(), "t={t}: {mean}");
    }
}

#[test]
fn strike_shape_and_bounds() {
    let p = demo();
    let m = market();
    let strikes: Vec<f64> = (0..121).map(|i| 40.0 + i as f64).collect();
    for t in [7.0, 30.0, 180.0, 730.0] {
        let c = carr_madan_call(&p, &m, &strikes, t, &CarrMadan::default()).unwrap();
        for w in c.windows(2) {
            assert!(w[1] <= w[0], "T={t}");
        }
        for w in c.windows(3) {
            assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-8 * m.s0, "T={t}");
        }
        for (k, v) in strikes.iter().zip(&c) {
            assert!(*v >= (m.s0 - k * m.discount(t)).max(0.0) && *v <= m.s0);
        }
    }
}

#[test]
fn deep_in_the_money_limit() {
    let m = market();
    let k = 0.01 * m.s0;
    let c = carr_madan_call(&demo(), &m, &[k], 90.0, &CarrMadan::default()).unwrap()[0];
    assert!((c - (m.s0 - k * m.discount(90.0))).abs() < 1e-4 * m.s0);
}

#[test]
fn calls_rise_with_maturity() {
    let m = market();
    for k in [80.0, 100.0, 120.0] {
        let c: Vec<f64> = [30.0, 90.0, 182.0, 365.0]
            .iter()
            .map(|t| carr_madan_call(&demo(), &m, &[k], *t, &CarrMadan::default()).unwrap()[0])
            .collect();
        for w in c.windows(2) {
            assert!(w[1] >= w[0], "K={k}: {c:?}");
        }
    }
}

#[test]
fn parity_over_surface() {
    let m = market();
    let strikes: Vec<f64> = (0..25).map(|i| 70.0 + 2.5 * i as f64).collect();
    let maturities = [30.0, 120.0, 365.0];
    let cfg = CarrMadan::default();
    let calls = price_surface(&demo(), &m, &strikes, &maturities, SurfaceKind::Call, &cfg).unwrap();
    let puts = price_surface(&demo(), &m, &strikes, &maturities, SurfaceKind::Put, &cfg).unwrap();
    for (i, t) in maturities.iter().enumerate() {
        for (j, k) in strikes.iter().enumerate() {
            let resid = calls.get(i, j) - puts.get(i, j) - m.s0 + k * m.discount(*t);
            assert!(resid.abs() < 1e-10 * m.s0);
            assert!(puts.get(i, j) >= 0.0);
        }
    }
    assert_eq!(put_from_parity(m.s0, 0.0, 30.0, &m).unwrap(), 0.0);
}

#[test]
fn single_point_surface_equals_scalar() {
    let m = market();
    let cfg = CarrMadan::default();
    let s = price_surface(&demo(), &m, &[95.0], &[60.0], SurfaceKind::Call, &cfg).unwrap();
    assert_eq!(s.values, carr_madan_call(&demo(), &m, &[95.0], 60.0, &cfg).unwrap());
}

#[test]
fn nig_smile_at_one_month() {
    let m = MarketSpec::new(100.0, 0.02, 365.0).unwrap();
    let s = price_surface(&demo(), &m, &[70.0, 100.0, 130.0], &[30.0], SurfaceKind::ImpliedVol, &CarrMadan::default()).unwrap();
    let (lo, atm, hi) = (s.get(0, 0), s.get(0, 1), s.get(0, 2));
    assert!(lo > atm && hi > atm, "{lo} {atm} {hi}");
}

#[test]
fn implied_vol_round_trip() {
    let m = market();
    for kind in [OptionKind::Call, OptionKind::Put] {
        for k in [60.0, 100.0, 150.0] {
            let price = bs_price(0.2, k, 200.0, &m, kind);
            let s = implied_vol(price, k, 200.0, &m, kind).unwrap();
            assert!((s - 0.2).abs() < 1e-8, "{kind:?} K={k}: {s}");
        }
        let c = bs_price(0.3, 110.0, 90.0, &m, OptionKind::Call);
        let p = bs_price(0.3, 110.0, 90.0, &m, OptionKind::Put);
        assert!((c - p - m.s0 + 110.0 * m.discount(90.0)).abs() < 1e-12);
    }
}
