use lossindex_core::nig::{nig_loglik, nig_mle_values, nig_sample, NigParams};
use lossindex_core::quad;
use lossindex_core::stats;
use num_complex::Complex64;
use proptest::prelude::*;

fn index_fit() -> NigParams {
    NigParams::new(-0.0014, 0.4826, 0.0006, 0.6553).unwrap()
}

#[test]
fn density_integrates_to_one() {
    let p = index_fit();
    let (v, _) = quad::integrate(|x| p.pdf(x), -50.0, 50.0, 1e-12, 2000);
    assert!((v - 1.0).abs() < 1e-6, "integral {v}");
    for &(mu, alpha, beta, delta) in &[
        (0.0, 15.0, 0.0, 0.5),
        (0.2, 3.0, -2.5, 0.1),
        (-1.0, 0.8, 0.7, 2.0),
        (0.0, 50.0, 10.0, 0.02),
    ] {
        let p = NigParams::new(mu, alpha, beta, delta).unwrap();
        let lo = quad::integrate_lower(|x| p.pdf(x), mu, 1e-13, 4000).0;
        let hi = quad::integrate_upper(|x| p.pdf(x), mu, 1e-13, 4000).0;
        assert!((lo + hi - 1.0).abs() < 1e-6, "{p:?}: {}", lo + hi);
    }
}

#[test]
#[allow(clippy::excessive_precision)]
fn cf_matches_high_precision_value() {
    let z = index_fit().cf(1.0, 1.0);
    let want = Complex64::new(0.662_739_742_205_334_476_5, -0.000_693_159_159_501_821_564_8);
    assert!((z - want).norm() < 1e-14, "{z}");
}

#[test]
fn sample_mean_and_empirical_cf() {
    let p = index_fit();
    let x = nig_sample(1_000_000, 1.0, &p, 20240601);
    let se = (p.variance() / x.len() as f64).sqrt();
    let m = stats::mean(&x);
    assert!((m - p.mean()).abs() < 3.0 * se, "mean {m} vs {}", p.mean());
    let n = x.len() as f64;
    let (re, im) = x.iter().fold((0.0, 0.0), |(a, b), v| (a + (0.5 * v).cos(), b + (0.5 * v).sin()));
    let emp = Complex64::new(re / n, im / n);
    assert!((emp - p.cf(0.5, 1.0)).norm() < 0.01);
}

#[test]
fn sample_passes_ks_against_numeric_cdf() {
    let p = index_fit();
    let mut x = nig_sample(100_000, 1.0, &p, 77);
    x.sort_by(f64::total_cmp);
    let mut cdf = Vec::with_capacity(x.len());
    let mut f = p.cdf(x[0]);
    cdf.push(f);
    for w in x.windows(2) {
        f += quad::integrate(|y| p.pdf(y), w[0], w[1], 1e-15, 50).0;
        cdf.push(f);
    }
    let n = x.len() as f64;
    let d = cdf
        .iter()
        .enumerate()
        .fold(0.0f64, |d, (i, &f)| d.max(f - i as f64 / n).max((i as f64 + 1.0) / n - f));
    assert!(d < 1.628 / n.sqrt(), "KS distance {d}");
}

#[test]
fn time_scaling_of_samples() {
    let p = NigParams::new(0.01, 2.0, 0.5, 0.3).unwrap();
    let x = nig_sample(200_000, 0.25, &p, 5);
    let var_t = 0.25 * p.variance();
    assert!((stats::variance(&x) / var_t - 1.0).abs() < 0.02);
}

#[test]
fn mle_recovers_skewed_law() {
    let truth = NigParams::new(0.02, 4.0, -1.5, 0.6).unwrap();
    let x = nig_sample(50_000, 1.0, &truth, 4242);
    let fit = nig_mle_values(&x).unwrap();
    let q = fit.params;
    assert!((q.alpha() - 4.0).abs() < 0.25, "{q:?}");
    assert!((q.beta() + 1.5).abs() < 0.2, "{q:?}");
    assert!((q.delta() - 0.6).abs() < 0.04, "{q:?}");
    assert!(fit.loglik >= nig_loglik(&x, &truth));
}

proptest! {
    #[test]
    fn cf_bounded_and_infinitely_divisible(
        mu in -1.0..1.0f64, alpha in 0.1..30.0f64, r in -0.99..0.99f64, delta in 0.01..3.0f64,
        v in -50.0..50.0f64, s in 0.0..5.0f64, t in 0.0..5.0f64,
    ) {
        let p = NigParams::new(mu, alpha, r * alpha, delta).unwrap();
        let a = p.cf(v, s + t);
        prop_assert!(a.norm() <= 1.0 + 1e-12);
        let b = p.cf(v, s) * p.cf(v, t);
        prop_assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn pdf_positive(x in -100.0..100.0f64, alpha in 0.1..30.0f64, r in -0.99..0.99f64, delta in 0.01..3.0f64) {
        let p = NigParams::new(0.0, alpha, r * alpha, delta).unwrap();
        prop_assert!(p.pdf(x) >= 0.0);
        prop_assert!(p.ln_pdf(x).is_finite());
    }
}
