//! Sample statistics shared across modules.

use alloc::vec::Vec;

use crate::special::chi2_sf;

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance.
pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}

pub fn std_dev(x: &[f64]) -> f64 {
    libm::sqrt(variance(x))
}

/// Sample skewness and excess kurtosis (moment estimators).
pub fn skew_kurt(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = mean(x);
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in x {
        let d = v - m;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    (m3 / libm::pow(m2, 1.5), m4 / (m2 * m2) - 3.0)
}

pub fn covariance(x: &[f64], y: &[f64]) -> f64 {
    let mx = mean(x);
    let my = mean(y);
    x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / (x.len() as f64 - 1.0)
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    covariance(x, y) / libm::sqrt(variance(x) * variance(y))
}

/// Sample covariance matrix (row-major, `p x p`) of the given columns.
pub fn covariance_matrix(columns: &[Vec<f64>]) -> Vec<f64> {
    let p = columns.len();
    let means: Vec<f64> = columns.iter().map(|c| mean(c)).collect();
    let n = columns.first().map_or(0, |c| c.len());
    let mut out = alloc::vec![0.0; p * p];
    for i in 0..p {
        for j in i..p {
            let s: f64 = columns[i].iter().zip(&columns[j]).map(|(a, b)| (a - means[i]) * (b - means[j])).sum();
            let v = s / (n as f64 - 1.0);
            out[i * p + j] = v;
            out[j * p + i] = v;
        }
    }
    out
}

/// Lower empirical quantile `inf { x : F_n(x) > level }`, i.e. the order
/// statistic at zero-based index `floor(n * level)`. `sorted` must be
/// ascending and nonempty.
pub fn lower_quantile_sorted(sorted: &[f64], level: f64) -> f64 {
    let n = sorted.len();
    let idx = libm::floor(n as f64 * level) as usize;
    sorted[idx.min(n - 1)]
}

pub fn lower_quantile(values: &[f64], level: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    lower_quantile_sorted(&v, level)
}

/// Sample autocorrelation at `lag`.
pub fn autocorrelation(x: &[f64], lag: usize) -> f64 {
    let m = mean(x);
    let denom: f64 = x.iter().map(|v| (v - m) * (v - m)).sum();
    let num: f64 = x.iter().zip(&x[lag..]).map(|(a, b)| (a - m) * (b - m)).sum();
    num / denom
}

/// Ljung-Box portmanteau statistic over `lags` autocorrelations with `dof`
/// degrees of freedom. Returns `(Q, p_value)`.
pub fn ljung_box(x: &[f64], lags: usize, dof: usize) -> (f64, f64) {
    let n = x.len() as f64;
    let q = n * (n + 2.0)
        * (1..=lags)
            .map(|k| {
                let r = autocorrelation(x, k);
                r * r / (n - k as f64)
            })
            .sum::<f64>();
    (q, chi2_sf(q, dof as f64))
}

/// Kolmogorov-Smirnov distance between a sample and a continuous CDF.
pub fn ks_statistic<F: FnMut(f64) -> f64>(sample: &[f64], mut cdf: F) -> f64 {
    let mut v = sample.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let f = cdf(x);
        let lo = f - i as f64 / n;
        let hi = (i as f64 + 1.0) / n - f;
        d.max(lo).max(hi)
    })
}
