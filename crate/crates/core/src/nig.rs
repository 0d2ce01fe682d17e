//! Normal-inverse-Gaussian law and Lévy process.
//!
//! `X_1 ~ NIG(mu, alpha, beta, delta)` has density
//! `alpha delta K1(alpha s) / (pi s) * exp(delta gamma + beta (x - mu))` with
//! `s = sqrt(delta^2 + (x - mu)^2)` and `gamma = sqrt(alpha^2 - beta^2)`.
//! The process at time `t` is `NIG(mu t, alpha, beta, delta t)`, a Brownian
//! motion with drift subordinated to an inverse-Gaussian clock.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Open01, StandardNormal};

use crate::error::{Error, Result};
use crate::ingest::ReturnSeries;
use crate::optim::{bisect_increasing, NelderMead};
use crate::quad;
use crate::rng;
use crate::special::ln_bessel_k1;
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NigParams {
    mu: f64,
    alpha: f64,
    beta: f64,
    delta: f64,
}

impl NigParams {
    /// Validates `alpha > 0`, `delta > 0`, `alpha^2 > beta^2`, all finite.
    pub fn new(mu: f64, alpha: f64, beta: f64, delta: f64) -> Result<Self> {
        if ![mu, alpha, beta, delta].iter().all(|v| v.is_finite()) {
            return Err(Error::Parameter(format!(
                "NIG parameters must be finite: ({mu}, {alpha}, {beta}, {delta})"
            )));
        }
        if !(alpha > 0.0) {
            return Err(Error::Parameter(format!("alpha must be positive, got {alpha}")));
        }
        if !(delta > 0.0) {
            return Err(Error::Parameter(format!("delta must be positive, got {delta}")));
        }
        if !(alpha * alpha > beta * beta) {
            return Err(Error::Parameter(format!("need alpha^2 > beta^2, got alpha = {alpha}, beta = {beta}")));
        }
        Ok(Self { mu, alpha, beta, delta })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn gamma(&self) -> f64 {
        libm::sqrt(self.alpha * self.alpha - self.beta * self.beta)
    }

    pub fn mean(&self) -> f64 {
        self.mu + self.delta * self.beta / self.gamma()
    }

    pub fn variance(&self) -> f64 {
        let g = self.gamma();
        self.delta * self.alpha * self.alpha / (g * g * g)
    }

    /// Law of `scale * X + shift` (`scale > 0`).
    pub fn affine(&self, scale: f64, shift: f64) -> Result<Self> {
        Self::new(scale * self.mu + shift, self.alpha / scale, self.beta / scale, scale * self.delta)
    }

    /// Zero-mean, unit-variance member of the same shape family.
    pub fn standardized(&self) -> Self {
        let c = 1.0 / libm::sqrt(self.variance());
        let scaled = Self {
            mu: c * self.mu,
            alpha: self.alpha / c,
            beta: self.beta / c,
            delta: c * self.delta,
        };
        Self { mu: scaled.mu - scaled.mean(), ..scaled }
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        let d = x - self.mu;
        let s = libm::sqrt(self.delta * self.delta + d * d);
        let z = self.alpha * s;
        libm::log(self.alpha * self.delta / PI) - libm::log(s) + ln_bessel_k1(z)
            + self.delta * self.gamma()
            + self.beta * d
    }

    pub fn pdf(&self, x: f64) -> f64 {
        libm::exp(self.ln_pdf(x))
    }

    /// Characteristic exponent `ln E[exp(i z X_1)]` for complex `z` inside
    /// the strip where the transform exists (principal square root).
    pub fn ln_cf(&self, z: Complex64) -> Complex64 {
        let i = Complex64::i();
        let b = Complex64::new(self.beta, 0.0) + i * z;
        let root = (Complex64::new(self.alpha * self.alpha, 0.0) - b * b).sqrt();
        i * self.mu * z + self.delta * (Complex64::new(self.gamma(), 0.0) - root)
    }

    /// `E[exp(i v X_t)]`.
    pub fn cf(&self, v: f64, t: f64) -> Complex64 {
        (self.ln_cf(Complex64::new(v, 0.0)) * t).exp()
    }

    /// `ln E[exp(u X_1)]`; `None` when `|beta + u| > alpha`.
    pub fn ln_mgf(&self, u: f64) -> Option<f64> {
        let b = self.beta + u;
        let r = self.alpha * self.alpha - b * b;
        if r < 0.0 {
            return None;
        }
        Some(self.mu * u + self.delta * (self.gamma() - libm::sqrt(r)))
    }

    /// CDF by adaptive quadrature of the density, integrating the smaller
    /// tail.
    pub fn cdf(&self, x: f64) -> f64 {
        if x == f64::NEG_INFINITY {
            return 0.0;
        }
        if x == f64::INFINITY {
            return 1.0;
        }
        let tol = 1e-13;
        if x <= self.mean() {
            quad::integrate_lower(|y| self.pdf(y), x, tol, 4000).0.clamp(0.0, 1.0)
        } else {
            (1.0 - quad::integrate_upper(|y| self.pdf(y), x, tol, 4000).0).clamp(0.0, 1.0)
        }
    }

    /// Quantile by bisection on [`cdf`](Self::cdf) to `1e-10`.
    pub fn quantile(&self, p: f64) -> f64 {
        let sd = libm::sqrt(self.variance());
        let m = self.mean();
        let mut lo = m - 10.0 * sd;
        while self.cdf(lo) > p {
            lo = m - 2.0 * (m - lo);
        }
        let mut hi = m + 10.0 * sd;
        while self.cdf(hi) < p {
            hi = m + 2.0 * (hi - m);
        }
        bisect_increasing(|x| self.cdf(x), p, lo, hi, 1e-10)
    }

    /// One draw of `X_t` (inverse-Gaussian subordination).
    pub fn sample_at<R: Rng + ?Sized>(&self, t: f64, rng: &mut R) -> f64 {
        let dt = self.delta * t;
        let w = sample_inverse_gaussian(rng, dt / self.gamma(), dt * dt);
        let z: f64 = rng.sample(StandardNormal);
        self.mu * t + self.beta * w + libm::sqrt(w) * z
    }
}

/// Inverse-Gaussian draw with the given mean and shape (Michael, Schucany
/// and Haas transformation with one normal and one uniform).
pub fn sample_inverse_gaussian<R: Rng + ?Sized>(rng: &mut R, mean: f64, shape: f64) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    let u: f64 = rng.sample(Open01);
    inverse_gaussian_from(z, u, mean, shape)
}

/// The MSH map from a normal `z` and uniform `u` to an inverse-Gaussian
/// variate. Uses the cancellation-free root of the quadratic.
pub fn inverse_gaussian_from(z: f64, u: f64, mean: f64, shape: f64) -> f64 {
    let my = mean * z * z;
    let big = mean + mean * my / (2.0 * shape) + mean / (2.0 * shape) * libm::sqrt(4.0 * mean * shape * z * z + my * my);
    let small = mean * mean / big;
    if u <= mean / (mean + small) {
        small
    } else {
        big
    }
}

/// `n` draws of `X_t`, reproducible from `seed`.
pub fn nig_sample(n: usize, t: f64, p: &NigParams, seed: u64) -> Vec<f64> {
    let mut r = rng::stream(seed, 0);
    (0..n).map(|_| p.sample_at(t, &mut r)).collect()
}

/// Simulated returns: `n_paths` rows by `n_assets` columns, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioMatrix {
    n_paths: usize,
    n_assets: usize,
    data: Vec<f64>,
    seed: u64,
}

impl ScenarioMatrix {
    pub fn from_columns(columns: &[Vec<f64>], seed: u64) -> Result<Self> {
        let n_assets = columns.len();
        let n_paths = columns.first().map_or(0, |c| c.len());
        if let Some(bad) = columns.iter().find(|c| c.len() != n_paths) {
            return Err(Error::LengthMismatch { expected: n_paths, found: bad.len() });
        }
        let mut data = alloc::vec![0.0; n_paths * n_assets];
        for (j, col) in columns.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::InvalidInput(format!("non-finite scenario at ({i}, {j})")));
                }
                data[i * n_assets + j] = *v;
            }
        }
        Ok(Self { n_paths, n_assets, data, seed })
    }

    pub fn from_rows(n_paths: usize, n_assets: usize, data: Vec<f64>, seed: u64) -> Result<Self> {
        if data.len() != n_paths * n_assets {
            return Err(Error::LengthMismatch { expected: n_paths * n_assets, found: data.len() });
        }
        Ok(Self { n_paths, n_assets, data, seed })
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }
    pub fn n_assets(&self) -> usize {
        self.n_assets
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn get(&self, path: usize, asset: usize) -> f64 {
        self.data[path * self.n_assets + asset]
    }
    pub fn row(&self, path: usize) -> &[f64] {
        &self.data[path * self.n_assets..(path + 1) * self.n_assets]
    }
    pub fn column(&self, asset: usize) -> Vec<f64> {
        (0..self.n_paths).map(|i| self.get(i, asset)).collect()
    }
    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.n_assets).map(|j| self.column(j)).collect()
    }
}

/// Independent NIG scenario columns, one per parameter set; column `j`
/// draws from ChaCha stream `j` of `seed`.
pub fn nig_scenarios(params: &[NigParams], n_paths: usize, t: f64, seed: u64) -> ScenarioMatrix {
    let columns: Vec<Vec<f64>> = params
        .iter()
        .enumerate()
        .map(|(j, p)| {
            let mut r = rng::stream(seed, j as u64);
            (0..n_paths).map(|_| p.sample_at(t, &mut r)).collect()
        })
        .collect();
    let n_assets = columns.len();
    let mut data = alloc::vec![0.0; n_paths * n_assets];
    for (j, col) in columns.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            data[i * n_assets + j] = *v;
        }
    }
    ScenarioMatrix { n_paths, n_assets, data, seed }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NigFit {
    pub params: NigParams,
    pub loglik: f64,
    pub n_obs: usize,
}

/// Summed log-density of `data` under `p`.
pub fn nig_loglik(data: &[f64], p: &NigParams) -> f64 {
    let c = libm::log(p.alpha * p.delta / PI) + p.delta * p.gamma();
    let d2 = p.delta * p.delta;
    let sum: f64 = data
        .iter()
        .map(|&x| {
            let d = x - p.mu;
            let s2 = d2 + d * d;
            ln_bessel_k1(p.alpha * libm::sqrt(s2)) - 0.5 * libm::log(s2) + p.beta * d
        })
        .sum();
    sum + data.len() as f64 * c
}

/// Method-of-moments NIG matching mean, variance and skewness with the
/// excess kurtosis overridden by `kurt`. Falls back to a near-symmetric
/// shape when the moments are outside the NIG region.
pub fn moment_match(mean: f64, var: f64, skew: f64, kurt: f64) -> NigParams {
    let min_kurt = 4.0 * skew * skew / 3.0;
    let kurt = if kurt > min_kurt + 1e-3 { kurt } else { min_kurt + 0.5 };
    let zeta = (3.0 / (kurt - min_kurt)).clamp(0.05, 1e4);
    let rho = (skew.signum() * libm::sqrt(skew * skew * zeta / 9.0)).clamp(-0.95, 0.95);
    let gamma = libm::sqrt(zeta / (var * (1.0 - rho * rho)));
    let alpha = gamma / libm::sqrt(1.0 - rho * rho);
    let beta = rho * alpha;
    let delta = zeta / gamma;
    NigParams {
        mu: mean - delta * beta / gamma,
        alpha,
        beta,
        delta,
    }
}

fn to_unconstrained(p: &NigParams) -> [f64; 4] {
    let r = (p.beta / p.alpha).clamp(-1.0 + 1e-12, 1.0 - 1e-12);
    [p.mu, libm::log(p.alpha), libm::atanh(r), libm::log(p.delta)]
}

fn from_unconstrained(x: &[f64]) -> Option<NigParams> {
    let alpha = libm::exp(x[1]);
    let beta = alpha * libm::tanh(x[2]);
    let delta = libm::exp(x[3]);
    NigParams::new(x[0], alpha, beta, delta).ok()
}

/// Largest `|beta| / alpha` the fit may reach on the standardized scale.
pub const MAX_SKEW_RATIO: f64 = 0.95;
/// Largest standardized `alpha` the fit may reach.
pub const MAX_STD_ALPHA: f64 = 1.0e3;

fn in_fit_region(p: &NigParams) -> bool {
    p.alpha <= MAX_STD_ALPHA && libm::fabs(p.beta) <= MAX_SKEW_RATIO * p.alpha
}

/// Maximum-likelihood NIG fit.
///
/// The data are standardised, the likelihood is maximised over
/// `(mu, ln alpha, atanh(beta / alpha), ln delta)` with Nelder-Mead from
/// five moment-matched starts (the sample kurtosis and four perturbations
/// of it), the best optimum is polished once more, and the parameters are
/// mapped back to the original scale.
pub fn nig_mle(data: &ReturnSeries) -> Result<NigFit> {
    nig_mle_values(data.values())
}

pub fn nig_mle_values(x: &[f64]) -> Result<NigFit> {
    let n = x.len();
    if n < 8 {
        return Err(Error::InvalidInput(format!("NIG fit needs at least 8 observations, got {n}")));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("NIG fit input contains non-finite values".into()));
    }
    let m = stats::mean(x);
    let sd = stats::std_dev(x);
    if !(sd > 1e-12 * (1.0 + libm::fabs(m))) {
        return Err(Error::Estimation {
            reason: format!("degenerate likelihood: sample has zero dispersion (sd = {sd:e})"),
            best: None,
        });
    }
    let z: Vec<f64> = x.iter().map(|v| (v - m) / sd).collect();
    let (skew, kurt) = stats::skew_kurt(&z);
    let objective = |th: &[f64]| match from_unconstrained(th) {
        Some(p) if in_fit_region(&p) => -nig_loglik(&z, &p),
        _ => f64::INFINITY,
    };

    let kurt_floor = 4.0 * skew * skew / 3.0 + 0.1;
    let k0 = kurt.max(kurt_floor);
    let starts = [
        moment_match(0.0, 1.0, skew, k0),
        moment_match(0.0, 1.0, skew, 0.5 * k0 + 0.5 * kurt_floor),
        moment_match(0.0, 1.0, skew, 2.0 * k0),
        moment_match(0.0, 1.0, skew, 5.0 * k0 + 3.0),
        moment_match(0.0, 1.0, 0.0, k0.max(0.5)),
    ];
    let nm = NelderMead { max_evaluations: 3000, f_tol: 1e-9, x_tol: 1e-4 };
    let step = [0.1, 0.3, 0.3, 0.3];
    let mut best: Option<(Vec<f64>, f64)> = None;
    for s in &starts {
        let th0 = to_unconstrained(s);
        let start_val = objective(&th0);
        let res = nm.minimize(objective, &th0, &step);
        let (th, val) = if res.value <= start_val { (res.x, res.value) } else { (th0.to_vec(), start_val) };
        if val.is_finite() && best.as_ref().is_none_or(|b| val < b.1) {
            best = Some((th, val));
        }
    }
    let Some((th, val)) = best else {
        return Err(Error::Estimation {
            reason: "no finite likelihood from any moment-matched start".into(),
            best: None,
        });
    };
    let fine = NelderMead { max_evaluations: 3000, f_tol: 1e-13, x_tol: 1e-8 };
    let polish = fine.minimize(objective, &th, &[0.02, 0.05, 0.05, 0.05]);
    let (th, _) = if polish.value < val { (polish.x, polish.value) } else { (th, val) };

    let pz = from_unconstrained(&th).ok_or_else(|| Error::Estimation {
        reason: "optimum outside the parameter region".into(),
        best: Some([th[0], th[1], th[2], th[3]]),
    })?;
    let params = pz.affine(sd, m)?;
    let loglik = nig_loglik(x, &params);
    if !loglik.is_finite() {
        return Err(Error::Estimation {
            reason: "non-finite log-likelihood at optimum".into(),
            best: Some([params.mu, params.alpha, params.beta, params.delta]),
        });
    }
    Ok(NigFit { params, loglik, n_obs: n })
}
