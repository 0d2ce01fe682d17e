//! ARMA(1,1)-GARCH(1,1) filter.
//!
//! ```text
//! r_t   = mu_t + a_t,   mu_t = phi0 + phi1 r_{t-1} + theta1 a_{t-1}
//! a_t   = sigma_t eps_t
//! s2_t  = alpha0 + alpha1 a_{t-1}^2 + beta1 s2_{t-1}
//! ```
//!
//! The recursion needs `r_0`, `a_0` and `s2_1`; these are carried in the fit
//! as a [`FilterState`] so that filtering and simulation use the same start.

use alloc::format;
use alloc::vec::Vec;
use core::ops::Range;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::ingest::ReturnSeries;
use crate::nig::{nig_mle_values, NigParams, ScenarioMatrix};
use crate::optim::{bisect_increasing, golden_section, NelderMead};
use crate::rng;
use crate::special::{norm_cdf, norm_ppf, student_t_cdf, student_t_ln_pdf};
use crate::stats;

/// Innovation family to fit after the quasi-likelihood step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnovationKind {
    Gaussian,
    StudentT,
    Nig,
}

/// Zero-mean, unit-variance innovation law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Innovation {
    Gaussian,
    /// Student's t rescaled by `sqrt((nu - 2) / nu)`.
    StudentT { nu: f64 },
    Nig(NigParams),
}

impl Innovation {
    pub fn student_t(nu: f64) -> Result<Self> {
        if !(nu > 2.0) || !nu.is_finite() {
            return Err(Error::Parameter(format!("Student's t needs nu > 2, got {nu}")));
        }
        Ok(Innovation::StudentT { nu })
    }

    /// NIG innovation standardised to zero mean and unit variance.
    pub fn nig(p: NigParams) -> Self {
        Innovation::Nig(p.standardized())
    }

    pub fn kind(&self) -> InnovationKind {
        match self {
            Innovation::Gaussian => InnovationKind::Gaussian,
            Innovation::StudentT { .. } => InnovationKind::StudentT,
            Innovation::Nig(_) => InnovationKind::Nig,
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Innovation::Gaussian => norm_cdf(x),
            Innovation::StudentT { nu } => student_t_cdf(x / t_scale(nu), nu),
            Innovation::Nig(p) => p.cdf(x),
        }
    }

    /// Quantile at level `p`; bisection on the CDF to `1e-10` for t and NIG.
    pub fn quantile(&self, p: f64) -> f64 {
        match *self {
            Innovation::Gaussian => norm_ppf(p),
            Innovation::StudentT { nu } => {
                let s = t_scale(nu);
                let mut w = 10.0;
                while student_t_cdf(-w / s, nu) > p.min(1.0 - p) {
                    w *= 2.0;
                }
                bisect_increasing(|x| self.cdf(x), p, -w, w, 1e-10)
            }
            Innovation::Nig(q) => q.quantile(p),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Innovation::Gaussian => rng.sample(StandardNormal),
            Innovation::StudentT { nu } => {
                let t = rand_distr::StudentT::new(nu).expect("nu > 2 checked at construction");
                t.sample(rng) * t_scale(nu)
            }
            Innovation::Nig(p) => p.sample_at(1.0, rng),
        }
    }
}

fn t_scale(nu: f64) -> f64 {
    libm::sqrt((nu - 2.0) / nu)
}

/// Conditional-mean and variance coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmaGarchParams {
    pub phi0: f64,
    pub phi1: f64,
    pub theta1: f64,
    pub alpha0: f64,
    pub alpha1: f64,
    pub beta1: f64,
}

impl ArmaGarchParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.phi0, self.phi1, self.theta1, self.alpha0, self.alpha1, self.beta1];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter(format!("non-finite ARMA-GARCH coefficient in {self:?}")));
        }
        if !(self.alpha0 > 0.0) || self.alpha1 < 0.0 || self.beta1 < 0.0 {
            return Err(Error::Parameter("need alpha0 > 0, alpha1 >= 0, beta1 >= 0".into()));
        }
        if self.alpha1 + self.beta1 >= 1.0 {
            return Err(Error::Parameter(format!(
                "alpha1 + beta1 = {} violates stationarity",
                self.alpha1 + self.beta1
            )));
        }
        if libm::fabs(self.phi1) >= 1.0 {
            return Err(Error::Parameter(format!("|phi1| = {} must be below 1", libm::fabs(self.phi1))));
        }
        Ok(())
    }

    pub fn persistence(&self) -> f64 {
        self.alpha1 + self.beta1
    }

    /// `alpha0 / (1 - alpha1 - beta1)`.
    pub fn stationary_variance(&self) -> f64 {
        self.alpha0 / (1.0 - self.persistence())
    }

    pub fn stationary_mean(&self) -> f64 {
        self.phi0 / (1.0 - self.phi1)
    }
}

/// Start of the recursion: previous return, previous shock and the first
/// conditional variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterState {
    pub r0: f64,
    pub a0: f64,
    pub sigma2_1: f64,
}

impl FilterState {
    /// Unconditional mean, zero shock and the sample variance of the
    /// demeaned returns.
    pub fn from_returns(r: &[f64]) -> Self {
        Self { r0: stats::mean(r), a0: 0.0, sigma2_1: stats::variance(r) }
    }

    pub fn stationary(p: &ArmaGarchParams) -> Self {
        Self { r0: p.stationary_mean(), a0: 0.0, sigma2_1: p.stationary_variance() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmaGarchFit {
    pub params: ArmaGarchParams,
    pub innovation: Innovation,
    pub init: FilterState,
    /// Standardised residuals on the estimation window.
    pub residuals: Vec<f64>,
    /// Conditional volatilities on the estimation window.
    pub sigma: Vec<f64>,
    /// Gaussian quasi-log-likelihood at the estimate.
    pub loglik: f64,
    /// Set when `alpha1 + beta1 > 0.999`.
    pub near_unit_root: bool,
}

impl ArmaGarchFit {
    /// A fit from known coefficients started at the stationary state, for
    /// simulation.
    pub fn from_params(params: ArmaGarchParams, innovation: Innovation) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            innovation,
            init: FilterState::stationary(&params),
            residuals: Vec::new(),
            sigma: Vec::new(),
            loglik: f64::NAN,
            near_unit_root: params.persistence() > 0.999,
        })
    }
}

/// Conditional means, shocks and variances along `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterPath {
    pub mu: Vec<f64>,
    pub shock: Vec<f64>,
    pub sigma2: Vec<f64>,
}

pub fn run_filter(p: &ArmaGarchParams, init: &FilterState, r: &[f64]) -> FilterPath {
    let n = r.len();
    let mut out = FilterPath { mu: Vec::with_capacity(n), shock: Vec::with_capacity(n), sigma2: Vec::with_capacity(n) };
    let (mut r_prev, mut a_prev) = (init.r0, init.a0);
    let mut s2 = init.sigma2_1;
    for (t, &rt) in r.iter().enumerate() {
        if t > 0 {
            s2 = p.alpha0 + p.alpha1 * a_prev * a_prev + p.beta1 * s2;
        }
        let mu = p.phi0 + p.phi1 * r_prev + p.theta1 * a_prev;
        let a = rt - mu;
        out.mu.push(mu);
        out.shock.push(a);
        out.sigma2.push(s2);
        r_prev = rt;
        a_prev = a;
    }
    out
}

fn gaussian_qll(p: &ArmaGarchParams, init: &FilterState, r: &[f64]) -> f64 {
    let (mut r_prev, mut a_prev) = (init.r0, init.a0);
    let mut s2 = init.sigma2_1;
    let mut ll = 0.0;
    for (t, &rt) in r.iter().enumerate() {
        if t > 0 {
            s2 = p.alpha0 + p.alpha1 * a_prev * a_prev + p.beta1 * s2;
        }
        if !(s2 > 0.0) || !s2.is_finite() {
            return f64::NEG_INFINITY;
        }
        let a = rt - (p.phi0 + p.phi1 * r_prev + p.theta1 * a_prev);
        ll -= 0.5 * (libm::log(2.0 * core::f64::consts::PI * s2) + a * a / s2);
        r_prev = rt;
        a_prev = a;
    }
    ll
}

const ARMA_BOUND: f64 = 0.999;
const PERSISTENCE_BOUND: f64 = 0.9999;

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-x))
}

fn logit(p: f64) -> f64 {
    libm::log(p / (1.0 - p))
}

fn unpack(th: &[f64], scale: f64) -> ArmaGarchParams {
    let persistence = PERSISTENCE_BOUND * logistic(th[4]);
    let share = logistic(th[5]);
    ArmaGarchParams {
        phi0: th[0],
        phi1: ARMA_BOUND * libm::tanh(th[1]),
        theta1: ARMA_BOUND * libm::tanh(th[2]),
        alpha0: scale * libm::exp(th[3]),
        alpha1: persistence * share,
        beta1: persistence * (1.0 - share),
    }
}

fn pack(p: &ArmaGarchParams, scale: f64) -> [f64; 6] {
    let persistence = p.persistence() / PERSISTENCE_BOUND;
    [
        p.phi0,
        libm::atanh(p.phi1 / ARMA_BOUND),
        libm::atanh(p.theta1 / ARMA_BOUND),
        libm::log(p.alpha0 / scale),
        logit(persistence),
        logit(p.alpha1 / p.persistence()),
    ]
}

/// `alpha1` below which the variance no longer responds to shocks.
const ARCH_NEGLIGIBLE: f64 = 1e-8;

/// With `alpha1` at zero, `beta1` only shapes the decay from the start
/// variance and is not identified; the optimizer can leave it anywhere up to
/// the persistence bound. Replaces such an estimate by the constant-variance
/// member (`alpha1 = beta1 = 0`, `alpha0` at its closed-form optimum) when
/// that is at least as likely.
fn reduce_flat_variance(p: ArmaGarchParams, neg_ll: f64, init: &FilterState, r: &[f64]) -> (ArmaGarchParams, f64) {
    if p.alpha1 >= ARCH_NEGLIGIBLE || p.beta1 == 0.0 {
        return (p, neg_ll);
    }
    let shocks = run_filter(&p, init, r).shock;
    let alpha0 = shocks[1..].iter().map(|a| a * a).sum::<f64>() / (shocks.len() - 1) as f64;
    if !(alpha0 > 0.0) {
        return (p, neg_ll);
    }
    let flat = ArmaGarchParams { alpha0, alpha1: 0.0, beta1: 0.0, ..p };
    let v = -gaussian_qll(&flat, init, r);
    if v <= neg_ll + 1e-9 * (1.0 + libm::fabs(neg_ll)) {
        (flat, v)
    } else {
        (p, neg_ll)
    }
}

/// Gaussian quasi-maximum-likelihood fit followed by a fit of the chosen
/// innovation law to the standardised residuals.
///
/// Constraints are enforced through the parameterisation: `tanh` bounds for
/// `phi1` and `theta1`, `exp` for `alpha0`, and a logistic persistence
/// `alpha1 + beta1 < 1` split logistically between the two terms.
pub fn fit_arma_garch(returns: &ReturnSeries, kind: InnovationKind) -> Result<ArmaGarchFit> {
    let r = returns.values();
    if r.len() < 12 {
        return Err(Error::InvalidInput(format!(
            "ARMA-GARCH fit needs at least 12 observations, got {}",
            r.len()
        )));
    }
    let init = FilterState::from_returns(r);
    if !(init.sigma2_1 > 0.0) {
        return Err(Error::Estimation { reason: "returns have zero variance".into(), best: None });
    }
    let scale = init.sigma2_1;
    let objective = |th: &[f64]| -gaussian_qll(&unpack(th, scale), &init, r);
    let m = init.r0;
    let starts = [
        ArmaGarchParams { phi0: m, phi1: 0.0, theta1: 0.0, alpha0: 0.1 * scale, alpha1: 0.1, beta1: 0.8 },
        ArmaGarchParams { phi0: m, phi1: 0.0, theta1: 0.0, alpha0: 0.6 * scale, alpha1: 0.2, beta1: 0.2 },
        ArmaGarchParams { phi0: m, phi1: 0.0, theta1: 0.0, alpha0: 0.02 * scale, alpha1: 0.05, beta1: 0.93 },
    ];
    let sd = libm::sqrt(scale);
    let step = [0.1 * sd, 0.2, 0.2, 0.5, 0.5, 0.5];
    let nm = NelderMead { max_evaluations: 6000, f_tol: 1e-12, x_tol: 1e-7 };
    let mut best: Option<(Vec<f64>, f64)> = None;
    for s in &starts {
        let mut th = pack(s, scale).to_vec();
        let mut val = objective(&th);
        // restart from the optimum until the simplex stops improving
        for _ in 0..4 {
            let res = nm.minimize(objective, &th, &step);
            if res.value < val - 1e-10 * (1.0 + libm::fabs(val)) {
                th = res.x;
                val = res.value;
            } else {
                if res.value < val {
                    th = res.x;
                    val = res.value;
                }
                break;
            }
        }
        if val.is_finite() && best.as_ref().is_none_or(|b| val < b.1) {
            best = Some((th, val));
        }
    }
    let Some((th, val)) = best else {
        return Err(Error::Estimation { reason: "quasi-likelihood not finite at any start".into(), best: None });
    };
    let (params, val) = reduce_flat_variance(unpack(&th, scale), val, &init, r);
    params.validate().map_err(|e| Error::Estimation {
        reason: format!("optimum outside the admissible region: {e}"),
        best: None,
    })?;
    let path = run_filter(&params, &init, r);
    let sigma: Vec<f64> = path.sigma2.iter().map(|s| libm::sqrt(*s)).collect();
    let residuals: Vec<f64> = path.shock.iter().zip(&sigma).map(|(a, s)| a / s).collect();
    let innovation = fit_innovation(&residuals, kind)?;
    Ok(ArmaGarchFit {
        params,
        innovation,
        init,
        residuals,
        sigma,
        loglik: -val,
        near_unit_root: params.persistence() > 0.999,
    })
}

/// Fits the innovation law to standardised residuals: `nu` by golden-section
/// likelihood search for Student's t, NIG by maximum likelihood followed by
/// standardisation.
pub fn fit_innovation(eps: &[f64], kind: InnovationKind) -> Result<Innovation> {
    match kind {
        InnovationKind::Gaussian => Ok(Innovation::Gaussian),
        InnovationKind::StudentT => {
            let neg_ll = |nu: f64| {
                let s = t_scale(nu);
                -eps.iter().map(|&e| student_t_ln_pdf(e / s, nu) - libm::log(s)).sum::<f64>()
            };
            let (nu, _) = golden_section(neg_ll, 2.05, 200.0, 1e-6);
            Innovation::student_t(nu)
        }
        InnovationKind::Nig => Ok(Innovation::nig(nig_mle_values(eps)?.params)),
    }
}

/// Standardised residuals of `returns` under `fit`, starting the recursion
/// from the fit's stored state.
pub fn filter_residuals(fit: &ArmaGarchFit, returns: &ReturnSeries) -> Result<ReturnSeries> {
    let path = run_filter(&fit.params, &fit.init, returns.values());
    let mut eps = Vec::with_capacity(returns.len());
    for (t, (a, s2)) in path.shock.iter().zip(&path.sigma2).enumerate() {
        if !(*s2 > 0.0) {
            return Err(Error::Parameter(format!(
                "conditional variance {s2} at period {} is not positive",
                returns.times()[t]
            )));
        }
        eps.push(a / libm::sqrt(*s2));
    }
    ReturnSeries::new(returns.label(), returns.times().to_vec(), eps)
}

/// Returns generated by the recursion from the fit's start state with the
/// given innovations.
pub fn simulate_with_innovations(fit: &ArmaGarchFit, eps: &[f64]) -> Vec<f64> {
    let p = &fit.params;
    let (mut r_prev, mut a_prev) = (fit.init.r0, fit.init.a0);
    let mut s2 = fit.init.sigma2_1;
    eps.iter()
        .enumerate()
        .map(|(t, e)| {
            if t > 0 {
                s2 = p.alpha0 + p.alpha1 * a_prev * a_prev + p.beta1 * s2;
            }
            let a = libm::sqrt(s2) * e;
            let r = p.phi0 + p.phi1 * r_prev + p.theta1 * a_prev + a;
            r_prev = r;
            a_prev = a;
            r
        })
        .collect()
}

/// `n_paths` simulated return paths of length `horizon` (rows are paths).
/// Path `i` draws its innovations from ChaCha stream `i` of `seed`.
pub fn simulate_paths(fit: &ArmaGarchFit, horizon: usize, n_paths: usize, seed: u64) -> Result<ScenarioMatrix> {
    if horizon == 0 || n_paths == 0 {
        return Err(Error::InvalidInput("simulation needs horizon >= 1 and n_paths >= 1".into()));
    }
    let mut data = Vec::with_capacity(horizon * n_paths);
    for i in 0..n_paths {
        let mut g = rng::stream(seed, i as u64);
        let eps: Vec<f64> = (0..horizon).map(|_| fit.innovation.sample(&mut g)).collect();
        data.extend(simulate_with_innovations(fit, &eps));
    }
    ScenarioMatrix::from_rows(n_paths, horizon, data, seed)
}

/// One-step-ahead VaR forecasts, `values[level][k]` for the `k`-th period
/// of the window.
#[derive(Debug, Clone, PartialEq)]
pub struct VarForecasts {
    pub periods: Vec<i32>,
    pub levels: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl VarForecasts {
    /// Long format `(period, level, var)`, periods outermost.
    pub fn rows(&self) -> Vec<(i32, f64, f64)> {
        let mut out = Vec::with_capacity(self.periods.len() * self.levels.len());
        for (k, &t) in self.periods.iter().enumerate() {
            for (j, &a) in self.levels.iter().enumerate() {
                out.push((t, a, self.values[j][k]));
            }
        }
        out
    }

    pub fn for_level(&self, level: f64) -> Option<&[f64]> {
        self.levels.iter().position(|a| *a == level).map(|j| self.values[j].as_slice())
    }
}

/// `VaR_{a,t} = -(mu_t + sigma_t q_a)` over the positions in `window`,
/// with `mu_t`, `sigma_t` filtered from all returns before `t`.
pub fn forecast_var(
    fit: &ArmaGarchFit,
    returns: &ReturnSeries,
    levels: &[f64],
    window: Range<usize>,
) -> Result<VarForecasts> {
    if let Some(a) = levels.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
        return Err(Error::InvalidInput(format!("quantile level {a} outside (0, 1)")));
    }
    if window.start >= window.end || window.end > returns.len() {
        return Err(Error::Range(format!(
            "forecast window {}..{} outside a series of length {}",
            window.start,
            window.end,
            returns.len()
        )));
    }
    let path = run_filter(&fit.params, &fit.init, returns.values());
    let quantiles: Vec<f64> = levels.iter().map(|&a| fit.innovation.quantile(a)).collect();
    let values = quantiles
        .iter()
        .map(|q| window.clone().map(|t| -(path.mu[t] + libm::sqrt(path.sigma2[t]) * q)).collect())
        .collect();
    Ok(VarForecasts {
        periods: returns.times()[window].to_vec(),
        levels: levels.to_vec(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn white() -> ArmaGarchParams {
        ArmaGarchParams { phi0: 0.0, phi1: 0.0, theta1: 0.0, alpha0: 1.0, alpha1: 0.0, beta1: 0.0 }
    }

    #[test]
    fn validation_rejects_nonstationary() {
        let mut p = white();
        p.alpha1 = 0.5;
        p.beta1 = 0.5;
        assert!(p.validate().is_err());
        p.beta1 = 0.4;
        assert!(p.validate().is_ok());
        p.phi1 = -1.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn pack_unpack_round_trip() {
        let p = ArmaGarchParams { phi0: 0.1, phi1: 0.3, theta1: -0.2, alpha0: 0.05, alpha1: 0.1, beta1: 0.85 };
        let q = unpack(&pack(&p, 2.0), 2.0);
        for (a, b) in [(p.phi1, q.phi1), (p.theta1, q.theta1), (p.alpha0, q.alpha0), (p.alpha1, q.alpha1), (p.beta1, q.beta1)] {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn flat_variance_estimate_is_reduced() {
        let mut g = rng::stream(5, 0);
        let r: Vec<f64> = (0..60).map(|_| g.sample::<f64, _>(StandardNormal)).collect();
        let init = FilterState::from_returns(&r);
        // stationary level equal to the start variance: beta1 changes nothing
        let drifting = ArmaGarchParams { alpha0: init.sigma2_1 * 1e-4, alpha1: 0.0, beta1: 0.9999, ..white() };
        let v = -gaussian_qll(&drifting, &init, &r);
        let (q, w) = reduce_flat_variance(drifting, v, &init, &r);
        assert_eq!((q.alpha1, q.beta1), (0.0, 0.0));
        assert!(w <= v);
        let live = ArmaGarchParams { alpha0: 0.1, alpha1: 0.1, beta1: 0.8, ..white() };
        let v = -gaussian_qll(&live, &init, &r);
        assert_eq!(reduce_flat_variance(live, v, &init, &r), (live, v));
    }

    #[test]
    fn short_series_rejected() {
        let r = ReturnSeries::from_values("x", vec![0.1, -0.2, 0.3, 0.0, 0.1]).unwrap();
        assert!(matches!(fit_arma_garch(&r, InnovationKind::StudentT), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn gaussian_var_at_five_percent() {
        let fit = ArmaGarchFit::from_params(white(), Innovation::Gaussian).unwrap();
        let r = ReturnSeries::from_values("x", vec![0.0; 4]).unwrap();
        let f = forecast_var(&fit, &r, &[0.05, 0.5], 0..4).unwrap();
        for v in &f.values[0] {
            assert!((v - 1.644_853_626_951_472_2).abs() < 1e-9);
        }
        for v in &f.values[1] {
            assert!(v.abs() < 1e-12);
        }
        assert!(forecast_var(&fit, &r, &[0.05], 2..5).is_err());
    }

    #[test]
    fn student_quantile_matches_cdf() {
        let inn = Innovation::student_t(5.0).unwrap();
        let q = inn.quantile(0.01);
        assert!((inn.cdf(q) - 0.01).abs() < 1e-10);
        assert!(Innovation::student_t(2.0).is_err());
    }
}
