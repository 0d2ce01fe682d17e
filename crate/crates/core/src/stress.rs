//! Joint tail risk of a portfolio against a stress factor.
//!
//! The pair is modelled as a normal mean-variance mixture with a common
//! inverse-Gaussian driver: each draw uses one normal and one uniform to
//! produce both mixing variables through the Michael-Schucany-Haas map, so
//! each marginal is exactly NIG and the mixing is shared (identical up to
//! scale when `delta * gamma` agrees across the marginals). The Gaussian
//! parts are correlated with coefficient `rho`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Open01, StandardNormal};

use crate::error::{Error, Result};
use crate::ingest::ReturnSeries;
use crate::nig::{inverse_gaussian_from, nig_mle_values, NigParams};
use crate::rng;
use crate::stats;

/// Default stress levels.
pub const STRESS_LEVELS: [f64; 3] = [0.10, 0.05, 0.01];

/// Minimum joint sample size for tail measures.
pub const MIN_JOINT_SAMPLE: usize = 1000;

const MOMENT_DRAWS: usize = 400_000;
const MOMENT_SEED: u64 = 0x5EED_B1A5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BivariateNig {
    pub x: NigParams,
    pub y: NigParams,
    /// Correlation of the Gaussian components.
    pub rho: f64,
    /// Model correlation of `(X, Y)` implied by `rho`.
    pub correlation: f64,
}

fn mixing_pair(x: &NigParams, y: &NigParams, z0: f64, u: f64) -> (f64, f64) {
    let wx = inverse_gaussian_from(z0, u, x.delta() / x.gamma(), x.delta() * x.delta());
    let wy = inverse_gaussian_from(z0, u, y.delta() / y.gamma(), y.delta() * y.delta());
    (wx, wy)
}

/// `(Cov(Wx, Wy), E[sqrt(Wx Wy)])` under the common driver, by a fixed-seed
/// Monte Carlo.
fn mixing_moments(x: &NigParams, y: &NigParams) -> (f64, f64) {
    let mut g = rng::stream(MOMENT_SEED, 0);
    let (mut sx, mut sy, mut sxy, mut sq) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..MOMENT_DRAWS {
        let z0: f64 = g.sample(StandardNormal);
        let u: f64 = g.sample(Open01);
        let (wx, wy) = mixing_pair(x, y, z0, u);
        sx += wx;
        sy += wy;
        sxy += wx * wy;
        sq += libm::sqrt(wx * wy);
    }
    let n = MOMENT_DRAWS as f64;
    let cov = sxy / n - (sx / n) * (sy / n);
    (cov, sq / n)
}

impl BivariateNig {
    /// Builds the spec with Gaussian correlation `rho`.
    pub fn new(x: NigParams, y: NigParams, rho: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&rho) {
            return Err(Error::Parameter(format!("rho = {rho} outside [-1, 1]")));
        }
        let (a, b) = mixing_moments(&x, &y);
        let sd = libm::sqrt(x.variance() * y.variance());
        let correlation = x.beta() * y.beta() * a / sd + rho * b / sd;
        Ok(Self { x, y, rho, correlation })
    }
}

/// Marginals by NIG maximum likelihood; `rho` chosen so that the model
/// correlation `(bx by Cov(Wx, Wy) + rho E[sqrt(Wx Wy)]) / (sx sy)` equals
/// the sample correlation, clamped to `[-1, 1]`.
pub fn fit_bivariate_nig(x: &ReturnSeries, y: &ReturnSeries) -> Result<BivariateNig> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { expected: x.len(), found: y.len() });
    }
    if x.len() < 8 {
        return Err(Error::InvalidInput(format!("bivariate fit needs at least 8 pairs, got {}", x.len())));
    }
    let px = nig_mle_values(x.values())?.params;
    let py = nig_mle_values(y.values())?.params;
    let target = stats::pearson(x.values(), y.values());
    let (a, b) = mixing_moments(&px, &py);
    let sd = libm::sqrt(px.variance() * py.variance());
    let rho = ((target * sd - px.beta() * py.beta() * a) / b).clamp(-1.0, 1.0);
    BivariateNig::new(px, py, rho)
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointSample {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub seed: u64,
    pub labels: (String, String),
}

impl JointSample {
    pub fn new(x: Vec<f64>, y: Vec<f64>, seed: u64, labels: (String, String)) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch { expected: x.len(), found: y.len() });
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("joint sample contains non-finite values".into()));
        }
        Ok(Self { x, y, seed, labels })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn correlation(&self) -> f64 {
        stats::pearson(&self.x, &self.y)
    }
}

/// `n` draws from `spec`; deterministic in `seed`.
pub fn simulate_joint(spec: &BivariateNig, n: usize, seed: u64) -> Result<JointSample> {
    if n == 0 {
        return Err(Error::InvalidInput("joint simulation needs n >= 1".into()));
    }
    let mut g = rng::stream(seed, 0);
    let c = libm::sqrt(1.0 - spec.rho * spec.rho);
    let (mut xs, mut ys) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for _ in 0..n {
        let z0: f64 = g.sample(StandardNormal);
        let u: f64 = g.sample(Open01);
        let z1: f64 = g.sample(StandardNormal);
        let z2: f64 = g.sample(StandardNormal);
        let (wx, wy) = mixing_pair(&spec.x, &spec.y, z0, u);
        let zy = spec.rho * z1 + c * z2;
        xs.push(spec.x.mu() + spec.x.beta() * wx + libm::sqrt(wx) * z1);
        ys.push(spec.y.mu() + spec.y.beta() * wy + libm::sqrt(wy) * zy);
    }
    JointSample::new(xs, ys, seed, (String::from("x"), String::from("y")))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailMeasures {
    pub covar: f64,
    pub coes: f64,
    pub coetl: f64,
}

/// CoVaR, CoES and CoETL on the return scale (negative for losses).
///
/// With `q` the lower empirical quantile and `S = {X <= q_a(X)}`:
/// `covar = q_a(Y | S)`, `coes = mean(Y | Y <= covar, S)` and
/// `coetl = mean(Y | Y <= q_a(Y), S)`.
pub fn conditional_tail_measures(sample: &JointSample, level: f64) -> Result<TailMeasures> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidInput(format!("stress level {level} outside (0, 1)")));
    }
    let n = sample.len();
    if n < MIN_JOINT_SAMPLE {
        return Err(Error::SampleSize { required: MIN_JOINT_SAMPLE, available: n });
    }
    let qx = stats::lower_quantile(&sample.x, level);
    let qy = stats::lower_quantile(&sample.y, level);
    let cond: Vec<f64> = sample.x.iter().zip(&sample.y).filter(|(x, _)| **x <= qx).map(|(_, y)| *y).collect();
    let covar = stats::lower_quantile(&cond, level);
    let beyond: Vec<f64> = cond.iter().copied().filter(|y| *y <= covar).collect();
    let coes = stats::mean(&beyond);
    let joint: Vec<f64> = cond.iter().copied().filter(|y| *y <= qy).collect();
    if joint.is_empty() {
        let required = (libm::ceil(1.0 / (level * level)) as usize).max(n + 1);
        return Err(Error::SampleSize { required, available: n });
    }
    Ok(TailMeasures { covar, coes, coetl: stats::mean(&joint) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StressReport {
    pub factor: String,
    pub level: f64,
    pub covar: f64,
    pub coes: f64,
    pub coetl: f64,
    pub correlation: f64,
}

/// For each factor: fit the pair (factor, portfolio), simulate `n` draws
/// with a seed derived from `seed` and the factor index, and measure at
/// each level.
pub fn stress_report(factors: &[ReturnSeries], portfolio: &ReturnSeries, levels: &[f64], n: usize, seed: u64) -> Result<Vec<StressReport>> {
    let mut out = Vec::with_capacity(factors.len() * levels.len());
    for (k, f) in factors.iter().enumerate() {
        if f.times() != portfolio.times() {
            return Err(Error::InvalidInput(format!(
                "factor '{}' is not aligned with portfolio '{}'",
                f.label(),
                portfolio.label()
            )));
        }
        let spec = fit_bivariate_nig(f, portfolio)?;
        let mut sample = simulate_joint(&spec, n, rng::derive_seed(seed, k as u64))?;
        sample.labels = (String::from(f.label()), String::from(portfolio.label()));
        let correlation = sample.correlation();
        for &a in levels {
            let m = conditional_tail_measures(&sample, a)?;
            out.push(StressReport {
                factor: String::from(f.label()),
                level: a,
                covar: m.covar,
                coes: m.coes,
                coetl: m.coetl,
                correlation,
            });
        }
    }
    Ok(out)
}
