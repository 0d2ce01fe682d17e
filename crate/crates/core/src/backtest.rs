//! VaR exceedance accounting and coverage tests.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::garch::VarForecasts;
use crate::special::{binom_cdf, chi2_1_ppf, chi2_sf, norm_ppf, xlny};

/// Basel-style traffic-light zone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Zone {
    Green,
    Yellow,
    Red,
}

impl Zone {
    pub fn as_str(&self) -> &'static str {
        match self {
            Zone::Green => "green",
            Zone::Yellow => "yellow",
            Zone::Red => "red",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Accept,
    Reject,
}

impl Decision {
    pub fn as_str(&self) -> &'static str {
        match self {
            Decision::Accept => "accept",
            Decision::Reject => "reject",
        }
    }

    pub fn accepted(&self) -> bool {
        *self == Decision::Accept
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrafficLight {
    pub zone: Zone,
    /// `P(X <= n_exceed)` for `X ~ Binomial(n_obs, level)`.
    pub cumulative: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestOutcome {
    pub decision: Decision,
    pub statistic: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacktestResult {
    pub level: f64,
    pub n_obs: usize,
    pub n_exceed: usize,
    pub traffic: TrafficLight,
    pub binomial: TestOutcome,
    pub pof: TestOutcome,
    pub cci: TestOutcome,
}

/// `indicator_t = r_t < -VaR_t`.
pub fn count_exceedances(returns: &[f64], var: &[f64]) -> Result<Vec<bool>> {
    if returns.len() != var.len() {
        return Err(Error::LengthMismatch { expected: returns.len(), found: var.len() });
    }
    Ok(returns.iter().zip(var).map(|(r, v)| *r < -*v).collect())
}

fn check_counts(n_obs: usize, n_exceed: usize, level: f64) -> Result<()> {
    if n_exceed > n_obs {
        return Err(Error::InvalidInput(format!("{n_exceed} exceedances in {n_obs} observations")));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidInput(format!("level {level} outside (0, 1)")));
    }
    Ok(())
}

/// Green up to a cumulative probability of 0.95, yellow up to 0.9999, red
/// beyond.
pub fn traffic_light(n_obs: usize, n_exceed: usize, level: f64) -> Result<TrafficLight> {
    check_counts(n_obs, n_exceed, level)?;
    let cumulative = binom_cdf(n_exceed as u64, n_obs as u64, level);
    let zone = if cumulative <= 0.95 {
        Zone::Green
    } else if cumulative <= 0.9999 {
        Zone::Yellow
    } else {
        Zone::Red
    };
    Ok(TrafficLight { zone, cumulative })
}

/// Kupiec proportion-of-failures likelihood ratio.
pub fn pof_test(n_obs: usize, n_exceed: usize, level: f64, significance: f64) -> Result<TestOutcome> {
    check_counts(n_obs, n_exceed, level)?;
    if n_obs == 0 {
        return Err(Error::Range("proportion-of-failures test on an empty window".into()));
    }
    let t = n_obs as f64;
    let x = n_exceed as f64;
    let phat = x / t;
    let null = xlny(t - x, 1.0 - level) + xlny(x, level);
    let alt = xlny(t - x, 1.0 - phat) + xlny(x, phat);
    let lr = (-2.0 * (null - alt)).max(0.0);
    Ok(chi2_outcome(lr, significance))
}

/// Two-sided normal-approximation binomial test.
pub fn binomial_test(n_obs: usize, n_exceed: usize, level: f64, significance: f64) -> Result<TestOutcome> {
    check_counts(n_obs, n_exceed, level)?;
    if n_obs == 0 {
        return Err(Error::Range("binomial test on an empty window".into()));
    }
    let t = n_obs as f64;
    let z = (n_exceed as f64 - level * t) / libm::sqrt(level * (1.0 - level) * t);
    let crit = norm_ppf(1.0 - 0.5 * significance);
    let p_value = 2.0 * crate::special::norm_cdf(-libm::fabs(z));
    let decision = if libm::fabs(z) > crit { Decision::Reject } else { Decision::Accept };
    Ok(TestOutcome { decision, statistic: z, p_value })
}

/// Christoffersen independence likelihood ratio from first-order transition
/// counts.
pub fn cci_test(indicators: &[bool], significance: f64) -> Result<TestOutcome> {
    if indicators.len() < 2 {
        return Err(Error::InvalidInput("independence test needs at least two indicators".into()));
    }
    let mut n = [[0.0f64; 2]; 2];
    for w in indicators.windows(2) {
        n[w[0] as usize][w[1] as usize] += 1.0;
    }
    let (n00, n01, n10, n11) = (n[0][0], n[0][1], n[1][0], n[1][1]);
    let total = n00 + n01 + n10 + n11;
    let pi = (n01 + n11) / total;
    let pi01 = if n00 + n01 > 0.0 { n01 / (n00 + n01) } else { 0.0 };
    let pi11 = if n10 + n11 > 0.0 { n11 / (n10 + n11) } else { 0.0 };
    let null = xlny(n00 + n10, 1.0 - pi) + xlny(n01 + n11, pi);
    let alt = xlny(n00, 1.0 - pi01) + xlny(n01, pi01) + xlny(n10, 1.0 - pi11) + xlny(n11, pi11);
    let lr = (-2.0 * (null - alt)).max(0.0);
    Ok(chi2_outcome(lr, significance))
}

fn chi2_outcome(lr: f64, significance: f64) -> TestOutcome {
    let decision = if lr > chi2_1_ppf(1.0 - significance) { Decision::Reject } else { Decision::Accept };
    TestOutcome { decision, statistic: lr, p_value: chi2_sf(lr, 1.0) }
}

/// Runs all four tests at every forecast level. `realized[k]` is the
/// return of the `k`-th forecast period.
pub fn run_backtest_suite(realized: &[f64], forecasts: &VarForecasts, significance: f64) -> Result<Vec<BacktestResult>> {
    if forecasts.periods.is_empty() || realized.is_empty() {
        return Err(Error::Range("empty backtest window".into()));
    }
    if realized.len() != forecasts.periods.len() {
        return Err(Error::LengthMismatch { expected: forecasts.periods.len(), found: realized.len() });
    }
    if !(significance > 0.0 && significance < 1.0) {
        return Err(Error::InvalidInput(format!("significance {significance} outside (0, 1)")));
    }
    forecasts
        .levels
        .iter()
        .zip(&forecasts.values)
        .map(|(&level, var)| {
            let ind = count_exceedances(realized, var)?;
            let n_obs = ind.len();
            let n_exceed = ind.iter().filter(|b| **b).count();
            let cci = if n_obs >= 2 {
                cci_test(&ind, significance)?
            } else {
                TestOutcome { decision: Decision::Accept, statistic: f64::NAN, p_value: f64::NAN }
            };
            Ok(BacktestResult {
                level,
                n_obs,
                n_exceed,
                traffic: traffic_light(n_obs, n_exceed, level)?,
                binomial: binomial_test(n_obs, n_exceed, level, significance)?,
                pof: pof_test(n_obs, n_exceed, level, significance)?,
                cci,
            })
        })
        .collect()
}
