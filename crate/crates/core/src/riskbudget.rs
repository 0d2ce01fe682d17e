//! Tail-risk and center-risk budgets.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::nig::ScenarioMatrix;
use crate::stats;

/// Empirical expected tail loss `-(1/(a n)) (sum of the floor(a n) smallest
/// outcomes + frac * next one)`, positive for losses.
pub fn expected_tail_loss(values: &[f64], level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidInput(format!("tail level {level} outside (0, 1)")));
    }
    let required = libm::ceil(1.0 / level) as usize;
    if values.len() < required {
        return Err(Error::SampleSize { required, available: values.len() });
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let an = level * v.len() as f64;
    let whole = libm::floor(an) as usize;
    let frac = an - whole as f64;
    let mut s: f64 = v[..whole].iter().sum();
    if frac > 0.0 {
        s += frac * v[whole];
    }
    Ok(-s / an)
}

/// Standalone expected tail loss of every scenario column.
pub fn tail_risk_contrib(scenarios: &ScenarioMatrix, level: f64) -> Result<Vec<f64>> {
    if scenarios.n_paths() == 0 || scenarios.n_assets() == 0 {
        return Err(Error::InvalidInput("empty scenario matrix".into()));
    }
    (0..scenarios.n_assets()).map(|j| expected_tail_loss(&scenarios.column(j), level)).collect()
}

fn check_weights(w: &[f64], n: usize) -> Result<()> {
    if w.len() != n {
        return Err(Error::LengthMismatch { expected: n, found: w.len() });
    }
    if w.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
        return Err(Error::InvalidInput("weights must be finite and nonnegative".into()));
    }
    let s: f64 = w.iter().sum();
    if libm::fabs(s - 1.0) > 1e-9 {
        return Err(Error::InvalidInput(format!("weights sum to {s}, not 1")));
    }
    Ok(())
}

/// `R(w) = sqrt(w' S w)` for a row-major covariance `S`.
pub fn portfolio_volatility(cov: &[f64], w: &[f64]) -> f64 {
    let n = w.len();
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            q += w[i] * cov[i * n + j] * w[j];
        }
    }
    libm::sqrt(q)
}

/// Euler contributions `w_i (S w)_i / R(w)` for a row-major covariance.
pub fn center_risk_from_cov(cov: &[f64], w: &[f64]) -> Result<Vec<f64>> {
    let n = w.len();
    if cov.len() != n * n {
        return Err(Error::LengthMismatch { expected: n * n, found: cov.len() });
    }
    let r = portfolio_volatility(cov, w);
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Degenerate(format!("portfolio variance is {}", r * r)));
    }
    Ok((0..n)
        .map(|i| {
            let sw: f64 = (0..n).map(|j| cov[i * n + j] * w[j]).sum();
            w[i] * sw / r
        })
        .collect())
}

/// Center-risk contributions from per-asset return columns.
pub fn center_risk_contrib(columns: &[Vec<f64>], weights: &[f64]) -> Result<Vec<f64>> {
    check_weights(weights, columns.len())?;
    if let Some(c) = columns.iter().find(|c| c.len() != columns[0].len()) {
        return Err(Error::LengthMismatch { expected: columns[0].len(), found: c.len() });
    }
    if columns.first().is_none_or(|c| c.len() < 2) {
        return Err(Error::SampleSize { required: 2, available: columns.first().map_or(0, |c| c.len()) });
    }
    center_risk_from_cov(&stats::covariance_matrix(columns), weights)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BudgetRow {
    pub asset: String,
    pub tr95: f64,
    pub tr99: f64,
    pub cr: f64,
}

/// Percent shares per asset, sorted by descending TR95.
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetReport {
    pub rows: Vec<BudgetRow>,
}

fn percentages(x: &[f64], what: &str) -> Result<Vec<f64>> {
    let s: f64 = x.iter().sum();
    if s == 0.0 || !s.is_finite() {
        return Err(Error::Degenerate(format!("{what} contributions sum to {s}")));
    }
    Ok(x.iter().map(|v| 100.0 * v / s).collect())
}

/// TR at 95% and 99% on the weighted columns `w_i X_i` and CR from the
/// scenario covariance, each as a percentage of its column total.
pub fn budget_report(scenarios: &ScenarioMatrix, weights: &[f64], names: &[String]) -> Result<BudgetReport> {
    let n = scenarios.n_assets();
    check_weights(weights, n)?;
    if names.len() != n {
        return Err(Error::LengthMismatch { expected: n, found: names.len() });
    }
    let columns = scenarios.columns();
    let weighted: Vec<Vec<f64>> = columns
        .iter()
        .zip(weights)
        .map(|(c, w)| c.iter().map(|x| w * x).collect())
        .collect();
    let tr95: Vec<f64> = weighted.iter().map(|c| expected_tail_loss(c, 0.05)).collect::<Result<_>>()?;
    let tr99: Vec<f64> = weighted.iter().map(|c| expected_tail_loss(c, 0.01)).collect::<Result<_>>()?;
    let cr = center_risk_contrib(&columns, weights)?;
    let (p95, p99, pcr) = (percentages(&tr95, "TR95")?, percentages(&tr99, "TR99")?, percentages(&cr, "CR")?);
    let mut rows: Vec<BudgetRow> = (0..n)
        .map(|i| BudgetRow { asset: names[i].clone(), tr95: p95[i], tr99: p99[i], cr: pcr[i] })
        .collect();
    rows.sort_by(|a, b| b.tr95.total_cmp(&a.tr95));
    Ok(BudgetReport { rows })
}
