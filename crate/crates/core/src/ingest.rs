//! Loss panels, deflation, missing-cell imputation, the aggregate index and
//! log returns.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Year-by-category loss amounts (currency units), stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LossPanel {
    years: Vec<i32>,
    categories: Vec<String>,
    losses: Vec<f64>,
    missing: Vec<bool>,
    imputed: Vec<bool>,
}

impl LossPanel {
    /// Builds a panel from row-major cells; `None` marks a missing cell.
    pub fn new(years: Vec<i32>, categories: Vec<String>, cells: Vec<Option<f64>>) -> Result<Self> {
        if cells.len() != years.len() * categories.len() {
            return Err(Error::LengthMismatch {
                expected: years.len() * categories.len(),
                found: cells.len(),
            });
        }
        for w in years.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidInput(if w[1] == w[0] {
                    format!("duplicate year {}", w[0])
                } else {
                    format!("years not increasing at {} -> {}", w[0], w[1])
                }));
            }
        }
        let mut losses = Vec::with_capacity(cells.len());
        let mut missing = Vec::with_capacity(cells.len());
        for (i, c) in cells.iter().enumerate() {
            match c {
                Some(v) if v.is_finite() && *v >= 0.0 => {
                    losses.push(*v);
                    missing.push(false);
                }
                Some(v) => {
                    let p = categories.len();
                    return Err(Error::InvalidInput(format!(
                        "loss {v} for {} in {} must be finite and nonnegative",
                        categories[i % p],
                        years[i / p]
                    )));
                }
                None => {
                    losses.push(0.0);
                    missing.push(true);
                }
            }
        }
        let imputed = alloc::vec![false; cells.len()];
        Ok(Self { years, categories, losses, missing, imputed })
    }

    pub fn years(&self) -> &[i32] {
        &self.years
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn n_years(&self) -> usize {
        self.years.len()
    }

    pub fn n_categories(&self) -> usize {
        self.categories.len()
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        let i = row * self.n_categories() + col;
        if self.missing[i] {
            None
        } else {
            Some(self.losses[i])
        }
    }

    pub fn is_missing(&self, row: usize, col: usize) -> bool {
        self.missing[row * self.n_categories() + col]
    }

    /// Whether the cell was filled by [`impute_missing`].
    pub fn is_imputed(&self, row: usize, col: usize) -> bool {
        self.imputed[row * self.n_categories() + col]
    }

    pub fn missing_count(&self) -> usize {
        self.missing.iter().filter(|m| **m).count()
    }

    /// Column of a complete panel as a level series.
    pub fn category_levels(&self, col: usize) -> Result<LevelSeries> {
        let mut levels = Vec::with_capacity(self.n_years());
        for row in 0..self.n_years() {
            levels.push(self.get(row, col).ok_or_else(|| {
                Error::InvalidInput(format!(
                    "missing {} in {}; impute the panel first",
                    self.categories[col], self.years[row]
                ))
            })?);
        }
        Ok(LevelSeries {
            label: self.categories[col].clone(),
            periods: self.years.clone(),
            levels,
        })
    }
}

/// Year to deflator factor (reference year maps to 1.0).
#[derive(Debug, Clone, PartialEq)]
pub struct DeflatorTable {
    factors: BTreeMap<i32, f64>,
}

impl DeflatorTable {
    pub fn new(entries: impl IntoIterator<Item = (i32, f64)>) -> Result<Self> {
        let mut factors = BTreeMap::new();
        for (year, f) in entries {
            if !(f.is_finite() && f > 0.0) {
                return Err(Error::InvalidInput(format!("deflator for {year} must be positive, got {f}")));
            }
            if factors.insert(year, f).is_some() {
                return Err(Error::InvalidInput(format!("duplicate deflator year {year}")));
            }
        }
        Ok(Self { factors })
    }

    pub fn factor(&self, year: i32) -> Option<f64> {
        self.factors.get(&year).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        self.factors.iter().map(|(y, f)| (*y, *f))
    }
}

/// Level series indexed by period (e.g. the annual aggregate index).
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSeries {
    pub label: String,
    pub periods: Vec<i32>,
    pub levels: Vec<f64>,
}

/// Log-return series; `times[t]` is the period the return ends in.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    label: String,
    times: Vec<i32>,
    values: Vec<f64>,
}

impl ReturnSeries {
    pub fn new(label: impl Into<String>, times: Vec<i32>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::LengthMismatch { expected: times.len(), found: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite return at period {}", times[i])));
        }
        Ok(Self { label: label.into(), times, values })
    }

    /// Series with consecutive integer periods starting at zero.
    pub fn from_values(label: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let times = (0..values.len() as i32).collect();
        Self::new(label, times, values)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn times(&self) -> &[i32] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Index of the first observation whose period is `>= period`.
    pub fn position_of(&self, period: i32) -> usize {
        self.times.partition_point(|t| *t < period)
    }
}

/// Multiplies each cell by its year's deflator.
pub fn adjust_cpi(panel: &LossPanel, table: &DeflatorTable) -> Result<LossPanel> {
    let p = panel.n_categories();
    let mut out = panel.clone();
    for (row, &year) in panel.years.iter().enumerate() {
        let f = table.factor(year).ok_or(Error::Coverage { year })?;
        for v in &mut out.losses[row * p..(row + 1) * p] {
            *v *= f;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImputeConfig {
    pub n_components: usize,
    /// Convergence threshold on the largest change of a filled cell,
    /// measured in units of its column's standard deviation.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ImputeConfig {
    fn default() -> Self {
        Self { n_components: 2, tol: 1e-6, max_iter: 500 }
    }
}

/// Fills missing cells by regularized iterative PCA.
///
/// Missing cells start at their column means. Each sweep standardises the
/// completed matrix, takes a rank-`k` SVD with singular values shrunk by
/// the noise variance estimated from the discarded components, and writes
/// the reconstruction back into the missing cells. Observed cells are
/// never touched; filled cells are clamped at zero after convergence.
pub fn impute_missing(panel: &LossPanel, cfg: &ImputeConfig) -> Result<LossPanel> {
    let n = panel.n_years();
    let p = panel.n_categories();
    let k = cfg.n_components;
    if k == 0 || k >= n.min(p) {
        return Err(Error::Imputation(format!(
            "n_components = {k} must be in 1..{}",
            n.min(p)
        )));
    }
    if panel.missing_count() == 0 {
        return Ok(panel.clone());
    }
    for row in 0..n {
        if (0..p).all(|c| panel.is_missing(row, c)) {
            return Err(Error::Imputation(format!("year {} has no observed value", panel.years[row])));
        }
    }
    let mut col_means = alloc::vec![0.0; p];
    for (col, m) in col_means.iter_mut().enumerate() {
        let obs: Vec<f64> = (0..n).filter_map(|r| panel.get(r, col)).collect();
        if obs.is_empty() {
            return Err(Error::Imputation(format!("category {} has no observed value", panel.categories[col])));
        }
        *m = obs.iter().sum::<f64>() / obs.len() as f64;
    }

    let mut x = DMatrix::from_fn(n, p, |r, c| panel.get(r, c).unwrap_or(col_means[c]));
    let holes: Vec<(usize, usize)> = (0..n)
        .flat_map(|r| (0..p).map(move |c| (r, c)))
        .filter(|&(r, c)| panel.is_missing(r, c))
        .collect();

    let nf = n as f64;
    let pf = p as f64;
    let kf = k as f64;
    let mut residual = f64::INFINITY;
    let mut converged = false;
    for _ in 0..cfg.max_iter {
        let mut means = alloc::vec![0.0; p];
        let mut scales = alloc::vec![1.0; p];
        for c in 0..p {
            let col = x.column(c);
            let m = col.mean();
            let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / nf;
            means[c] = m;
            if var > 0.0 {
                scales[c] = libm::sqrt(var);
            }
        }
        let z = DMatrix::from_fn(n, p, |r, c| (x[(r, c)] - means[c]) / scales[c]);
        let svd = z.svd(true, true);
        let (u, vt) = match (svd.u, svd.v_t) {
            (Some(u), Some(vt)) => (u, vt),
            _ => return Err(Error::Imputation("SVD failed".into())),
        };
        // Singular values in the row-weighted (1/n) metric, descending.
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let vs: Vec<f64> = order.iter().map(|&i| svd.singular_values[i] / libm::sqrt(nf)).collect();
        let tail: f64 = vs.iter().skip(k).map(|v| v * v).sum();
        let denom = (nf - 1.0) * pf - (nf - 1.0) * kf - pf * kf + kf * kf;
        let sigma2 = if denom > 0.0 { nf * pf / pf.min(nf - 1.0) * tail / denom } else { 0.0 };

        residual = 0.0;
        for &(r, c) in &holes {
            let mut rec = 0.0;
            for (s, &idx) in order.iter().take(k).enumerate() {
                let v = vs[s];
                if v <= 1e-300 {
                    continue;
                }
                let shrunk = ((v * v - sigma2) / v).max(0.0) * libm::sqrt(nf);
                rec += u[(r, idx)] * shrunk * vt[(idx, c)];
            }
            let new = rec * scales[c] + means[c];
            residual = residual.max(libm::fabs(new - x[(r, c)]) / scales[c]);
            x[(r, c)] = new;
        }
        if residual < cfg.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Convergence { iterations: cfg.max_iter, residual });
    }

    let mut out = panel.clone();
    for &(r, c) in &holes {
        let i = r * p + c;
        out.losses[i] = x[(r, c)].max(0.0);
        out.missing[i] = false;
        out.imputed[i] = true;
    }
    Ok(out)
}

/// Aggregate index: per-year sum of all category losses.
pub fn build_index(panel: &LossPanel) -> Result<LevelSeries> {
    if let Some(i) = panel.missing.iter().position(|m| *m) {
        let p = panel.n_categories();
        return Err(Error::InvalidInput(format!(
            "panel has missing cell ({}, {}); impute before building the index",
            panel.years[i / p],
            panel.categories[i % p]
        )));
    }
    let p = panel.n_categories();
    let levels = panel.losses.chunks(p).map(|row| row.iter().sum()).collect();
    Ok(LevelSeries {
        label: String::from("index"),
        periods: panel.years.clone(),
        levels,
    })
}

/// `values[t] = ln(level[t]) - ln(level[t-1])`, labelled by the later period.
pub fn log_returns(levels: &LevelSeries) -> Result<ReturnSeries> {
    if levels.levels.len() != levels.periods.len() {
        return Err(Error::LengthMismatch { expected: levels.periods.len(), found: levels.levels.len() });
    }
    if levels.levels.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 levels for returns, got {}",
            levels.levels.len()
        )));
    }
    for (&period, &value) in levels.periods.iter().zip(&levels.levels) {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::Domain { period, value });
        }
    }
    let values = levels
        .levels
        .windows(2)
        .map(|w| libm::log(w[1]) - libm::log(w[0]))
        .collect();
    ReturnSeries::new(levels.label.clone(), levels.periods[1..].to_vec(), values)
}
