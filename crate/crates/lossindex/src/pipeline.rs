//! Pipeline stages: ingest, NIG fits, ARMA-GARCH fits and VaR forecasts,
//! backtests, price surfaces, risk budgets and stress measures.
//!
//! Stages are pure functions of the config and of upstream stage results.
//! Random draws use seeds derived from the run seed and a fixed per-stage
//! label, so running a single subcommand reproduces the corresponding
//! part of a full run.

use lossindex_core::backtest::{run_backtest_suite, BacktestResult};
use lossindex_core::garch::{fit_arma_garch, forecast_var, ArmaGarchFit, Innovation, InnovationKind, VarForecasts};
use lossindex_core::ingest::{adjust_cpi, build_index, impute_missing, log_returns, LevelSeries, LossPanel, ReturnSeries};
use lossindex_core::nig::{nig_mle, nig_sample, nig_scenarios, NigFit, NigParams};
use lossindex_core::pricer::{price_surface, PriceSurface, SurfaceKind};
use lossindex_core::riskbudget::{budget_report, BudgetReport};
use lossindex_core::rng::derive_seed;
use lossindex_core::stress::{stress_report, StressReport};
use lossindex_core::Error;

use crate::config::{BacktestMode, PricingParams, RunConfig};
use crate::error::{CliError, Result, StageExt};
use crate::files;

const SCENARIO_LABEL: u64 = 1;
const BUDGET_LABEL: u64 = 2;
const STRESS_LABEL: u64 = 3;

#[derive(Debug, Clone)]
pub struct Ingested {
    /// Deflated and imputed panel.
    pub panel: LossPanel,
    pub index: LevelSeries,
    pub index_returns: ReturnSeries,
    pub category_returns: Vec<ReturnSeries>,
}

pub fn ingest(cfg: &RunConfig) -> Result<Ingested> {
    let raw = files::read_loss_panel(&cfg.panel)?;
    let deflators = files::read_deflators(&cfg.deflators)?;
    let deflated = adjust_cpi(&raw, &deflators).map_err(|e| CliError::parse(&cfg.deflators, e.to_string()))?;
    let panel = impute_missing(&deflated, &cfg.impute).stage("ingest")?;
    if panel.missing_count() > 0 {
        log::info!("imputed {} missing cells", panel.missing_count());
    }
    let index = build_index(&panel).stage("ingest")?;
    let index_returns = log_returns(&index).stage("ingest")?;
    let category_returns = (0..panel.n_categories())
        .map(|j| panel.category_levels(j).and_then(|l| log_returns(&l)))
        .collect::<lossindex_core::Result<Vec<_>>>()
        .stage("ingest")?;
    Ok(Ingested { panel, index, index_returns, category_returns })
}

#[derive(Debug, Clone)]
pub struct NigRecord {
    pub label: String,
    pub fit: NigFit,
}

#[derive(Debug, Clone)]
pub struct NigStage {
    pub categories: Vec<NigRecord>,
    pub index: NigRecord,
    /// Index fit on the training years only; drives the scenario backtest.
    pub index_train: NigRecord,
}

fn training_part(r: &ReturnSeries, train_end: i32) -> Result<ReturnSeries> {
    let k = r.position_of(train_end + 1);
    ReturnSeries::new(r.label(), r.times()[..k].to_vec(), r.values()[..k].to_vec()).stage("ingest")
}

fn fit_one(r: &ReturnSeries, label: String) -> Result<NigRecord> {
    let fit = nig_mle(r).map_err(|e| CliError::Stage {
        stage: "fit-nig",
        source: match e {
            Error::Estimation { reason, best } => Error::Estimation { reason: format!("{label}: {reason}"), best },
            other => other,
        },
    })?;
    Ok(NigRecord { label, fit })
}

pub fn fit_nig(cfg: &RunConfig, ing: &Ingested) -> Result<NigStage> {
    let categories = ing
        .category_returns
        .iter()
        .map(|r| fit_one(r, r.label().to_string()))
        .collect::<Result<Vec<_>>>()?;
    let index = fit_one(&ing.index_returns, "index".into())?;
    let train = training_part(&ing.index_returns, cfg.train_end)?;
    let index_train = fit_one(&train, format!("index (through {})", cfg.train_end))?;
    Ok(NigStage { categories, index, index_train })
}

/// Index NIG fit alone, for stages that need nothing else.
pub fn fit_index_nig(ing: &Ingested) -> Result<NigFit> {
    Ok(fit_one(&ing.index_returns, "index".into())?.fit)
}

#[derive(Debug, Clone)]
pub struct GarchRun {
    pub fit: ArmaGarchFit,
    pub forecasts: VarForecasts,
    pub realized: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct GarchStage {
    pub mode: BacktestMode,
    pub series: String,
    pub n_train: usize,
    pub n_test: usize,
    pub runs: Vec<GarchRun>,
}

/// The return series the backtest runs on and its training length.
fn backtest_series(cfg: &RunConfig, ing: &Ingested) -> Result<(ReturnSeries, usize)> {
    let annual = &ing.index_returns;
    let n_train_years = annual.position_of(cfg.train_end + 1);
    let n_test_years = annual.len() - n_train_years;
    if n_train_years == 0 || n_test_years == 0 {
        return Err(CliError::Stage {
            stage: "fit-garch",
            source: Error::Range(format!(
                "split.train_end = {} leaves no training or no test years in {}..={}",
                cfg.train_end,
                annual.times()[0],
                annual.times()[annual.len() - 1]
            )),
        });
    }
    match cfg.mode {
        BacktestMode::Annual => {
            log::warn!("annual backtest mode: {n_test_years} test observations, the tests have little power");
            Ok((annual.clone(), n_train_years))
        }
        BacktestMode::Scenario => {
            let train = training_part(annual, cfg.train_end)?;
            let p = fit_one(&train, "index (training years)".into())?.fit.params;
            let n = cfg.scenario_count;
            let draws = nig_sample(n, 1.0, &p, derive_seed(cfg.seed, SCENARIO_LABEL));
            let n_test = ((n as f64 * n_test_years as f64 / annual.len() as f64).round() as usize).clamp(1, n);
            Ok((ReturnSeries::from_values("index scenarios", draws).stage("fit-garch")?, n - n_test))
        }
    }
}

pub fn fit_garch(cfg: &RunConfig, ing: &Ingested) -> Result<GarchStage> {
    let (series, n_train) = backtest_series(cfg, ing)?;
    let train = ReturnSeries::new(
        series.label(),
        series.times()[..n_train].to_vec(),
        series.values()[..n_train].to_vec(),
    )
    .stage("fit-garch")?;
    let runs = cfg
        .innovations
        .iter()
        .map(|&kind| {
            let fit = fit_arma_garch(&train, kind).stage("fit-garch")?;
            if fit.near_unit_root {
                log::warn!("{} fit is near a unit root (alpha1 + beta1 = {})", innovation_name(kind), fit.params.persistence());
            }
            let forecasts = forecast_var(&fit, &series, &cfg.levels, n_train..series.len()).stage("fit-garch")?;
            Ok(GarchRun { fit, forecasts, realized: series.values()[n_train..].to_vec() })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GarchStage {
        mode: cfg.mode,
        series: series.label().to_string(),
        n_train,
        n_test: series.len() - n_train,
        runs,
    })
}

pub fn innovation_name(kind: InnovationKind) -> &'static str {
    match kind {
        InnovationKind::Gaussian => "gaussian",
        InnovationKind::StudentT => "student_t",
        InnovationKind::Nig => "nig",
    }
}

pub fn backtest(cfg: &RunConfig, garch: &GarchStage) -> Result<Vec<(InnovationKind, Vec<BacktestResult>)>> {
    garch
        .runs
        .iter()
        .map(|run| {
            let rows = run_backtest_suite(&run.realized, &run.forecasts, cfg.significance).stage("backtest")?;
            Ok((run.fit.innovation.kind(), rows))
        })
        .collect()
}

/// Pricing parameters; the index fit is computed only when the config asks
/// for it.
pub fn pricing_params(cfg: &RunConfig, ing: impl FnOnce() -> Result<Ingested>) -> Result<NigParams> {
    match cfg.pricing.params {
        PricingParams::Explicit(p) => Ok(p),
        PricingParams::Index => Ok(fit_index_nig(&ing()?)?.params),
    }
}

pub fn surfaces(cfg: &RunConfig, p: &NigParams, kinds: &[SurfaceKind], stage: &'static str) -> Result<Vec<PriceSurface>> {
    let pc = &cfg.pricing;
    kinds
        .iter()
        .map(|&k| price_surface(p, &pc.market, &pc.strikes, &pc.maturities, k, &pc.fft).stage(stage))
        .collect()
}

pub fn budget(cfg: &RunConfig, ing: &Ingested, nig: &[NigRecord]) -> Result<BudgetReport> {
    let params: Vec<NigParams> = nig.iter().map(|r| r.fit.params).collect();
    let scenarios = nig_scenarios(&params, cfg.scenario_count, 1.0, derive_seed(cfg.seed, BUDGET_LABEL));
    let n = params.len();
    let weights = cfg.weights.clone().unwrap_or_else(|| vec![1.0 / n as f64; n]);
    let names = ing.panel.categories().to_vec();
    budget_report(&scenarios, &weights, &names).stage("budget")
}

/// Factor levels restricted to the panel years, as log returns.
fn factor_returns(cfg: &RunConfig, years: &[i32]) -> Result<Vec<ReturnSeries>> {
    cfg.factors
        .iter()
        .map(|f| {
            let s = files::read_factor(&f.path, &f.name)?;
            let mut levels = Vec::with_capacity(years.len());
            for y in years {
                match s.periods.iter().position(|p| p == y) {
                    Some(i) => levels.push(s.levels[i]),
                    None => return Err(CliError::parse(&f.path, format!("factor '{}' has no value for {y}", f.name))),
                }
            }
            let aligned = LevelSeries { label: f.name.clone(), periods: years.to_vec(), levels };
            log_returns(&aligned).map_err(|e| CliError::parse(&f.path, e.to_string()))
        })
        .collect()
}

/// Standardized residuals of the Student-t ARMA-GARCH filter of `r`.
pub fn filtered(r: &ReturnSeries) -> Result<(ReturnSeries, ArmaGarchFit)> {
    let fit = fit_arma_garch(r, InnovationKind::StudentT).stage("stress")?;
    let eps = ReturnSeries::new(r.label(), r.times().to_vec(), fit.residuals.clone()).stage("stress")?;
    Ok((eps, fit))
}

pub struct StressInputs {
    pub portfolio: (ReturnSeries, ArmaGarchFit),
    pub factors: Vec<(ReturnSeries, ArmaGarchFit)>,
}

pub fn stress_inputs(cfg: &RunConfig, ing: &Ingested) -> Result<StressInputs> {
    let factors = factor_returns(cfg, ing.panel.years())?
        .iter()
        .map(filtered)
        .collect::<Result<Vec<_>>>()?;
    Ok(StressInputs { portfolio: filtered(&ing.index_returns)?, factors })
}

pub fn stress(cfg: &RunConfig, ing: &Ingested) -> Result<Vec<StressReport>> {
    let inputs = stress_inputs(cfg, ing)?;
    for (s, fit) in std::iter::once(&inputs.portfolio).chain(&inputs.factors) {
        if fit.near_unit_root {
            log::warn!("filter for '{}' is near a unit root", s.label());
        }
    }
    let factors: Vec<ReturnSeries> = inputs.factors.into_iter().map(|(s, _)| s).collect();
    stress_report(
        &factors,
        &inputs.portfolio.0,
        &cfg.stress_levels,
        cfg.stress_n,
        derive_seed(cfg.seed, STRESS_LABEL),
    )
    .stage("stress")
}

pub fn innovation_json(i: &Innovation) -> serde_json::Value {
    match i {
        Innovation::Gaussian => serde_json::json!({ "kind": "gaussian" }),
        Innovation::StudentT { nu } => serde_json::json!({ "kind": "student_t", "nu": nu }),
        Innovation::Nig(p) => serde_json::json!({
            "kind": "nig",
            "mu": p.mu(), "alpha": p.alpha(), "beta": p.beta(), "delta": p.delta(),
        }),
    }
}
