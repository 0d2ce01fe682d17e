//! Subcommands: which stages run and which files they produce.

use serde_json::{json, Value};

use lossindex_core::backtest::BacktestResult;
use lossindex_core::garch::InnovationKind;
use lossindex_core::pricer::{PriceSurface, SurfaceKind};
use lossindex_core::riskbudget::BudgetReport;
use lossindex_core::stress::StressReport;

use crate::config::{BacktestMode, RunConfig};
use crate::error::Result;
use crate::files::{csv_bytes, levels_csv, num, panel_csv};
use crate::output::Artifact;
use crate::pipeline::{self, GarchStage, Ingested, NigStage};

pub const PANEL: &str = "panel.csv";
pub const INDEX: &str = "index.csv";
pub const FITS: &str = "fits.json";
pub const BACKTEST: &str = "backtest.csv";
pub const SURFACE: &str = "surface.csv";
pub const BUDGET: &str = "budget.csv";
pub const STRESS: &str = "stress.csv";

/// Files written by `run`, in order.
pub const RUN_FILES: [&str; 7] = [PANEL, INDEX, FITS, BACKTEST, SURFACE, BUDGET, STRESS];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Ingest,
    FitNig,
    FitGarch,
    Backtest,
    Price,
    IvSurface,
    Budget,
    Stress,
    Run,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ingest => "ingest",
            Command::FitNig => "fit-nig",
            Command::FitGarch => "fit-garch",
            Command::Backtest => "backtest",
            Command::Price => "price",
            Command::IvSurface => "iv-surface",
            Command::Budget => "budget",
            Command::Stress => "stress",
            Command::Run => "run",
        }
    }
}

fn nig_json(nig: &NigStage) -> Value {
    let rec = |r: &pipeline::NigRecord| {
        let p = r.fit.params;
        json!({
            "label": r.label,
            "mu": p.mu(), "alpha": p.alpha(), "beta": p.beta(), "delta": p.delta(),
            "loglik": r.fit.loglik,
            "n_obs": r.fit.n_obs,
        })
    };
    let mut all: Vec<Value> = nig.categories.iter().map(rec).collect();
    all.push(rec(&nig.index));
    all.push(rec(&nig.index_train));
    Value::Array(all)
}

fn garch_json(g: &GarchStage) -> Value {
    let runs: Vec<Value> = g
        .runs
        .iter()
        .map(|r| {
            let p = r.fit.params;
            json!({
                "innovation": pipeline::innovation_json(&r.fit.innovation),
                "phi0": p.phi0, "phi1": p.phi1, "theta1": p.theta1,
                "alpha0": p.alpha0, "alpha1": p.alpha1, "beta1": p.beta1,
                "persistence": p.persistence(),
                "loglik": r.fit.loglik,
                "near_unit_root": r.fit.near_unit_root,
            })
        })
        .collect();
    json!({
        "series": g.series,
        "mode": match g.mode { BacktestMode::Scenario => "scenario", BacktestMode::Annual => "annual" },
        "n_train": g.n_train,
        "n_test": g.n_test,
        "fits": runs,
    })
}

fn fits_json(cfg: &RunConfig, nig: Option<&NigStage>, garch: Option<&GarchStage>) -> Vec<u8> {
    let mut doc = serde_json::Map::new();
    doc.insert("config_sha256".into(), json!(cfg.hash));
    doc.insert("seed".into(), json!(cfg.seed));
    if let Some(n) = nig {
        doc.insert("nig".into(), nig_json(n));
    }
    if let Some(g) = garch {
        doc.insert("garch".into(), garch_json(g));
    }
    let mut b = serde_json::to_vec_pretty(&Value::Object(doc)).expect("fits serialize");
    b.push(b'\n');
    b
}

fn backtest_csv(rows: &[(InnovationKind, Vec<BacktestResult>)]) -> Vec<u8> {
    let header = [
        "innovation", "level", "n_obs", "n_exceed", "traffic", "traffic_cdf", "binomial", "binomial_z", "pof", "pof_lr",
        "cci", "cci_lr",
    ];
    let out: Vec<Vec<String>> = rows
        .iter()
        .flat_map(|(kind, results)| {
            results.iter().map(move |r| {
                vec![
                    pipeline::innovation_name(*kind).to_string(),
                    num(r.level),
                    r.n_obs.to_string(),
                    r.n_exceed.to_string(),
                    r.traffic.zone.as_str().to_string(),
                    num(r.traffic.cumulative),
                    r.binomial.decision.as_str().to_string(),
                    num(r.binomial.statistic),
                    r.pof.decision.as_str().to_string(),
                    num(r.pof.statistic),
                    r.cci.decision.as_str().to_string(),
                    num(r.cci.statistic),
                ]
            })
        })
        .collect();
    csv_bytes(&header, &out)
}

/// Long format `(T_days, K, M, value, kind)`.
pub fn surface_csv(surfaces: &[PriceSurface]) -> Vec<u8> {
    let mut rows = Vec::new();
    for s in surfaces {
        for (i, t) in s.maturities.iter().enumerate() {
            for (j, k) in s.strikes.iter().enumerate() {
                rows.push(vec![num(*t), num(*k), num(s.moneyness(j)), num(s.get(i, j)), s.kind.as_str().to_string()]);
            }
        }
    }
    csv_bytes(&["T_days", "K", "M", "value", "kind"], &rows)
}

fn budget_csv(b: &BudgetReport) -> Vec<u8> {
    let rows: Vec<Vec<String>> =
        b.rows.iter().map(|r| vec![r.asset.clone(), num(r.tr95), num(r.tr99), num(r.cr)]).collect();
    csv_bytes(&["crime_type", "tr95_pct", "tr99_pct", "cr_pct"], &rows)
}

fn stress_csv(s: &[StressReport]) -> Vec<u8> {
    let rows: Vec<Vec<String>> = s
        .iter()
        .map(|r| vec![r.factor.clone(), num(r.level), num(r.covar), num(r.coes), num(r.coetl), num(r.correlation)])
        .collect();
    csv_bytes(&["factor", "level", "covar", "coes", "coetl", "correlation"], &rows)
}

/// Runs the stages `cmd` needs and returns its files.
pub fn execute(cmd: Command, cfg: &RunConfig) -> Result<Vec<Artifact>> {
    let ing = || -> Result<Ingested> {
        log::info!("ingest");
        pipeline::ingest(cfg)
    };
    Ok(match cmd {
        Command::Ingest => {
            let i = ing()?;
            vec![Artifact::new(PANEL, panel_csv(&i.panel)), Artifact::new(INDEX, levels_csv(&i.index))]
        }
        Command::FitNig => {
            let i = ing()?;
            let nig = pipeline::fit_nig(cfg, &i)?;
            vec![Artifact::new(FITS, fits_json(cfg, Some(&nig), None))]
        }
        Command::FitGarch => {
            let g = pipeline::fit_garch(cfg, &ing()?)?;
            vec![Artifact::new(FITS, fits_json(cfg, None, Some(&g)))]
        }
        Command::Backtest => {
            let g = pipeline::fit_garch(cfg, &ing()?)?;
            vec![Artifact::new(BACKTEST, backtest_csv(&pipeline::backtest(cfg, &g)?))]
        }
        Command::Price => {
            let p = pipeline::pricing_params(cfg, ing)?;
            let s = pipeline::surfaces(cfg, &p, &[SurfaceKind::Call, SurfaceKind::Put], "price")?;
            vec![Artifact::new(SURFACE, surface_csv(&s))]
        }
        Command::IvSurface => {
            let p = pipeline::pricing_params(cfg, ing)?;
            let s = pipeline::surfaces(cfg, &p, &[SurfaceKind::ImpliedVol], "iv-surface")?;
            vec![Artifact::new(SURFACE, surface_csv(&s))]
        }
        Command::Budget => {
            let i = ing()?;
            let nig = pipeline::fit_nig(cfg, &i)?;
            vec![Artifact::new(BUDGET, budget_csv(&pipeline::budget(cfg, &i, &nig.categories)?))]
        }
        Command::Stress => {
            let i = ing()?;
            vec![Artifact::new(STRESS, stress_csv(&pipeline::stress(cfg, &i)?))]
        }
        Command::Run => {
            let i = ing()?;
            log::info!("fit-nig");
            let nig = pipeline::fit_nig(cfg, &i)?;
            log::info!("fit-garch");
            let garch = pipeline::fit_garch(cfg, &i)?;
            log::info!("backtest");
            let bt = pipeline::backtest(cfg, &garch)?;
            log::info!("price");
            let p = pipeline::pricing_params(cfg, || Ok(i.clone()))?;
            let mut surf = pipeline::surfaces(cfg, &p, &[SurfaceKind::Call, SurfaceKind::Put], "price")?;
            surf.extend(pipeline::surfaces(cfg, &p, &[SurfaceKind::ImpliedVol], "iv-surface")?);
            log::info!("budget");
            let budget = pipeline::budget(cfg, &i, &nig.categories)?;
            log::info!("stress");
            let stress = pipeline::stress(cfg, &i)?;
            vec![
                Artifact::new(PANEL, panel_csv(&i.panel)),
                Artifact::new(INDEX, levels_csv(&i.index)),
                Artifact::new(FITS, fits_json(cfg, Some(&nig), Some(&garch))),
                Artifact::new(BACKTEST, backtest_csv(&bt)),
                Artifact::new(SURFACE, surface_csv(&surf)),
                Artifact::new(BUDGET, budget_csv(&budget)),
                Artifact::new(STRESS, stress_csv(&stress)),
            ]
        }
    })
}
