//! Run configuration: a TOML file plus `--seed` / `--out` overrides.
//!
//! Every field is optional at parse time so that a partial file can be
//! diagnosed in one pass; [`resolve`] lists all missing and invalid fields
//! together. Relative input paths resolve against the config file's
//! directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use lossindex_core::garch::InnovationKind;
use lossindex_core::ingest::ImputeConfig;
use lossindex_core::nig::NigParams;
use lossindex_core::pricer::{CarrMadan, MarketSpec};
use lossindex_core::stress::{MIN_JOINT_SAMPLE, STRESS_LEVELS};

use crate::error::{CliError, Result};

pub const BACKTEST_LEVELS: [f64; 7] = [0.01, 0.05, 0.25, 0.50, 0.75, 0.95, 0.99];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub seed: Option<u64>,
    pub input: Option<RawInput>,
    pub output: Option<RawOutput>,
    pub split: Option<RawSplit>,
    pub backtest: Option<RawBacktest>,
    pub scenarios: Option<RawScenarios>,
    pub impute: Option<RawImpute>,
    pub pricing: Option<RawPricing>,
    pub budget: Option<RawBudget>,
    pub stress: Option<RawStress>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawInput {
    pub panel: Option<PathBuf>,
    pub deflators: Option<PathBuf>,
    pub factors: Option<Vec<FactorInput>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorInput {
    pub name: String,
    pub path: PathBuf,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawOutput {
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSplit {
    /// Last training year; the test window starts the year after.
    pub train_end: Option<i32>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawBacktest {
    pub levels: Option<Vec<f64>>,
    pub significance: Option<f64>,
    pub mode: Option<String>,
    pub innovations: Option<Vec<String>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawScenarios {
    pub count: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawImpute {
    pub n_components: Option<usize>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Range { start: f64, stop: f64, count: usize },
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        match self {
            Grid::List(v) => v.clone(),
            Grid::Range { start, stop, count } => match *count {
                0 => Vec::new(),
                1 => vec![*start],
                n => (0..n).map(|i| start + (stop - start) * i as f64 / (n - 1) as f64).collect(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RawNig {
    /// `"index"`: the NIG fit of the aggregate index returns.
    Source(String),
    Params { mu: f64, alpha: f64, beta: f64, delta: f64 },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawPricing {
    pub s0: Option<f64>,
    pub r: Option<f64>,
    pub day_count: Option<f64>,
    pub dampening: Option<f64>,
    pub fft_points: Option<usize>,
    pub eta: Option<f64>,
    pub strikes: Option<Grid>,
    /// Maturities in days.
    pub maturities: Option<Grid>,
    pub nig: Option<RawNig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RawWeights {
    /// `"equal"`.
    Named(String),
    List(Vec<f64>),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawBudget {
    pub weights: Option<RawWeights>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawStress {
    pub levels: Option<Vec<f64>>,
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BacktestMode {
    /// Backtest on a long simulated return series from the index NIG fit.
    Scenario,
    /// Backtest on the annual index returns themselves (few observations).
    Annual,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PricingParams {
    Index,
    Explicit(NigParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PricingConfig {
    pub market: MarketSpec,
    pub fft: CarrMadan,
    pub strikes: Vec<f64>,
    pub maturities: Vec<f64>,
    pub params: PricingParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub panel: PathBuf,
    pub deflators: PathBuf,
    pub factors: Vec<FactorInput>,
    pub out_dir: PathBuf,
    pub train_end: i32,
    pub levels: Vec<f64>,
    pub significance: f64,
    pub mode: BacktestMode,
    pub innovations: Vec<InnovationKind>,
    pub scenario_count: usize,
    pub impute: ImputeConfig,
    pub pricing: PricingConfig,
    /// `None` means equal weights.
    pub weights: Option<Vec<f64>>,
    pub stress_levels: Vec<f64>,
    pub stress_n: usize,
    /// SHA-256 of the effective configuration, output directory excluded.
    pub hash: String,
}

#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

pub fn parse(text: &str) -> Result<RawConfig> {
    toml::from_str(text).map_err(|e| CliError::config(e.to_string().trim_end().to_string()))
}

pub fn read(path: &Path) -> Result<RawConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

/// Reads, overrides and resolves `path`.
pub fn load(path: &Path, overrides: &Overrides) -> Result<RunConfig> {
    let raw = read(path)?;
    resolve(raw, path.parent().unwrap_or(Path::new(".")), overrides).map_err(CliError::Config)
}

fn in_unit(v: f64) -> bool {
    v > 0.0 && v < 1.0
}

fn levels_ok(name: &str, v: &[f64], problems: &mut Vec<String>) {
    if v.is_empty() {
        problems.push(format!("{name} is empty"));
    }
    for a in v.iter().filter(|a| !in_unit(**a)) {
        problems.push(format!("{name}: level {a} outside (0, 1)"));
    }
}

fn grid_ok(name: &str, g: &[f64], problems: &mut Vec<String>) {
    if g.is_empty() {
        problems.push(format!("{name} is empty"));
    }
    if g.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        problems.push(format!("{name} must be positive"));
    }
}

/// Effective config or the complete list of problems.
pub fn resolve(raw: RawConfig, base: &Path, overrides: &Overrides) -> std::result::Result<RunConfig, Vec<String>> {
    let mut raw = raw;
    if let Some(s) = overrides.seed {
        raw.seed = Some(s);
    }
    let hash = {
        let mut h = raw.clone();
        h.output = None;
        hex::encode(Sha256::digest(serde_json::to_vec(&h).expect("config serializes")))
    };
    let mut missing = Vec::new();
    let mut problems = Vec::new();
    macro_rules! req {
        ($section:expr, $field:ident, $name:literal) => {{
            let v = $section.as_ref().and_then(|s| s.$field.clone());
            if v.is_none() {
                missing.push(format!("missing field `{}`", $name));
            }
            v
        }};
    }

    if raw.seed.is_none() {
        missing.push("missing field `seed`".into());
    }
    let panel = req!(raw.input, panel, "input.panel");
    let deflators = req!(raw.input, deflators, "input.deflators");
    let factors = req!(raw.input, factors, "input.factors");
    let out_cfg = raw.output.as_ref().and_then(|o| o.dir.clone());
    if out_cfg.is_none() && overrides.out.is_none() {
        missing.push("missing field `output.dir` (or pass --out)".into());
    }
    let train_end = req!(raw.split, train_end, "split.train_end");
    let levels = req!(raw.backtest, levels, "backtest.levels");
    let scenario_count = req!(raw.scenarios, count, "scenarios.count");
    let s0 = req!(raw.pricing, s0, "pricing.s0");
    let r = req!(raw.pricing, r, "pricing.r");
    let dampening = req!(raw.pricing, dampening, "pricing.dampening");
    let strikes = req!(raw.pricing, strikes, "pricing.strikes");
    let maturities = req!(raw.pricing, maturities, "pricing.maturities");
    let nig = req!(raw.pricing, nig, "pricing.nig");

    let bt = raw.backtest.clone().unwrap_or_default();
    let significance = bt.significance.unwrap_or(0.05);
    if !in_unit(significance) {
        problems.push(format!("backtest.significance {significance} outside (0, 1)"));
    }
    let mode = match bt.mode.as_deref().unwrap_or("scenario") {
        "scenario" => BacktestMode::Scenario,
        "annual" => BacktestMode::Annual,
        other => {
            problems.push(format!("backtest.mode '{other}' is not 'scenario' or 'annual'"));
            BacktestMode::Scenario
        }
    };
    let innovations: Vec<InnovationKind> = bt
        .innovations
        .unwrap_or_else(|| vec!["student_t".into(), "nig".into()])
        .iter()
        .filter_map(|s| match s.as_str() {
            "student_t" => Some(InnovationKind::StudentT),
            "nig" => Some(InnovationKind::Nig),
            "gaussian" => Some(InnovationKind::Gaussian),
            other => {
                problems.push(format!("backtest.innovations: unknown innovation '{other}'"));
                None
            }
        })
        .collect();
    if innovations.is_empty() {
        problems.push("backtest.innovations is empty".into());
    }
    if let Some(l) = &levels {
        levels_ok("backtest.levels", l, &mut problems);
    }
    if scenario_count == Some(0) {
        problems.push("scenarios.count must be positive".into());
    }
    if factors.as_ref().is_some_and(Vec::is_empty) {
        problems.push("input.factors is empty".into());
    }

    let imp = raw.impute.clone().unwrap_or_default();
    let d = ImputeConfig::default();
    let impute = ImputeConfig {
        n_components: imp.n_components.unwrap_or(d.n_components),
        tol: imp.tol.unwrap_or(d.tol),
        max_iter: imp.max_iter.unwrap_or(d.max_iter),
    };
    if impute.n_components == 0 || !(impute.tol > 0.0) || impute.max_iter == 0 {
        problems.push("impute: n_components, tol and max_iter must be positive".into());
    }

    let pr = raw.pricing.clone().unwrap_or_default();
    let day_count = pr.day_count.unwrap_or(365.0);
    let market = match (s0, r) {
        (Some(s0), Some(r)) => match MarketSpec::new(s0, r, day_count) {
            Ok(m) => Some(m),
            Err(e) => {
                problems.push(format!("pricing: {e}"));
                None
            }
        },
        _ => None,
    };
    let fft = CarrMadan {
        n: pr.fft_points.unwrap_or(4096),
        eta: pr.eta.unwrap_or(0.25),
        dampening: dampening.unwrap_or(1.5),
        auto_reduce: true,
    };
    if !(fft.n >= 16 && fft.n.is_power_of_two()) {
        problems.push(format!("pricing.fft_points {} must be a power of two >= 16", fft.n));
    }
    if !(fft.eta > 0.0) {
        problems.push("pricing.eta must be positive".into());
    }
    if dampening.is_some_and(|a| !(a > 0.0)) {
        problems.push("pricing.dampening must be positive".into());
    }
    let strikes = strikes.map(|g| g.points());
    let maturities = maturities.map(|g| g.points());
    if let Some(k) = &strikes {
        grid_ok("pricing.strikes", k, &mut problems);
    }
    if let Some(t) = &maturities {
        grid_ok("pricing.maturities", t, &mut problems);
    }
    let params = match nig {
        None => None,
        Some(RawNig::Source(s)) if s == "index" => Some(PricingParams::Index),
        Some(RawNig::Source(s)) => {
            problems.push(format!("pricing.nig: '{s}' is neither \"index\" nor a parameter table"));
            None
        }
        Some(RawNig::Params { mu, alpha, beta, delta }) => match NigParams::new(mu, alpha, beta, delta) {
            Ok(p) => Some(PricingParams::Explicit(p)),
            Err(e) => {
                problems.push(format!("pricing.nig: {e}"));
                None
            }
        },
    };

    let weights = match raw.budget.as_ref().and_then(|b| b.weights.clone()) {
        None => None,
        Some(RawWeights::Named(s)) if s == "equal" => None,
        Some(RawWeights::Named(s)) => {
            problems.push(format!("budget.weights: '{s}' is neither \"equal\" nor a list"));
            None
        }
        Some(RawWeights::List(w)) => Some(w),
    };

    let st = raw.stress.clone().unwrap_or_default();
    let stress_levels = st.levels.unwrap_or_else(|| STRESS_LEVELS.to_vec());
    levels_ok("stress.levels", &stress_levels, &mut problems);
    let stress_n = st.n.unwrap_or(10_000);
    if stress_n < MIN_JOINT_SAMPLE {
        problems.push(format!("stress.n = {stress_n} below the minimum {MIN_JOINT_SAMPLE}"));
    }

    missing.extend(problems);
    if !missing.is_empty() {
        return Err(missing);
    }
    let out_dir = match overrides.out.clone() {
        Some(o) => o,
        None => base.join(out_cfg.expect("checked")),
    };
    let factors = factors
        .expect("checked")
        .into_iter()
        .map(|f| FactorInput { name: f.name, path: base.join(f.path) })
        .collect();
    Ok(RunConfig {
        seed: raw.seed.expect("checked"),
        panel: base.join(panel.expect("checked")),
        deflators: base.join(deflators.expect("checked")),
        factors,
        out_dir,
        train_end: train_end.expect("checked"),
        levels: levels.expect("checked"),
        significance,
        mode,
        innovations,
        scenario_count: scenario_count.expect("checked"),
        impute,
        pricing: PricingConfig {
            market: market.expect("checked"),
            fft,
            strikes: strikes.expect("checked"),
            maturities: maturities.expect("checked"),
            params: params.expect("checked"),
        },
        weights,
        stress_levels,
        stress_n,
        hash,
    })
}
