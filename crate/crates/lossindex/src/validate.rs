//! `validate`: config completeness, input schemas, the martingale-measure
//! condition on pricing parameters and stationarity of the filters. Never
//! writes anything.

use std::fmt;
use std::path::Path;

use lossindex_core::pricer::check_mcmm;

use crate::config::{self, Overrides, PricingParams};
use crate::error::CliError;
use crate::pipeline;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
    /// Exit status an error maps to; 0 for warnings.
    pub code: i32,
}

impl Diagnostic {
    fn warning(message: impl Into<String>) -> Self {
        Self { severity: Severity::Warning, message: message.into(), code: 0 }
    }

    fn error(e: &CliError) -> Self {
        Self { severity: Severity::Error, message: e.to_string(), code: e.exit_code() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.severity {
            Severity::Warning => write!(f, "warning: {}", self.message),
            Severity::Error => write!(f, "error: {}", self.message),
        }
    }
}

/// All problems found; an empty list means "ok".
pub fn validate(path: &Path, overrides: &Overrides) -> Vec<Diagnostic> {
    let raw = match config::read(path) {
        Ok(r) => r,
        Err(e) => return vec![Diagnostic::error(&e)],
    };
    let cfg = match config::resolve(raw, path.parent().unwrap_or(Path::new(".")), overrides) {
        Ok(c) => c,
        Err(problems) => {
            return problems
                .into_iter()
                .map(|m| Diagnostic { severity: Severity::Error, message: format!("config: {m}"), code: 1 })
                .collect()
        }
    };
    let mut out = Vec::new();
    let ing = match pipeline::ingest(&cfg) {
        Ok(i) => Some(i),
        Err(e) => {
            out.push(Diagnostic::error(&e));
            None
        }
    };

    let params = match (cfg.pricing.params, &ing) {
        (PricingParams::Explicit(p), _) => Some(p),
        (PricingParams::Index, Some(i)) => match pipeline::fit_index_nig(i) {
            Ok(f) => Some(f.params),
            Err(e) => {
                out.push(Diagnostic::error(&e));
                None
            }
        },
        (PricingParams::Index, None) => None,
    };
    if let Some(p) = params {
        let c = check_mcmm(&p);
        if !c.valid || c.marginal {
            out.push(Diagnostic::warning(format!("pricing.nig: {}", c.diagnostic())));
        } else {
            match cfg.pricing.fft.effective_dampening(&p) {
                Ok(a) if a != cfg.pricing.fft.dampening => out.push(Diagnostic::warning(format!(
                    "pricing.dampening {} infeasible for these parameters, reduced to {a}",
                    cfg.pricing.fft.dampening
                ))),
                Ok(_) => {}
                Err(e) => out.push(Diagnostic::warning(format!("pricing.dampening: {e}"))),
            }
        }
    }

    let Some(ing) = ing else { return out };
    if let Some(w) = &cfg.weights {
        if w.len() != ing.panel.n_categories() {
            out.push(Diagnostic {
                severity: Severity::Error,
                message: format!(
                    "config: budget.weights has {} entries for {} categories",
                    w.len(),
                    ing.panel.n_categories()
                ),
                code: 1,
            });
        }
    }
    let years = ing.index_returns.times();
    let n_train = ing.index_returns.position_of(cfg.train_end + 1);
    if n_train < 8 || n_train == years.len() {
        out.push(Diagnostic {
            severity: Severity::Error,
            message: format!(
                "config: split.train_end = {} gives {} training and {} test returns",
                cfg.train_end,
                n_train,
                years.len() - n_train
            ),
            code: 1,
        });
    }
    match pipeline::stress_inputs(&cfg, &ing) {
        Ok(s) => {
            for (series, fit) in std::iter::once(&s.portfolio).chain(&s.factors) {
                if fit.near_unit_root {
                    out.push(Diagnostic::warning(format!(
                        "filter for '{}' is near a unit root (alpha1 + beta1 = {})",
                        series.label(),
                        fit.params.persistence()
                    )));
                }
            }
        }
        Err(e) => out.push(Diagnostic::error(&e)),
    }
    out
}

/// Exit status for a diagnostic list: the first error's code, else 0.
pub fn exit_code(diags: &[Diagnostic]) -> i32 {
    diags.iter().find(|d| d.severity == Severity::Error).map_or(0, |d| d.code)
}
