//! Running many checks and summarising them.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::checks::run_check;
use super::report::{Status, VerificationReport};
use super::spec::CheckSpec;
use crate::error::{Error, Result};

/// One line of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryEntry {
    pub name: String,
    pub id: String,
    pub class: &'static str,
    pub status: Status,
    pub pass: bool,
    pub sup_residual: f64,
    pub l2_residual: f64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_margin: Option<f64>,
    pub refinement_ratios: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SuiteOutcome {
    /// In the order of the input specs.
    pub reports: Vec<VerificationReport>,
    /// Checks that could not run at all (configuration or numeric errors).
    pub errors: Vec<(String, Error)>,
}

/// Run every spec in parallel; results keep the input order.
pub fn run_suite(specs: &[CheckSpec]) -> SuiteOutcome {
    let results: Vec<(String, Result<VerificationReport>)> =
        specs.par_iter().map(|s| (s.name.clone(), run_check(s))).collect();
    let mut out = SuiteOutcome { reports: vec![], errors: vec![] };
    for (name, r) in results {
        match r {
            Ok(rep) => out.reports.push(rep),
            Err(e) => out.errors.push((name, e)),
        }
    }
    out
}

impl SuiteOutcome {
    pub fn all_pass(&self) -> bool {
        self.errors.is_empty() && self.reports.iter().all(|r| r.pass)
    }

    pub fn count(&self, status: Status) -> usize {
        self.reports.iter().filter(|r| r.status == status).count()
    }

    pub fn summary(&self) -> Vec<SummaryEntry> {
        self.reports
            .iter()
            .map(|r| SummaryEntry {
                name: r.name.clone(),
                id: r.id.name().to_string(),
                class: r.class,
                status: r.status,
                pass: r.pass,
                sup_residual: r.sup_residual,
                l2_residual: r.l2_residual,
                tolerance: r.tolerance,
                min_margin: r.min_margin,
                refinement_ratios: r.refinement_ratios.clone(),
            })
            .collect()
    }

    /// Fixed-width table, one line per check.
    pub fn table(&self) -> String {
        let w = self.reports.iter().map(|r| r.name.len()).chain(self.errors.iter().map(|e| e.0.len())).max().unwrap_or(4).max(4);
        let mut s = format!("{:<w$}  {:<12}  {:>11}  {:>9}  {:>11}  ratios\n", "name", "status", "sup", "tol", "min_margin");
        for r in &self.reports {
            let margin = r.min_margin.map_or("-".to_string(), |m| format!("{m:.3e}"));
            let ratios: Vec<String> = r.refinement_ratios.iter().map(|x| format!("{x:.2}")).collect();
            s.push_str(&format!(
                "{:<w$}  {:<12}  {:>11.3e}  {:>9.1e}  {:>11}  {}\n",
                r.name,
                r.status.name(),
                r.sup_residual,
                r.tolerance,
                margin,
                ratios.join(",")
            ));
        }
        for (name, e) in &self.errors {
            s.push_str(&format!("{name:<w$}  {:<12}  {e}\n", "error"));
        }
        s.push_str(&format!(
            "{} pass, {} fail, {} inconclusive, {} error\n",
            self.count(Status::Pass),
            self.count(Status::Fail),
            self.count(Status::Inconclusive),
            self.errors.len()
        ));
        s
    }

    pub fn summary_json(&self) -> String {
        #[derive(Serialize)]
        struct Errored<'a> {
            name: &'a str,
            error: String,
        }
        #[derive(Serialize)]
        struct Doc<'a> {
            checks: Vec<SummaryEntry>,
            errors: Vec<Errored<'a>>,
            all_pass: bool,
        }
        let doc = Doc {
            checks: self.summary(),
            errors: self.errors.iter().map(|(n, e)| Errored { name: n, error: e.to_string() }).collect(),
            all_pass: self.all_pass(),
        };
        serde_json::to_string_pretty(&doc).expect("summary serialises") + "\n"
    }

    /// Per-check JSON/CSV plus `summary.json` under `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        for r in &self.reports {
            r.write(dir)?;
        }
        fs::write(dir.join("summary.json"), self.summary_json())
            .map_err(|e| Error::Numeric(format!("cannot write summary: {e}")))
    }
}

