//! Verification reports: residual statistics, JSON and CSV output.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;

use super::CheckId;
use crate::entropy::fmt_num;
use crate::error::{Error, Result};

/// Rows with fewer usable times than this make a report inconclusive.
pub const MIN_WINDOW: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// Not enough usable data (truncated flow, failed refinement run).
    Inconclusive,
}

impl Status {
    pub fn name(&self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Row {
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

/// r = |L − R|/(|L| + |R| + 1).
pub fn relative_residual(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs).abs() / (lhs.abs() + rhs.abs() + 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    /// Unique instance name (also the output file stem).
    pub name: String,
    pub id: CheckId,
    pub class: &'static str,
    pub window: [f64; 2],
    pub sup_residual: f64,
    pub l2_residual: f64,
    pub refinement_ratios: Vec<f64>,
    pub pass: bool,
    pub status: Status,
    pub termination: String,
    pub tolerance: f64,
    /// Inequalities: min(LHS − RHS) over the window.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_margin: Option<f64>,
    /// Auxiliary quantities (alternative forms, secondary residuals, K, ...).
    pub extra: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    #[serde(skip)]
    pub rows: Vec<Row>,
}

/// sqrt(∫ r² dt) by the trapezoid rule (plain RMS when all t coincide).
fn l2_in_time(rows: &[Row], f: impl Fn(&Row) -> f64) -> f64 {
    if rows.len() < 2 {
        return rows.first().map_or(0.0, |r| f(r).abs());
    }
    let mut s = 0.0;
    let mut span = 0.0;
    for w in rows.windows(2) {
        let h = (w[1].t - w[0].t).abs();
        s += 0.5 * h * (f(&w[0]).powi(2) + f(&w[1]).powi(2));
        span += h;
    }
    if span > 0.0 {
        s.sqrt()
    } else {
        (rows.iter().map(|r| f(r).powi(2)).sum::<f64>() / rows.len() as f64).sqrt()
    }
}

fn window_of(rows: &[Row]) -> [f64; 2] {
    let lo = rows.iter().map(|r| r.t).fold(f64::INFINITY, f64::min);
    let hi = rows.iter().map(|r| r.t).fold(f64::NEG_INFINITY, f64::max);
    if rows.is_empty() {
        [f64::NAN, f64::NAN]
    } else {
        [lo, hi]
    }
}

impl VerificationReport {
    fn base(name: &str, id: CheckId, tolerance: f64, termination: &str, rows: Vec<Row>) -> Self {
        VerificationReport {
            name: name.to_string(),
            id,
            class: id.class(),
            window: window_of(&rows),
            sup_residual: f64::NAN,
            l2_residual: f64::NAN,
            refinement_ratios: vec![],
            pass: false,
            status: Status::Fail,
            termination: termination.to_string(),
            tolerance,
            min_margin: None,
            extra: BTreeMap::new(),
            notes: vec![],
            rows,
        }
    }

    /// Identity rows (residual column filled here).
    pub fn identity(name: &str, id: CheckId, tolerance: f64, termination: &str, mut rows: Vec<Row>) -> Self {
        for r in &mut rows {
            r.residual = relative_residual(r.lhs, r.rhs);
        }
        let mut rep = Self::base(name, id, tolerance, termination, rows);
        rep.sup_residual = rep.rows.iter().map(|r| r.residual).fold(0.0, f64::max);
        rep.l2_residual = l2_in_time(&rep.rows, |r| r.residual);
        rep.settle(rep.sup_residual <= tolerance);
        rep
    }

    /// Inequality rows LHS ≥ RHS; residual column is the margin LHS − RHS,
    /// `sup_residual` the worst violation.
    pub fn inequality(name: &str, id: CheckId, slack: f64, termination: &str, mut rows: Vec<Row>) -> Self {
        for r in &mut rows {
            r.residual = r.lhs - r.rhs;
        }
        let mut rep = Self::base(name, id, slack, termination, rows);
        let min = rep.rows.iter().map(|r| r.residual).fold(f64::INFINITY, f64::min);
        rep.min_margin = Some(min);
        rep.sup_residual = rep.rows.iter().map(|r| (-r.residual).max(0.0)).fold(0.0, f64::max);
        rep.l2_residual = l2_in_time(&rep.rows, |r| (-r.residual).max(0.0));
        rep.settle(min >= -slack);
        rep
    }

    /// Oracle rows with a precomputed absolute residual.
    pub fn oracle(name: &str, id: CheckId, tolerance: f64, termination: &str, rows: Vec<Row>) -> Self {
        let mut rep = Self::base(name, id, tolerance, termination, rows);
        rep.sup_residual = rep.rows.iter().map(|r| r.residual).fold(0.0, f64::max);
        rep.l2_residual = l2_in_time(&rep.rows, |r| r.residual);
        rep.settle(rep.sup_residual <= tolerance);
        rep
    }

    fn settle(&mut self, ok: bool) {
        if self.rows.is_empty() || self.rows.iter().any(|r| !r.residual.is_finite()) {
            self.status = if self.rows.is_empty() { Status::Inconclusive } else { Status::Fail };
            self.pass = false;
            if self.rows.is_empty() {
                self.notes.push("no usable rows".into());
            } else {
                self.notes.push("non-finite residual".into());
            }
            return;
        }
        self.pass = ok;
        self.status = if ok { Status::Pass } else { Status::Fail };
    }

    /// Too few rows for a verdict.
    pub fn require_window(&mut self, min_rows: usize) {
        if self.rows.len() < min_rows && self.status != Status::Inconclusive {
            self.status = Status::Inconclusive;
            self.pass = false;
            self.notes.push(format!("usable window has {} < {min_rows} output times", self.rows.len()));
        }
    }

    /// An additional condition that must hold for a pass.
    pub fn also_require(&mut self, ok: bool, note: impl Into<String>) {
        if !ok && self.status == Status::Pass {
            self.status = Status::Fail;
            self.pass = false;
        }
        if !ok {
            self.notes.push(note.into());
        }
    }

    pub fn mark_inconclusive(&mut self, note: impl Into<String>) {
        if self.status != Status::Fail || self.rows.is_empty() {
            self.status = Status::Inconclusive;
        }
        self.pass = false;
        self.notes.push(note.into());
    }

    pub fn json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises") + "\n"
    }

    pub fn csv(&self) -> String {
        let mut s = String::from("t,lhs,rhs,residual\n");
        for r in &self.rows {
            s.push_str(&format!("{},{},{},{}\n", fmt_num(r.t), fmt_num(r.lhs), fmt_num(r.rhs), fmt_num(r.residual)));
        }
        s
    }

    /// `<dir>/<name>.json` and `<dir>/<name>.csv`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let io = |e: std::io::Error| Error::Numeric(format!("cannot write report {}: {e}", self.name));
        fs::create_dir_all(dir).map_err(io)?;
        fs::write(dir.join(format!("{}.json", self.name)), self.json()).map_err(io)?;
        fs::write(dir.join(format!("{}.csv", self.name)), self.csv()).map_err(io)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::IdentityId;

    fn rows(pairs: &[(f64, f64)]) -> Vec<Row> {
        pairs.iter().enumerate().map(|(i, &(l, r))| Row { t: i as f64 * 0.1, lhs: l, rhs: r, residual: 0.0 }).collect()
    }

    #[test]
    fn relative_residual_guards_zero() {
        assert_eq!(relative_residual(0.0, 0.0), 0.0);
        assert_eq!(relative_residual(1.0, 0.0), 0.5);
    }

    #[test]
    fn identity_and_inequality_verdicts() {
        let id = CheckId::Identity(IdentityId::GeoWm);
        let r = VerificationReport::identity("a", id, 1e-3, "completed", rows(&[(1.0, 1.0), (2.0, 2.0 + 1e-4)]));
        assert!(r.pass && r.sup_residual < 3e-5);
        assert_eq!(r.window, [0.0, 0.1]);
        let r = VerificationReport::inequality("b", id, 1e-6, "completed", rows(&[(1.0, 0.5), (0.0, 1e-7)]));
        assert!(r.pass);
        assert_eq!(r.min_margin, Some(-1e-7));
        let mut r = VerificationReport::inequality("c", id, 1e-6, "completed", rows(&[(0.0, 1e-3)]));
        assert!(!r.pass && r.status == Status::Fail);
        r.require_window(10);
        assert_eq!(r.status, Status::Inconclusive);
        let r = VerificationReport::identity("d", id, 1e-3, "completed", vec![]);
        assert_eq!(r.status, Status::Inconclusive);
    }

    #[test]
    fn csv_has_fixed_header() {
        let r = VerificationReport::identity("a", CheckId::Identity(IdentityId::GeoWm), 1e-3, "completed", rows(&[(1.0, 1.0)]));
        let csv = r.csv();
        assert!(csv.starts_with("t,lhs,rhs,residual\n"));
        assert_eq!(csv.lines().count(), 2);
        let json: serde_json::Value = serde_json::from_str(&r.json()).unwrap();
        for key in ["id", "window", "sup_residual", "l2_residual", "refinement_ratios", "pass", "termination", "tolerance"] {
            assert!(json.get(key).is_some(), "{key}");
        }
        assert_eq!(json["id"], "geo_wm");
    }
}
