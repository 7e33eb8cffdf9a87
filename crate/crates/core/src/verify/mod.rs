//! Self-check suites with fixed seeds. Each suite measures a handful of
//! quantities and compares them against fixed thresholds.

mod analytic;
mod estimators;
mod sampling;

use std::time::Instant;

use serde::Serialize;

use crate::error::{MpfError, Result};

/// Threshold a measured quantity must respect.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    AtMost(f64),
    AtLeast(f64),
    Below(f64),
}

impl Bound {
    pub fn admits(&self, v: f64) -> bool {
        match *self {
            Bound::AtMost(t) => v <= t,
            Bound::AtLeast(t) => v >= t,
            Bound::Below(t) => v < t,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Metric {
    pub label: String,
    pub observed: f64,
    pub bound: Bound,
    pub passed: bool,
}

impl Metric {
    pub fn new(label: impl Into<String>, observed: f64, bound: Bound) -> Self {
        Self {
            label: label.into(),
            observed,
            bound,
            passed: bound.admits(observed),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub metrics: Vec<Metric>,
    pub detail: String,
    pub seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub(crate) struct SuiteReport {
    pub metrics: Vec<Metric>,
    pub detail: String,
}

type Suite = fn() -> Result<SuiteReport>;

const SUITES: [(&str, Suite); 12] = [
    ("gradients", analytic::gradients),
    ("kl-flow", analytic::kl_flow),
    ("convexity", analytic::convexity),
    ("consistency", analytic::consistency),
    ("sm-limit", analytic::sm_limit),
    ("spectral-bound", analytic::spectral),
    ("estimator-ordering", estimators::estimator_ordering),
    ("hopfield-capacity", estimators::hopfield_capacity),
    ("hopfield-denoise", estimators::hopfield_denoise),
    ("ica-parity", estimators::ica_parity),
    ("samplers", sampling::samplers),
    ("specialization", analytic::specialization),
];

/// Names of all suites in run order.
pub fn suite_names() -> Vec<&'static str> {
    SUITES.iter().map(|(n, _)| *n).collect()
}

/// Runs one suite. Failures inside the suite are reported in the outcome;
/// only an unknown name is an error.
pub fn run_check(name: &str) -> Result<CheckOutcome> {
    let &(name, suite) = SUITES
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| MpfError::InvalidArgument(format!("unknown check '{name}'")))?;
    let start = Instant::now();
    let out = suite();
    let seconds = start.elapsed().as_secs_f64();
    Ok(match out {
        Ok(r) => CheckOutcome {
            name,
            passed: !r.metrics.is_empty() && r.metrics.iter().all(|m| m.passed),
            metrics: r.metrics,
            detail: r.detail,
            seconds,
            error: None,
        },
        Err(e) => CheckOutcome {
            name,
            passed: false,
            metrics: Vec::new(),
            detail: String::new(),
            seconds,
            error: Some(e.to_string()),
        },
    })
}

/// Runs the named suites, or all of them when `only` is empty.
pub fn run_checks(only: &[String]) -> Result<Vec<CheckOutcome>> {
    let names: Vec<&str> = if only.is_empty() {
        suite_names()
    } else {
        only.iter().map(String::as_str).collect()
    };
    for n in &names {
        if !SUITES.iter().any(|(s, _)| s == n) {
            return Err(MpfError::InvalidArgument(format!("unknown check '{n}'")));
        }
    }
    names.into_iter().map(run_check).collect()
}

impl std::fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {} ({:.1}s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.seconds
        )?;
        for m in &self.metrics {
            let (op, t) = match m.bound {
                Bound::AtMost(t) => ("<=", t),
                Bound::AtLeast(t) => (">=", t),
                Bound::Below(t) => ("<", t),
            };
            write!(f, "; {} = {:.3e} {} {:.3e}", m.label, m.observed, op, t)?;
        }
        if let Some(e) = &self.error {
            write!(f, "; error: {e}")?;
        }
        Ok(())
    }
}

pub(crate) fn max_of(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

pub(crate) fn min_of(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds() {
        assert!(Bound::AtMost(1.0).admits(1.0));
        assert!(!Bound::Below(1.0).admits(1.0));
        assert!(Bound::AtLeast(0.5).admits(0.7));
        assert!(!Bound::AtMost(1.0).admits(f64::NAN));
    }

    #[test]
    fn unknown_suite_rejected() {
        assert!(run_check("nope").is_err());
        assert!(run_checks(&["kl-flow".into(), "nope".into()]).is_err());
        assert_eq!(suite_names().len(), 12);
    }
}
