//! Sweep reports: one row per sweep point plus the experiment's assertions.

use std::fmt::Write as _;
use std::path::PathBuf;

use cohsim_core::engine::DampingMetrics;

use crate::catalog::{AssertionOutcome, ExperimentSpec, PointResult};

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub label: String,
    pub status: &'static str,
    /// Reason for a non-stable status.
    pub note: Option<String>,
    pub metrics: Vec<(String, DampingMetrics)>,
    pub extras: Vec<(String, f64)>,
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub experiment: String,
    pub rows: Vec<ReportRow>,
    pub assertions: Vec<AssertionOutcome>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Human,
    Machine,
}

impl RunReport {
    pub fn new(spec: &ExperimentSpec, points: &[PointResult], assertions: Vec<AssertionOutcome>) -> Self {
        let rows = points
            .iter()
            .map(|p| ReportRow {
                label: p.label.clone(),
                status: p.status(),
                note: match &p.run {
                    Ok(r) => match &r.status {
                        cohsim_core::engine::RunStatus::Stable => None,
                        cohsim_core::engine::RunStatus::Unstable { time, reason } => {
                            Some(format!("t = {time:.3} s: {reason}"))
                        }
                        cohsim_core::engine::RunStatus::Failed { time, error } => {
                            Some(format!("t = {time:.3} s: {error}"))
                        }
                    },
                    Err(e) => Some(e.clone()),
                },
                metrics: p.metrics.clone(),
                extras: p.extras.clone(),
                files: Vec::new(),
            })
            .collect();
        RunReport { experiment: spec.name.to_string(), rows, assertions }
    }

    pub fn any_failed_run(&self) -> bool {
        self.rows.iter().any(|r| r.status == "FAILED")
    }

    pub fn all_passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Human => self.human(),
            Format::Machine => self.machine(),
        }
    }

    fn human(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{}", self.experiment);
        for r in &self.rows {
            let _ = writeln!(s, "  {:<22} {}", r.label, r.status);
            if let Some(n) = &r.note {
                let _ = writeln!(s, "      {n}");
            }
            for (c, m) in &r.metrics {
                let _ = writeln!(
                    s,
                    "      {c:<16} p2p {:.4e}  peak_ratio {}  settling {:.2} s",
                    m.peak_to_peak,
                    m.peak_ratio.map_or("n/a".into(), |v| format!("{v:.3}")),
                    m.settling_time
                );
            }
            for (k, v) in &r.extras {
                let _ = writeln!(s, "      {k:<16} {v:.5}");
            }
            for f in &r.files {
                let _ = writeln!(s, "      -> {}", f.display());
            }
        }
        for a in &self.assertions {
            let _ = writeln!(s, "{} {} [{}]", if a.passed { "PASS" } else { "FAIL" }, a.description, a.detail);
        }
        s
    }

    /// Tab-separated records: `point`, `metric` and `assert` lines.
    fn machine(&self) -> String {
        let mut s = String::new();
        let num = |v: Option<f64>| v.map_or("nan".to_string(), |v| format!("{v:e}"));
        for r in &self.rows {
            let _ = writeln!(s, "point\t{}\t{}\t{}", self.experiment, r.label, r.status);
            for (c, m) in &r.metrics {
                let _ = writeln!(
                    s,
                    "metric\t{}\t{}\t{c}\t{:e}\t{}\t{:e}",
                    self.experiment,
                    r.label,
                    m.peak_to_peak,
                    num(m.peak_ratio),
                    m.settling_time
                );
            }
            for (k, v) in &r.extras {
                let _ = writeln!(s, "extra\t{}\t{}\t{k}\t{v:e}", self.experiment, r.label);
            }
        }
        for a in &self.assertions {
            let _ = writeln!(
                s,
                "assert\t{}\t{}\t{}",
                self.experiment,
                if a.passed { "PASS" } else { "FAIL" },
                a.description
            );
        }
        s
    }
}
