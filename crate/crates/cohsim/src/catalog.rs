//! Experiment catalog: one entry per case study, each a sweep over one
//! parameter with machine-checkable expectations.

use std::fmt;

use cohsim_core::converter::CoherencyMode;
use cohsim_core::engine::{damping_metrics, pearson, DampingMetrics, RunResult, RunStatus};
use cohsim_core::scenario::{CoherencySpec, DeviceKind, EventSpec, MeasurementSpec, NoiseSpec, Scenario};
use cohsim_core::signals::OuParams;

use crate::scenario_io::load_scenario;
use crate::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepValue {
    Number(f64),
    Label(&'static str),
}

impl fmt::Display for SweepValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepValue::Number(v) => write!(f, "{v}"),
            SweepValue::Label(s) => f.write_str(s),
        }
    }
}

impl SweepValue {
    fn number(&self) -> f64 {
        match self {
            SweepValue::Number(v) => *v,
            SweepValue::Label(_) => f64::NAN,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentId {
    CSweep,
    Delay,
    Noise,
    Mode,
    Fault39,
    Cluster39,
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub id: ExperimentId,
    pub name: &'static str,
    pub system: &'static str,
    pub description: &'static str,
    pub axis: &'static str,
    pub values: Vec<SweepValue>,
    /// Time of the disturbance; metrics are measured from here.
    pub event_time: f64,
    /// Channels summarized in the metrics report.
    pub metric_channels: Vec<&'static str>,
    pub expectations: Vec<&'static str>,
}

/// Seed of the measurement noise in the noise experiment.
pub const NOISE_SEED: u64 = 2024;
const TRIP_TIME: f64 = 1.0;
const FAULT_TIME: f64 = 1.0;
const FAULT_CLEAR: f64 = 1.12;
/// Coherency share used by the delay, noise and mode studies.
pub const BASE_SHARE: f64 = 0.25;
const KUNDUR_HYBRIDS: [&str; 3] = ["G1", "G2", "G4"];

pub fn catalog() -> Vec<ExperimentSpec> {
    use SweepValue::*;
    vec![
        ExperimentSpec {
            id: ExperimentId::CSweep,
            name: "EXP-CSWEEP",
            system: "kundur2a",
            description: "coherency share sweep, converters at buses 1, 2, 4 imitating G3; trip of one 7-8 circuit",
            axis: "C",
            values: vec![Number(0.0), Number(0.25), Number(0.5), Number(0.75), Number(1.0)],
            event_time: TRIP_TIME,
            metric_channels: vec!["coi.freq", "bus1.vmag"],
            expectations: vec![
                "peak_to_peak(coi.freq) strictly decreasing in C",
                "peak_to_peak(coi.freq) at C=1 <= 50% of C=0",
            ],
        },
        ExperimentSpec {
            id: ExperimentId::Delay,
            name: "EXP-DELAY",
            system: "kundur2a",
            description: "first-order delay on the reference measurement, C=0.25; trip of one 7-8 circuit",
            axis: "tau_d",
            values: vec![Number(0.01), Number(0.1), Number(1.0)],
            event_time: TRIP_TIME,
            metric_channels: vec!["coi.freq", "bus1.vmag"],
            expectations: vec![
                "peak_ratio(coi.freq) increasing in tau_d",
                "tau_d=1 UNSTABLE or peak_ratio >= 0.9",
            ],
        },
        ExperimentSpec {
            id: ExperimentId::Noise,
            name: "EXP-NOISE",
            system: "kundur2a",
            description: "Ornstein-Uhlenbeck noise on the reference measurement, C=0.25; no contingency",
            axis: "W",
            values: vec![Number(1.0), Number(10.0), Number(50.0)],
            event_time: 0.0,
            metric_channels: vec!["coi.freq", "bus1.vmag"],
            expectations: vec![
                "max |dv| at bus 1 increasing in W",
                "max |dv| at bus 1 for W=50 within [0.025, 0.10] pu",
            ],
        },
        ExperimentSpec {
            id: ExperimentId::Mode,
            name: "EXP-MODE",
            system: "kundur2a",
            description: "no coherency vs conventional vs complex coherency, C=0.25; trip of one 7-8 circuit",
            axis: "mode",
            values: vec![Label("none"), Label("conventional"), Label("complex")],
            event_time: TRIP_TIME,
            metric_channels: vec!["coi.freq", "bus1.vmag"],
            expectations: vec!["peak_ratio(coi.freq): complex <= conventional < none"],
        },
        ExperimentSpec {
            id: ExperimentId::Fault39,
            name: "EXP-39FAULT",
            system: "ieee39",
            description: "G7 (bus 36) share C71 imitating G1; fault at bus 1 cleared after 120 ms",
            axis: "C71",
            values: vec![Number(0.0), Number(1.0)],
            event_time: FAULT_TIME,
            metric_channels: vec!["coi.freq", "bus36.vmag"],
            expectations: vec![
                "settling_time(coi.freq) smaller with C71=1",
                "peak_ratio(coi.freq) smaller with C71=1",
            ],
        },
        ExperimentSpec {
            id: ExperimentId::Cluster39,
            name: "EXP-39CLUSTER",
            system: "ieee39",
            description: "same runs as EXP-39FAULT, complex frequency of G1, G6, G7, G10 currents",
            axis: "C71",
            values: vec![Number(0.0), Number(1.0)],
            event_time: FAULT_TIME,
            metric_channels: vec!["coi.freq", "G1.cf_omega", "G6.cf_omega", "G7.cf_omega", "G10.cf_omega"],
            expectations: vec!["corr(G6.cf_omega, G1.cf_omega) over 2-10 s: negative at C71=0, larger at C71=1"],
        },
    ]
}

pub fn find(name: &str) -> Option<ExperimentSpec> {
    catalog().into_iter().find(|e| e.name.eq_ignore_ascii_case(name))
}

fn make_hybrid(s: &mut Scenario, id: &str, share: f64, reference: &str, mode: CoherencyMode) -> Result<()> {
    let d = s
        .device_mut(id)
        .ok_or_else(|| CliError::Config(format!("no device {id}")))?;
    d.kind = DeviceKind::Hybrid;
    d.coherency = Some(CoherencySpec { share, reference: reference.to_string(), mode });
    Ok(())
}

fn trip_78() -> EventSpec {
    EventSpec::BranchTrip { time: TRIP_TIME, from: 7, to: 8, circuit: 2 }
}

impl ExperimentSpec {
    /// Label of a sweep point, e.g. `C=0.25`.
    pub fn label(&self, v: &SweepValue) -> String {
        format!("{}={v}", self.axis)
    }

    /// Parses a sweep value given on the command line.
    pub fn parse_value(&self, raw: &str) -> Result<SweepValue> {
        self.values
            .iter()
            .copied()
            .find(|v| match v {
                SweepValue::Number(x) => raw.parse::<f64>().is_ok_and(|r| r == *x),
                SweepValue::Label(l) => l.eq_ignore_ascii_case(raw),
            })
            .ok_or_else(|| {
                let allowed: Vec<String> = self.values.iter().map(|v| v.to_string()).collect();
                CliError::Config(format!("{}: {} must be one of {}", self.name, self.axis, allowed.join(", ")))
            })
    }

    /// Scenario of one sweep point.
    pub fn scenario(&self, value: &SweepValue) -> Result<Scenario> {
        let mut s = load_scenario(self.system)?;
        let complex = CoherencyMode::Complex;
        match self.id {
            ExperimentId::CSweep => {
                for id in KUNDUR_HYBRIDS {
                    make_hybrid(&mut s, id, value.number(), "G3", complex)?;
                }
                s.events = vec![trip_78()];
            }
            ExperimentId::Delay => {
                for id in KUNDUR_HYBRIDS {
                    make_hybrid(&mut s, id, BASE_SHARE, "G3", complex)?;
                    s.measurements.push(MeasurementSpec {
                        channel: id.into(),
                        delay: value.number(),
                        noise: None,
                        estimator_tau: None,
                    });
                }
                s.events = vec![trip_78()];
            }
            ExperimentId::Noise => {
                let params = OuParams { weight: value.number(), ..OuParams::default() };
                for id in KUNDUR_HYBRIDS {
                    make_hybrid(&mut s, id, BASE_SHARE, "G3", complex)?;
                    s.measurements.push(MeasurementSpec {
                        channel: id.into(),
                        delay: 0.0,
                        noise: Some(NoiseSpec { params, seed: NOISE_SEED }),
                        estimator_tau: None,
                    });
                }
                s.events.clear();
            }
            ExperimentId::Mode => {
                let (share, mode) = match value {
                    SweepValue::Label("conventional") => (BASE_SHARE, CoherencyMode::Conventional),
                    SweepValue::Label("complex") => (BASE_SHARE, complex),
                    _ => (0.0, complex),
                };
                for id in KUNDUR_HYBRIDS {
                    make_hybrid(&mut s, id, share, "G3", mode)?;
                }
                s.events = vec![trip_78()];
            }
            ExperimentId::Fault39 | ExperimentId::Cluster39 => {
                make_hybrid(&mut s, "G7", value.number(), "G1", complex)?;
                s.events = vec![
                    EventSpec::FaultApply { time: FAULT_TIME, bus: 1, r: 0.0, x: 0.0 },
                    EventSpec::FaultClear { time: FAULT_CLEAR, bus: 1 },
                ];
            }
        }
        s.system.name = format!("{}_{}", self.name, self.label(value)).replace(['=', '.'], "_");
        s.validate().map_err(|e| CliError::Config(format!("{}: {e}", self.name)))?;
        Ok(s)
    }

    /// Whether a point may legitimately end UNSTABLE.
    pub fn may_be_unstable(&self, value: &SweepValue) -> bool {
        self.id == ExperimentId::Delay && value.number() >= 1.0
    }
}

/// Outcome of one sweep point.
#[derive(Debug, Clone)]
pub struct PointResult {
    pub label: String,
    pub value: SweepValue,
    pub run: std::result::Result<RunResult, String>,
    pub metrics: Vec<(String, DampingMetrics)>,
    pub extras: Vec<(String, f64)>,
}

impl PointResult {
    pub fn status(&self) -> &'static str {
        match &self.run {
            Ok(r) => r.status.label(),
            Err(_) => "FAILED",
        }
    }

    pub fn metric(&self, channel: &str) -> Option<&DampingMetrics> {
        self.metrics.iter().find(|(c, _)| c == channel).map(|(_, m)| m)
    }

    pub fn extra(&self, key: &str) -> Option<f64> {
        self.extras.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }
}

/// Largest deviation of a channel from its initial value.
pub fn max_deviation(r: &RunResult, channel: &str) -> Option<f64> {
    let c = r.series.column(channel)?;
    let c0 = *c.first()?;
    Some(c.iter().fold(0.0f64, |m, v| m.max((v - c0).abs())))
}

/// Runs one sweep point and derives its metrics.
pub fn run_point(spec: &ExperimentSpec, value: SweepValue, scenario: &Scenario) -> PointResult {
    let label = spec.label(&value);
    let run = cohsim_core::engine::run(scenario).map_err(|e| e.to_string());
    let mut metrics = Vec::new();
    let mut extras = Vec::new();
    if let Ok(r) = &run {
        let t = r.series.time();
        for ch in &spec.metric_channels {
            if let Some(y) = r.series.column(ch) {
                metrics.push((ch.to_string(), damping_metrics(t, y, spec.event_time)));
            }
        }
        if let Some(v) = max_deviation(r, "bus1.vmag") {
            extras.push(("bus1.max_dv".into(), v));
        }
        if spec.id == ExperimentId::Cluster39 {
            if let (Some((_, a)), Some((_, b))) = (r.series.window("G6.cf_omega", 2.0, 10.0), r.series.window("G1.cf_omega", 2.0, 10.0)) {
                if let Some(c) = pearson(&a, &b) {
                    extras.push(("corr_G6_G1".into(), c));
                }
            }
        }
    }
    PointResult { label, value, run, metrics, extras }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssertionOutcome {
    pub description: String,
    pub passed: bool,
    pub detail: String,
}

fn outcome(description: &str, passed: bool, detail: String) -> AssertionOutcome {
    AssertionOutcome { description: description.to_string(), passed, detail }
}

fn values<F: Fn(&PointResult) -> Option<f64>>(points: &[PointResult], f: F) -> Vec<Option<f64>> {
    points.iter().map(f).collect()
}

fn fmt_values(v: &[Option<f64>]) -> String {
    v.iter()
        .map(|x| x.map_or("n/a".to_string(), |x| format!("{x:.5}")))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Evaluates the experiment's expectations on completed sweep points
/// (ordered as in `spec.values`).
pub fn evaluate(spec: &ExperimentSpec, points: &[PointResult]) -> Vec<AssertionOutcome> {
    let stable = |p: &PointResult| matches!(&p.run, Ok(r) if r.status == RunStatus::Stable);
    let ptp = |p: &PointResult| p.metric("coi.freq").map(|m| m.peak_to_peak).filter(|_| stable(p));
    let ratio = |p: &PointResult| p.metric("coi.freq").and_then(|m| m.peak_ratio).filter(|_| stable(p));
    let d = &spec.expectations;
    match spec.id {
        ExperimentId::CSweep => {
            let v = values(points, ptp);
            let all: Option<Vec<f64>> = v.iter().copied().collect();
            let decreasing = all.as_ref().is_some_and(|a| a.windows(2).all(|w| w[1] < w[0]));
            let halved = all.as_ref().is_some_and(|a| a[a.len() - 1] <= 0.5 * a[0]);
            vec![
                outcome(d[0], decreasing, fmt_values(&v)),
                outcome(d[1], halved, fmt_values(&v)),
            ]
        }
        ExperimentId::Delay => {
            let v = values(points, |p| {
                p.metric("coi.freq").and_then(|m| m.peak_ratio).filter(|_| p.status() != "FAILED")
            });
            let unstable = points.last().is_some_and(|p| p.status() == "UNSTABLE");
            let first_two = matches!((v[0], v[1]), (Some(a), Some(b)) if a < b);
            let third = unstable || matches!((v[1], v[2]), (Some(b), Some(c)) if b < c);
            let last_ok = unstable || v[2].is_some_and(|c| c >= 0.9);
            let detail = format!("{} (last status {})", fmt_values(&v), points.last().map_or("n/a", |p| p.status()));
            vec![
                outcome(d[0], first_two && third, detail.clone()),
                outcome(d[1], last_ok, detail),
            ]
        }
        ExperimentId::Noise => {
            let v = values(points, |p| p.extra("bus1.max_dv").filter(|_| stable(p)));
            let all: Option<Vec<f64>> = v.iter().copied().collect();
            let increasing = all.as_ref().is_some_and(|a| a.windows(2).all(|w| w[1] > w[0]));
            let band = all.as_ref().is_some_and(|a| (0.025..=0.10).contains(&a[a.len() - 1]));
            vec![
                outcome(d[0], increasing, fmt_values(&v)),
                outcome(d[1], band, fmt_values(&v)),
            ]
        }
        ExperimentId::Mode => {
            let v = values(points, ratio);
            let ok = matches!((v[0], v[1], v[2]), (Some(none), Some(conv), Some(cplx)) if cplx <= conv && conv < none);
            vec![outcome(d[0], ok, format!("none, conventional, complex = {}", fmt_values(&v)))]
        }
        ExperimentId::Fault39 => {
            let st = values(points, |p| p.metric("coi.freq").map(|m| m.settling_time).filter(|_| stable(p)));
            let pr = values(points, ratio);
            vec![
                outcome(d[0], matches!((st[0], st[1]), (Some(a), Some(b)) if b < a), fmt_values(&st)),
                outcome(d[1], matches!((pr[0], pr[1]), (Some(a), Some(b)) if b < a), fmt_values(&pr)),
            ]
        }
        ExperimentId::Cluster39 => {
            let c = values(points, |p| p.extra("corr_G6_G1"));
            let ok = matches!((c[0], c[1]), (Some(a), Some(b)) if a < 0.0 && b > a);
            vec![outcome(d[0], ok, fmt_values(&c))]
        }
    }
}

/// Runs every point of an experiment (in parallel) and evaluates it.
pub fn sweep(spec: &ExperimentSpec) -> Result<(Vec<PointResult>, Vec<AssertionOutcome>)> {
    use rayon::prelude::*;
    let scenarios: Vec<(SweepValue, Scenario)> = spec
        .values
        .iter()
        .map(|v| spec.scenario(v).map(|s| (*v, s)))
        .collect::<Result<_>>()?;
    let points: Vec<PointResult> = scenarios.par_iter().map(|(v, s)| run_point(spec, *v, s)).collect();
    let checks = evaluate(spec, &points);
    Ok((points, checks))
}
