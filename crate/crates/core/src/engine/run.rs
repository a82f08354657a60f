use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::engine::dae::{Dae, NewtonSettings, SolverStats, Trapezoidal};
use crate::engine::series::{Channel, TimeSeries};
use crate::engine::system::{voltage, ControllerInfo, System};
use crate::engine::SolverConfig;
use crate::netcore::{EventOutcome, NetworkEvent};
use crate::phasor::Complex64;
use crate::scenario::Scenario;
use crate::{Error, Result};

#[allow(unused_imports)]
use num_traits::Float;

const TIME_EPS: f64 = 1e-9;
/// Blocks faster than this force a smaller integration step.
const FAST_BLOCK: f64 = 0.01;
const FAST_STEP: f64 = 0.002;

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Stable,
    /// The instability detector fired; the series ends at `time`.
    Unstable { time: f64, reason: String },
    /// Numerical failure; the series ends at the last accepted step.
    Failed { time: f64, error: Error },
}

impl RunStatus {
    pub fn label(&self) -> &'static str {
        match self {
            RunStatus::Stable => "STABLE",
            RunStatus::Unstable { .. } => "UNSTABLE",
            RunStatus::Failed { .. } => "FAILED",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AppliedEvent {
    pub time: f64,
    pub outcome: EventOutcome,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub series: TimeSeries,
    pub status: RunStatus,
    pub warnings: Vec<String>,
    /// The COI channel fell back to a converter PLL frequency because no
    /// machine remains.
    pub coi_from_pll: bool,
    pub controllers: Vec<ControllerInfo>,
    pub events: Vec<AppliedEvent>,
    pub stats: SolverStats,
    /// Integration step actually used (s).
    pub h: f64,
    pub config: SolverConfig,
    /// Differential states at t = 0 and at the end of the run.
    pub initial_state: Vec<f64>,
    pub final_state: Vec<f64>,
    /// Name and index range of each block's differential states.
    pub state_layout: Vec<(String, core::ops::Range<usize>)>,
}

/// Runs a scenario with its own solver settings.
pub fn run(scenario: &Scenario) -> Result<RunResult> {
    run_with(scenario, &scenario.solver)
}

/// Runs a scenario with the given solver settings. Initialization problems
/// are returned as errors; failures during the run end up in the status.
pub fn run_with(scenario: &Scenario, config: &SolverConfig) -> Result<RunResult> {
    Simulation::new(scenario, config)?.run()
}

pub struct Simulation {
    system: System,
    config: SolverConfig,
    h: f64,
    x: Vec<f64>,
    y: Vec<f64>,
    f: Vec<f64>,
    events: Vec<NetworkEvent>,
    recorder: Recorder,
    warnings: Vec<String>,
}

impl Simulation {
    pub fn new(scenario: &Scenario, config: &SolverConfig) -> Result<Self> {
        let mut scenario_cfg = scenario.clone();
        scenario_cfg.solver = *config;
        scenario_cfg.validate()?;
        let init = System::initialize(&scenario_cfg)?;
        let mut warnings = Vec::new();
        let mut h = config.h;
        if init.system.min_time_constant() < FAST_BLOCK && h > FAST_STEP {
            let n = (config.output_step / FAST_STEP).ceil();
            h = config.output_step / n;
            warnings.push(format!(
                "time constant {:.4} s below {FAST_BLOCK} s: step reduced from {} s to {h} s",
                init.system.min_time_constant(),
                config.h
            ));
        }
        let recorder = Recorder::new(&init.system, &scenario.channels)?;
        if init.system.machines.is_empty() {
            warnings.push("no synchronous machine: coi.freq follows the first converter PLL".into());
        }
        let mut f = vec![0.0; init.system.n_states()];
        let mut g = vec![0.0; init.system.n_algebraic()];
        init.system.eval(&init.x0, &init.y0, &mut f, &mut g);
        Ok(Simulation {
            system: init.system,
            config: *config,
            h,
            x: init.x0,
            y: init.y0,
            f,
            events: scenario.network_events(),
            recorder,
            warnings,
        })
    }

    pub fn system(&self) -> &System {
        &self.system
    }

    fn refresh_derivatives(&mut self) {
        let mut g = vec![0.0; self.system.n_algebraic()];
        self.system.eval(&self.x, &self.y, &mut self.f, &mut g);
    }

    fn newton(&self) -> NewtonSettings {
        NewtonSettings { tol: self.config.newton_tol, max_iters: self.config.max_newton_iters }
    }

    fn apply_events_at(&mut self, t: f64, next: &mut usize, stepper: &mut Trapezoidal, applied: &mut Vec<AppliedEvent>) -> Result<bool> {
        let mut any = false;
        while *next < self.events.len() && (self.events[*next].time - t).abs() <= TIME_EPS {
            let ev = self.events[*next].clone();
            let outcome = self.system.apply(&ev.kind)?;
            applied.push(AppliedEvent { time: t, outcome });
            *next += 1;
            any = true;
        }
        if any {
            stepper.invalidate();
            let newton = self.newton();
            stepper.solve_algebraic(&self.system, t, &self.x, &mut self.y, newton)?;
            self.system.accept(&mut self.x, &self.y);
            self.refresh_derivatives();
        }
        Ok(any)
    }

    pub fn run(mut self) -> Result<RunResult> {
        let cfg = self.config;
        let h = self.h;
        let stride = SolverConfig { h, ..cfg }.output_stride()?;
        let n_steps = (cfg.t_end / h).round() as usize;
        let mut stepper = Trapezoidal::new();
        let mut applied = Vec::new();
        let mut next_event = 0;
        while next_event < self.events.len() && self.events[next_event].time < -TIME_EPS {
            next_event += 1;
        }

        self.recorder.record(&self.system, 0.0, &self.x, &self.y);
        let mut status = RunStatus::Stable;
        let mut t = 0.0;
        if let Err(error) = self.apply_events_at(0.0, &mut next_event, &mut stepper, &mut applied) {
            status = RunStatus::Failed { time: 0.0, error };
        } else if !applied.is_empty() {
            self.recorder.record(&self.system, 0.0, &self.x, &self.y);
        }

        let initial_state = self.x.clone();
        let mut k = 0;
        while k < n_steps && status == RunStatus::Stable {
            let t_grid = (k + 1) as f64 * h;
            let target = match self.events.get(next_event) {
                Some(e) if e.time > t + TIME_EPS && e.time < t_grid - TIME_EPS => e.time,
                _ => t_grid,
            };
            let on_grid = target == t_grid;
            let hs = target - t;
            self.system.advance_noise(hs);
            let newton = self.newton();
            if let Err(error) = stepper.step(&self.system, target, hs, &mut self.x, &mut self.y, &mut self.f, newton) {
                status = RunStatus::Failed { time: target, error };
                break;
            }
            self.system.accept(&mut self.x, &self.y);
            self.refresh_derivatives();
            if on_grid {
                k += 1;
            }
            t = target;

            let output = on_grid && k % stride == 0;
            if let Some(reason) = self.system.instability(&self.x, &self.y) {
                self.recorder.record(&self.system, t, &self.x, &self.y);
                status = RunStatus::Unstable { time: t, reason };
                break;
            }
            if output {
                self.recorder.record(&self.system, t, &self.x, &self.y);
            }
            let event_due = self
                .events
                .get(next_event)
                .is_some_and(|e| (e.time - t).abs() <= TIME_EPS);
            if event_due {
                if !output {
                    self.recorder.record(&self.system, t, &self.x, &self.y);
                }
                match self.apply_events_at(t, &mut next_event, &mut stepper, &mut applied) {
                    Ok(_) => self.recorder.record(&self.system, t, &self.x, &self.y),
                    Err(error) => {
                        status = RunStatus::Failed { time: t, error };
                        break;
                    }
                }
                // the guard itself applies at step ends
                if let Some(reason) = self.system.instability(&self.x, &self.y) {
                    self.warnings.push(format!("t = {t} s after event: {reason}"));
                }
            }
        }

        Ok(RunResult {
            controllers: self.system.controllers(),
            coi_from_pll: self.system.machines.is_empty(),
            series: self.recorder.series,
            status,
            warnings: self.warnings,
            events: applied,
            stats: stepper.stats,
            h,
            config: cfg,
            initial_state,
            final_state: self.x.clone(),
            state_layout: self.system.layout().to_vec(),
        })
    }
}

/// Evaluates every channel at an accepted point and keeps the selected ones.
struct Recorder {
    series: TimeSeries,
    keep: Vec<usize>,
}

fn all_channels(sys: &System) -> Vec<Channel> {
    let mut out = Vec::new();
    let mut add = |name: String, unit: &str| out.push(Channel { name, unit: unit.into() });
    add("coi.freq".into(), "pu");
    add("sys.balance".into(), "pu");
    for k in 0..sys.n_buses() {
        let id = sys.net.bus_id(k);
        add(format!("bus{id}.vmag"), "pu");
        add(format!("bus{id}.vang"), "rad");
    }
    for d in &sys.devices {
        let id = &d.id;
        for (q, u) in [
            ("p", "pu"),
            ("q", "pu"),
            ("ire", "pu"),
            ("iim", "pu"),
            ("imag", "pu"),
            ("cf_rho", "1/s"),
            ("cf_omega", "rad/s"),
        ] {
            add(format!("{id}.{q}"), u);
        }
        if d.machine.is_some() {
            for (q, u) in [("speed", "pu"), ("delta", "rad"), ("pe", "pu"), ("pm", "pu"), ("efd", "pu")] {
                add(format!("{id}.{q}"), u);
            }
        }
        if d.converter.is_some() {
            for (q, u) in [("pll_freq", "pu"), ("ibr_p", "pu"), ("ibr_q", "pu")] {
                add(format!("{id}.{q}"), u);
            }
        }
    }
    out
}

fn sample(sys: &System, x: &[f64], y: &[f64]) -> Vec<f64> {
    let snap = sys.snapshot(x, y);
    let n = sys.n_buses();
    let v: Vec<Complex64> = (0..n).map(|k| voltage(y, k)).collect();
    let mut row = Vec::new();

    let coi = sys.coi(x).unwrap_or_else(|| {
        sys.converters
            .first()
            .map_or(f64::NAN, |c| c.pll.frequency(&x[c.off_pll..], v[c.bus]))
    });
    row.push(coi);
    let generation: Complex64 = sys
        .devices
        .iter()
        .zip(&snap.i_device)
        .map(|(d, i)| v[d.bus] * i.conj())
        .sum();
    let (load, losses) = sys.net.consumption(&v);
    row.push((generation - load - losses).norm());
    for vk in &v {
        row.push(vk.norm());
        row.push(vk.arg());
    }
    for (d, slot) in sys.devices.iter().enumerate() {
        let i = snap.i_device[d];
        let s = v[slot.bus] * i.conj();
        let est = sys.estimators.iter().position(|e| e.device == d).and_then(|k| sys.cf_estimate(k, x, i));
        row.extend_from_slice(&[s.re, s.im, i.re, i.im, i.norm()]);
        row.push(est.map_or(f64::NAN, |e| e.rho));
        row.push(est.map_or(f64::NAN, |e| e.omega));
        if let Some(m) = slot.machine {
            let mu = &sys.machines[m];
            let xs = &x[mu.off..];
            let vb = v[slot.bus];
            row.push(xs[crate::machines::sync_idx::OMEGA]);
            row.push(xs[crate::machines::sync_idx::DELTA]);
            row.push(mu.sm.electrical_power(xs, vb) * mu.scale);
            let pm = mu.gov.as_ref().map_or(mu.pm0, |(g, o, _)| g.mechanical_power(&x[*o..]));
            row.push(pm * mu.scale);
            row.push(mu.avr.as_ref().map_or(mu.efd0, |(a, o, _)| a.efd(&x[*o..])));
        }
        if let Some(c) = slot.converter {
            let cu = &sys.converters[c];
            row.push(cu.pll.frequency(&x[cu.off_pll..], v[slot.bus]));
            let s = v[slot.bus] * snap.i_converter[c].conj();
            row.push(s.re);
            row.push(s.im);
        }
    }
    row
}

impl Recorder {
    fn new(sys: &System, spec: &crate::scenario::ChannelSpec) -> Result<Self> {
        let all = all_channels(sys);
        let keep: Vec<usize> = (0..all.len()).filter(|&k| spec.selects(&all[k].name)).collect();
        let chosen = keep.iter().map(|&k| all[k].clone()).collect();
        Ok(Recorder { series: TimeSeries::new(chosen)?, keep })
    }

    fn record(&mut self, sys: &System, t: f64, x: &[f64], y: &[f64]) {
        let full = sample(sys, x, y);
        let row: Vec<f64> = self.keep.iter().map(|&k| full[k]).collect();
        self.series.push(t, &row);
    }
}
