//! Assembly of a scenario into one flat DAE: initialization from the power
//! flow, state layout, residual evaluation and derived output quantities.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::converter::{coherency_reference, split_device, CoherencyController, GflConverter, Pll};
use crate::engine::dae::Dae;
use crate::engine::metrics::coi_frequency;
use crate::engine::Coupling;
use crate::machines::{Avr, Pss2, SynchronousMachine, TurbineGovernorType1};
use crate::netcore::{apply_event, power_flow, AdmittanceMatrix, EventKind, EventOutcome, LoadZ, Network};
use crate::phasor::{polar, unwrap_from, Complex64, Phasor};
use crate::scenario::Scenario;
use crate::signals::{CfEstimate, CfEstimator, OuNoise};
use crate::{Error, Result};

#[allow(unused_imports)]
use num_traits::Float;

/// Rotor angle separation from the COI angle (rad) treated as pole slip.
pub const LOSS_OF_SYNCHRONISM: f64 = core::f64::consts::PI;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone)]
pub(crate) struct MachineUnit {
    pub device: usize,
    pub bus: usize,
    pub sm: SynchronousMachine,
    /// Machine rating over system base.
    pub scale: f64,
    pub rating: f64,
    pub off: usize,
    pub avr: Option<(Avr, usize, f64)>,
    pub gov: Option<(TurbineGovernorType1, usize, f64)>,
    pub pss: Option<(Pss2, usize)>,
    pub efd0: f64,
    pub pm0: f64,
}

impl MachineUnit {
    fn states<'a>(&self, x: &'a [f64]) -> &'a [f64] {
        &x[self.off..self.off + self.sm.n_states()]
    }

    fn efd(&self, x: &[f64]) -> f64 {
        self.avr.as_ref().map_or(self.efd0, |(a, o, _)| a.efd(&x[*o..]))
    }

    fn pm(&self, x: &[f64]) -> f64 {
        self.gov.as_ref().map_or(self.pm0, |(g, o, _)| g.mechanical_power(&x[*o..]))
    }

    fn omega(&self, x: &[f64]) -> f64 {
        x[self.off + crate::machines::sync_idx::OMEGA]
    }

    fn delta(&self, x: &[f64]) -> f64 {
        x[self.off + crate::machines::sync_idx::DELTA]
    }
}

#[derive(Debug, Clone)]
pub(crate) struct NoiseChannel {
    pub re: OuNoise,
    pub im: OuNoise,
    /// Initial reference current magnitude.
    pub scale: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct ConverterUnit {
    pub device: usize,
    pub bus: usize,
    pub pll: Pll,
    pub gfl: GflConverter,
    pub ctrl: CoherencyController,
    pub off_pll: usize,
    pub off_i: usize,
    pub delay: Option<(f64, usize)>,
    pub noise: Option<NoiseChannel>,
}

#[derive(Debug, Clone)]
pub(crate) struct EstimatorUnit {
    pub device: usize,
    pub est: CfEstimator,
    pub off: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct DeviceSlot {
    pub id: String,
    pub bus: usize,
    pub machine: Option<usize>,
    pub converter: Option<usize>,
}

/// Values held constant during one step and refreshed after it is accepted.
#[derive(Debug, Clone)]
pub(crate) struct StepMemory {
    pub noise: Vec<Complex64>,
    pub held_ref: Vec<Complex64>,
    pub phase_ref: Vec<f64>,
    pub i_dev_prev: Vec<Complex64>,
}

/// Device currents and controller signals at one point.
#[derive(Debug, Clone)]
pub(crate) struct Snapshot {
    pub i_converter: Vec<Complex64>,
    pub i_device: Vec<Complex64>,
    /// Per converter: dq current reference (after the ride-through hold) and
    /// whether it was freshly computed.
    pub i_ref_dq: Vec<(Complex64, bool)>,
}

/// Initial controller gains, for inspection.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerInfo {
    pub device: String,
    pub reference: String,
    pub k_i: f64,
    pub theta_k: f64,
    pub i_mag0: f64,
}

#[derive(Debug, Clone)]
pub struct System {
    pub(crate) net: Network,
    pub(crate) ybus: AdmittanceMatrix,
    pub(crate) coupling: Coupling,
    pub(crate) devices: Vec<DeviceSlot>,
    pub(crate) machines: Vec<MachineUnit>,
    pub(crate) converters: Vec<ConverterUnit>,
    pub(crate) estimators: Vec<EstimatorUnit>,
    pub(crate) layout: Vec<(String, Range<usize>)>,
    pub(crate) n_states: usize,
    pub(crate) mem: StepMemory,
    pub(crate) min_time_constant: f64,
}

/// Result of initialization: the system and its consistent starting point.
#[derive(Debug, Clone)]
pub struct Initialized {
    pub system: System,
    pub x0: Vec<f64>,
    pub y0: Vec<f64>,
}

struct Layout {
    next: usize,
    map: Vec<(String, Range<usize>)>,
}

impl Layout {
    fn take(&mut self, name: String, n: usize) -> usize {
        let off = self.next;
        self.next += n;
        self.map.push((name, off..self.next));
        off
    }
}

pub(crate) fn voltage(y: &[f64], k: usize) -> Phasor {
    Complex64::new(y[2 * k], y[2 * k + 1])
}

impl System {
    /// Solves the power flow and initializes every device at steady state.
    pub fn initialize(scenario: &Scenario) -> Result<Initialized> {
        scenario.validate()?;
        let base = scenario.system.mva_base;
        let omega_b = scenario.omega_b();
        let mut net = scenario.network()?;
        let mut pf_spec = scenario.power_flow_spec();
        pf_spec.tolerance = 1e-12;
        let pf = power_flow(&net, &pf_spec)?;
        for (bus, v) in net.buses.iter_mut().zip(&pf.v) {
            bus.v0 = *v;
        }
        for l in &scenario.loads {
            let k = net.bus_index(l.bus)?;
            net.add_load(LoadZ::from_power(l.bus, l.p, l.q, pf.v[k]))?;
        }

        // Dispatch per device: the bus injection is shared in proportion to
        // the set points (equally at the slack bus).
        let n_dev = scenario.devices.len();
        let mut s_dev = vec![ZERO; n_dev];
        for (k, bus) in net.buses.iter().enumerate() {
            let at_bus: Vec<usize> = (0..n_dev).filter(|&d| scenario.devices[d].bus == bus.id).collect();
            if at_bus.is_empty() {
                continue;
            }
            let slack = bus.id == scenario.system.slack_bus;
            let total_p: f64 = at_bus.iter().map(|&d| scenario.devices[d].p).sum();
            for &d in &at_bus {
                let w = if slack || total_p.abs() < 1e-12 {
                    1.0 / at_bus.len() as f64
                } else {
                    scenario.devices[d].p / total_p
                };
                s_dev[d] = pf.s_gen[k] * w;
            }
        }

        let mut lay = Layout { next: 0, map: Vec::new() };
        let mut x0 = Vec::new();
        let mut devices = Vec::with_capacity(n_dev);
        let mut machines = Vec::new();
        let mut converters = Vec::new();
        let mut estimators = Vec::new();
        let mut min_tc = f64::INFINITY;
        let mut tc = |v: f64| {
            if v > 0.0 {
                min_tc = min_tc.min(v);
            }
        };

        let i_dev0: Vec<Complex64> = (0..n_dev)
            .map(|d| {
                let k = net.bus_index(scenario.devices[d].bus).expect("validated bus");
                (s_dev[d] / pf.v[k]).conj()
            })
            .collect();

        for (d, spec) in scenario.devices.iter().enumerate() {
            let bus = net.bus_index(spec.bus)?;
            let v = pf.v[bus];
            let split = split_device(spec.mva, s_dev[d], spec.share())?;
            let mut slot = DeviceSlot { id: spec.id.clone(), bus, machine: None, converter: None };
            let ctx = |e: Error| match e {
                Error::Init(m) => Error::Init(format!("device {}: {m}", spec.id)),
                other => other,
            };

            if let Some(rating) = split.sm_rating {
                let params = spec.machine.clone().expect("validated machine");
                tc(params.td01);
                tc(params.tq01);
                if params.order == crate::machines::MachineOrder::Sixth {
                    tc(params.td02);
                    tc(params.tq02);
                }
                let sm = SynchronousMachine::new(params, omega_b)?;
                let scale = rating / base;
                let (xs, efd0, pm0) = sm.initialize(v, split.s_sm / scale).map_err(ctx)?;
                let off = lay.take(format!("{}.machine", spec.id), xs.len());
                x0.extend_from_slice(&xs);
                let avr = match &spec.avr {
                    Some(a) => {
                        let (xa, vref) = a.initialize(efd0, v.norm()).map_err(ctx)?;
                        match a {
                            Avr::Dc1(p) => [p.tr, p.ta, p.te, p.tf].into_iter().for_each(&mut tc),
                            Avr::Ac4(p) => [p.tr, p.tb, p.tc, p.ta].into_iter().for_each(&mut tc),
                        }
                        let o = lay.take(format!("{}.avr", spec.id), xa.len());
                        x0.extend_from_slice(&xa);
                        Some((a.clone(), o, vref))
                    }
                    None => None,
                };
                let gov = match &spec.governor {
                    Some(g) => {
                        let (xg, p_order) = g.initialize(pm0).map_err(ctx)?;
                        [g.ts, g.tc, g.t5].into_iter().for_each(&mut tc);
                        let o = lay.take(format!("{}.governor", spec.id), xg.len());
                        x0.extend_from_slice(&xg);
                        Some((g.clone(), o, p_order))
                    }
                    None => None,
                };
                let pss = match &spec.pss {
                    Some(p) => {
                        [p.tw, p.t2, p.t4].into_iter().for_each(&mut tc);
                        let o = lay.take(format!("{}.pss", spec.id), p.n_states());
                        x0.extend_from_slice(&p.initialize());
                        Some((p.clone(), o))
                    }
                    None => None,
                };
                slot.machine = Some(machines.len());
                machines.push(MachineUnit { device: d, bus, sm, scale, rating, off, avr, gov, pss, efd0, pm0 });
            }

            if split.ibr_rating.is_some() {
                let coh = spec.coherency.as_ref().expect("validated coherency");
                let reference = scenario.device_index(&coh.reference).expect("validated reference");
                let cp = spec.converter;
                let pll = Pll { kp: cp.pll_kp, ki: cp.pll_ki, omega_b };
                let gfl = GflConverter { tau: cp.tau_idq };
                tc(cp.tau_idq);
                let i_ibr = (split.s_ibr / v).conj();
                let i_ext0 = i_dev0[reference];
                let ctrl = CoherencyController::new(reference, split.share, coh.mode, i_ibr, i_ext0).map_err(ctx)?;

                let off_pll = lay.take(format!("{}.pll", spec.id), 2);
                x0.extend_from_slice(&pll.initialize(v));
                let off_i = lay.take(format!("{}.current_loop", spec.id), 2);
                x0.extend_from_slice(&gfl.initialize(split.s_ibr, v));

                let chain = scenario.measurements.iter().find(|m| m.channel == spec.id);
                let delay = match chain {
                    Some(m) if m.delay > 0.0 => {
                        tc(m.delay);
                        let o = lay.take(format!("{}.delay", spec.id), 2);
                        x0.extend_from_slice(&[i_ext0.re, i_ext0.im]);
                        Some((m.delay, o))
                    }
                    _ => None,
                };
                let noise = chain.and_then(|m| m.noise.as_ref()).map(|n| NoiseChannel {
                    re: OuNoise::new(n.params, n.seed, 2 * d as u64),
                    im: OuNoise::new(n.params, n.seed, 2 * d as u64 + 1),
                    scale: i_ext0.norm(),
                });
                slot.converter = Some(converters.len());
                converters.push(ConverterUnit {
                    device: d,
                    bus,
                    pll,
                    gfl,
                    ctrl,
                    off_pll,
                    off_i,
                    delay,
                    noise,
                });
            }
            devices.push(slot);
        }

        for (d, spec) in scenario.devices.iter().enumerate() {
            let tau = scenario
                .measurements
                .iter()
                .find(|m| m.channel == spec.id)
                .and_then(|m| m.estimator_tau)
                .unwrap_or(scenario.channels.cf_tau);
            let est = CfEstimator::new(tau)?;
            tc(tau);
            if i_dev0[d].norm() < crate::signals::MIN_MAGNITUDE {
                return Err(Error::init(format!("device {}: injected current is zero", spec.id)));
            }
            let off = lay.take(format!("{}.cf", spec.id), est.n_states());
            x0.extend_from_slice(&est.initialize(i_dev0[d]));
            estimators.push(EstimatorUnit { device: d, est, off });
        }

        let y0: Vec<f64> = pf.v.iter().flat_map(|v| [v.re, v.im]).collect();
        let ybus = net.ybus();
        let mut system = System {
            net,
            ybus,
            coupling: scenario.solver.coupling,
            devices,
            machines,
            converters,
            estimators,
            n_states: lay.next,
            layout: lay.map,
            mem: StepMemory {
                noise: Vec::new(),
                held_ref: Vec::new(),
                phase_ref: Vec::new(),
                i_dev_prev: i_dev0.clone(),
            },
            min_time_constant: min_tc,
        };
        system.mem.noise = vec![ZERO; system.converters.len()];
        system.mem.phase_ref = system.estimators.iter().map(|e| i_dev0[e.device].arg()).collect();
        system.mem.held_ref = system
            .converters
            .iter()
            .map(|c| Complex64::new(x0[c.off_i], x0[c.off_i + 1]))
            .collect();
        Ok(Initialized { system, x0, y0 })
    }

    pub fn n_buses(&self) -> usize {
        self.net.len()
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    /// Device → state-slice ordering map.
    pub fn layout(&self) -> &[(String, Range<usize>)] {
        &self.layout
    }

    pub fn controllers(&self) -> Vec<ControllerInfo> {
        self.converters
            .iter()
            .map(|c| ControllerInfo {
                device: self.devices[c.device].id.clone(),
                reference: self.devices[c.ctrl.reference].id.clone(),
                k_i: c.ctrl.k_i,
                theta_k: c.ctrl.theta_k,
                i_mag0: c.ctrl.i_mag0,
            })
            .collect()
    }

    /// Smallest time constant among all dynamic blocks.
    pub fn min_time_constant(&self) -> f64 {
        self.min_time_constant
    }

    pub(crate) fn snapshot(&self, x: &[f64], y: &[f64]) -> Snapshot {
        let mut i_device = vec![ZERO; self.devices.len()];
        for m in &self.machines {
            i_device[m.device] += m.sm.injection(m.states(x), voltage(y, m.bus)) * m.scale;
        }
        let i_converter: Vec<Complex64> = self
            .converters
            .iter()
            .map(|c| {
                let i = c.gfl.injection(&x[c.off_i..], x[c.off_pll]);
                i_device[c.device] += i;
                i
            })
            .collect();
        let i_ref_dq = self
            .converters
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let i_meas = self.measured_reference(k, x, &i_device);
                let i_ref = coherency_reference(i_meas, &c.ctrl);
                let v = voltage(y, c.bus);
                let s_ref = v * i_ref.conj();
                let v_pll = v * polar(1.0, -x[c.off_pll]);
                match c.gfl.current_reference(s_ref, v_pll) {
                    Some(r) => (r, true),
                    None => (self.mem.held_ref[k], false),
                }
            })
            .collect();
        Snapshot { i_converter, i_device, i_ref_dq }
    }

    fn external_current(&self, k: usize, i_device: &[Complex64]) -> Complex64 {
        let r = self.converters[k].ctrl.reference;
        match self.coupling {
            Coupling::Algebraic => i_device[r],
            Coupling::Lagged => self.mem.i_dev_prev[r],
        }
    }

    fn measured_reference(&self, k: usize, x: &[f64], i_device: &[Complex64]) -> Complex64 {
        let c = &self.converters[k];
        let delayed = match c.delay {
            Some((_, o)) => Complex64::new(x[o], x[o + 1]),
            None => self.external_current(k, i_device),
        };
        delayed + self.mem.noise[k]
    }

    pub(crate) fn coi(&self, x: &[f64]) -> Option<f64> {
        let speeds: Vec<f64> = self.machines.iter().map(|m| m.omega(x)).collect();
        let h: Vec<f64> = self.machines.iter().map(|m| m.sm.params.h).collect();
        let s: Vec<f64> = self.machines.iter().map(|m| m.rating).collect();
        coi_frequency(&speeds, &h, &s)
    }

    /// Applies a network event and refreshes the admittance matrix.
    pub(crate) fn apply(&mut self, event: &EventKind) -> Result<EventOutcome> {
        let out = apply_event(event, &mut self.net)?;
        self.ybus = self.net.ybus();
        Ok(out)
    }

    /// Draws the measurement noise for the step ending after `h`.
    pub(crate) fn advance_noise(&mut self, h: f64) {
        for (k, c) in self.converters.iter_mut().enumerate() {
            if let Some(n) = &mut c.noise {
                let re = crate::signals::ou_step(&mut n.re, h);
                let im = crate::signals::ou_step(&mut n.im, h);
                self.mem.noise[k] = Complex64::new(re, im) * n.scale;
            }
        }
    }

    /// Refreshes per-step memory at an accepted point and clamps limited
    /// states.
    pub(crate) fn accept(&mut self, x: &mut [f64], y: &[f64]) {
        for m in &self.machines {
            if let Some((a, o, _)) = &m.avr {
                a.enforce_limits(&mut x[*o..*o + a.n_states()]);
            }
        }
        let snap = self.snapshot(x, y);
        for (k, (r, fresh)) in snap.i_ref_dq.iter().enumerate() {
            if *fresh {
                self.mem.held_ref[k] = *r;
            }
        }
        for (k, e) in self.estimators.iter().enumerate() {
            let i = snap.i_device[e.device];
            if i.norm() >= crate::signals::MIN_MAGNITUDE {
                self.mem.phase_ref[k] = unwrap_from(self.mem.phase_ref[k], i.arg());
            }
        }
        self.mem.i_dev_prev = snap.i_device;
    }

    pub(crate) fn cf_estimate(&self, k: usize, x: &[f64], i: Complex64) -> Option<CfEstimate> {
        let e = &self.estimators[k];
        e.est.estimate(&x[e.off..e.off + 4], i, self.mem.phase_ref[k])
    }

    /// First instability condition met at this point, if any: |V| > 2 pu,
    /// |ω − 1| > 0.2 pu or pole slip.
    pub(crate) fn instability(&self, x: &[f64], y: &[f64]) -> Option<String> {
        for k in 0..self.n_buses() {
            let v = voltage(y, k).norm();
            if !(v <= 2.0) {
                return Some(format!("|V| = {v:.3} pu at bus {}", self.net.bus_id(k)));
            }
        }
        for m in &self.machines {
            let w = m.omega(x);
            if !((w - 1.0).abs() <= 0.2) {
                return Some(format!("speed {w:.3} pu at {}", self.devices[m.device].id));
            }
        }
        let weights: Vec<f64> = self.machines.iter().map(|m| m.sm.params.h * m.rating).collect();
        let angles: Vec<f64> = self.machines.iter().map(|m| m.delta(x)).collect();
        let ones = vec![1.0; angles.len()];
        if let Some(center) = coi_frequency(&angles, &weights, &ones) {
            for (m, a) in self.machines.iter().zip(&angles) {
                let sep = a - center;
                if sep.abs() > LOSS_OF_SYNCHRONISM {
                    return Some(format!(
                        "loss of synchronism: {} rotor angle {sep:.2} rad from the COI",
                        self.devices[m.device].id
                    ));
                }
            }
        }
        None
    }
}

impl Dae for System {
    fn n_states(&self) -> usize {
        self.n_states
    }

    fn n_algebraic(&self) -> usize {
        2 * self.net.len()
    }

    fn eval(&self, x: &[f64], y: &[f64], f: &mut [f64], g: &mut [f64]) {
        let snap = self.snapshot(x, y);

        for m in &self.machines {
            let v = voltage(y, m.bus);
            let n = m.sm.n_states();
            let efd = m.efd(x);
            let pm = m.pm(x);
            let omega = m.omega(x);
            m.sm.derivatives(m.states(x), v, efd, pm, &mut f[m.off..m.off + n]);
            let vs = match &m.pss {
                Some((p, o)) => {
                    p.derivatives(&x[*o..*o + 3], omega, &mut f[*o..*o + 3]);
                    p.output(&x[*o..*o + 3], omega)
                }
                None => 0.0,
            };
            if let Some((a, o, vref)) = &m.avr {
                let na = a.n_states();
                a.derivatives(&x[*o..*o + na], v.norm(), vref + vs, &mut f[*o..*o + na]);
            }
            if let Some((gv, o, p_order)) = &m.gov {
                gv.derivatives(&x[*o..*o + 3], omega, *p_order, &mut f[*o..*o + 3]);
            }
        }

        for (k, c) in self.converters.iter().enumerate() {
            let v = voltage(y, c.bus);
            c.pll.derivatives(&x[c.off_pll..c.off_pll + 2], v, &mut f[c.off_pll..c.off_pll + 2]);
            let (i_ref, _) = snap.i_ref_dq[k];
            c.gfl.derivatives(&x[c.off_i..c.off_i + 2], i_ref, &mut f[c.off_i..c.off_i + 2]);
            if let Some((tau, o)) = c.delay {
                let u = self.external_current(k, &snap.i_device);
                f[o] = (u.re - x[o]) / tau;
                f[o + 1] = (u.im - x[o + 1]) / tau;
            }
        }

        for (k, e) in self.estimators.iter().enumerate() {
            let i = snap.i_device[e.device];
            e.est.derivatives(&x[e.off..e.off + 4], i, self.mem.phase_ref[k], &mut f[e.off..e.off + 4]);
        }

        let n = self.net.len();
        let v: Vec<Complex64> = (0..n).map(|k| voltage(y, k)).collect();
        let mut mis = self.ybus.mul(&v);
        for (d, slot) in self.devices.iter().enumerate() {
            mis[slot.bus] -= snap.i_device[d];
        }
        for (k, r) in mis.iter().enumerate() {
            g[2 * k] = r.re;
            g[2 * k + 1] = r.im;
        }
    }

    fn equation_name(&self, k: usize) -> String {
        if k < self.n_states {
            for (name, r) in &self.layout {
                if r.contains(&k) {
                    return format!("{name}[{}]", k - r.start);
                }
            }
            return format!("state {k}");
        }
        let j = k - self.n_states;
        let part = if j % 2 == 0 { "re" } else { "im" };
        format!("current balance ({part}) at bus {}", self.net.bus_id(j / 2))
    }
}

impl core::fmt::Display for ControllerInfo {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(
            f,
            "{} -> {}: k_i = {:.6}, theta_k = {:.6} rad",
            self.device, self.reference, self.k_i, self.theta_k
        )
    }
}
