//! Scenario description: network data, devices, events, measurement chains,
//! solver settings and channel selection. Electrical quantities are per unit
//! on the system MVA base except machine and controller blocks, which are on
//! the device rating. Angles are in radians.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::converter::{CoherencyMode, ConverterParams};
use crate::engine::SolverConfig;
use crate::machines::{Avr, MachineParams, Pss2, SynchronousMachine, TurbineGovernorType1};
use crate::netcore::{
    BranchRef, Bus, BusId, EventKind, GenSetpoint, LoadPower, Network, NetworkEvent, PowerFlowSpec,
    DEFAULT_FAULT_ADMITTANCE,
};
use crate::phasor::Complex64;
use crate::signals::OuParams;
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[cfg(feature = "serde")]
mod defaults {
    pub fn one() -> f64 {
        1.0
    }
    pub fn circuit() -> u32 {
        1
    }
    pub fn yes() -> bool {
        true
    }
    pub fn schema() -> u32 {
        super::SCHEMA_VERSION
    }
    pub fn seed() -> u64 {
        0
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct Scenario {
    pub system: SystemSpec,
    pub buses: Vec<BusSpec>,
    pub branches: Vec<BranchSpec>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub loads: Vec<LoadSpec>,
    pub devices: Vec<DeviceSpec>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub events: Vec<EventSpec>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub measurements: Vec<MeasurementSpec>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub solver: SolverConfig,
    #[cfg_attr(feature = "serde", serde(default))]
    pub channels: ChannelSpec,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct SystemSpec {
    pub name: String,
    #[cfg_attr(feature = "serde", serde(default = "defaults::schema"))]
    pub schema_version: u32,
    /// System base (MVA).
    pub mva_base: f64,
    /// Nominal frequency (Hz).
    pub frequency_hz: f64,
    pub slack_bus: BusId,
    #[cfg_attr(feature = "serde", serde(default))]
    pub slack_angle: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct BusSpec {
    pub id: BusId,
    #[cfg_attr(feature = "serde", serde(default))]
    pub base_kv: f64,
    /// Shunt conductance and susceptance (pu at 1 pu voltage).
    #[cfg_attr(feature = "serde", serde(default))]
    pub gs: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub bs: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct BranchSpec {
    pub from: BusId,
    pub to: BusId,
    pub r: f64,
    pub x: f64,
    /// Total line charging susceptance.
    #[cfg_attr(feature = "serde", serde(default))]
    pub b: f64,
    /// Off-nominal turns ratio at the `from` side.
    #[cfg_attr(feature = "serde", serde(default = "defaults::one"))]
    pub tap: f64,
    #[cfg_attr(feature = "serde", serde(default = "defaults::circuit"))]
    pub circuit: u32,
    #[cfg_attr(feature = "serde", serde(default = "defaults::yes"))]
    pub in_service: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct LoadSpec {
    pub bus: BusId,
    pub p: f64,
    pub q: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum DeviceKind {
    /// Synchronous machine with optional controls.
    Sm,
    /// Machine share `1 − C` plus a coherency-controlled converter share `C`.
    Hybrid,
    /// Converter only.
    Ibr,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct CoherencySpec {
    /// Coherency share C in [0, 1].
    pub share: f64,
    /// Id of the device whose injected current is imitated.
    pub reference: String,
    pub mode: CoherencyMode,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct DeviceSpec {
    pub id: String,
    pub bus: BusId,
    pub kind: DeviceKind,
    /// Rating (MVA); machine and controller data are on this base.
    pub mva: f64,
    /// Active power dispatch (pu, system base). Ignored at the slack bus.
    #[cfg_attr(feature = "serde", serde(default))]
    pub p: f64,
    /// Voltage set point for the power flow (pu).
    #[cfg_attr(feature = "serde", serde(default = "defaults::one"))]
    pub v_set: f64,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub machine: Option<MachineParams>,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub avr: Option<Avr>,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub governor: Option<TurbineGovernorType1>,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub pss: Option<Pss2>,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub coherency: Option<CoherencySpec>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub converter: ConverterParams,
}

impl DeviceSpec {
    /// Coherency share, with pure machines at 0 and pure converters at 1.
    pub fn share(&self) -> f64 {
        match self.kind {
            DeviceKind::Sm => 0.0,
            DeviceKind::Ibr => 1.0,
            DeviceKind::Hybrid => self.coherency.as_ref().map_or(0.0, |c| c.share),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields))]
pub enum EventSpec {
    BranchTrip {
        time: f64,
        from: BusId,
        to: BusId,
        #[cfg_attr(feature = "serde", serde(default = "defaults::circuit"))]
        circuit: u32,
    },
    /// Shunt fault through impedance `r + jx`; zero impedance is a bolted
    /// fault.
    FaultApply {
        time: f64,
        bus: BusId,
        #[cfg_attr(feature = "serde", serde(default))]
        r: f64,
        #[cfg_attr(feature = "serde", serde(default))]
        x: f64,
    },
    FaultClear { time: f64, bus: BusId },
}

impl EventSpec {
    pub fn time(&self) -> f64 {
        match *self {
            EventSpec::BranchTrip { time, .. } | EventSpec::FaultApply { time, .. } | EventSpec::FaultClear { time, .. } => time,
        }
    }

    pub fn to_network_event(&self) -> NetworkEvent {
        let kind = match *self {
            EventSpec::BranchTrip { from, to, circuit, .. } => EventKind::BranchTrip(BranchRef { from, to, circuit }),
            EventSpec::FaultApply { bus, r, x, .. } => {
                let z = Complex64::new(r, x);
                let admittance = if z.norm() == 0.0 {
                    Complex64::new(DEFAULT_FAULT_ADMITTANCE, 0.0)
                } else {
                    z.inv()
                };
                EventKind::FaultApply { bus, admittance }
            }
            EventSpec::FaultClear { bus, .. } => EventKind::FaultClear { bus },
        };
        NetworkEvent { time: self.time(), kind }
    }
}

/// Noise on a measured reference current. The OU output multiplies the
/// initial reference current magnitude and is added to the real and
/// imaginary parts as two independent streams.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct NoiseSpec {
    #[cfg_attr(feature = "serde", serde(flatten))]
    pub params: OuParams,
    #[cfg_attr(feature = "serde", serde(default = "defaults::seed"))]
    pub seed: u64,
}

/// Measurement chain on the reference current seen by the controller of
/// device `channel`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct MeasurementSpec {
    pub channel: String,
    /// First-order communication delay (s); 0 disables it.
    #[cfg_attr(feature = "serde", serde(default))]
    pub delay: f64,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub noise: Option<NoiseSpec>,
    /// Filter constant of the complex-frequency estimator on this device's
    /// injected current; overrides `channels.cf_tau`.
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub estimator_tau: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct ChannelSpec {
    /// Default complex-frequency estimator filter constant (s).
    pub cf_tau: f64,
    /// Channel name prefixes to record; empty records everything.
    pub include: Vec<String>,
}

impl Default for ChannelSpec {
    fn default() -> Self {
        ChannelSpec {
            cf_tau: 0.02,
            include: Vec::new(),
        }
    }
}

impl ChannelSpec {
    pub fn selects(&self, name: &str) -> bool {
        self.include.is_empty() || self.include.iter().any(|p| name.starts_with(p.as_str()))
    }
}

fn finite(path: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(format!("{path}: value {v} is not finite")))
    }
}

fn positive(path: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::config(format!("{path}: {v} must be > 0")))
    }
}

fn at(path: &str, e: Error) -> Error {
    match e {
        Error::Config(m) => Error::Config(format!("{path}: {m}")),
        other => other,
    }
}

impl Scenario {
    pub fn device_index(&self, id: &str) -> Option<usize> {
        self.devices.iter().position(|d| d.id == id)
    }

    pub fn device(&self, id: &str) -> Option<&DeviceSpec> {
        self.devices.iter().find(|d| d.id == id)
    }

    pub fn device_mut(&mut self, id: &str) -> Option<&mut DeviceSpec> {
        self.devices.iter_mut().find(|d| d.id == id)
    }

    pub fn omega_b(&self) -> f64 {
        core::f64::consts::TAU * self.system.frequency_hz
    }

    /// Checks every invariant and cross-reference. Error messages start with
    /// the offending field path.
    pub fn validate(&self) -> Result<()> {
        let sys = &self.system;
        if sys.schema_version != SCHEMA_VERSION {
            return Err(Error::config(format!(
                "system.schema_version: {} unsupported (expected {SCHEMA_VERSION})",
                sys.schema_version
            )));
        }
        positive("system.mva_base", sys.mva_base)?;
        positive("system.frequency_hz", sys.frequency_hz)?;
        finite("system.slack_angle", sys.slack_angle)?;

        let mut buses = BTreeSet::new();
        for (k, b) in self.buses.iter().enumerate() {
            if !buses.insert(b.id) {
                return Err(Error::config(format!("buses[{k}].id: duplicate bus {}", b.id)));
            }
            finite(&format!("buses[{k}].gs"), b.gs)?;
            finite(&format!("buses[{k}].bs"), b.bs)?;
        }
        let bus_exists = |path: String, id: BusId| {
            if buses.contains(&id) {
                Ok(())
            } else {
                Err(Error::config(format!("{path}: unknown bus {id}")))
            }
        };
        bus_exists("system.slack_bus".into(), sys.slack_bus)?;
        for (k, br) in self.branches.iter().enumerate() {
            bus_exists(format!("branches[{k}].from"), br.from)?;
            bus_exists(format!("branches[{k}].to"), br.to)?;
            for (name, v) in [("r", br.r), ("x", br.x), ("b", br.b)] {
                finite(&format!("branches[{k}].{name}"), v)?;
            }
            positive(&format!("branches[{k}].tap"), br.tap)?;
        }
        for (k, l) in self.loads.iter().enumerate() {
            bus_exists(format!("loads[{k}].bus"), l.bus)?;
            finite(&format!("loads[{k}].p"), l.p)?;
            finite(&format!("loads[{k}].q"), l.q)?;
        }

        let mut ids = BTreeSet::new();
        for (k, d) in self.devices.iter().enumerate() {
            let path = format!("devices[{k}] ({})", d.id);
            if d.id.is_empty() || !ids.insert(d.id.as_str()) {
                return Err(Error::config(format!("{path}.id: empty or duplicate device id")));
            }
            bus_exists(format!("{path}.bus"), d.bus)?;
            positive(&format!("{path}.mva"), d.mva)?;
            positive(&format!("{path}.v_set"), d.v_set)?;
            finite(&format!("{path}.p"), d.p)?;
            self.validate_device(&path, d)?;
        }
        if !self.devices.iter().any(|d| d.bus == sys.slack_bus) {
            return Err(Error::config(format!("system.slack_bus: no device at bus {}", sys.slack_bus)));
        }

        let mut chains = BTreeSet::new();
        for (k, m) in self.measurements.iter().enumerate() {
            let path = format!("measurements[{k}]");
            let dev = self
                .device(&m.channel)
                .ok_or_else(|| Error::config(format!("{path}.channel: unknown device '{}'", m.channel)))?;
            if !chains.insert(m.channel.as_str()) {
                return Err(Error::config(format!("{path}.channel: duplicate chain for '{}'", m.channel)));
            }
            if (m.delay != 0.0 || m.noise.is_some()) && dev.coherency.is_none() {
                return Err(Error::config(format!(
                    "{path}.channel: device '{}' has no coherency controller to feed",
                    m.channel
                )));
            }
            if !(m.delay.is_finite() && m.delay >= 0.0) {
                return Err(Error::config(format!("{path}.delay: {} must be >= 0", m.delay)));
            }
            if let Some(n) = &m.noise {
                let p = &n.params;
                if !(p.sigma.is_finite() && p.sigma >= 0.0) {
                    return Err(Error::config(format!("{path}.noise.sigma: {} must be >= 0", p.sigma)));
                }
                positive(&format!("{path}.noise.alpha"), p.alpha)?;
                finite(&format!("{path}.noise.weight"), p.weight)?;
            }
            if let Some(tau) = m.estimator_tau {
                positive(&format!("{path}.estimator_tau"), tau)?;
            }
        }

        for (k, e) in self.events.iter().enumerate() {
            let path = format!("events[{k}]");
            let t = e.time();
            if !(t.is_finite() && t >= 0.0) {
                return Err(Error::config(format!("{path}.time: {t} must be >= 0")));
            }
            match *e {
                EventSpec::BranchTrip { from, to, circuit, .. } => {
                    let found = self.branches.iter().any(|b| {
                        b.circuit == circuit && ((b.from == from && b.to == to) || (b.from == to && b.to == from))
                    });
                    if !found {
                        return Err(Error::config(format!("{path}: no branch {from}-{to} circuit {circuit}")));
                    }
                }
                EventSpec::FaultApply { bus, r, x, .. } => {
                    bus_exists(format!("{path}.bus"), bus)?;
                    finite(&format!("{path}.r"), r)?;
                    finite(&format!("{path}.x"), x)?;
                }
                EventSpec::FaultClear { bus, .. } => bus_exists(format!("{path}.bus"), bus)?,
            }
        }

        self.solver.validate()?;
        positive("channels.cf_tau", self.channels.cf_tau)?;
        Ok(())
    }

    fn validate_device(&self, path: &str, d: &DeviceSpec) -> Result<()> {
        let needs_machine = !matches!(d.kind, DeviceKind::Ibr);
        match (&d.machine, needs_machine) {
            (None, true) => return Err(Error::config(format!("{path}.machine: required for kind {:?}", d.kind))),
            (Some(_), false) => return Err(Error::config(format!("{path}.machine: not allowed for an ibr device"))),
            (Some(m), true) => {
                SynchronousMachine::new(m.clone(), self.omega_b()).map_err(|e| at(&format!("{path}.machine"), e))?;
            }
            (None, false) => {
                if d.avr.is_some() || d.governor.is_some() || d.pss.is_some() {
                    return Err(Error::config(format!("{path}: machine controls on an ibr device")));
                }
            }
        }
        if let Some(a) = &d.avr {
            a.validate().map_err(|e| at(&format!("{path}.avr"), e))?;
        }
        if let Some(g) = &d.governor {
            g.validate().map_err(|e| at(&format!("{path}.governor"), e))?;
        }
        if let Some(p) = &d.pss {
            p.validate().map_err(|e| at(&format!("{path}.pss"), e))?;
        }
        match (&d.coherency, d.kind) {
            (Some(_), DeviceKind::Sm) => {
                return Err(Error::config(format!("{path}.coherency: not allowed for kind sm")));
            }
            (None, DeviceKind::Hybrid | DeviceKind::Ibr) => {
                return Err(Error::config(format!("{path}.coherency: required for kind {:?}", d.kind)));
            }
            (Some(c), kind) => {
                if !(0.0..=1.0).contains(&c.share) {
                    return Err(Error::config(format!(
                        "{path}.coherency.share: C = {} outside [0, 1]",
                        c.share
                    )));
                }
                if kind == DeviceKind::Ibr && c.share != 1.0 {
                    return Err(Error::config(format!("{path}.coherency.share: must be 1 for an ibr device")));
                }
                if c.reference == d.id {
                    return Err(Error::config(format!(
                        "{path}.coherency.reference: device cannot reference itself"
                    )));
                }
                if self.device(&c.reference).is_none() {
                    return Err(Error::config(format!(
                        "{path}.coherency.reference: unknown device '{}'",
                        c.reference
                    )));
                }
            }
            (None, DeviceKind::Sm) => {}
        }
        let cp = &d.converter;
        positive(&format!("{path}.converter.pll_kp"), cp.pll_kp)?;
        positive(&format!("{path}.converter.pll_ki"), cp.pll_ki)?;
        positive(&format!("{path}.converter.tau_idq"), cp.tau_idq)?;
        Ok(())
    }

    /// Static network without loads.
    pub fn network(&self) -> Result<Network> {
        let buses = self
            .buses
            .iter()
            .map(|b| {
                let mut bus = Bus::new(b.id, b.base_kv);
                bus.shunt = Complex64::new(b.gs, b.bs);
                bus
            })
            .collect();
        let branches = self
            .branches
            .iter()
            .map(|b| crate::netcore::Branch {
                from: b.from,
                to: b.to,
                r: b.r,
                x: b.x,
                b: b.b,
                tap: b.tap,
                circuit: b.circuit,
                in_service: b.in_service,
            })
            .collect();
        Network::new(buses, branches)
    }

    pub fn power_flow_spec(&self) -> PowerFlowSpec {
        let mut gens: Vec<GenSetpoint> = Vec::new();
        for d in &self.devices {
            if let Some(g) = gens.iter_mut().find(|g| g.bus == d.bus) {
                g.p += d.p;
            } else {
                gens.push(GenSetpoint { bus: d.bus, p: d.p, v: d.v_set });
            }
        }
        let loads = self.loads.iter().map(|l| LoadPower { bus: l.bus, p: l.p, q: l.q }).collect();
        let mut spec = PowerFlowSpec::new(self.system.slack_bus, gens, loads);
        spec.slack_angle = self.system.slack_angle;
        spec
    }

    /// Events sorted by time, stable for simultaneous events.
    pub fn network_events(&self) -> Vec<NetworkEvent> {
        let mut ev: Vec<NetworkEvent> = self.events.iter().map(EventSpec::to_network_event).collect();
        ev.sort_by(|a, b| a.time.total_cmp(&b.time));
        ev
    }
}
