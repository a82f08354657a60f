#![allow(dead_code)]

use cohsim_core::converter::{CoherencyMode, ConverterParams};
use cohsim_core::engine::SolverConfig;
use cohsim_core::machines::{MachineOrder, MachineParams, TurbineGovernorType1};
use cohsim_core::scenario::*;

pub fn machine() -> MachineParams {
    MachineParams {
        order: MachineOrder::Fourth,
        h: 6.5,
        d: 0.0,
        ra: 0.0025,
        xd: 1.8,
        xq: 1.7,
        xd1: 0.3,
        xq1: 0.55,
        xd2: 0.25,
        xq2: 0.25,
        td01: 8.0,
        tq01: 0.4,
        td02: 0.03,
        tq02: 0.05,
    }
}

pub fn governor() -> TurbineGovernorType1 {
    TurbineGovernorType1 { r: 0.05, t_max: 1.2, t_min: 0.0, ts: 0.1, tc: 0.5, t3: 0.0, t4: 1.25, t5: 5.0 }
}

fn line(from: u32, to: u32, x: f64, circuit: u32) -> BranchSpec {
    BranchSpec { from, to, r: 0.1 * x, x, b: 0.0, tap: 1.0, circuit, in_service: true }
}

fn sm(id: &str, bus: u32, p: f64) -> DeviceSpec {
    DeviceSpec {
        id: id.into(),
        bus,
        kind: DeviceKind::Sm,
        mva: 900.0,
        p,
        v_set: 1.02,
        machine: Some(machine()),
        avr: None,
        governor: Some(governor()),
        pss: None,
        coherency: None,
        converter: ConverterParams::default(),
    }
}

/// Two machines feeding a load bus over a double line; `G2` can be turned
/// into a hybrid or a converter that imitates `G1`.
pub fn three_bus(g2: DeviceKind, share: f64) -> Scenario {
    let mut g2_spec = sm("G2", 2, 4.0);
    g2_spec.kind = g2;
    if g2 != DeviceKind::Sm {
        g2_spec.coherency = Some(CoherencySpec { share, reference: "G1".into(), mode: CoherencyMode::Complex });
    }
    if g2 == DeviceKind::Ibr {
        g2_spec.machine = None;
        g2_spec.governor = None;
    }
    Scenario {
        system: SystemSpec {
            name: "three_bus".into(),
            schema_version: 1,
            mva_base: 100.0,
            frequency_hz: 50.0,
            slack_bus: 1,
            slack_angle: 0.0,
        },
        buses: (1..=3).map(|id| BusSpec { id, base_kv: 230.0, gs: 0.0, bs: 0.0 }).collect(),
        branches: vec![line(1, 3, 0.02, 1), line(2, 3, 0.04, 1), line(2, 3, 0.04, 2)],
        loads: vec![LoadSpec { bus: 3, p: 8.0, q: 1.0 }],
        devices: vec![sm("G1", 1, 0.0), g2_spec],
        events: vec![EventSpec::BranchTrip { time: 0.5, from: 2, to: 3, circuit: 2 }],
        measurements: Vec::new(),
        solver: SolverConfig { t_end: 3.0, ..SolverConfig::default() },
        channels: ChannelSpec::default(),
    }
}
