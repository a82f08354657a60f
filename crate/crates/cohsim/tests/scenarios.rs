use cohsim::catalog::{self, SweepValue};
use cohsim::scenario_io::{apply_override, load_scenario, parse_scenario, to_toml, BUILTIN};
use cohsim::CliError;
use cohsim_core::scenario::{DeviceKind, EventSpec};
use proptest::prelude::*;

#[test]
fn builtin_systems_round_trip_through_toml() {
    for name in BUILTIN {
        let s = load_scenario(name).unwrap();
        let text = to_toml(&s).unwrap();
        assert_eq!(parse_scenario(&text, name).unwrap(), s, "{name}");
    }
}

#[test]
fn catalog_points_round_trip_through_toml() {
    for spec in catalog::catalog() {
        for v in &spec.values {
            let s = spec.scenario(v).unwrap();
            let back = parse_scenario(&to_toml(&s).unwrap(), spec.name).unwrap();
            assert_eq!(back, s, "{} {}", spec.name, spec.label(v));
        }
    }
}

#[test]
fn share_outside_unit_interval_is_rejected() {
    let spec = catalog::find("EXP-CSWEEP").unwrap();
    let s = spec.scenario(&SweepValue::Number(0.5)).unwrap();
    let r = apply_override(&s, "devices.G1.coherency.share", "1.5");
    assert!(matches!(r, Err(CliError::Config(_))), "{r:?}");
    let msg = format!("{}", r.unwrap_err());
    assert!(msg.contains("share") && msg.contains("1.5"), "{msg}");
}

#[test]
fn ieee39_bus39_machine_carries_the_system_inertia() {
    let s = load_scenario("ieee39").unwrap();
    let weight = |d: &cohsim_core::scenario::DeviceSpec| d.machine.as_ref().unwrap().h * d.mva;
    let g1 = s.devices.iter().find(|d| d.bus == 39).unwrap();
    for d in s.devices.iter().filter(|d| d.bus != 39) {
        assert!(weight(g1) > 5.0 * weight(d), "{} rivals the bus 39 machine", d.id);
    }
}

#[test]
fn catalog_is_complete_and_consistent() {
    let cat = catalog::catalog();
    assert_eq!(cat.len(), 6);
    for spec in &cat {
        assert!(catalog::find(spec.name).is_some());
        assert!(!spec.values.is_empty() && !spec.metric_channels.is_empty());
        for v in &spec.values {
            let s = spec.scenario(v).unwrap();
            s.validate().unwrap();
            assert!(
                s.events.iter().all(|e| (e.time() - spec.event_time).abs() < 0.5),
                "{} {}: events {:?}",
                spec.name,
                spec.label(v),
                s.events
            );
            assert_eq!(spec.parse_value(&v.to_string()).unwrap(), *v);
        }
    }
    let sweep = catalog::find("EXP-CSWEEP").unwrap();
    let shares: Vec<f64> = sweep
        .values
        .iter()
        .map(|v| match v {
            SweepValue::Number(x) => *x,
            SweepValue::Label(_) => panic!("numeric axis expected"),
        })
        .collect();
    assert_eq!(shares, [0.0, 0.25, 0.5, 0.75, 1.0]);
    let s = sweep.scenario(&SweepValue::Number(0.5)).unwrap();
    assert!(matches!(s.events[..], [EventSpec::BranchTrip { from: 7, to: 8, circuit: 2, .. }]));
    let hybrids: Vec<&str> = s.devices.iter().filter(|d| d.kind == DeviceKind::Hybrid).map(|d| d.id.as_str()).collect();
    assert_eq!(hybrids, ["G1", "G2", "G4"]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn numeric_overrides_land_where_they_point(t_end in 0.1f64..50.0, h_exp in 1u32..4) {
        let h = 0.01 / f64::from(1u32 << h_exp);
        let s = load_scenario("kundur2a").unwrap();
        let s = apply_override(&s, "solver.t_end", &t_end.to_string()).unwrap();
        let s = apply_override(&s, "solver.h", &h.to_string()).unwrap();
        prop_assert_eq!(s.solver.t_end, t_end);
        prop_assert_eq!(s.solver.h, h);
        let back = parse_scenario(&to_toml(&s).unwrap(), "override").unwrap();
        prop_assert_eq!(back, s);
    }
}
