mod common;

use cohsim::scenario_io::{load_scenario, IEEE_39, KUNDUR_2A};
use cohsim_core::engine::{run, RunResult};
use common::{oracle_power_flow, OracleSolution};

fn initial_point(name: &str) -> RunResult {
    let mut s = load_scenario(name).unwrap();
    s.events.clear();
    s.solver.t_end = s.solver.output_step;
    run(&s).unwrap()
}

fn at_start(r: &RunResult, channel: &str) -> f64 {
    r.series.column(channel).unwrap_or_else(|| panic!("{channel}"))[0]
}

fn compare(r: &RunResult, o: &OracleSolution, devices: &[(&str, i64)]) -> f64 {
    let mut worst = 0.0f64;
    for (k, id) in o.ids.iter().enumerate() {
        worst = worst.max((at_start(r, &format!("bus{id}.vmag")) - o.v[k].norm()).abs());
        worst = worst.max((at_start(r, &format!("bus{id}.vang")) - o.v[k].arg()).abs());
    }
    for (dev, bus) in devices {
        let k = o.ids.iter().position(|b| b == bus).unwrap();
        worst = worst.max((at_start(r, &format!("{dev}.p")) - o.s_gen[k].re).abs());
        worst = worst.max((at_start(r, &format!("{dev}.q")) - o.s_gen[k].im).abs());
    }
    worst
}

#[test]
fn kundur_initialization_matches_oracle() {
    let o = oracle_power_flow(KUNDUR_2A);
    let r = initial_point("kundur2a");
    let worst = compare(&r, &o, &[("G1", 1), ("G2", 2), ("G3", 3), ("G4", 4)]);
    assert!(worst < 1e-6, "largest deviation {worst:e}");
}

#[test]
fn ieee39_initialization_matches_oracle() {
    let o = oracle_power_flow(IEEE_39);
    let r = initial_point("ieee39");
    let devices: Vec<(String, i64)> = (1..=10)
        .map(|k| (format!("G{k}"), match k {
            1 => 39,
            10 => 30,
            _ => 29 + k,
        }))
        .collect();
    let refs: Vec<(&str, i64)> = devices.iter().map(|(d, b)| (d.as_str(), *b)).collect();
    let worst = compare(&r, &o, &refs);
    assert!(worst < 1e-6, "largest deviation {worst:e}");
}

/// Bus voltages of the published MATPOWER case39 solution (magnitude pu,
/// angle degrees), buses 1 to 39.
const CASE39_SOLUTION: [(f64, f64); 39] = [
    (1.0393836, -13.536602),
    (1.0484941, -9.7852666),
    (1.0307077, -12.276384),
    (1.00446, -12.626734),
    (1.0060063, -11.192339),
    (1.0082256, -10.40833),
    (0.99839728, -12.755626),
    (0.99787232, -13.335844),
    (1.038332, -14.178442),
    (1.0178431, -8.170875),
    (1.0133858, -8.9369663),
    (1.000815, -8.9988236),
    (1.014923, -8.9299272),
    (1.012319, -10.715295),
    (1.0161854, -11.345399),
    (1.0325203, -10.033348),
    (1.0342365, -11.116436),
    (1.0315726, -11.986168),
    (1.0501068, -5.4100729),
    (0.99101054, -6.8211783),
    (1.0323192, -7.6287461),
    (1.0501427, -3.1831199),
    (1.0451451, -3.3812763),
    (1.038001, -9.9137585),
    (1.0576827, -8.3692354),
    (1.0525613, -9.4387696),
    (1.0383449, -11.362152),
    (1.0503737, -5.9283592),
    (1.0501149, -3.1698741),
    (1.0499, -7.3704746),
    (0.982, 0.0),
    (0.9841, -0.1884374),
    (0.9972, -0.19317445),
    (1.0123, -1.631119),
    (1.0494, 1.7765069),
    (1.0636, 4.4684374),
    (1.0275, -1.5828988),
    (1.0265, 3.8928177),
    (1.03, -14.535256),
];

#[test]
fn ieee39_matches_published_solution() {
    let r = initial_point("ieee39");
    for (k, (vm, va)) in CASE39_SOLUTION.iter().enumerate() {
        let id = k + 1;
        let m = at_start(&r, &format!("bus{id}.vmag"));
        let a = at_start(&r, &format!("bus{id}.vang")).to_degrees();
        assert!((m - vm).abs() < 1e-5, "bus {id}: |V| {m} vs {vm}");
        assert!((a - va).abs() < 1e-3, "bus {id}: angle {a} vs {va}");
    }
}

#[test]
fn kundur_oracle_is_balanced() {
    let o = oracle_power_flow(KUNDUR_2A);
    let generation: f64 = o.s_gen.iter().map(|s| s.re).sum();
    // 2734 MW of load plus line losses
    assert!(generation > 27.34 && generation < 28.5, "{generation}");
}
