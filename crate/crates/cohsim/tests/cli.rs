use std::path::Path;
use std::process::{Command, Output};

use cohsim::output::read_csv;

fn cohsim(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cohsim"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("spawn cohsim")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn list_shows_the_catalog() {
    let o = Command::new(env!("CARGO_BIN_EXE_cohsim")).arg("list").output().unwrap();
    assert!(o.status.success());
    let text = stdout(&o);
    for name in ["EXP-CSWEEP", "EXP-DELAY", "EXP-NOISE", "EXP-MODE", "EXP-39FAULT", "EXP-39CLUSTER"] {
        assert!(text.contains(name), "{name} missing from\n{text}");
    }
    let o = Command::new(env!("CARGO_BIN_EXE_cohsim"))
        .args(["list", "--system", "ieee39", "--format", "machine"])
        .output()
        .unwrap();
    assert_eq!(stdout(&o).lines().collect::<Vec<_>>(), ["EXP-39FAULT", "EXP-39CLUSTER"]);
}

#[test]
fn flat_runs_match_golden_files() {
    let dir = tempfile::tempdir().unwrap();
    for (system, include, golden) in [
        ("kundur2a", r#"["coi.","G1.speed","bus7."]"#, include_str!("golden/kundur2a_flat.csv")),
        ("ieee39", r#"["coi.","G1.","bus39."]"#, include_str!("golden/ieee39_flat.csv")),
    ] {
        let o = cohsim(
            &["run", system, "--event", "none", "--set", "solver.t_end=0.05", "--set", &format!("channels.include={include}")],
            dir.path(),
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let csv = std::fs::read_to_string(dir.path().join(format!("{system}.csv"))).unwrap();
        assert_eq!(csv, golden, "{system}");
    }
}

#[test]
fn step_override_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let o = cohsim(&["run", "kundur2a", "--event", "none", "--set", "solver.t_end=0.1", "--solver.h", "0.0025"], dir.path());
    assert!(o.status.success());
    let metrics = std::fs::read_to_string(dir.path().join("kundur2a.metrics.txt")).unwrap();
    assert!(metrics.contains("# solver.h: 0.0025"), "{metrics}");
    assert!(metrics.contains("# steps: 40,"), "{metrics}");
}

#[test]
fn bad_input_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["run", "kundur2a", "--set", "solver.nonsense=1"],
        vec!["run", "kundur2a", "--experiment", "EXP-CSWEEP", "--set", "C=0.5", "--set", "devices.G1.coherency.share=1.5"],
        vec!["run", "nowhere.toml"],
        vec!["sweep", "EXP-UNKNOWN"],
    ] {
        let o = cohsim(&args, dir.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn experiment_point_from_the_command_line() {
    let dir = tempfile::tempdir().unwrap();
    let o = cohsim(
        &["run", "ieee39", "--experiment", "EXP-39FAULT", "--set", "C71=1", "--set", "solver.t_end=2", "--format", "machine"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let field = |key: &str| {
        text.lines()
            .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix('\t')))
            .unwrap_or_else(|| panic!("no {key} in {text}"))
            .to_string()
    };
    assert_eq!(field("status"), "STABLE");
    let table = read_csv(&std::fs::read_to_string(field("csv")).unwrap()).unwrap();
    assert!(table.names.iter().any(|n| n == "coi.freq"));
    assert!(table.names.iter().any(|n| n == "bus36.vmag"));
    let metrics = std::fs::read_to_string(field("metrics")).unwrap();
    assert!(metrics.contains("experiment: EXP-39FAULT"), "{metrics}");
}
