#![allow(dead_code)]

use cohsim_core::phasor::Complex64;
use toml::Value;

/// Power-flow result of the oracle: voltage phasor and generator output
/// (system pu) per bus id.
pub struct OracleSolution {
    pub ids: Vec<i64>,
    pub v: Vec<Complex64>,
    pub s_gen: Vec<Complex64>,
}

fn num(v: &Value, key: &str, default: f64) -> f64 {
    match v.get(key) {
        Some(Value::Float(x)) => *x,
        Some(Value::Integer(i)) => *i as f64,
        _ => default,
    }
}

fn int(v: &Value, key: &str) -> i64 {
    v.get(key).and_then(Value::as_integer).expect(key)
}

/// Brute-force Newton–Raphson power flow read straight from the TOML text:
/// polar unknowns, finite-difference Jacobian, Gaussian elimination.
pub fn oracle_power_flow(text: &str) -> OracleSolution {
    let doc: Value = toml::from_str(text).unwrap();
    let buses = doc["buses"].as_array().unwrap();
    let ids: Vec<i64> = buses.iter().map(|b| int(b, "id")).collect();
    let n = ids.len();
    let pos = |id: i64| ids.iter().position(|&b| b == id).unwrap();

    let mut y = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for (k, b) in buses.iter().enumerate() {
        y[k][k] += Complex64::new(num(b, "gs", 0.0), num(b, "bs", 0.0));
    }
    for br in doc["branches"].as_array().unwrap() {
        if br.get("in_service").and_then(Value::as_bool) == Some(false) {
            continue;
        }
        let (f, t) = (pos(int(br, "from")), pos(int(br, "to")));
        let ys = Complex64::new(1.0, 0.0) / Complex64::new(num(br, "r", 0.0), num(br, "x", 0.0));
        let bc = Complex64::new(0.0, num(br, "b", 0.0) / 2.0);
        let a = num(br, "tap", 1.0);
        y[f][f] += (ys + bc) / (a * a);
        y[t][t] += ys + bc;
        y[f][t] -= ys / a;
        y[t][f] -= ys / a;
    }

    let mut p_load = vec![0.0; n];
    let mut q_load = vec![0.0; n];
    for l in doc.get("loads").and_then(Value::as_array).into_iter().flatten() {
        let k = pos(int(l, "bus"));
        p_load[k] += num(l, "p", 0.0);
        q_load[k] += num(l, "q", 0.0);
    }
    let system = &doc["system"];
    let slack = pos(int(system, "slack_bus"));
    let mut vm = vec![1.0; n];
    let mut va = vec![num(system, "slack_angle", 0.0); n];
    let mut p_gen = vec![0.0; n];
    let mut pv = vec![false; n];
    for d in doc["devices"].as_array().unwrap() {
        let k = pos(int(d, "bus"));
        p_gen[k] += num(d, "p", 0.0);
        vm[k] = num(d, "v_set", 1.0);
        pv[k] = true;
    }

    // unknowns: angles of all non-slack buses, magnitudes of PQ buses
    let ang: Vec<usize> = (0..n).filter(|&k| k != slack).collect();
    let mag: Vec<usize> = (0..n).filter(|&k| k != slack && !pv[k]).collect();
    let injection = |vm: &[f64], va: &[f64]| -> Vec<Complex64> {
        let v: Vec<Complex64> = (0..n).map(|k| Complex64::from_polar(vm[k], va[k])).collect();
        (0..n)
            .map(|i| {
                let cur: Complex64 = (0..n).map(|j| y[i][j] * v[j]).sum();
                v[i] * cur.conj()
            })
            .collect()
    };
    let mismatch = |vm: &[f64], va: &[f64]| -> Vec<f64> {
        let s = injection(vm, va);
        let mut f: Vec<f64> = ang.iter().map(|&k| s[k].re - (p_gen[k] - p_load[k])).collect();
        f.extend(mag.iter().map(|&k| s[k].im + q_load[k]));
        f
    };
    let m = ang.len() + mag.len();
    let apply = |vm: &mut [f64], va: &mut [f64], dx: &[f64]| {
        for (i, &k) in ang.iter().enumerate() {
            va[k] += dx[i];
        }
        for (i, &k) in mag.iter().enumerate() {
            vm[k] += dx[ang.len() + i];
        }
    };

    for _ in 0..50 {
        let f = mismatch(&vm, &va);
        if f.iter().fold(0.0f64, |a, x| a.max(x.abs())) < 1e-12 {
            break;
        }
        let mut jac = vec![vec![0.0; m]; m];
        let eps = 1e-7;
        for c in 0..m {
            let mut e = vec![0.0; m];
            e[c] = eps;
            let (mut vp, mut ap) = (vm.clone(), va.clone());
            apply(&mut vp, &mut ap, &e);
            let fp = mismatch(&vp, &ap);
            e[c] = -eps;
            let (mut vn, mut an) = (vm.clone(), va.clone());
            apply(&mut vn, &mut an, &e);
            let fn_ = mismatch(&vn, &an);
            for r in 0..m {
                jac[r][c] = (fp[r] - fn_[r]) / (2.0 * eps);
            }
        }
        let dx = gauss_solve(jac, f.iter().map(|v| -v).collect());
        apply(&mut vm, &mut va, &dx);
    }
    let fin = mismatch(&vm, &va);
    assert!(fin.iter().all(|x| x.abs() < 1e-10), "oracle power flow did not converge");

    let s = injection(&vm, &va);
    let s_gen = (0..n).map(|k| s[k] + Complex64::new(p_load[k], q_load[k])).collect();
    let v = (0..n).map(|k| Complex64::from_polar(vm[k], va[k])).collect();
    OracleSolution { ids, v, s_gen }
}

pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            if f != 0.0 {
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// Largest absolute difference between two equally long slices, ignoring
/// positions where either is not finite.
pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}
