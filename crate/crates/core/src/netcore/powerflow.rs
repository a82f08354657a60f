//! Newton–Raphson power flow in polar coordinates.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{BusId, Network};
use crate::linalg::{norm_inf, Lu, Matrix};
use crate::phasor::{polar, Complex64, Phasor, J};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GenSetpoint {
    pub bus: BusId,
    pub p: f64,
    pub v: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadPower {
    pub bus: BusId,
    pub p: f64,
    pub q: f64,
}

/// Injection data for the power flow. Buses with a generator set point are
/// PV, the slack bus holds magnitude and angle, all others are PQ.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerFlowSpec {
    pub slack: BusId,
    pub slack_angle: f64,
    pub generators: Vec<GenSetpoint>,
    pub loads: Vec<LoadPower>,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl PowerFlowSpec {
    pub fn new(slack: BusId, generators: Vec<GenSetpoint>, loads: Vec<LoadPower>) -> Self {
        PowerFlowSpec {
            slack,
            slack_angle: 0.0,
            generators,
            loads,
            tolerance: 1e-8,
            max_iterations: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerFlowSolution {
    pub v: Vec<Phasor>,
    /// Net generation per bus (injection plus local PQ load).
    pub s_gen: Vec<Complex64>,
    pub iterations: usize,
    pub max_mismatch: f64,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    Slack,
    Pv,
    Pq,
}

/// Solves the power flow on `net` (including whatever constant-impedance
/// loads and shunts it already carries) with the PQ loads and generator set
/// points of `spec`.
pub fn power_flow(net: &Network, spec: &PowerFlowSpec) -> Result<PowerFlowSolution> {
    let n = net.len();
    let y = net.ybus();
    let mut kind = vec![Kind::Pq; n];
    let mut v_set = vec![None::<f64>; n];
    let mut p_spec = vec![0.0; n];
    let mut q_spec = vec![0.0; n];

    let slack = net.bus_index(spec.slack)?;
    for g in &spec.generators {
        let k = net.bus_index(g.bus)?;
        if let Some(prev) = v_set[k] {
            if (prev - g.v).abs() > 1e-12 {
                return Err(Error::config(format!(
                    "conflicting voltage set points at bus {}",
                    g.bus
                )));
            }
        }
        if g.v <= 0.0 {
            return Err(Error::config(format!("non-positive voltage set point at bus {}", g.bus)));
        }
        v_set[k] = Some(g.v);
        kind[k] = Kind::Pv;
        p_spec[k] += g.p;
    }
    for l in &spec.loads {
        let k = net.bus_index(l.bus)?;
        p_spec[k] -= l.p;
        q_spec[k] -= l.q;
    }
    let slack_v = v_set[slack]
        .ok_or_else(|| Error::config(format!("slack bus {} has no generator", spec.slack)))?;
    kind[slack] = Kind::Slack;

    let pvpq: Vec<usize> = (0..n).filter(|&k| kind[k] != Kind::Slack).collect();
    let pq: Vec<usize> = (0..n).filter(|&k| kind[k] == Kind::Pq).collect();
    let (na, nm) = (pvpq.len(), pq.len());

    let mut vm: Vec<f64> = (0..n).map(|k| v_set[k].unwrap_or(1.0)).collect();
    vm[slack] = slack_v;
    let mut va = vec![spec.slack_angle; n];

    let voltages = |vm: &[f64], va: &[f64]| -> Vec<Phasor> {
        vm.iter().zip(va).map(|(&m, &a)| polar(m, a)).collect()
    };
    let mismatch = |v: &[Phasor]| -> (Vec<f64>, Vec<Complex64>) {
        let i = y.mul(v);
        let s: Vec<Complex64> = v.iter().zip(&i).map(|(vk, ik)| vk * ik.conj()).collect();
        let mut f = Vec::with_capacity(na + nm);
        f.extend(pvpq.iter().map(|&k| s[k].re - p_spec[k]));
        f.extend(pq.iter().map(|&k| s[k].im - q_spec[k]));
        (f, i)
    };

    let mut v = voltages(&vm, &va);
    let (mut f, mut ibus) = mismatch(&v);
    let mut iterations = 0;
    while norm_inf(&f) >= spec.tolerance {
        if iterations == spec.max_iterations {
            return Err(Error::init(format!(
                "power flow did not converge in {} iterations (mismatch {:.3e})",
                spec.max_iterations,
                norm_inf(&f)
            )));
        }
        iterations += 1;

        // dS/dθ = j·diag(V)·conj(diag(I) − Y·diag(V))
        // dS/d|V| = diag(V)·conj(Y·diag(V/|V|)) + conj(diag(I))·diag(V/|V|)
        let ds = |i: usize, k: usize| -> (Complex64, Complex64) {
            let vn = v[k] / vm[k];
            let mut d_va = -(y.get(i, k) * v[k]).conj();
            let mut d_vm = v[i] * (y.get(i, k) * vn).conj();
            if i == k {
                d_va += ibus[i].conj();
                d_vm += ibus[i].conj() * vn;
            }
            (J * v[i] * d_va, d_vm)
        };
        let mut jac = Matrix::<f64>::zeros(na + nm, na + nm);
        for (r, &i) in pvpq.iter().enumerate() {
            for (c, &k) in pvpq.iter().enumerate() {
                jac[(r, c)] = ds(i, k).0.re;
            }
            for (c, &k) in pq.iter().enumerate() {
                jac[(r, na + c)] = ds(i, k).1.re;
            }
        }
        for (r, &i) in pq.iter().enumerate() {
            for (c, &k) in pvpq.iter().enumerate() {
                jac[(na + r, c)] = ds(i, k).0.im;
            }
            for (c, &k) in pq.iter().enumerate() {
                jac[(na + r, na + c)] = ds(i, k).1.im;
            }
        }
        let rhs: Vec<f64> = f.iter().map(|x| -x).collect();
        let dx = Lu::factor(&jac)
            .map_err(|_| Error::init("singular power-flow Jacobian"))?
            .solve(&rhs);
        for (c, &k) in pvpq.iter().enumerate() {
            va[k] += dx[c];
        }
        for (c, &k) in pq.iter().enumerate() {
            vm[k] += dx[na + c];
        }
        v = voltages(&vm, &va);
        (f, ibus) = mismatch(&v);
        if f.iter().any(|x| !x.is_finite()) {
            return Err(Error::init("power flow diverged"));
        }
    }

    let mut s_gen: Vec<Complex64> = v.iter().zip(&ibus).map(|(vk, ik)| vk * ik.conj()).collect();
    for l in &spec.loads {
        let k = net.bus_index(l.bus)?;
        s_gen[k] += Complex64::new(l.p, l.q);
    }
    Ok(PowerFlowSolution {
        v,
        s_gen,
        iterations,
        max_mismatch: norm_inf(&f),
    })
}
