//! Static network model: buses, branches, constant-impedance loads, the bus
//! admittance matrix, topology/fault events and the algebraic network solve.

mod powerflow;

pub use powerflow::{power_flow, GenSetpoint, LoadPower, PowerFlowSolution, PowerFlowSpec};

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use crate::linalg::{Lu, Matrix};
use crate::phasor::{Complex64, Phasor};
use crate::{Error, Result};

/// Default three-phase fault admittance (pu), a near-bolted fault.
pub const DEFAULT_FAULT_ADMITTANCE: f64 = 1.0e6;

pub type BusId = u32;

#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    pub id: BusId,
    pub base_kv: f64,
    /// Power-flow voltage, set by initialization.
    pub v0: Phasor,
    /// Fixed shunt admittance (pu), e.g. capacitor banks.
    pub shunt: Complex64,
}

impl Bus {
    pub fn new(id: BusId, base_kv: f64) -> Self {
        Bus {
            id,
            base_kv,
            v0: Phasor::new(1.0, 0.0),
            shunt: Complex64::new(0.0, 0.0),
        }
    }
}

/// Pi-model branch. A non-unit `tap` models an off-nominal transformer with
/// the ideal ratio on the `from` side.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub from: BusId,
    pub to: BusId,
    pub r: f64,
    pub x: f64,
    /// Total line-charging susceptance.
    pub b: f64,
    pub tap: f64,
    pub circuit: u32,
    pub in_service: bool,
}

impl Branch {
    pub fn line(from: BusId, to: BusId, r: f64, x: f64, b: f64) -> Self {
        Branch {
            from,
            to,
            r,
            x,
            b,
            tap: 1.0,
            circuit: 1,
            in_service: true,
        }
    }

    pub fn series_admittance(&self) -> Complex64 {
        Complex64::new(1.0, 0.0) / Complex64::new(self.r, self.x)
    }
}

/// Constant-impedance load fixed at the power-flow point.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadZ {
    pub bus: BusId,
    pub y: Complex64,
}

impl LoadZ {
    /// `(P₀ − jQ₀)/|V₀|²`, so that the load draws `P₀ + jQ₀` at `V₀`.
    pub fn from_power(bus: BusId, p: f64, q: f64, v0: Phasor) -> Self {
        LoadZ {
            bus,
            y: Complex64::new(p, -q) / v0.norm_sqr(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchRef {
    pub from: BusId,
    pub to: BusId,
    pub circuit: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    BranchTrip(BranchRef),
    FaultApply { bus: BusId, admittance: Complex64 },
    FaultClear { bus: BusId },
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkEvent {
    pub time: f64,
    pub kind: EventKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventOutcome {
    Applied,
    /// The branch was already out of service; nothing changed.
    AlreadyOut,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmittanceMatrix {
    pub n: usize,
    pub entries: Matrix<Complex64>,
}

impl AdmittanceMatrix {
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[(i, j)]
    }

    pub fn mul(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.entries.mul_vec(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub loads: Vec<LoadZ>,
    faults: Vec<(BusId, Complex64)>,
    index: BTreeMap<BusId, usize>,
}

impl Network {
    pub fn new(buses: Vec<Bus>, branches: Vec<Branch>) -> Result<Self> {
        let mut index = BTreeMap::new();
        for (k, b) in buses.iter().enumerate() {
            if index.insert(b.id, k).is_some() {
                return Err(Error::config(format!("duplicate bus id {}", b.id)));
            }
        }
        let net = Network {
            buses,
            branches,
            loads: Vec::new(),
            faults: Vec::new(),
            index,
        };
        for br in &net.branches {
            for end in [br.from, br.to] {
                if !net.index.contains_key(&end) {
                    return Err(Error::config(format!(
                        "branch {}-{} (circuit {}) refers to missing bus {end}",
                        br.from, br.to, br.circuit
                    )));
                }
            }
            if br.r == 0.0 && br.x == 0.0 {
                return Err(Error::config(format!(
                    "branch {}-{} has zero impedance",
                    br.from, br.to
                )));
            }
            if br.tap <= 0.0 {
                return Err(Error::config(format!("branch {}-{} has tap <= 0", br.from, br.to)));
            }
        }
        for (i, a) in net.branches.iter().enumerate() {
            for b in &net.branches[i + 1..] {
                let same_pair = (a.from, a.to) == (b.from, b.to) || (a.from, a.to) == (b.to, b.from);
                if same_pair && a.circuit == b.circuit {
                    return Err(Error::config(format!(
                        "parallel branches {}-{} share circuit id {}",
                        a.from, a.to, a.circuit
                    )));
                }
            }
        }
        Ok(net)
    }

    pub fn len(&self) -> usize {
        self.buses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buses.is_empty()
    }

    pub fn bus_index(&self, id: BusId) -> Result<usize> {
        self.index
            .get(&id)
            .copied()
            .ok_or_else(|| Error::config(format!("unknown bus {id}")))
    }

    pub fn bus_id(&self, idx: usize) -> BusId {
        self.buses[idx].id
    }

    pub fn add_load(&mut self, load: LoadZ) -> Result<()> {
        self.bus_index(load.bus)?;
        self.loads.push(load);
        Ok(())
    }

    pub fn active_faults(&self) -> &[(BusId, Complex64)] {
        &self.faults
    }

    pub fn ybus(&self) -> AdmittanceMatrix {
        build_ybus(self)
    }

    fn find_branch(&self, r: &BranchRef) -> Option<usize> {
        self.branches.iter().position(|b| {
            b.circuit == r.circuit
                && ((b.from == r.from && b.to == r.to) || (b.from == r.to && b.to == r.from))
        })
    }

    /// Complex power drawn by loads and shunts plus series losses, for the
    /// power balance check.
    pub fn consumption(&self, v: &[Phasor]) -> (Complex64, Complex64) {
        let mut load = Complex64::new(0.0, 0.0);
        for l in &self.loads {
            let vi = v[self.index[&l.bus]];
            load += (l.y * vi).conj() * vi;
        }
        for (k, b) in self.buses.iter().enumerate() {
            load += (b.shunt * v[k]).conj() * v[k];
        }
        for (bus, y) in &self.faults {
            let vi = v[self.index[bus]];
            load += (*y * vi).conj() * vi;
        }
        let mut losses = Complex64::new(0.0, 0.0);
        for br in self.branches.iter().filter(|b| b.in_service) {
            let (vf, vt) = (v[self.index[&br.from]], v[self.index[&br.to]]);
            let ys = br.series_admittance();
            let half_b = Complex64::new(0.0, br.b / 2.0);
            let t = br.tap;
            let i_f = (ys + half_b) / (t * t) * vf - ys / t * vt;
            let i_t = (ys + half_b) * vt - ys / t * vf;
            losses += vf * i_f.conj() + vt * i_t.conj();
        }
        (load, losses)
    }
}

/// Assembles the bus admittance matrix from in-service branches, bus shunts,
/// constant-impedance loads and active fault admittances.
pub fn build_ybus(net: &Network) -> AdmittanceMatrix {
    let n = net.len();
    let mut y = Matrix::<Complex64>::zeros(n, n);
    for br in net.branches.iter().filter(|b| b.in_service) {
        let (f, t) = (net.index[&br.from], net.index[&br.to]);
        let ys = br.series_admittance();
        let half_b = Complex64::new(0.0, br.b / 2.0);
        let tap = br.tap;
        y[(f, f)] += (ys + half_b) / (tap * tap);
        y[(t, t)] += ys + half_b;
        y[(f, t)] -= ys / tap;
        y[(t, f)] -= ys / tap;
    }
    for (k, b) in net.buses.iter().enumerate() {
        y[(k, k)] += b.shunt;
    }
    for l in &net.loads {
        let k = net.index[&l.bus];
        y[(k, k)] += l.y;
    }
    for (bus, yf) in &net.faults {
        let k = net.index[bus];
        y[(k, k)] += *yf;
    }
    AdmittanceMatrix { n, entries: y }
}

/// Applies a topology or fault event in place.
pub fn apply_event(event: &EventKind, net: &mut Network) -> Result<EventOutcome> {
    match event {
        EventKind::BranchTrip(r) => {
            let k = net.find_branch(r).ok_or_else(|| {
                Error::Event(format!(
                    "no branch {}-{} circuit {}",
                    r.from, r.to, r.circuit
                ))
            })?;
            if !net.branches[k].in_service {
                return Ok(EventOutcome::AlreadyOut);
            }
            net.branches[k].in_service = false;
        }
        EventKind::FaultApply { bus, admittance } => {
            net.bus_index(*bus)
                .map_err(|_| Error::Event(format!("fault at unknown bus {bus}")))?;
            if net.faults.iter().any(|(b, _)| b == bus) {
                return Err(Error::Event(format!("fault already active at bus {bus}")));
            }
            net.faults.push((*bus, *admittance));
        }
        EventKind::FaultClear { bus } => {
            let pos = net
                .faults
                .iter()
                .position(|(b, _)| b == bus)
                .ok_or_else(|| Error::Event(format!("fault_clear at bus {bus} without active fault")))?;
            net.faults.remove(pos);
        }
    }
    Ok(EventOutcome::Applied)
}

/// Solves `Y_aug · V = i_src` for the bus voltages.
pub fn solve_network(net: &Network, y_aug: &AdmittanceMatrix, i_src: &[Complex64]) -> Result<Vec<Phasor>> {
    let lu = Lu::factor(&y_aug.entries).map_err(|e| match e {
        Error::Singular { index, .. } => Error::Singular {
            index,
            context: Some(format!("bus {}", net.bus_id(index))),
        },
        other => other,
    })?;
    Ok(lu.solve(i_src))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_abs_diff_eq;

    fn two_bus() -> Network {
        Network::new(
            vec![Bus::new(1, 230.0), Bus::new(2, 230.0)],
            vec![Branch::line(1, 2, 0.0, 0.5, 0.0)],
        )
        .unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn single_line_hand_formula() {
        let y = two_bus().ybus();
        assert_abs_diff_eq!(y.get(0, 0).im, -2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(y.get(0, 1).im, 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(y.get(1, 0).im, 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(y.get(1, 1).im, -2.0, epsilon = 1e-14);
        assert_eq!(y.get(0, 0).re, 0.0);
    }

    #[test]
    fn load_adds_to_diagonal() {
        let mut net = two_bus();
        net.add_load(LoadZ { bus: 2, y: c(1.0, 0.0) }).unwrap();
        let y = net.ybus();
        assert_abs_diff_eq!(y.get(1, 1).re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(y.get(1, 1).im, -2.0, epsilon = 1e-14);
    }

    #[test]
    fn dangling_endpoint_rejected() {
        let err = Network::new(vec![Bus::new(1, 1.0)], vec![Branch::line(1, 9, 0.0, 0.1, 0.0)]);
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn parallel_circuits_need_distinct_ids() {
        let a = Branch::line(1, 2, 0.0, 0.1, 0.0);
        let err = Network::new(vec![Bus::new(1, 1.0), Bus::new(2, 1.0)], vec![a.clone(), a.clone()]);
        assert!(err.is_err());
        let mut b = a.clone();
        b.circuit = 2;
        assert!(Network::new(vec![Bus::new(1, 1.0), Bus::new(2, 1.0)], vec![a, b]).is_ok());
    }

    #[test]
    fn tripping_one_of_two_circuits_doubles_transfer_impedance() {
        let mut a = Branch::line(1, 2, 0.0, 0.4, 0.0);
        let mut b = a.clone();
        b.circuit = 2;
        a.circuit = 1;
        let mut net = Network::new(vec![Bus::new(1, 1.0), Bus::new(2, 1.0)], vec![a, b]).unwrap();
        let z_before = -1.0 / net.ybus().get(0, 1);
        let out = apply_event(
            &EventKind::BranchTrip(BranchRef { from: 2, to: 1, circuit: 2 }),
            &mut net,
        )
        .unwrap();
        assert_eq!(out, EventOutcome::Applied);
        let z_after = -1.0 / net.ybus().get(0, 1);
        assert_abs_diff_eq!(z_after.im / z_before.im, 2.0, epsilon = 1e-12);
        // second trip of the same circuit is a no-op
        let again = apply_event(
            &EventKind::BranchTrip(BranchRef { from: 1, to: 2, circuit: 2 }),
            &mut net,
        )
        .unwrap();
        assert_eq!(again, EventOutcome::AlreadyOut);
    }

    #[test]
    fn fault_apply_then_clear_is_bit_identical() {
        let mut net = two_bus();
        net.add_load(LoadZ { bus: 2, y: c(0.7, -0.2) }).unwrap();
        let before = net.ybus();
        apply_event(&EventKind::FaultApply { bus: 1, admittance: c(DEFAULT_FAULT_ADMITTANCE, 0.0) }, &mut net).unwrap();
        assert_ne!(net.ybus(), before);
        apply_event(&EventKind::FaultClear { bus: 1 }, &mut net).unwrap();
        assert_eq!(net.ybus(), before);
    }

    #[test]
    fn fault_clear_without_fault_is_error() {
        let mut net = two_bus();
        assert!(apply_event(&EventKind::FaultClear { bus: 1 }, &mut net).is_err());
    }

    #[test]
    fn bolted_fault_collapses_voltage() {
        // Source behind j0.1 feeding bus 1, faulted with 1e6 pu.
        let mut net = two_bus();
        apply_event(&EventKind::FaultApply { bus: 2, admittance: c(DEFAULT_FAULT_ADMITTANCE, 0.0) }, &mut net).unwrap();
        let mut y = net.ybus();
        let y_src = c(0.0, -10.0);
        y.entries[(0, 0)] += y_src;
        let v = solve_network(&net, &y, &[y_src * c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!(v[1].norm() < 1e-3);
    }

    #[test]
    fn solve_identity_and_zero() {
        let net = Network::new(vec![Bus::new(1, 1.0)], vec![]).unwrap();
        let mut y = net.ybus();
        y.entries[(0, 0)] = c(1.0, -1.0);
        let v = solve_network(&net, &y, &[c(1.0, -1.0)]).unwrap();
        assert_abs_diff_eq!(v[0].re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(v[0].im, 0.0, epsilon = 1e-14);
        let v0 = solve_network(&net, &y, &[c(0.0, 0.0)]).unwrap();
        assert_eq!(v0[0].norm(), 0.0);
    }

    #[test]
    fn islanded_bus_names_the_bus() {
        let net = Network::new(
            vec![Bus::new(1, 1.0), Bus::new(2, 1.0), Bus::new(7, 1.0)],
            vec![Branch::line(1, 2, 0.0, 0.5, 0.0)],
        )
        .unwrap();
        let mut y = net.ybus();
        y.entries[(0, 0)] += c(0.0, -1.0);
        let err = solve_network(&net, &y, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap_err();
        match err {
            Error::Singular { context, .. } => assert_eq!(context.as_deref(), Some("bus 7")),
            other => panic!("unexpected {other:?}"),
        }
    }
}
