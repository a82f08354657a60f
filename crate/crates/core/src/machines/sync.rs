use alloc::format;
use alloc::vec::Vec;

use crate::phasor::{Complex64, Phasor, J};
use crate::{Error, Result};

#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum MachineOrder {
    /// δ, ω, e'q, e'd (two-axis model).
    Fourth,
    /// δ, ω, e'q, e'd, e''q, e''d.
    Sixth,
}

/// Machine parameters on the machine rating. Subtransient fields are ignored
/// by the fourth-order model.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MachineParams {
    pub order: MachineOrder,
    /// Inertia constant (s).
    pub h: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub d: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub ra: f64,
    pub xd: f64,
    pub xq: f64,
    pub xd1: f64,
    pub xq1: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub xd2: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub xq2: f64,
    pub td01: f64,
    pub tq01: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub td02: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub tq02: f64,
}

/// Index of each state within the machine's slice.
pub mod idx {
    pub const DELTA: usize = 0;
    pub const OMEGA: usize = 1;
    pub const EQ1: usize = 2;
    pub const ED1: usize = 3;
    pub const EQ2: usize = 4;
    pub const ED2: usize = 5;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatorCurrents {
    pub id: f64,
    pub iq: f64,
    pub vd: f64,
    pub vq: f64,
}

impl StatorCurrents {
    /// Air-gap power, used as electrical torque in the swing equation.
    pub fn air_gap_power(&self, ra: f64) -> f64 {
        (self.vd + ra * self.id) * self.id + (self.vq + ra * self.iq) * self.iq
    }
}

/// Norton pair at the terminal: the injected current is `i_src − y·V`.
/// With saliency the source current carries the part of the injection that is
/// linear in `conj(V)`, so it is only valid at the voltage it was built for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norton {
    pub y: Complex64,
    pub i_src: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynchronousMachine {
    pub params: MachineParams,
    /// Nominal angular frequency (rad/s).
    pub omega_b: f64,
}

/// Park transform into the rotor frame: `vd + j·vq = j·V·e^{−jδ}`.
pub fn to_dq(v: Phasor, delta: f64) -> Complex64 {
    J * v * Complex64::from_polar(1.0, -delta)
}

pub fn from_dq(dq: Complex64, delta: f64) -> Phasor {
    -J * dq * Complex64::from_polar(1.0, delta)
}

impl SynchronousMachine {
    pub fn new(params: MachineParams, omega_b: f64) -> Result<Self> {
        let p = &params;
        let bad = |what: &str| Err(Error::config(format!("machine parameter check failed: {what}")));
        if !(p.h > 0.0) {
            return bad("H > 0");
        }
        if p.xd1 > p.xd || p.xd1 <= 0.0 || p.xq1 <= 0.0 {
            return bad("0 < X'd <= Xd and X'q > 0");
        }
        if !(p.td01 > 0.0 && p.tq01 > 0.0) {
            return bad("T'd0, T'q0 > 0");
        }
        if p.order == MachineOrder::Sixth {
            if p.xd2 > p.xd1 || p.xd2 <= 0.0 || p.xq2 <= 0.0 || p.xq2 > p.xq1 {
                return bad("0 < X''d <= X'd and 0 < X''q <= X'q");
            }
            if !(p.td02 > 0.0 && p.tq02 > 0.0) {
                return bad("T''d0, T''q0 > 0");
            }
        }
        Ok(SynchronousMachine { params, omega_b })
    }

    pub fn n_states(&self) -> usize {
        match self.params.order {
            MachineOrder::Fourth => 4,
            MachineOrder::Sixth => 6,
        }
    }

    /// Reactances and EMFs that sit behind the stator for this order.
    fn behind(&self, x: &[f64]) -> (f64, f64, f64, f64) {
        let p = &self.params;
        match p.order {
            MachineOrder::Fourth => (p.xd1, p.xq1, x[idx::EQ1], x[idx::ED1]),
            MachineOrder::Sixth => (p.xd2, p.xq2, x[idx::EQ2], x[idx::ED2]),
        }
    }

    /// Solves the stator equations
    /// `0 = vq + ra·iq − e_q + x_d·id`, `0 = vd + ra·id − e_d − x_q·iq`.
    pub fn stator_currents(&self, x: &[f64], v: Phasor) -> StatorCurrents {
        let ra = self.params.ra;
        let (xd, xq, eq, ed) = self.behind(x);
        let vdq = to_dq(v, x[idx::DELTA]);
        let (vd, vq) = (vdq.re, vdq.im);
        // [xd  ra ] [id]   [eq − vq]
        // [ra  −xq] [iq] = [ed − vd]
        let det = -xd * xq - ra * ra;
        let (b1, b2) = (eq - vq, ed - vd);
        let id = (-xq * b1 - ra * b2) / det;
        let iq = (xd * b2 - ra * b1) / det;
        StatorCurrents { id, iq, vd, vq }
    }

    /// Injected terminal current in network coordinates (machine base).
    pub fn injection(&self, x: &[f64], v: Phasor) -> Phasor {
        let s = self.stator_currents(x, v);
        from_dq(Complex64::new(s.id, s.iq), x[idx::DELTA])
    }

    /// Norton equivalent at terminal voltage `v`, machine base.
    pub fn stator_algebra(&self, x: &[f64], v: Phasor) -> Norton {
        // The injection is real-affine in V: I = i0 + a·V + b·conj(V).
        let i0 = self.injection(x, Complex64::new(0.0, 0.0));
        let l1 = self.injection(x, Complex64::new(1.0, 0.0)) - i0;
        let lj = self.injection(x, J) - i0;
        let a = (l1 - J * lj) / 2.0;
        let b = (l1 + J * lj) / 2.0;
        Norton {
            y: -a,
            i_src: i0 + b * v.conj(),
        }
    }

    pub fn derivatives(&self, x: &[f64], v: Phasor, efd: f64, pm: f64, dx: &mut [f64]) {
        let p = &self.params;
        let s = self.stator_currents(x, v);
        let pe = s.air_gap_power(p.ra);
        let dw = x[idx::OMEGA] - 1.0;
        dx[idx::DELTA] = self.omega_b * dw;
        dx[idx::OMEGA] = (pm - pe - p.d * dw) / (2.0 * p.h);
        dx[idx::EQ1] = (-x[idx::EQ1] - (p.xd - p.xd1) * s.id + efd) / p.td01;
        dx[idx::ED1] = (-x[idx::ED1] + (p.xq - p.xq1) * s.iq) / p.tq01;
        if p.order == MachineOrder::Sixth {
            dx[idx::EQ2] = (-x[idx::EQ2] + x[idx::EQ1] - (p.xd1 - p.xd2) * s.id) / p.td02;
            dx[idx::ED2] = (-x[idx::ED2] + x[idx::ED1] + (p.xq1 - p.xq2) * s.iq) / p.tq02;
        }
    }

    pub fn electrical_power(&self, x: &[f64], v: Phasor) -> f64 {
        self.stator_currents(x, v).air_gap_power(self.params.ra)
    }

    /// Steady state at terminal voltage `v` delivering `s` (machine base).
    /// Returns the states, the field voltage and the mechanical power.
    pub fn initialize(&self, v: Phasor, s: Complex64) -> Result<(Vec<f64>, f64, f64)> {
        let p = &self.params;
        if v.norm() <= 0.0 {
            return Err(Error::init("machine terminal voltage is zero"));
        }
        let i = (s / v).conj();
        let e_q_axis = v + Complex64::new(p.ra, p.xq) * i;
        let delta = e_q_axis.arg();
        let vdq = to_dq(v, delta);
        let idq = to_dq(i, delta);
        let (vd, vq, id, iq) = (vdq.re, vdq.im, idq.re, idq.im);

        let mut x = alloc::vec![0.0; self.n_states()];
        x[idx::DELTA] = delta;
        x[idx::OMEGA] = 1.0;
        let (eq1, ed1) = match p.order {
            MachineOrder::Fourth => (vq + p.ra * iq + p.xd1 * id, vd + p.ra * id - p.xq1 * iq),
            MachineOrder::Sixth => {
                let eq2 = vq + p.ra * iq + p.xd2 * id;
                let ed2 = vd + p.ra * id - p.xq2 * iq;
                x[idx::EQ2] = eq2;
                x[idx::ED2] = ed2;
                (eq2 + (p.xd1 - p.xd2) * id, ed2 - (p.xq1 - p.xq2) * iq)
            }
        };
        x[idx::EQ1] = eq1;
        x[idx::ED1] = ed1;
        let efd = eq1 + (p.xd - p.xd1) * id;
        let pm = (vd + p.ra * id) * id + (vq + p.ra * iq) * iq;
        if !efd.is_finite() || efd <= 0.0 {
            return Err(Error::init(format!(
                "operating point P={:.4}, Q={:.4} at |V|={:.4} needs field voltage {efd:.4}",
                s.re,
                s.im,
                v.norm()
            )));
        }
        Ok((x, efd, pm))
    }
}
