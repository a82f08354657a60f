use crate::phasor::{Complex64, Phasor};

/// Synchronous-reference-frame PLL with a PI loop on the quadrature voltage.
///
/// ```text
/// vq   = Im(V·e^{−jθ})
/// θ'   = ω_b·(Kp·vq + x)
/// x'   = Ki·vq
/// ω_pll = 1 + Kp·vq + x      (pu)
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pll {
    pub kp: f64,
    pub ki: f64,
    pub omega_b: f64,
}

pub mod idx {
    pub const THETA: usize = 0;
    pub const INTEGRATOR: usize = 1;
}

impl Pll {
    pub fn n_states(&self) -> usize {
        2
    }

    /// Locked on `v` at nominal frequency.
    pub fn initialize(&self, v: Phasor) -> [f64; 2] {
        [v.arg(), 0.0]
    }

    pub fn quadrature_voltage(&self, x: &[f64], v: Phasor) -> f64 {
        (v * Complex64::from_polar(1.0, -x[idx::THETA])).im
    }

    pub fn frequency(&self, x: &[f64], v: Phasor) -> f64 {
        1.0 + self.kp * self.quadrature_voltage(x, v) + x[idx::INTEGRATOR]
    }

    pub fn derivatives(&self, x: &[f64], v: Phasor, dx: &mut [f64]) {
        let vq = self.quadrature_voltage(x, v);
        dx[idx::THETA] = self.omega_b * (self.kp * vq + x[idx::INTEGRATOR]);
        dx[idx::INTEGRATOR] = self.ki * vq;
    }
}
