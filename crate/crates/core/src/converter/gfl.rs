use crate::phasor::{Complex64, Phasor};

/// Below this terminal voltage the current references are frozen.
pub const RIDE_THROUGH_VOLTAGE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConverterParams {
    #[cfg_attr(feature = "serde", serde(default = "default_kp"))]
    pub pll_kp: f64,
    #[cfg_attr(feature = "serde", serde(default = "default_ki"))]
    pub pll_ki: f64,
    #[cfg_attr(feature = "serde", serde(default = "default_tau"))]
    pub tau_idq: f64,
}

#[cfg(feature = "serde")]
fn default_kp() -> f64 {
    ConverterParams::default().pll_kp
}
#[cfg(feature = "serde")]
fn default_ki() -> f64 {
    ConverterParams::default().pll_ki
}
#[cfg(feature = "serde")]
fn default_tau() -> f64 {
    ConverterParams::default().tau_idq
}

impl Default for ConverterParams {
    fn default() -> Self {
        ConverterParams {
            pll_kp: 0.1,
            pll_ki: 0.05,
            tau_idq: 0.01,
        }
    }
}

/// Grid-following power-controlled converter: algebraic voltage loop
/// producing dq current references in the PLL frame, and first-order
/// current loops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GflConverter {
    pub tau: f64,
}

pub mod idx {
    pub const ID: usize = 0;
    pub const IQ: usize = 1;
}

impl GflConverter {
    pub fn n_states(&self) -> usize {
        2
    }

    /// `i_ref = conj(S_ref / v_pll)`, with `v_pll` the terminal voltage in
    /// the PLL frame. Returns `None` when the voltage is too low.
    pub fn current_reference(&self, s_ref: Complex64, v_pll: Complex64) -> Option<Complex64> {
        if v_pll.norm() < RIDE_THROUGH_VOLTAGE {
            None
        } else {
            Some((s_ref / v_pll).conj())
        }
    }

    pub fn derivatives(&self, x: &[f64], i_ref: Complex64, dx: &mut [f64]) {
        dx[idx::ID] = (i_ref.re - x[idx::ID]) / self.tau;
        dx[idx::IQ] = (i_ref.im - x[idx::IQ]) / self.tau;
    }

    /// Injected current in network coordinates.
    pub fn injection(&self, x: &[f64], theta_pll: f64) -> Phasor {
        Complex64::new(x[idx::ID], x[idx::IQ]) * Complex64::from_polar(1.0, theta_pll)
    }

    /// Settled states delivering `s` at `v` with the PLL locked.
    pub fn initialize(&self, s: Complex64, v: Phasor) -> [f64; 2] {
        let v_pll = Complex64::new(v.norm(), 0.0);
        let i = (s / v_pll).conj();
        [i.re, i.im]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phasor::polar;

    #[test]
    fn equilibrium_at_references() {
        let g = GflConverter { tau: 0.01 };
        let v = polar(1.01, 0.3);
        let s = Complex64::new(1.75, 0.46);
        let x = g.initialize(s, v);
        let i_ref = g.current_reference(s, Complex64::new(v.norm(), 0.0)).unwrap();
        let mut dx = [0.0; 2];
        g.derivatives(&x, i_ref, &mut dx);
        assert!(dx.iter().all(|d| d.abs() < 1e-14));
        let inj = g.injection(&x, v.arg());
        let s_out = v * inj.conj();
        assert!((s_out - s).norm() < 1e-12);
    }

    #[test]
    fn current_step_reaches_63_percent_at_tau() {
        let g = GflConverter { tau: 0.01 };
        let mut x = [0.0, 0.0];
        let i_ref = Complex64::new(1.0, 0.0);
        let h = 1e-5;
        let mut dx = [0.0; 2];
        for _ in 0..1000 {
            g.derivatives(&x, i_ref, &mut dx);
            let mid = [x[0] + 0.5 * h * dx[0], x[1] + 0.5 * h * dx[1]];
            g.derivatives(&mid, i_ref, &mut dx);
            x[0] += h * dx[0];
        }
        assert!((x[0] - (1.0 - (-1.0f64).exp())).abs() < 1e-6);
    }

    #[test]
    fn low_voltage_freezes_reference() {
        let g = GflConverter { tau: 0.01 };
        assert!(g.current_reference(Complex64::new(1.0, 0.0), Complex64::new(0.005, 0.0)).is_none());
    }
}
