//! Coherency control: equal complex frequency of two injected currents
//! integrates to a constant magnitude ratio and a constant phase offset,
//! `|i₁| = k_i·|i₂|` and `θ₁ = θ_k + θ₂`. The controller enforces that
//! relation with respect to a measured external current.

use crate::phasor::{polar, wrap_angle, Complex64, Phasor};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum CoherencyMode {
    /// Magnitude and phase follow the reference.
    Complex,
    /// Phase follows the reference, magnitude frozen at its initial value.
    Conventional,
}

/// Complex gain `k̄ = k_i·e^{jθ_k}` fixed at initialization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherencyController {
    /// Index of the reference device in the scenario.
    pub reference: usize,
    pub k_i: f64,
    pub theta_k: f64,
    /// Coherency share C of the host device.
    pub share: f64,
    pub mode: CoherencyMode,
    /// Local current magnitude at t = 0.
    pub i_mag0: f64,
}

impl CoherencyController {
    pub fn new(reference: usize, share: f64, mode: CoherencyMode, i_local_0: Phasor, i_ext_0: Phasor) -> Result<Self> {
        if !(0.0..=1.0).contains(&share) {
            return Err(Error::config(alloc::format!("coherency share C = {share} outside [0, 1]")));
        }
        let (k_i, theta_k) = init_gain(i_local_0, i_ext_0)?;
        Ok(CoherencyController {
            reference,
            k_i,
            theta_k,
            share,
            mode,
            i_mag0: i_local_0.norm(),
        })
    }

    pub fn gain(&self) -> Complex64 {
        polar(self.k_i, self.theta_k)
    }
}

/// Magnitude ratio and phase offset between local and external currents at
/// the initial operating point.
pub fn init_gain(i_local_0: Phasor, i_ext_0: Phasor) -> Result<(f64, f64)> {
    let ext = i_ext_0.norm();
    if ext < 1e-9 {
        return Err(Error::init("reference device current is zero at t = 0"));
    }
    let k_i = i_local_0.norm() / ext;
    if !(k_i > 0.0) {
        return Err(Error::init("controlled device carries no current at t = 0"));
    }
    Ok((k_i, wrap_angle(i_local_0.arg() - i_ext_0.arg())))
}

/// Current reference from the measured external current.
pub fn coherency_reference(i_ext_meas: Phasor, ctrl: &CoherencyController) -> Phasor {
    match ctrl.mode {
        CoherencyMode::Complex => ctrl.gain() * i_ext_meas,
        CoherencyMode::Conventional => polar(ctrl.i_mag0, ctrl.theta_k + i_ext_meas.arg()),
    }
}

/// `P + jQ = v·conj(i_ref)`.
pub fn power_reference(v_term: Phasor, i_ref: Phasor) -> (f64, f64) {
    let s = v_term * i_ref.conj();
    (s.re, s.im)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::{FRAC_PI_4, FRAC_PI_6};
    use proptest::prelude::*;

    fn ctrl(k_i: f64, theta_k: f64, mode: CoherencyMode, i_mag0: f64) -> CoherencyController {
        CoherencyController { reference: 0, k_i, theta_k, share: 1.0, mode, i_mag0 }
    }

    #[test]
    fn identical_currents_give_unit_gain() {
        let i = polar(0.8, -0.4);
        let (k, th) = init_gain(i, i).unwrap();
        assert!((k - 1.0).abs() < 1e-15 && th.abs() < 1e-15);
    }

    #[test]
    fn gain_definition() {
        let (k, th) = init_gain(polar(0.5, FRAC_PI_4), polar(1.0, 0.0)).unwrap();
        assert!((k - 0.5).abs() < 1e-15);
        assert!((th - FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn idle_reference_rejected() {
        assert!(init_gain(polar(1.0, 0.0), polar(1e-12, 0.0)).is_err());
    }

    #[test]
    fn share_outside_unit_interval_rejected() {
        let r = CoherencyController::new(0, 1.5, CoherencyMode::Complex, polar(1.0, 0.0), polar(1.0, 0.0));
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn complex_mode_scales_and_rotates() {
        let r = coherency_reference(polar(0.3, 0.1), &ctrl(2.0, 0.0, CoherencyMode::Complex, 0.0));
        assert!((r - polar(0.6, 0.1)).norm() < 1e-15);
    }

    #[test]
    fn conventional_mode_keeps_magnitude() {
        let c = ctrl(2.0, FRAC_PI_6, CoherencyMode::Conventional, 0.4);
        let r = coherency_reference(polar(0.9, 0.2), &c);
        assert!((r - polar(0.4, 0.2 + FRAC_PI_6)).norm() < 1e-15);
    }

    #[test]
    fn power_reference_sign_convention() {
        assert_eq!(power_reference(Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)), (1.0, 0.0));
        let (p, q) = power_reference(Complex64::new(1.0, 0.0), Complex64::new(0.0, -1.0));
        assert_eq!((p, q), (0.0, 1.0));
    }

    proptest! {
        #[test]
        fn gains_round_trip_the_initial_point(
            ml in 0.01f64..5.0, al in -3.1f64..3.1, me in 0.01f64..5.0, ae in -3.1f64..3.1,
        ) {
            let (il, ie) = (polar(ml, al), polar(me, ae));
            let c = CoherencyController::new(0, 0.5, CoherencyMode::Complex, il, ie).unwrap();
            prop_assert!((coherency_reference(ie, &c) - il).norm() < 1e-12 * (1.0 + ml));
            let conv = CoherencyController { mode: CoherencyMode::Conventional, ..c };
            prop_assert!((coherency_reference(ie, &conv) - il).norm() < 1e-12 * (1.0 + ml));
        }

        #[test]
        fn conventional_magnitude_is_frozen(m in 0.01f64..10.0, a in -10.0f64..10.0) {
            let c = ctrl(1.7, 0.3, CoherencyMode::Conventional, 0.42);
            prop_assert!((coherency_reference(polar(m, a), &c).norm() - 0.42).abs() < 1e-12);
        }
    }
}
