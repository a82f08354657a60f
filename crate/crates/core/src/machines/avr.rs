//! Automatic voltage regulators. Exciter saturation is not modeled.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Simplified IEEE DC1 exciter.
///
/// ```text
/// vm' = (|V| − vm)/Tr
/// vr' = (clamp(Ka·(vref + vs − vm − vf)) − vr)/Ta   clamp to [Vr_min, Vr_max]
/// efd' = (vr − Ke·efd)/Te
/// rf' = (Kf/Tf·efd − rf)/Tf,   vf = Kf/Tf·efd − rf
/// ```
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AvrDc1 {
    pub tr: f64,
    pub ka: f64,
    pub ta: f64,
    pub ke: f64,
    pub te: f64,
    pub kf: f64,
    pub tf: f64,
    pub vr_max: f64,
    pub vr_min: f64,
}

/// Simplified IEEE AC4A: transducer, lead-lag `(1 + s·Tc)/(1 + s·Tb)` and a
/// limited first-order regulator whose output is the field voltage.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AvrAc4 {
    pub tr: f64,
    pub tb: f64,
    pub tc: f64,
    pub ka: f64,
    pub ta: f64,
    pub vi_max: f64,
    pub vi_min: f64,
    pub vr_max: f64,
    pub vr_min: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Avr {
    Dc1(AvrDc1),
    Ac4(AvrAc4),
}

mod dc1 {
    pub const VM: usize = 0;
    pub const VR: usize = 1;
    pub const EFD: usize = 2;
    pub const RF: usize = 3;
}

mod ac4 {
    pub const VM: usize = 0;
    pub const LL: usize = 1;
    pub const VR: usize = 2;
}

fn positive(v: f64, name: &str) -> Result<()> {
    if v > 0.0 {
        Ok(())
    } else {
        Err(Error::config(alloc::format!("AVR parameter {name} must be > 0")))
    }
}

impl Avr {
    pub fn validate(&self) -> Result<()> {
        match self {
            Avr::Dc1(a) => {
                for (v, n) in [(a.tr, "tr"), (a.ta, "ta"), (a.te, "te"), (a.tf, "tf"), (a.ka, "ka")] {
                    positive(v, n)?;
                }
                if a.vr_min >= a.vr_max {
                    return Err(Error::config("AVR vr_min must be below vr_max"));
                }
            }
            Avr::Ac4(a) => {
                for (v, n) in [(a.tr, "tr"), (a.ta, "ta"), (a.tb, "tb"), (a.ka, "ka")] {
                    positive(v, n)?;
                }
                if a.vr_min >= a.vr_max || a.vi_min >= a.vi_max {
                    return Err(Error::config("AVR limits are inverted"));
                }
            }
        }
        Ok(())
    }

    pub fn n_states(&self) -> usize {
        match self {
            Avr::Dc1(_) => 4,
            Avr::Ac4(_) => 3,
        }
    }

    /// Steady state reproducing `efd0` at measured voltage `vm0`. Returns the
    /// states and the voltage reference.
    pub fn initialize(&self, efd0: f64, vm0: f64) -> Result<(Vec<f64>, f64)> {
        match self {
            Avr::Dc1(a) => {
                let vr = a.ke * efd0;
                if vr > a.vr_max || vr < a.vr_min {
                    return Err(Error::init(alloc::format!(
                        "DC1 regulator output {vr:.4} outside limits"
                    )));
                }
                let mut x = vec![0.0; 4];
                x[dc1::VM] = vm0;
                x[dc1::VR] = vr;
                x[dc1::EFD] = efd0;
                x[dc1::RF] = a.kf / a.tf * efd0;
                Ok((x, vm0 + vr / a.ka))
            }
            Avr::Ac4(a) => {
                if efd0 > a.vr_max || efd0 < a.vr_min {
                    return Err(Error::init(alloc::format!(
                        "AC4 regulator output {efd0:.4} outside limits"
                    )));
                }
                let vi = efd0 / a.ka;
                let mut x = vec![0.0; 3];
                x[ac4::VM] = vm0;
                x[ac4::LL] = vi;
                x[ac4::VR] = efd0;
                Ok((x, vm0 + vi))
            }
        }
    }

    pub fn efd(&self, x: &[f64]) -> f64 {
        match self {
            Avr::Dc1(_) => x[dc1::EFD],
            Avr::Ac4(_) => x[ac4::VR],
        }
    }

    /// `vref` includes any stabilizing signal.
    pub fn derivatives(&self, x: &[f64], v_mag: f64, vref: f64, dx: &mut [f64]) {
        match self {
            Avr::Dc1(a) => {
                let vf = a.kf / a.tf * x[dc1::EFD] - x[dc1::RF];
                dx[dc1::VM] = (v_mag - x[dc1::VM]) / a.tr;
                let target = (a.ka * (vref - x[dc1::VM] - vf)).clamp(a.vr_min, a.vr_max);
                dx[dc1::VR] = (target - x[dc1::VR]) / a.ta;
                dx[dc1::EFD] = (x[dc1::VR] - a.ke * x[dc1::EFD]) / a.te;
                dx[dc1::RF] = (a.kf / a.tf * x[dc1::EFD] - x[dc1::RF]) / a.tf;
            }
            Avr::Ac4(a) => {
                dx[ac4::VM] = (v_mag - x[ac4::VM]) / a.tr;
                let vi = (vref - x[ac4::VM]).clamp(a.vi_min, a.vi_max);
                dx[ac4::LL] = (vi - x[ac4::LL]) / a.tb;
                let vll = a.tc / a.tb * vi + (1.0 - a.tc / a.tb) * x[ac4::LL];
                let target = (a.ka * vll).clamp(a.vr_min, a.vr_max);
                dx[ac4::VR] = (target - x[ac4::VR]) / a.ta;
            }
        }
    }

    /// Clamps limited states back inside their bounds after a step.
    pub fn enforce_limits(&self, x: &mut [f64]) {
        match self {
            Avr::Dc1(a) => x[dc1::VR] = x[dc1::VR].clamp(a.vr_min, a.vr_max),
            Avr::Ac4(a) => x[ac4::VR] = x[ac4::VR].clamp(a.vr_min, a.vr_max),
        }
    }

    /// Regulator output and its limits, for limit checks.
    pub fn regulator_output(&self, x: &[f64]) -> (f64, f64, f64) {
        match self {
            Avr::Dc1(a) => (x[dc1::VR], a.vr_min, a.vr_max),
            Avr::Ac4(a) => (x[ac4::VR], a.vr_min, a.vr_max),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn dc1() -> Avr {
        Avr::Dc1(AvrDc1 {
            tr: 0.05,
            ka: 20.0,
            ta: 0.055,
            ke: 1.0,
            te: 0.36,
            kf: 0.125,
            tf: 1.8,
            vr_max: 5.0,
            vr_min: -5.0,
        })
    }

    fn ac4() -> Avr {
        Avr::Ac4(AvrAc4 {
            tr: 0.01,
            tb: 10.0,
            tc: 1.0,
            ka: 200.0,
            ta: 0.015,
            vi_max: 10.0,
            vi_min: -10.0,
            vr_max: 5.64,
            vr_min: -4.53,
        })
    }

    #[test]
    fn initialization_is_an_equilibrium() {
        for avr in [dc1(), ac4()] {
            avr.validate().unwrap();
            let (x, vref) = avr.initialize(1.8, 1.01).unwrap();
            assert!((avr.efd(&x) - 1.8).abs() < 1e-14);
            let mut dx = vec![0.0; avr.n_states()];
            avr.derivatives(&x, 1.01, vref, &mut dx);
            assert!(dx.iter().all(|d| d.abs() < 1e-12), "{dx:?}");
        }
    }

    #[test]
    fn regulator_respects_limits_under_deep_sag() {
        // Forward-Euler the exciter alone through a 2 s voltage collapse.
        for avr in [dc1(), ac4()] {
            let (mut x, vref) = avr.initialize(1.5, 1.0).unwrap();
            let mut dx = vec![0.0; avr.n_states()];
            let h = 1e-3;
            for k in 0..4000 {
                let v = if k < 2000 { 0.1 } else { 1.6 };
                avr.derivatives(&x, v, vref, &mut dx);
                for (xi, di) in x.iter_mut().zip(&dx) {
                    *xi += h * di;
                }
                avr.enforce_limits(&mut x);
                let (out, lo, hi) = avr.regulator_output(&x);
                assert!(out >= lo && out <= hi);
            }
        }
    }

    #[test]
    fn out_of_range_field_voltage_fails_initialization() {
        assert!(dc1().initialize(7.0, 1.0).is_err());
    }
}
