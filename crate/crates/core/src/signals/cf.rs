//! Complex frequency `η = d/dt ln x = ẋ/x + j·φ̇ = ρ + j·ω` of a phasor
//! signal `x = |x|·e^{jφ}`.
//!
//! Both channels, `ln|x|` and the unwrapped phase, run through the same
//! type-2 tracking loop: a PLL acting on the unwrapped angle (so it cannot
//! slip cycles) and its twin on the log-magnitude. Proportional gain is
//! `2/τ_f`, integral gain `1/τ_f²` (critically damped double pole at
//! `1/τ_f`), and the output is the derivative of the tracked value. The loops
//! follow ramps without a standing error, so `∫η dt` returns to
//! `Δln|x| + j·Δφ` once they have settled.

use alloc::format;
use alloc::vec::Vec;

use crate::phasor::{unwrap_from, Complex64, Phasor};
use crate::{Error, Result};

#[allow(unused_imports)]
use num_traits::Float;

/// Magnitudes below this leave `ln|x|` undefined for estimation purposes.
pub const MIN_MAGNITUDE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CfEstimate {
    /// Instantaneous bandwidth `d ln|x| / dt` (1/s).
    pub rho: f64,
    /// Phase rate relative to the nominal rotating frame (rad/s).
    pub omega: f64,
}

impl CfEstimate {
    pub fn as_complex(&self) -> Complex64 {
        Complex64::new(self.rho, self.omega)
    }

    /// Absolute angular frequency given the frame frequency `omega0` (rad/s).
    pub fn absolute_omega(&self, omega0: f64) -> f64 {
        omega0 + self.omega
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfEstimator {
    pub tau_f: f64,
}

/// Index of each estimator state.
pub mod idx {
    pub const LOG_MAG: usize = 0;
    pub const PHASE: usize = 1;
    /// Integral branch of the magnitude loop (1/s).
    pub const RATE: usize = 2;
    /// Integral branch of the phase loop (rad/s).
    pub const FREQ: usize = 3;
}

impl CfEstimator {
    pub fn new(tau_f: f64) -> Result<Self> {
        if !(tau_f > 0.0) {
            return Err(Error::config("estimator time constant must be > 0"));
        }
        Ok(CfEstimator { tau_f })
    }

    pub fn n_states(&self) -> usize {
        4
    }

    pub fn kp(&self) -> f64 {
        2.0 / self.tau_f
    }

    pub fn ki(&self) -> f64 {
        1.0 / (self.tau_f * self.tau_f)
    }

    /// Settled states for a constant input `x`.
    pub fn initialize(&self, x: Phasor) -> [f64; 4] {
        [x.norm().ln(), x.arg(), 0.0, 0.0]
    }

    /// Estimate from the current states. `phase_ref` is the last accepted
    /// unwrapped phase of the input, used to continue the unwrapping.
    /// Returns `None` when `|x|` is too small to estimate.
    pub fn estimate(&self, states: &[f64], x: Phasor, phase_ref: f64) -> Option<CfEstimate> {
        let mag = x.norm();
        if mag < MIN_MAGNITUDE {
            return None;
        }
        let phase = unwrap_from(phase_ref, x.arg());
        Some(CfEstimate {
            rho: self.kp() * (mag.ln() - states[idx::LOG_MAG]) + states[idx::RATE],
            omega: self.kp() * (phase - states[idx::PHASE]) + states[idx::FREQ],
        })
    }

    /// State derivatives; the loops are frozen while the input is invalid.
    pub fn derivatives(&self, states: &[f64], x: Phasor, phase_ref: f64, dx: &mut [f64]) {
        match self.estimate(states, x, phase_ref) {
            Some(e) => {
                let err_mag = x.norm().ln() - states[idx::LOG_MAG];
                let err_phase = unwrap_from(phase_ref, x.arg()) - states[idx::PHASE];
                dx[idx::LOG_MAG] = e.rho;
                dx[idx::PHASE] = e.omega;
                dx[idx::RATE] = self.ki() * err_mag;
                dx[idx::FREQ] = self.ki() * err_phase;
            }
            None => dx[..4].iter_mut().for_each(|d| *d = 0.0),
        }
    }
}

/// One sample of a phasor channel with its estimated complex frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfSample {
    pub t: f64,
    pub x: Phasor,
    pub eta: CfEstimate,
}

/// Runs the estimator over a uniformly sampled stream using the same
/// trapezoidal discretization as the simulation engine. The first sample
/// initializes the loops (settled).
pub fn estimate_cf(stream: &[Phasor], h: f64, estimator: &CfEstimator) -> Vec<Option<CfEstimate>> {
    let mut out = Vec::with_capacity(stream.len());
    let Some(first) = stream.first() else {
        return out;
    };
    let mut s = estimator.initialize(*first);
    let mut phase = first.arg();
    let mut last = estimator.estimate(&s, *first, phase);
    out.push(last);
    let a = h / 2.0;
    let (kp, ki) = (estimator.kp(), estimator.ki());
    // trapezoidal step of one linear loop, solved for (ŝ⁺, w⁺)
    let step = |s: f64, w: f64, z: f64, z_new: f64| {
        let e = z - s;
        let s_new = (s + a * (kp * e + 2.0 * w + kp * z_new) + a * a * ki * (e + z_new)) / (1.0 + a * kp + a * a * ki);
        (s_new, w + a * ki * (e + z_new - s_new))
    };
    let mut log_mag = first.norm().ln();
    for &x in &stream[1..] {
        if x.norm() < MIN_MAGNITUDE {
            out.push(None);
            continue;
        }
        let (zm, zp) = (x.norm().ln(), unwrap_from(phase, x.arg()));
        (s[idx::LOG_MAG], s[idx::RATE]) = step(s[idx::LOG_MAG], s[idx::RATE], log_mag, zm);
        (s[idx::PHASE], s[idx::FREQ]) = step(s[idx::PHASE], s[idx::FREQ], phase, zp);
        log_mag = zm;
        phase = zp;
        last = estimator.estimate(&s, x, phase);
        out.push(last);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityResidual {
    /// `∫η dt` by the trapezoidal rule.
    pub integral: Complex64,
    /// `ln(|x(t1)|/|x(t0)|) + j·Δφ` with the phase unwrapped along the samples.
    pub endpoint: Complex64,
    pub residual: f64,
}

/// Compares the quadrature of the estimated complex frequency over
/// `[t0, t1]` with the log-ratio of the signal's endpoints. Samples must be
/// ordered in time; repeated time stamps (event instants) contribute nothing
/// to the quadrature.
pub fn cf_integral_identity(samples: &[CfSample], t0: f64, t1: f64) -> Result<IdentityResidual> {
    let window: Vec<&CfSample> = samples.iter().filter(|s| s.t >= t0 && s.t <= t1).collect();
    if window.len() < 2 {
        return Err(Error::config("identity window needs at least two samples"));
    }
    if let Some(bad) = window.iter().find(|s| s.x.norm() < MIN_MAGNITUDE) {
        return Err(Error::config(format!(
            "signal magnitude vanishes at t = {:.6} s; identity not evaluated",
            bad.t
        )));
    }
    let mut integral = Complex64::new(0.0, 0.0);
    let mut phase = window[0].x.arg();
    let phase0 = phase;
    for pair in window.windows(2) {
        let dt = pair[1].t - pair[0].t;
        integral += (pair[0].eta.as_complex() + pair[1].eta.as_complex()) * (dt / 2.0);
        phase = unwrap_from(phase, pair[1].x.arg());
    }
    let (first, last) = (window[0].x, window[window.len() - 1].x);
    let endpoint = Complex64::new((last.norm() / first.norm()).ln(), phase - phase0);
    Ok(IdentityResidual {
        integral,
        endpoint,
        residual: (integral - endpoint).norm(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phasor::polar;

    fn run(f: impl Fn(f64) -> Phasor, tau_f: f64, h: f64, t_end: f64) -> (Vec<f64>, Vec<Phasor>, Vec<Option<CfEstimate>>) {
        let n = (t_end / h).round() as usize;
        let t: Vec<f64> = (0..=n).map(|k| k as f64 * h).collect();
        let xs: Vec<Phasor> = t.iter().map(|&t| f(t)).collect();
        let est = estimate_cf(&xs, h, &CfEstimator::new(tau_f).unwrap());
        (t, xs, est)
    }

    #[test]
    fn constant_phasor_settles_to_zero() {
        let (_, _, est) = run(|_| polar(1.0, 0.0), 0.02, 1e-3, 0.2);
        let last = est.last().unwrap().unwrap();
        assert!(last.rho.abs() < 1e-12 && last.omega.abs() < 1e-12);
    }

    #[test]
    fn exponential_chirp_recovers_rates() {
        // x(t) = e^{0.2t}·e^{j(ω₀+1)t}, observed in the frame rotating at ω₀.
        let (_, _, est) = run(|t| (0.2 * t).exp() * polar(1.0, t), 0.02, 1e-3, 1.0);
        let last = est.last().unwrap().unwrap();
        assert!((last.rho - 0.2).abs() < 1e-6, "{last:?}");
        assert!((last.omega - 1.0).abs() < 1e-6, "{last:?}");
        assert!((last.absolute_omega(377.0) - 378.0).abs() < 1e-6);
    }

    #[test]
    fn pure_rotation_integrates_exactly() {
        let omega = 2.5;
        let (t, xs, est) = run(|t| polar(0.7, omega * t + 0.3), 0.02, 1e-3, 3.0);
        let samples: Vec<CfSample> = t
            .iter()
            .zip(&xs)
            .zip(&est)
            .map(|((&t, &x), e)| CfSample { t, x, eta: e.unwrap() })
            .collect();
        // The loop starts settled on a constant and must absorb the ramp;
        // once it has, the integral matches the phase advance.
        let r = cf_integral_identity(&samples, 0.0, 3.0).unwrap();
        assert!((r.endpoint.im - omega * 3.0).abs() < 1e-9);
        assert!(r.residual < 1e-9, "{r:?}");
    }

    #[test]
    fn constant_phasor_identity_is_zero() {
        let (t, xs, est) = run(|_| polar(1.3, -2.0), 0.02, 1e-3, 1.0);
        let samples: Vec<CfSample> = t
            .iter()
            .zip(&xs)
            .zip(&est)
            .map(|((&t, &x), e)| CfSample { t, x, eta: e.unwrap() })
            .collect();
        let r = cf_integral_identity(&samples, 0.0, 1.0).unwrap();
        assert!(r.residual < 1e-12, "{r:?}");
    }

    #[test]
    fn vanishing_magnitude_is_flagged() {
        let (t, xs, est) = run(|t| polar((t - 0.5).abs(), 0.0), 0.02, 1e-3, 1.0);
        assert!(est[500].is_none());
        let samples: Vec<CfSample> = t
            .iter()
            .zip(&xs)
            .zip(&est)
            .map(|((&t, &x), e)| CfSample { t, x, eta: e.unwrap_or_default() })
            .collect();
        assert!(cf_integral_identity(&samples, 0.0, 1.0).is_err());
    }

    #[test]
    fn estimator_rejects_nonpositive_tau() {
        assert!(CfEstimator::new(0.0).is_err());
    }
}
