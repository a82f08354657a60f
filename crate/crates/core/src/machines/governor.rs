use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Turbine governor "Type I": droop, servo lag, then a governor/reheat
/// chain with one lead-lag and one reheat stage.
///
/// ```text
/// Tin = clamp(Porder + (1 − ω)/R, Tmin, Tmax)
/// tg1' = (Tin − tg1)/Ts
/// tg2' = ((1 − T3/Tc)·tg1 − tg2)/Tc
/// tg3' = ((1 − T4/T5)·(tg2 + T3/Tc·tg1) − tg3)/T5
/// Pm  = tg3 + T4/T5·(tg2 + T3/Tc·tg1)
/// ```
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TurbineGovernorType1 {
    /// Droop (pu on machine base).
    pub r: f64,
    pub t_max: f64,
    pub t_min: f64,
    pub ts: f64,
    pub tc: f64,
    pub t3: f64,
    pub t4: f64,
    pub t5: f64,
}

impl TurbineGovernorType1 {
    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0 && self.ts > 0.0 && self.tc > 0.0 && self.t5 > 0.0) {
            return Err(Error::config("governor needs R, Ts, Tc, T5 > 0"));
        }
        if self.t_min >= self.t_max {
            return Err(Error::config("governor Tmin must be below Tmax"));
        }
        Ok(())
    }

    pub fn n_states(&self) -> usize {
        3
    }

    /// Returns the states and the power order reproducing `pm0` at ω = 1.
    pub fn initialize(&self, pm0: f64) -> Result<(Vec<f64>, f64)> {
        if pm0 > self.t_max || pm0 < self.t_min {
            return Err(Error::init(alloc::format!(
                "governor set point {pm0:.4} outside [{}, {}]",
                self.t_min,
                self.t_max
            )));
        }
        let tg1 = pm0;
        let tg2 = (1.0 - self.t3 / self.tc) * pm0;
        let tg3 = (1.0 - self.t4 / self.t5) * pm0;
        Ok((vec![tg1, tg2, tg3], pm0))
    }

    pub fn mechanical_power(&self, x: &[f64]) -> f64 {
        x[2] + self.t4 / self.t5 * (x[1] + self.t3 / self.tc * x[0])
    }

    pub fn derivatives(&self, x: &[f64], omega: f64, p_order: f64, dx: &mut [f64]) {
        let tin = (p_order + (1.0 - omega) / self.r).clamp(self.t_min, self.t_max);
        dx[0] = (tin - x[0]) / self.ts;
        dx[1] = ((1.0 - self.t3 / self.tc) * x[0] - x[1]) / self.tc;
        dx[2] = ((1.0 - self.t4 / self.t5) * (x[1] + self.t3 / self.tc * x[0]) - x[2]) / self.t5;
    }
}
