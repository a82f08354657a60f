use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Speed-input stabilizer "Type 2": washout, two lead-lag stages, output
/// limits. The output is added to the AVR reference.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Pss2 {
    pub kw: f64,
    pub tw: f64,
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub t4: f64,
    pub vs_max: f64,
    pub vs_min: f64,
}

impl Pss2 {
    pub fn validate(&self) -> Result<()> {
        if !(self.tw > 0.0 && self.t2 > 0.0 && self.t4 > 0.0) {
            return Err(Error::config("PSS needs Tw, T2, T4 > 0"));
        }
        if self.vs_min >= self.vs_max {
            return Err(Error::config("PSS output limits are inverted"));
        }
        Ok(())
    }

    pub fn n_states(&self) -> usize {
        3
    }

    pub fn initialize(&self) -> Vec<f64> {
        vec![0.0; 3]
    }

    fn stages(&self, x: &[f64], omega: f64) -> (f64, f64, f64) {
        let yw = self.kw * (omega - 1.0) - x[0];
        let y1 = self.t1 / self.t2 * yw + (1.0 - self.t1 / self.t2) * x[1];
        let y2 = self.t3 / self.t4 * y1 + (1.0 - self.t3 / self.t4) * x[2];
        (yw, y1, y2)
    }

    pub fn output(&self, x: &[f64], omega: f64) -> f64 {
        self.stages(x, omega).2.clamp(self.vs_min, self.vs_max)
    }

    pub fn derivatives(&self, x: &[f64], omega: f64, dx: &mut [f64]) {
        let (yw, y1, _) = self.stages(x, omega);
        dx[0] = (self.kw * (omega - 1.0) - x[0]) / self.tw;
        dx[1] = (yw - x[1]) / self.t2;
        dx[2] = (y1 - x[2]) / self.t4;
    }
}
