use alloc::format;
#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

/// How a controller sees the measured reference current.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Coupling {
    /// Solved simultaneously with the network in the same step.
    #[default]
    Algebraic,
    /// Value from the last accepted step.
    Lagged,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SolverConfig {
    /// Integration step (s).
    pub h: f64,
    /// Simulated horizon (s).
    pub t_end: f64,
    /// Output sampling step (s), an integer multiple of `h`.
    pub output_step: f64,
    /// Infinity-norm tolerance on the step residual.
    pub newton_tol: f64,
    pub max_newton_iters: usize,
    pub coupling: Coupling,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            h: 0.005,
            t_end: 20.0,
            output_step: 0.01,
            newton_tol: 1e-9,
            max_newton_iters: 30,
            coupling: Coupling::Algebraic,
        }
    }
}

impl SolverConfig {
    /// Number of integration steps per output sample.
    pub fn output_stride(&self) -> Result<usize> {
        let ratio = self.output_step / self.h;
        let n = ratio.round();
        if n < 1.0 || (ratio - n).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::config(format!(
                "solver.output_step = {} is not a positive integer multiple of solver.h = {}",
                self.output_step, self.h
            )));
        }
        Ok(n as usize)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::config(format!("solver.{name} = {v} must be finite and > 0")))
            }
        };
        positive("h", self.h)?;
        positive("t_end", self.t_end)?;
        positive("output_step", self.output_step)?;
        positive("newton_tol", self.newton_tol)?;
        if self.max_newton_iters == 0 {
            return Err(Error::config("solver.max_newton_iters must be >= 1"));
        }
        self.output_stride()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        let c = SolverConfig::default();
        c.validate().unwrap();
        assert_eq!(c.output_stride().unwrap(), 2);
    }

    #[test]
    fn output_step_must_align() {
        let c = SolverConfig { output_step: 0.012, ..Default::default() };
        assert!(c.validate().is_err());
        let c = SolverConfig { h: 0.0025, ..Default::default() };
        assert_eq!(c.output_stride().unwrap(), 4);
    }
}
