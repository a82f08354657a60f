use crate::phasor::Phasor;

#[allow(unused_imports)]
use num_traits::Float;

/// First-order lag `1/(1 + s·τ_d)` applied to the real and imaginary parts of
/// a phasor, approximating a communication delay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstOrderDelay {
    pub tau: f64,
    pub state: Phasor,
}

impl FirstOrderDelay {
    pub fn new(tau: f64, initial: Phasor) -> Self {
        FirstOrderDelay { tau, state: initial }
    }

    pub fn derivative(&self, state: Phasor, input: Phasor) -> Phasor {
        (input - state) / self.tau
    }

    /// True when the step is too coarse to resolve the lag.
    pub fn under_resolved(&self, h: f64) -> bool {
        self.tau < h
    }
}

/// Advances the lag by `h` with the input held constant over the step
/// (exact solution). Returns the new output.
pub fn delay_step(delay: &mut FirstOrderDelay, input: Phasor, h: f64) -> Phasor {
    if delay.tau <= 0.0 {
        delay.state = input;
    } else {
        let decay = (-h / delay.tau).exp();
        delay.state = input + (delay.state - input) * decay;
    }
    delay.state
}
