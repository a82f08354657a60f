//! Measurement chain: complex-frequency estimation, first-order
//! communication delay and Ornstein–Uhlenbeck measurement noise.

mod cf;
mod delay;
mod noise;

pub use cf::{cf_integral_identity, estimate_cf, CfEstimate, CfEstimator, CfSample, IdentityResidual, MIN_MAGNITUDE};
pub use delay::{delay_step, FirstOrderDelay};
pub use noise::{ou_step, OuNoise, OuParams};
