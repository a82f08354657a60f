//! Time-domain simulation: the trapezoidal DAE integrator, system assembly,
//! the run loop with time-triggered events, and trace metrics.

mod config;
mod dae;
mod metrics;
mod run;
mod series;
mod system;

pub use config::{Coupling, SolverConfig};
pub use dae::{step_trapezoidal, Dae, NewtonSettings, SolverStats, Trapezoidal};
pub use metrics::{coi_frequency, damping_metrics, pearson, post_event_start, DampingMetrics};
pub use run::{run, run_with, AppliedEvent, RunResult, RunStatus, Simulation};
pub use series::{Channel, TimeSeries};
pub use system::{ControllerInfo, Initialized, System, LOSS_OF_SYNCHRONISM};
