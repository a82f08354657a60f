//! Synchronous machines and their controls.
//!
//! Every block is written as a pure function over a slice of its own states
//! so the engine can lay all states out in one flat vector. Machine
//! quantities are per unit on the machine rating; conversion to the system
//! base happens at the network interface.

mod avr;
mod governor;
mod pss;
mod sync;

pub use avr::{Avr, AvrAc4, AvrDc1};
pub use governor::TurbineGovernorType1;
pub use pss::Pss2;
pub use sync::{idx as sync_idx, MachineOrder, MachineParams, Norton, StatorCurrents, SynchronousMachine};

