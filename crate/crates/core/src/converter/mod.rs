//! Grid-following converter with PLL synchronization and the coherency
//! controller that turns a measured external current into local power
//! references.

mod coherency;
mod gfl;
mod hybrid;
mod pll;

pub use coherency::{coherency_reference, init_gain, power_reference, CoherencyController, CoherencyMode};
pub use gfl::{ConverterParams, GflConverter, RIDE_THROUGH_VOLTAGE};
pub use hybrid::{split_device, HybridSplit};
pub use pll::Pll;
