//! Simulator for a hybrid hardware/software IEEE 802.15.4 transmit PHY.

pub mod experiments;
pub mod hybrid;
pub mod io;
pub mod phy;
pub mod pipeline;
pub mod stream;
pub mod timing;
