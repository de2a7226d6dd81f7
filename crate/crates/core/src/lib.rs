pub mod harness;
pub mod kernel;
pub mod net;
pub mod scenario;
pub mod stats;
pub mod stochastic;
pub mod testbed;
pub mod traffic;
pub mod transport;
