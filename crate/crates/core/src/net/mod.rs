//! Access-network building blocks: analytic FIFO links, the tunable
//! transmitter scheduler and the two system-under-test topologies.

pub mod link;
pub mod scheduler;

pub use link::{FifoLink, LinkCounters, LinkSnapshot, Offer};
pub use scheduler::{Assignment, SchedulerCounters, TunableTxScheduler};
pub mod topology;

pub use topology::{AccessNetwork, BufferPlan, Downstream, NetworkCounters, RatePlan, TopologyError, TxCompletion};
