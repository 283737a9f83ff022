//! Separated-stations harness: a source sends pair descriptors to two
//! station processes that measure independently, and a collector joins
//! their reports. The stations share no transport route.

mod harness;
pub mod protocol;
mod station;

pub use harness::{
    run_experiment, ExperimentConfig, ExperimentResult, JoinedRecord, LostPair, SettingEstimate,
    StationCommand, Topology,
};
pub use protocol::{PairDescriptor, StationReport};
pub use station::{detach_inherited_descriptors, run_station, Policy, StationSummary};
