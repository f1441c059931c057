//! Event-driven Monte Carlo of the branching random walk.

mod config;
mod engine;
mod local_time;
mod observe;
mod stats;

pub use config::{
    replica_seed, Domain, InitMode, SimConfig, DEFAULT_EVENT_CAP, DEFAULT_PARTICLE_CAP,
};
pub use engine::{EventCounts, ReplicaResult, Snapshot, Truncation};
pub use local_time::{
    local_time_mc, local_time_path, LocalTimeEstimate, LocalTimeSample, HEAVY_TAIL_REL_CI,
};
pub use observe::Observation;
pub use stats::{
    distribution_snapshot, estimate_moments, mean_and_se, occupancy_stats, run_field, simulate,
    total_variation, Histogram, MomentEstimate, OccupancyRow, ProbeSummary, SimStats,
    MIN_HISTOGRAM_REPLICAS, MIN_NONZERO_SAMPLES,
};
