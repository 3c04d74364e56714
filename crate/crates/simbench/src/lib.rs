//! Simulation designs and replicated benchmarks for averaged partially
//! linear functional additive models.
// `!(x > 0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod design;
pub mod report;
pub mod run;

pub use design::{
    calibrate_noise, error_multiplier, generate_design, mean_variance, noise_scale_squared, Design,
    DesignConfig, SimulatedSample, N_SCALARS,
};
pub use report::{nmspe_table, write_raw_csv, write_summary_csv, NmspeTable};
pub use run::{
    run_replication, run_replications, CandidateConfig, ReplicationFailure, ReplicationRecord,
    ReplicationReport,
};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("replication {replication}: {source}")]
    Replication {
        replication: usize,
        #[source]
        source: plfam_core::Error,
    },
    #[error(transparent)]
    Core(#[from] plfam_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, BenchError>;
