//! Experiment procedures built on top of [`crate::engine`].

pub mod bench;
pub mod correlation;
pub mod event_study;
pub mod io;
pub mod stress;

pub use bench::{ablation_configs, ablation_suite, breadth_scaling, paired_t_test, stress_throughput, AblationConfig, BreadthPoint};
pub use correlation::{bucket_mids, cross_asset_correlation, log_returns, pearson, CorrelationMatrix};
pub use event_study::{event_study, EventStudyResult, EventStudySpec};
