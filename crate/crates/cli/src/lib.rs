//! Consumer-side tooling: deployment configs, the manual discovery baseline,
//! the benchmark and the command bodies behind the `nun` binary.

pub mod bench;
pub mod commands;
pub mod config;
pub mod consumer;
pub mod manual;

pub use bench::{Bench, BenchReport, Mode, Stats};
pub use config::{ConfigError, Deployment, DeploymentConfig};
pub use consumer::Consumer;
pub use manual::{discover, ManualTargets};
