pub mod config;
pub mod scan;

pub use config::{CavityBasis, ConfigError, ConfigErrors, RunConfig, Spacing};
pub use scan::{run_scan, ScanRow};
