//! Configuration, tables, snapshots and manifests on disk.

pub mod config;
pub mod manifest;
pub mod snapshots;
pub mod tables;

pub use config::{parse as parse_config, Config, KhmSection, StatsSection};
pub use manifest::RunManifest;
