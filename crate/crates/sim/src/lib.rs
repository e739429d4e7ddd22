//! Seeded experiments over random and file-backed school-choice markets.

pub mod config;
pub mod experiment;
pub mod generate;
pub mod manipulation;

pub use experiment::{
    run_experiment, ExperimentConfig, ExperimentError, ExperimentReport, MarketSource, Threshold,
};
pub use generate::generate_uniform_market;
pub use manipulation::{apply_manipulation, ManipulationError, ManipulationKind, ManipulationSpec};
