//! Experiment configuration, data ingestion, orchestration and output.

pub mod config;
pub mod data;
pub mod experiment;
pub mod plot;

pub use config::{Algorithm, BodySpec, DataSource, ExperimentConfig, Mode, TopologySpec};
pub use data::{generate_synthetic, load_ratings, parse_ratings};
pub use experiment::{
    build_body, build_topology, cell_key, load_data, rounds_csv, run_experiment, write_outputs,
    CellRecord, Instance, RoundRow, RunRecord, CSV_HEADER,
};
