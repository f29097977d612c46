//! Traffic matrices: data model, CSV formats, synthetic scenarios and
//! spatial-sparsity diagnostics.

mod csv_io;
mod matrix;
mod quantize;
mod synthetic;
mod voronoi;

use thiserror::Error;

pub use csv_io::{
    ingest_csv, ingest_records, iso8601, read_cells, write_cells, write_traffic_long, write_wide, IngestOptions,
    CELLS_HEADER, TRAFFIC_HEADER,
};
pub use matrix::{CellMeta, Service, TrafficMatrix};
pub use quantize::{quantized_cdf, CdfStep};
pub use synthetic::{diurnal_profile, generate_synthetic, GroundTruth, Profile, ScenarioSpec, SyntheticScenario};
pub use voronoi::{
    gini, project, voronoi_areas, voronoi_areas_in, voronoi_sparsity, BoundingBox, CellDensity, Point,
    SparsityReport,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrafficError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("line {line}: {message}")]
    Format { line: u64, message: String },
    #[error("line {line}: unknown cell '{cell_id}'")]
    UnknownCell { line: u64, cell_id: String },
    #[error("line {line}: negative volume {value}")]
    NegativeVolume { line: u64, value: f64 },
    #[error("duplicate cell '{0}'")]
    DuplicateCell(String),
    #[error("invalid traffic matrix: {0}")]
    InvalidMatrix(String),
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("index {index} out of range for {len} intervals")]
    IndexOutOfRange { index: usize, len: usize },
}
