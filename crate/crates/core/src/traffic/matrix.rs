use std::fmt;
use std::str::FromStr;

use super::TrafficError;
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Location metadata of one cell (base station).
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CellMeta {
    pub cell_id: String,
    pub latitude: f64,
    pub longitude: f64,
}

impl CellMeta {
    pub fn new(cell_id: impl Into<String>, latitude: f64, longitude: f64) -> Result<Self, TrafficError> {
        let cell = Self { cell_id: cell_id.into(), latitude, longitude };
        cell.validate()?;
        Ok(cell)
    }

    pub fn validate(&self) -> Result<(), TrafficError> {
        if self.cell_id.is_empty() {
            return Err(TrafficError::InvalidMatrix("empty cell_id".into()));
        }
        if !(-90.0..=90.0).contains(&self.latitude) || !(-180.0..=180.0).contains(&self.longitude) {
            return Err(TrafficError::InvalidMatrix(format!(
                "cell {}: coordinates ({}, {}) out of range",
                self.cell_id, self.latitude, self.longitude
            )));
        }
        Ok(())
    }
}

/// Application class of the traffic in a matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Service {
    #[serde(rename = "IM")]
    Im,
    #[serde(rename = "web")]
    Web,
    #[serde(rename = "video")]
    Video,
    #[serde(rename = "other")]
    Other,
}

impl Service {
    pub const ALL: [Service; 4] = [Service::Im, Service::Web, Service::Video, Service::Other];

    pub fn as_str(self) -> &'static str {
        match self {
            Service::Im => "IM",
            Service::Web => "web",
            Service::Video => "video",
            Service::Other => "other",
        }
    }
}

impl fmt::Display for Service {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Service {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "im" => Ok(Service::Im),
            "web" => Ok(Service::Web),
            "video" => Ok(Service::Video),
            "other" => Ok(Service::Other),
            _ => Err(format!("unknown service '{s}' (expected IM, web, video or other)")),
        }
    }
}

/// `N × T` non-negative traffic volumes.
///
/// Entry `(i, t)` is the volume of cell `i` over
/// `[start + t·Δt, start + (t+1)·Δt)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficMatrix<T = f64> {
    cells: Vec<CellMeta>,
    resolution_seconds: i64,
    start_timestamp: i64,
    values: Matrix<T>,
    service: Service,
}

impl<T: Scalar> TrafficMatrix<T> {
    pub fn new(
        cells: Vec<CellMeta>,
        resolution_seconds: i64,
        start_timestamp: i64,
        values: Matrix<T>,
        service: Service,
    ) -> Result<Self, TrafficError> {
        if resolution_seconds <= 0 {
            return Err(TrafficError::InvalidMatrix(format!("resolution must be > 0, got {resolution_seconds}")));
        }
        if values.rows() != cells.len() {
            return Err(TrafficError::InvalidMatrix(format!(
                "{} cells but {} matrix rows",
                cells.len(),
                values.rows()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for c in &cells {
            c.validate()?;
            if !seen.insert(c.cell_id.as_str()) {
                return Err(TrafficError::DuplicateCell(c.cell_id.clone()));
            }
        }
        if let Some(v) = values.as_slice().iter().find(|v| !(**v >= T::zero()) || !v.is_finite()) {
            return Err(TrafficError::InvalidMatrix(format!("entry {v} is not a finite non-negative volume")));
        }
        Ok(Self { cells, resolution_seconds, start_timestamp, values, service })
    }

    pub fn cells(&self) -> &[CellMeta] {
        &self.cells
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_intervals(&self) -> usize {
        self.values.cols()
    }

    pub fn resolution_seconds(&self) -> i64 {
        self.resolution_seconds
    }

    pub fn start_timestamp(&self) -> i64 {
        self.start_timestamp
    }

    pub fn service(&self) -> Service {
        self.service
    }

    pub fn values(&self) -> &Matrix<T> {
        &self.values
    }

    pub fn value(&self, cell: usize, t: usize) -> T {
        self.values[(cell, t)]
    }

    /// Traffic vector of one cell over all intervals.
    pub fn row(&self, cell: usize) -> Vec<T> {
        self.values.row(cell)
    }

    /// Snapshot of all cells in interval `t`.
    pub fn column(&self, t: usize) -> &[T] {
        self.values.column(t)
    }

    pub fn interval_start(&self, t: usize) -> i64 {
        self.start_timestamp + t as i64 * self.resolution_seconds
    }

    pub fn cell_index(&self, cell_id: &str) -> Option<usize> {
        self.cells.iter().position(|c| c.cell_id == cell_id)
    }

    /// Reorders rows; `order[k]` is the old index of the new row `k`.
    pub fn permute_cells(&self, order: &[usize]) -> Self {
        assert_eq!(order.len(), self.n_cells());
        let cells = order.iter().map(|&i| self.cells[i].clone()).collect();
        let values = Matrix::from_fn(self.n_cells(), self.n_intervals(), |r, t| self.values[(order[r], t)]);
        Self { cells, values, ..self.clone() }
    }

    /// Multiplies every entry by `factor ≥ 0`.
    pub fn scaled(&self, factor: T) -> Self {
        Self { values: self.values.map(|v| v * factor), ..self.clone() }
    }

    /// Keeps intervals `[from, to)`.
    pub fn slice_intervals(&self, from: usize, to: usize) -> Self {
        assert!(from <= to && to <= self.n_intervals());
        let values = Matrix::from_fn(self.n_cells(), to - from, |r, t| self.values[(r, from + t)]);
        Self { values, start_timestamp: self.interval_start(from), ..self.clone() }
    }
}
