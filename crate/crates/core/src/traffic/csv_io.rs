//! CSV formats for cells, long-form traffic records and wide matrices.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, SecondsFormat};

use super::{CellMeta, Service, TrafficError, TrafficMatrix};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

pub const CELLS_HEADER: [&str; 3] = ["cell_id", "lat", "lon"];
pub const TRAFFIC_HEADER: [&str; 4] = ["timestamp", "cell_id", "service", "bytes"];

/// Knobs for [`ingest_csv`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IngestOptions {
    /// Interval length Δt in seconds; inferred from the timestamps when absent.
    pub resolution_seconds: Option<i64>,
    /// Keep only records of this service. Without it, all records must carry
    /// the same label.
    pub service: Option<Service>,
    /// Merge cells with identical coordinates into the first of them.
    pub merge_colocated: bool,
}

fn open(path: &Path) -> Result<File, TrafficError> {
    File::open(path).map_err(|e| TrafficError::Io { path: path.display().to_string(), message: e.to_string() })
}

/// Reads both files and assembles the traffic matrix.
pub fn ingest_csv<T: Scalar>(
    traffic_path: &Path,
    cells_path: &Path,
    options: &IngestOptions,
) -> Result<TrafficMatrix<T>, TrafficError> {
    let cells = read_cells(open(cells_path)?)?;
    ingest_records(open(traffic_path)?, cells, options)
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(false).from_reader(input)
}

fn csv_error(e: csv::Error) -> TrafficError {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => TrafficError::Format { line, message: io.to_string() },
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
            TrafficError::Format { line, message: format!("expected {expected_len} fields, found {len}") }
        }
        other => TrafficError::Format { line, message: format!("{other:?}") },
    }
}

fn check_header<R: Read>(rdr: &mut csv::Reader<R>, expected: &[&str]) -> Result<(), TrafficError> {
    let header = rdr.headers().map_err(csv_error)?;
    let got: Vec<&str> = header.iter().collect();
    if header.is_empty() || (got.len() == 1 && got[0].is_empty()) {
        return Err(TrafficError::Format { line: 1, message: "empty file".into() });
    }
    if got != expected {
        return Err(TrafficError::Format {
            line: 1,
            message: format!("header must be `{}`, found `{}`", expected.join(","), got.join(",")),
        });
    }
    Ok(())
}

fn parse_field<V: std::str::FromStr>(field: &str, what: &str, line: u64) -> Result<V, TrafficError> {
    field.parse().map_err(|_| TrafficError::Format { line, message: format!("invalid {what} '{field}'") })
}

/// Parses a cells file (`cell_id,lat,lon`).
pub fn read_cells<R: Read>(input: R) -> Result<Vec<CellMeta>, TrafficError> {
    let mut rdr = reader(input);
    check_header(&mut rdr, &CELLS_HEADER)?;
    let mut cells = Vec::new();
    let mut seen = HashMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let id = rec[0].to_string();
        let lat: f64 = parse_field(&rec[1], "latitude", line)?;
        let lon: f64 = parse_field(&rec[2], "longitude", line)?;
        let cell = CellMeta::new(id.clone(), lat, lon)
            .map_err(|e| TrafficError::Format { line, message: e.to_string() })?;
        if seen.insert(id.clone(), line).is_some() {
            return Err(TrafficError::Format { line, message: format!("duplicate cell_id '{id}'") });
        }
        cells.push(cell);
    }
    if cells.is_empty() {
        return Err(TrafficError::Format { line: 1, message: "no cells".into() });
    }
    Ok(cells)
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Parses long-form traffic records against an already-read cell list.
pub fn ingest_records<T: Scalar, R: Read>(
    input: R,
    cells: Vec<CellMeta>,
    options: &IngestOptions,
) -> Result<TrafficMatrix<T>, TrafficError> {
    let mut rdr = reader(input);
    check_header(&mut rdr, &TRAFFIC_HEADER)?;

    // merged cells map onto the row of the first cell with the same coordinates
    let mut row_of: HashMap<String, usize> = HashMap::new();
    let mut kept: Vec<CellMeta> = Vec::new();
    let mut by_coord: HashMap<(u64, u64), usize> = HashMap::new();
    for c in cells {
        let key = (c.latitude.to_bits(), c.longitude.to_bits());
        let row = match (options.merge_colocated, by_coord.get(&key)) {
            (true, Some(&r)) => r,
            _ => {
                kept.push(c.clone());
                by_coord.insert(key, kept.len() - 1);
                kept.len() - 1
            }
        };
        row_of.insert(c.cell_id, row);
    }

    let mut service: Option<Service> = options.service;
    let mut sums: BTreeMap<(i64, usize), f64> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let ts: i64 = parse_field(&rec[0], "timestamp", line)?;
        let svc: Service = rec[2].parse().map_err(|m: String| TrafficError::Format { line, message: m })?;
        let bytes: f64 = parse_field(&rec[3], "bytes", line)?;
        if !bytes.is_finite() {
            return Err(TrafficError::Format { line, message: format!("invalid bytes '{}'", &rec[3]) });
        }
        if bytes < 0.0 {
            return Err(TrafficError::NegativeVolume { line, value: bytes });
        }
        let row = *row_of
            .get(&rec[1])
            .ok_or_else(|| TrafficError::UnknownCell { line, cell_id: rec[1].to_string() })?;
        match (options.service, service) {
            (Some(want), _) if want != svc => continue,
            (None, Some(s)) if s != svc => {
                return Err(TrafficError::Format {
                    line,
                    message: format!("mixed services ({s} and {svc}); select one explicitly"),
                })
            }
            _ => service = Some(svc),
        }
        *sums.entry((ts, row)).or_insert(0.0) += bytes;
    }
    let service = service.ok_or(TrafficError::Format { line: 1, message: "no traffic records".into() })?;

    let start = sums.keys().map(|k| k.0).min().expect("non-empty");
    let end = sums.keys().map(|k| k.0).max().expect("non-empty");
    let dt = match options.resolution_seconds {
        Some(dt) if dt > 0 => dt,
        Some(dt) => return Err(TrafficError::InvalidMatrix(format!("resolution must be > 0, got {dt}"))),
        None => {
            let g = sums.keys().fold(0, |g, k| gcd(g, k.0 - start));
            if g == 0 {
                return Err(TrafficError::Format {
                    line: 1,
                    message: "cannot infer the resolution from a single interval; set it explicitly".into(),
                });
            }
            g
        }
    };
    if let Some(((ts, _), _)) = sums.iter().find(|((ts, _), _)| (ts - start) % dt != 0) {
        return Err(TrafficError::Format {
            line: 0,
            message: format!("timestamp {ts} is not aligned to a {dt}s grid starting at {start}"),
        });
    }
    let t_len = ((end - start) / dt + 1) as usize;
    let mut values = Matrix::zeros(kept.len(), t_len);
    for ((ts, row), v) in sums {
        values[(row, ((ts - start) / dt) as usize)] = T::lit(v);
    }
    TrafficMatrix::new(kept, dt, start, values, service)
}

/// Writes the cells file.
pub fn write_cells<W: Write>(output: W, cells: &[CellMeta]) -> Result<(), TrafficError> {
    let mut w = csv::Writer::from_writer(output);
    w.write_record(CELLS_HEADER).map_err(csv_error)?;
    for c in cells {
        w.write_record([c.cell_id.clone(), c.latitude.to_string(), c.longitude.to_string()]).map_err(csv_error)?;
    }
    w.flush().map_err(|e| TrafficError::Format { line: 0, message: e.to_string() })
}

/// Writes every entry of the matrix as a long-form record, zeros included,
/// so that re-ingesting reproduces the matrix exactly.
pub fn write_traffic_long<T: Scalar, W: Write>(output: W, matrix: &TrafficMatrix<T>) -> Result<(), TrafficError> {
    let mut w = csv::Writer::from_writer(output);
    w.write_record(TRAFFIC_HEADER).map_err(csv_error)?;
    let svc = matrix.service().as_str();
    for t in 0..matrix.n_intervals() {
        let ts = matrix.interval_start(t).to_string();
        for (i, c) in matrix.cells().iter().enumerate() {
            w.write_record([ts.as_str(), c.cell_id.as_str(), svc, &matrix.value(i, t).to_string()])
                .map_err(csv_error)?;
        }
    }
    w.flush().map_err(|e| TrafficError::Format { line: 0, message: e.to_string() })
}

/// RFC 3339 / ISO-8601 UTC label of an epoch timestamp.
pub fn iso8601(epoch_seconds: i64) -> String {
    DateTime::from_timestamp(epoch_seconds, 0)
        .map(|d| d.to_rfc3339_opts(SecondsFormat::Secs, true))
        .unwrap_or_else(|| epoch_seconds.to_string())
}

/// Writes the wide form: one row per cell, one column per interval start.
pub fn write_wide<T: Scalar, W: Write>(output: W, matrix: &TrafficMatrix<T>) -> Result<(), TrafficError> {
    let mut w = csv::Writer::from_writer(output);
    let mut header = vec!["cell_id".to_string()];
    header.extend((0..matrix.n_intervals()).map(|t| iso8601(matrix.interval_start(t))));
    w.write_record(&header).map_err(csv_error)?;
    for (i, c) in matrix.cells().iter().enumerate() {
        let mut row = vec![c.cell_id.clone()];
        row.extend((0..matrix.n_intervals()).map(|t| matrix.value(i, t).to_string()));
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush().map_err(|e| TrafficError::Format { line: 0, message: e.to_string() })
}
