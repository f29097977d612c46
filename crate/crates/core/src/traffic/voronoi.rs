//! Voronoi areas of cell sites and traffic-density sparsity.

use super::{TrafficError, TrafficMatrix};
use crate::scalar::Scalar;

const EARTH_RADIUS_KM: f64 = 6371.0;
const BOX_MARGIN: f64 = 0.05;

/// Planar point.
pub type Point = (f64, f64);

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl BoundingBox {
    /// Box of the points, grown on every side by 5% of its extent (10% in
    /// total per axis).
    pub fn around(points: &[Point]) -> Self {
        let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &(x, y) in points {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        let (dx, dy) = ((x1 - x0) * BOX_MARGIN, (y1 - y0) * BOX_MARGIN);
        Self { x0: x0 - dx, y0: y0 - dy, x1: x1 + dx, y1: y1 + dy }
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    fn polygon(&self) -> Vec<Point> {
        vec![(self.x0, self.y0), (self.x1, self.y0), (self.x1, self.y1), (self.x0, self.y1)]
    }
}

/// Keeps the part of `poly` where `(p − origin)·normal ≤ 0`.
fn clip(poly: &[Point], origin: Point, normal: Point) -> Vec<Point> {
    let side = |p: Point| (p.0 - origin.0) * normal.0 + (p.1 - origin.1) * normal.1;
    let mut out = Vec::with_capacity(poly.len() + 1);
    for k in 0..poly.len() {
        let a = poly[k];
        let b = poly[(k + 1) % poly.len()];
        let (sa, sb) = (side(a), side(b));
        if sa <= 0.0 {
            out.push(a);
        }
        if (sa < 0.0 && sb > 0.0) || (sa > 0.0 && sb < 0.0) {
            let t = sa / (sa - sb);
            out.push((a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1)));
        }
    }
    out
}

fn shoelace(poly: &[Point]) -> f64 {
    let n = poly.len();
    0.5 * (0..n)
        .map(|k| {
            let (a, b) = (poly[k], poly[(k + 1) % n]);
            a.0 * b.1 - b.0 * a.1
        })
        .sum::<f64>()
        .abs()
}

fn check_geometry(points: &[Point]) -> Result<(), TrafficError> {
    if points.len() < 3 {
        return Err(TrafficError::DegenerateGeometry(format!("need at least 3 sites, got {}", points.len())));
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(TrafficError::DegenerateGeometry("duplicated site location".into()));
    }
    let p0 = points[0];
    let far = points
        .iter()
        .copied()
        .max_by(|a, b| {
            let da = (a.0 - p0.0).hypot(a.1 - p0.1);
            let db = (b.0 - p0.0).hypot(b.1 - p0.1);
            da.partial_cmp(&db).expect("finite")
        })
        .expect("non-empty");
    let (ux, uy) = (far.0 - p0.0, far.1 - p0.1);
    let len = ux.hypot(uy);
    let off_line = points.iter().any(|p| ((p.0 - p0.0) * uy - (p.1 - p0.1) * ux).abs() > 1e-12 * len * len);
    if !off_line {
        return Err(TrafficError::DegenerateGeometry("all sites are collinear".into()));
    }
    Ok(())
}

/// Areas of the Voronoi regions of planar sites, clipped to `bbox`.
pub fn voronoi_areas_in(points: &[Point], bbox: &BoundingBox) -> Result<Vec<f64>, TrafficError> {
    check_geometry(points)?;
    Ok(points
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let mut poly = bbox.polygon();
            for (j, &q) in points.iter().enumerate() {
                if i == j || poly.is_empty() {
                    continue;
                }
                let mid = (0.5 * (p.0 + q.0), 0.5 * (p.1 + q.1));
                poly = clip(&poly, mid, (q.0 - p.0, q.1 - p.1));
            }
            if poly.len() < 3 {
                0.0
            } else {
                shoelace(&poly)
            }
        })
        .collect())
}

/// Areas of the Voronoi regions of planar sites within the expanded
/// bounding box of the sites.
pub fn voronoi_areas(points: &[Point]) -> Result<Vec<f64>, TrafficError> {
    check_geometry(points)?;
    voronoi_areas_in(points, &BoundingBox::around(points))
}

/// Equirectangular projection (km) about the centroid of the coordinates.
pub fn project(lat_lon: &[(f64, f64)]) -> Vec<Point> {
    let n = lat_lon.len().max(1) as f64;
    let lat0 = lat_lon.iter().map(|p| p.0).sum::<f64>() / n;
    let lon0 = lat_lon.iter().map(|p| p.1).sum::<f64>() / n;
    let k = EARTH_RADIUS_KM * std::f64::consts::PI / 180.0;
    let c = lat0.to_radians().cos();
    lat_lon.iter().map(|&(lat, lon)| ((lon - lon0) * k * c, (lat - lat0) * k)).collect()
}

/// Gini coefficient `ΣᵢΣⱼ|dᵢ − dⱼ| / (2n Σd)`; 0 for an all-zero vector.
pub fn gini(values: &[f64]) -> f64 {
    let n = values.len();
    let total: f64 = values.iter().sum();
    if n == 0 || total <= 0.0 {
        return 0.0;
    }
    // sorted form of the pairwise sum: Σ (2k − n − 1)·d_(k)
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let weighted: f64 = v.iter().enumerate().map(|(k, d)| (2.0 * (k + 1) as f64 - n as f64 - 1.0) * d).sum();
    weighted / (n as f64 * total)
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CellDensity {
    pub cell_id: String,
    /// Traffic per km² of Voronoi area.
    pub density: f64,
    /// km².
    pub voronoi_area: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SparsityReport {
    pub per_cell_density: Vec<CellDensity>,
    pub gini: f64,
    pub timestamp_index: usize,
}

/// Traffic density of every cell at one interval, and its Gini coefficient.
pub fn voronoi_sparsity<T: Scalar>(
    matrix: &TrafficMatrix<T>,
    timestamp_index: usize,
) -> Result<SparsityReport, TrafficError> {
    if timestamp_index >= matrix.n_intervals() {
        return Err(TrafficError::IndexOutOfRange { index: timestamp_index, len: matrix.n_intervals() });
    }
    let coords: Vec<(f64, f64)> = matrix.cells().iter().map(|c| (c.latitude, c.longitude)).collect();
    let areas = voronoi_areas(&project(&coords))?;
    let column = matrix.column(timestamp_index);
    let per_cell_density: Vec<CellDensity> = matrix
        .cells()
        .iter()
        .zip(&areas)
        .zip(column)
        .map(|((c, &a), &v)| CellDensity {
            cell_id: c.cell_id.clone(),
            density: if a > 0.0 { v.to_f64_lossy() / a } else { 0.0 },
            voronoi_area: a,
        })
        .collect();
    let densities: Vec<f64> = per_cell_density.iter().map(|d| d.density).collect();
    Ok(SparsityReport { gini: gini(&densities), per_cell_density, timestamp_index })
}
