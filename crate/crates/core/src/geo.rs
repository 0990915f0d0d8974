//! Geographic primitives shared by every location-aware module.
//!
//! Coordinates are WGS-84 degrees, distances are meters. Polygon containment
//! uses the even-odd rule in the raw lat/lon plane: observatory zones are
//! city-scale, where spherical distortion is negligible and this matches how
//! the zone polygons are published.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Mean Earth radius in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Meters per degree of latitude on the mean-radius sphere.
pub const METERS_PER_DEG_LAT: f64 = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeoError {
    #[error("invalid latitude {0}; expected finite degrees in [-90, 90]")]
    InvalidLatitude(f64),
    #[error("invalid longitude {0}; expected finite degrees in [-180, 180]")]
    InvalidLongitude(f64),
    #[error("polygon ring has {0} vertices; at least 3 required")]
    RingTooSmall(usize),
}

/// A geographic coordinate in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    lat: f64,
    lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self, GeoError> {
        if !lat.is_finite() || !(-90.0..=90.0).contains(&lat) {
            return Err(GeoError::InvalidLatitude(lat));
        }
        if !lon.is_finite() || !(-180.0..=180.0).contains(&lon) {
            return Err(GeoError::InvalidLongitude(lon));
        }
        Ok(Self { lat, lon })
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }
}

/// A polygon with an exterior ring and optional holes.
///
/// Rings are stored open (first vertex not repeated); closure is applied
/// logically by every operation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoPolygon {
    exterior: Vec<GeoPoint>,
    holes: Vec<Vec<GeoPoint>>,
}

impl GeoPolygon {
    pub fn new(exterior: Vec<GeoPoint>, holes: Vec<Vec<GeoPoint>>) -> Result<Self, GeoError> {
        if exterior.len() < 3 {
            return Err(GeoError::RingTooSmall(exterior.len()));
        }
        for ring in &holes {
            if ring.len() < 3 {
                return Err(GeoError::RingTooSmall(ring.len()));
            }
        }
        Ok(Self { exterior, holes })
    }

    pub fn exterior(&self) -> &[GeoPoint] {
        &self.exterior
    }

    pub fn holes(&self) -> &[Vec<GeoPoint>] {
        &self.holes
    }

    /// Axis-aligned bounding box of the exterior ring as
    /// `(min_lat, min_lon, max_lat, max_lon)`.
    pub fn bounding_box(&self) -> (f64, f64, f64, f64) {
        let mut min_lat = f64::INFINITY;
        let mut min_lon = f64::INFINITY;
        let mut max_lat = f64::NEG_INFINITY;
        let mut max_lon = f64::NEG_INFINITY;
        for p in &self.exterior {
            min_lat = min_lat.min(p.lat);
            min_lon = min_lon.min(p.lon);
            max_lat = max_lat.max(p.lat);
            max_lon = max_lon.max(p.lon);
        }
        (min_lat, min_lon, max_lat, max_lon)
    }
}

/// Great-circle distance in meters between two points (haversine formula,
/// mean Earth radius). Exactly symmetric in its arguments.
pub fn haversine_distance(a: GeoPoint, b: GeoPoint) -> f64 {
    let lat_a = a.lat.to_radians();
    let lat_b = b.lat.to_radians();
    let d_lat = (b.lat - a.lat).to_radians();
    let d_lon = (b.lon - a.lon).to_radians();

    // sin and multiplication are commutative in each half-angle term, so
    // swapping a and b produces the identical float result.
    let h = (d_lat * 0.5).sin().powi(2)
        + lat_a.cos() * lat_b.cos() * (d_lon * 0.5).sin().powi(2);
    let c = 2.0 * h.sqrt().atan2((1.0 - h).sqrt());
    EARTH_RADIUS_M * c
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RingPosition {
    Inside,
    Outside,
    OnBoundary,
}

/// Even-odd crossing test for one ring, with an explicit on-segment check so
/// boundary points are reported as such rather than falling on either side of
/// the ray-casting tie.
fn ring_position(p: GeoPoint, ring: &[GeoPoint]) -> RingPosition {
    let (px, py) = (p.lon, p.lat);
    let n = ring.len();
    let mut inside = false;
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        let (ax, ay) = (a.lon, a.lat);
        let (bx, by) = (b.lon, b.lat);

        if on_segment(px, py, ax, ay, bx, by) {
            return RingPosition::OnBoundary;
        }
        // Horizontal ray toward +lon; half-open vertex rule avoids double
        // counting when the ray passes through a vertex.
        if (ay > py) != (by > py) {
            let x_cross = ax + (py - ay) / (by - ay) * (bx - ax);
            if px < x_cross {
                inside = !inside;
            }
        }
    }
    if inside {
        RingPosition::Inside
    } else {
        RingPosition::Outside
    }
}

fn on_segment(px: f64, py: f64, ax: f64, ay: f64, bx: f64, by: f64) -> bool {
    let cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax);
    if cross != 0.0 {
        return false;
    }
    let dot = (px - ax) * (bx - ax) + (py - ay) * (by - ay);
    let len2 = (bx - ax) * (bx - ax) + (by - ay) * (by - ay);
    dot >= 0.0 && dot <= len2
}

/// Even-odd containment test in the lat/lon plane.
///
/// Points exactly on an edge (exterior or hole) are classified inside, so a
/// property on a zone boundary resolves deterministically; combined with
/// first-match ordering in the zone store this makes boundary assignment
/// unambiguous.
pub fn point_in_polygon(p: GeoPoint, poly: &GeoPolygon) -> bool {
    match ring_position(p, &poly.exterior) {
        RingPosition::Outside => return false,
        RingPosition::OnBoundary => return true,
        RingPosition::Inside => {}
    }
    for hole in &poly.holes {
        match ring_position(p, hole) {
            RingPosition::Inside => return false,
            RingPosition::OnBoundary => return true,
            RingPosition::Outside => {}
        }
    }
    true
}

/// Radius-query index over a fixed set of points, sorted by latitude.
///
/// Great-circle distance between two points is never smaller than the
/// meridional distance `R * |Δlat|`, so a latitude band prefilter is exact:
/// results are always identical to a linear scan with the same predicate.
#[derive(Debug, Clone)]
pub struct PointIndex {
    points: Vec<GeoPoint>,
    // (latitude, original index), sorted ascending by latitude.
    by_lat: Vec<(f64, usize)>,
}

impl PointIndex {
    pub fn new(points: Vec<GeoPoint>) -> Self {
        let mut by_lat: Vec<(f64, usize)> = points.iter().map(|p| p.lat).zip(0..).collect();
        by_lat.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        Self { points, by_lat }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Indices and distances of all points with distance <= `radius_m` from
    /// `center`, in ascending original-index order.
    pub fn neighbors_within(&self, center: GeoPoint, radius_m: f64) -> Vec<(usize, f64)> {
        // Slightly over-wide band; the haversine predicate below decides.
        let band = radius_m / METERS_PER_DEG_LAT * 1.000_001 + 1e-12;
        let lo = self
            .by_lat
            .partition_point(|&(lat, _)| lat < center.lat - band);
        let hi = self
            .by_lat
            .partition_point(|&(lat, _)| lat <= center.lat + band);

        let mut hits: Vec<(usize, f64)> = Vec::new();
        for &(_, idx) in &self.by_lat[lo..hi] {
            let d = haversine_distance(center, self.points[idx]);
            if d <= radius_m {
                hits.push((idx, d));
            }
        }
        hits.sort_by_key(|&(idx, _)| idx);
        hits
    }
}
