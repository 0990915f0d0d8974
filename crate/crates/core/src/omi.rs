//! Observatory (OMI) zones: named polygons carrying semiannual min/max
//! price-per-m² ranges per registered use.
//!
//! The store resolves a property's zone from its coordinates and produces the
//! price-range quote valid at the appraisal date. Quotes never look ahead: a
//! missing semester falls back to the latest *earlier* semester for the same
//! use, so a valuation only sees information available at appraisal time.
//!
//! # Zone file format
//!
//! A JSON array of zone records:
//!
//! ```json
//! [
//!   {
//!     "name": "Z1",
//!     "polygon": [[45.06, 7.65], [45.09, 7.65], [45.09, 7.70], [45.06, 7.70]],
//!     "holes": [],
//!     "ranges": [
//!       {"year": 2016, "half": 1, "use": "residential", "min": 1200.0, "max": 1800.0}
//!     ]
//!   }
//! ]
//! ```
//!
//! `polygon` and each ring in the optional `holes` list are open vertex
//! rings of `[lat, lon]` pairs. `half` is 1 (January-June) or 2
//! (July-December).

use crate::geo::{point_in_polygon, GeoError, GeoPoint, GeoPolygon};
use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OmiError {
    #[error("cannot read zone file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse zone file {path}: {source}")]
    Parse {
        path: String,
        source: serde_json::Error,
    },
    #[error("zone record {index} ({name}): {source}")]
    Geometry {
        index: usize,
        name: String,
        source: GeoError,
    },
    #[error("zone record {index} ({name}): {detail}")]
    InvalidRange {
        index: usize,
        name: String,
        detail: String,
    },
    #[error("duplicate zone name {0:?}")]
    DuplicateName(String),
}

/// One six-month observatory publication period.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct SemesterId {
    pub year: i32,
    /// 1 for January-June, 2 for July-December.
    pub half: u8,
}

impl SemesterId {
    pub fn new(year: i32, half: u8) -> Result<Self, String> {
        if half != 1 && half != 2 {
            return Err(format!("semester half must be 1 or 2, got {half}"));
        }
        Ok(Self { year, half })
    }

    /// Semester containing a calendar date.
    pub fn from_date(date: NaiveDate) -> Self {
        Self {
            year: date.year(),
            half: if date.month() <= 6 { 1 } else { 2 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceRange {
    pub min: f64,
    pub max: f64,
}

/// A named zone polygon with its per-use, per-semester price table.
#[derive(Debug, Clone)]
pub struct OmiZone {
    name: String,
    polygon: GeoPolygon,
    // use -> semester -> range; BTreeMap keeps semester fallback an
    // ordered-range lookup.
    ranges: BTreeMap<String, BTreeMap<SemesterId, PriceRange>>,
}

impl OmiZone {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn polygon(&self) -> &GeoPolygon {
        &self.polygon
    }

    /// Range for the given semester, falling back to the latest earlier one.
    pub fn range_at(&self, semester: SemesterId, registered_use: &str) -> Option<(SemesterId, PriceRange)> {
        let table = self.ranges.get(registered_use)?;
        table
            .range(..=semester)
            .next_back()
            .map(|(&sem, &range)| (sem, range))
    }
}

/// Price quote for a resolved zone at a given semester.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmiQuote {
    pub zone_name: String,
    pub omi_min: f64,
    pub omi_max: f64,
    pub semester: SemesterId,
}

#[derive(Debug, Deserialize)]
struct RawRange {
    year: i32,
    half: u8,
    #[serde(rename = "use")]
    registered_use: String,
    min: f64,
    max: f64,
}

#[derive(Debug, Deserialize)]
struct RawZone {
    name: String,
    polygon: Vec<[f64; 2]>,
    #[serde(default)]
    holes: Vec<Vec<[f64; 2]>>,
    ranges: Vec<RawRange>,
}

/// Immutable zone store; queries are pure and safe to share across threads.
#[derive(Debug, Clone)]
pub struct OmiZoneStore {
    zones: Vec<OmiZone>,
    // Exterior-ring bounding boxes, a prefilter that never changes results.
    bboxes: Vec<(f64, f64, f64, f64)>,
}

fn ring_from_pairs(pairs: &[[f64; 2]]) -> Result<Vec<GeoPoint>, GeoError> {
    pairs.iter().map(|&[lat, lon]| GeoPoint::new(lat, lon)).collect()
}

/// Load zones from a JSON file, validating geometry and price ranges.
pub fn load_zones(path: impl AsRef<Path>) -> Result<OmiZoneStore, OmiError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| OmiError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let raw: Vec<RawZone> = serde_json::from_str(&text).map_err(|source| OmiError::Parse {
        path: path.display().to_string(),
        source,
    })?;

    let mut seen = HashSet::new();
    let mut zones = Vec::with_capacity(raw.len());
    let mut bboxes = Vec::with_capacity(raw.len());
    for (index, rz) in raw.into_iter().enumerate() {
        if !seen.insert(rz.name.clone()) {
            return Err(OmiError::DuplicateName(rz.name));
        }
        let geom_err = |source| OmiError::Geometry {
            index,
            name: rz.name.clone(),
            source,
        };
        let exterior = ring_from_pairs(&rz.polygon).map_err(geom_err)?;
        let holes = rz
            .holes
            .iter()
            .map(|ring| ring_from_pairs(ring))
            .collect::<Result<Vec<_>, _>>()
            .map_err(geom_err)?;
        let polygon = GeoPolygon::new(exterior, holes).map_err(geom_err)?;

        let mut ranges: BTreeMap<String, BTreeMap<SemesterId, PriceRange>> = BTreeMap::new();
        for rr in &rz.ranges {
            let semester = SemesterId::new(rr.year, rr.half).map_err(|detail| {
                OmiError::InvalidRange {
                    index,
                    name: rz.name.clone(),
                    detail,
                }
            })?;
            if !(rr.min > 0.0) || rr.max < rr.min {
                return Err(OmiError::InvalidRange {
                    index,
                    name: rz.name.clone(),
                    detail: format!(
                        "range ({}, {}) for use {:?} must satisfy 0 < min <= max",
                        rr.min, rr.max, rr.registered_use
                    ),
                });
            }
            let replaced = ranges
                .entry(rr.registered_use.clone())
                .or_default()
                .insert(
                    semester,
                    PriceRange {
                        min: rr.min,
                        max: rr.max,
                    },
                );
            if replaced.is_some() {
                return Err(OmiError::InvalidRange {
                    index,
                    name: rz.name.clone(),
                    detail: format!(
                        "duplicate range for use {:?} in {}/{}",
                        rr.registered_use, rr.year, rr.half
                    ),
                });
            }
        }

        bboxes.push(polygon.bounding_box());
        zones.push(OmiZone {
            name: rz.name,
            polygon,
            ranges,
        });
    }
    log::info!("loaded {} zones from {}", zones.len(), path.display());
    Ok(OmiZoneStore { zones, bboxes })
}

impl OmiZoneStore {
    /// Build a store directly from zones (used by the synthetic generator).
    pub fn from_zones(
        zones: Vec<(String, GeoPolygon, Vec<(SemesterId, String, f64, f64)>)>,
    ) -> Result<Self, OmiError> {
        let mut seen = HashSet::new();
        let mut out = Vec::with_capacity(zones.len());
        let mut bboxes = Vec::with_capacity(zones.len());
        for (index, (name, polygon, entries)) in zones.into_iter().enumerate() {
            if !seen.insert(name.clone()) {
                return Err(OmiError::DuplicateName(name));
            }
            let mut ranges: BTreeMap<String, BTreeMap<SemesterId, PriceRange>> = BTreeMap::new();
            for (semester, registered_use, min, max) in entries {
                if !(min > 0.0) || max < min {
                    return Err(OmiError::InvalidRange {
                        index,
                        name: name.clone(),
                        detail: format!("range ({min}, {max}) must satisfy 0 < min <= max"),
                    });
                }
                ranges
                    .entry(registered_use)
                    .or_default()
                    .insert(semester, PriceRange { min, max });
            }
            bboxes.push(polygon.bounding_box());
            out.push(OmiZone {
                name,
                polygon,
                ranges,
            });
        }
        Ok(Self {
            zones: out,
            bboxes,
        })
    }

    pub fn len(&self) -> usize {
        self.zones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zones.is_empty()
    }

    pub fn zones(&self) -> &[OmiZone] {
        &self.zones
    }

    /// The zone containing `p`; on boundary overlap, the earliest in load
    /// order wins.
    pub fn resolve_zone(&self, p: GeoPoint) -> Option<&OmiZone> {
        for (zone, &(min_lat, min_lon, max_lat, max_lon)) in self.zones.iter().zip(&self.bboxes) {
            if p.lat() < min_lat || p.lat() > max_lat || p.lon() < min_lon || p.lon() > max_lon {
                continue;
            }
            if point_in_polygon(p, &zone.polygon) {
                return Some(zone);
            }
        }
        None
    }

    /// Min/max price quote for the zone containing `p`, at the semester
    /// containing `date`, for the given registered use.
    pub fn quote(&self, p: GeoPoint, date: NaiveDate, registered_use: &str) -> Option<OmiQuote> {
        let zone = self.resolve_zone(p)?;
        let semester = SemesterId::from_date(date);
        let (sem, range) = zone.range_at(semester, registered_use)?;
        Some(OmiQuote {
            zone_name: zone.name.clone(),
            omi_min: range.min,
            omi_max: range.max,
            semester: sem,
        })
    }
}
