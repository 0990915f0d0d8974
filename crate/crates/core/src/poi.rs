//! Points of interest grouped into thirteen fixed categories, and the
//! distance-weighted neighborhood features built from them.
//!
//! A category feature sums descending weights over four concentric rings
//! around the property: weight 1 up to r/8, 1/2 up to r/4, 1/4 up to r/2,
//! and 1/8 up to the threshold radius r (1 km by default). Entries beyond r
//! contribute nothing. Ring upper edges are inclusive.
//!
//! The input file is delimited text with a header row:
//! `category,latitude,longitude,name` (UTF-8).

use crate::geo::{haversine_distance, GeoPoint, PointIndex};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

/// The closed set of category names. Feature schemas depend on this exact
/// list and order, so it is not configurable.
pub const CATEGORIES: [&str; 13] = [
    "Arts",
    "Business&Services",
    "Entertainment",
    "Food&Beverage",
    "Healthcare&Wellness",
    "Instruction",
    "Landmarks",
    "Religious services",
    "Retail",
    "Security",
    "Sport&Recreation",
    "Transportation",
    "Travel",
];

#[derive(Debug, Error)]
pub enum PoiError {
    #[error("cannot read PoI file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse PoI file {path} row {row}: {detail}")]
    Parse {
        path: String,
        row: usize,
        detail: String,
    },
    #[error("unknown PoI categories: {}", format_offenders(.0))]
    UnknownCategory(Vec<(usize, String)>),
    #[error("invalid feature params: {0}")]
    InvalidParams(String),
}

fn format_offenders(rows: &[(usize, String)]) -> String {
    rows.iter()
        .map(|(row, cat)| format!("row {row}: {cat:?}"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// One geolocated point of interest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoiEntry {
    pub category: String,
    pub location: GeoPoint,
    pub name: String,
}

/// Ring radii and weights for the category features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoiFeatureParams {
    /// Threshold distance r in meters.
    pub radius_m: f64,
    /// Weight of each ring, outermost last; non-increasing.
    pub ring_weights: [f64; 4],
    /// Ring upper edges as fractions of r, strictly increasing and ending at 1.
    pub ring_fractions: [f64; 4],
}

impl Default for PoiFeatureParams {
    fn default() -> Self {
        Self {
            radius_m: 1000.0,
            ring_weights: [1.0, 0.5, 0.25, 0.125],
            ring_fractions: [0.125, 0.25, 0.5, 1.0],
        }
    }
}

impl PoiFeatureParams {
    pub fn validate(&self) -> Result<(), PoiError> {
        if !(self.radius_m > 0.0) {
            return Err(PoiError::InvalidParams(format!(
                "radius must be positive, got {}",
                self.radius_m
            )));
        }
        for w in self.ring_fractions.windows(2) {
            if w[1] <= w[0] {
                return Err(PoiError::InvalidParams(
                    "ring fractions must be strictly increasing".into(),
                ));
            }
        }
        if self.ring_fractions[0] <= 0.0 || self.ring_fractions[3] != 1.0 {
            return Err(PoiError::InvalidParams(
                "ring fractions must start above 0 and end at 1".into(),
            ));
        }
        for w in self.ring_weights.windows(2) {
            if w[1] > w[0] {
                return Err(PoiError::InvalidParams(
                    "ring weights must be non-increasing".into(),
                ));
            }
        }
        if self.ring_weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(PoiError::InvalidParams(
                "ring weights must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Weight contributed by one entry at distance `d` meters, per the ring
    /// scheme; 0 beyond the threshold radius.
    pub fn weight_at(&self, d: f64) -> f64 {
        for (fraction, weight) in self.ring_fractions.iter().zip(&self.ring_weights) {
            if d <= self.radius_m * fraction {
                return *weight;
            }
        }
        0.0
    }
}

/// Immutable store with a per-category radius index.
#[derive(Debug, Clone)]
pub struct PoiStore {
    // category -> (entries, index over their locations)
    by_category: BTreeMap<String, (Vec<PoiEntry>, PointIndex)>,
}

/// Load PoIs from a delimited file, rejecting rows outside the category set.
pub fn load_pois(path: impl AsRef<Path>) -> Result<PoiStore, PoiError> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, 0, e))?;

    let mut grouped: BTreeMap<String, Vec<PoiEntry>> = BTreeMap::new();
    let mut unknown: Vec<(usize, String)> = Vec::new();
    for (i, result) in reader.deserialize::<RawPoi>().enumerate() {
        let row = i + 2; // header is row 1
        let raw = result.map_err(|e| csv_error(path, row, e))?;
        if !CATEGORIES.contains(&raw.category.as_str()) {
            unknown.push((row, raw.category));
            continue;
        }
        let location = GeoPoint::new(raw.latitude, raw.longitude).map_err(|e| PoiError::Parse {
            path: path.display().to_string(),
            row,
            detail: e.to_string(),
        })?;
        grouped.entry(raw.category.clone()).or_default().push(PoiEntry {
            category: raw.category,
            location,
            name: raw.name,
        });
    }
    if !unknown.is_empty() {
        return Err(PoiError::UnknownCategory(unknown));
    }

    let by_category = grouped
        .into_iter()
        .map(|(cat, entries)| {
            let index = PointIndex::new(entries.iter().map(|e| e.location).collect());
            (cat, (entries, index))
        })
        .collect();
    Ok(PoiStore { by_category })
}

fn csv_error(path: &Path, row: usize, e: csv::Error) -> PoiError {
    PoiError::Parse {
        path: path.display().to_string(),
        row,
        detail: e.to_string(),
    }
}

#[derive(Debug, Deserialize)]
struct RawPoi {
    category: String,
    latitude: f64,
    longitude: f64,
    #[serde(default)]
    name: String,
}

impl PoiStore {
    /// Build a store in memory (used by the synthetic generator and tests).
    pub fn from_entries(entries: Vec<PoiEntry>) -> Result<Self, PoiError> {
        let mut unknown = Vec::new();
        for (i, e) in entries.iter().enumerate() {
            if !CATEGORIES.contains(&e.category.as_str()) {
                unknown.push((i + 1, e.category.clone()));
            }
        }
        if !unknown.is_empty() {
            return Err(PoiError::UnknownCategory(unknown));
        }
        let mut grouped: BTreeMap<String, Vec<PoiEntry>> = BTreeMap::new();
        for e in entries {
            grouped.entry(e.category.clone()).or_default().push(e);
        }
        let by_category = grouped
            .into_iter()
            .map(|(cat, entries)| {
                let index = PointIndex::new(entries.iter().map(|e| e.location).collect());
                (cat, (entries, index))
            })
            .collect();
        Ok(Self { by_category })
    }

    pub fn total_entries(&self) -> usize {
        self.by_category.values().map(|(v, _)| v.len()).sum()
    }

    pub fn category_size(&self, category: &str) -> usize {
        self.by_category.get(category).map_or(0, |(v, _)| v.len())
    }

    /// Ring-weighted count of `category` entries around `p`.
    pub fn poi_feature(
        &self,
        p: GeoPoint,
        category: &str,
        params: &PoiFeatureParams,
    ) -> Result<f64, PoiError> {
        if !CATEGORIES.contains(&category) {
            return Err(PoiError::UnknownCategory(vec![(0, category.to_string())]));
        }
        let Some((_, index)) = self.by_category.get(category) else {
            return Ok(0.0); // no entries of this category loaded
        };
        let sum = index
            .neighbors_within(p, params.radius_m)
            .iter()
            .map(|&(_, d)| params.weight_at(d))
            .sum();
        Ok(sum)
    }
}

/// Distance from the property to the configured city center, in meters.
pub fn distance_to_center(p: GeoPoint, center: GeoPoint) -> f64 {
    haversine_distance(p, center)
}
