//! Comparable-property selection: the expert practice of pricing a property
//! against nearby, similar listings and prior valuations.
//!
//! The search narrows in stages. Starting from the query radius, it keeps
//! only ads listed on or before the query date; when no candidate exists the
//! radius doubles (capped at 4x) before the search is declared empty. While
//! the candidate count exceeds `overshoot_factor * max_results` the radius is
//! halved. If the count still exceeds `max_results`, attribute filters apply
//! in a fixed order — floor within 2, same maintenance level, surface within
//! 30% — each only while the set is still too large. Survivors are ranked by
//! distance (ties: smaller surface difference, then corpus order) and the
//! first `max_results` are kept. The output feature is the mean price per m²
//! of the kept set.
//!
//! Corpus file format: delimited text with header
//! `latitude,longitude,surface,price,floor,maintenance,listed_date,source_kind`,
//! ISO-8601 dates, `maintenance` in {low, medium, high}, `source_kind` in
//! {advert, prior_appraisal}.

use crate::geo::{GeoPoint, PointIndex};
use crate::types::Level;
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ComparablesError {
    #[error("cannot read corpus file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse corpus file {path} row {row}: {detail}")]
    Parse {
        path: String,
        row: usize,
        detail: String,
    },
    #[error("corpus file {path} row {row}: {detail}")]
    InvariantViolation {
        path: String,
        row: usize,
        detail: String,
    },
    #[error("invalid query: {0}")]
    InvalidQuery(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Advert,
    PriorAppraisal,
}

impl FromStr for SourceKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "advert" => Ok(SourceKind::Advert),
            "prior_appraisal" => Ok(SourceKind::PriorAppraisal),
            other => Err(format!(
                "unknown source kind {other:?}; expected advert or prior_appraisal"
            )),
        }
    }
}

impl std::fmt::Display for SourceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SourceKind::Advert => "advert",
            SourceKind::PriorAppraisal => "prior_appraisal",
        })
    }
}

/// One advertised or previously appraised property.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparableAd {
    pub location: GeoPoint,
    pub surface: f64,
    pub price: f64,
    pub floor: i32,
    pub maintenance: Level,
    pub listed_date: NaiveDate,
    pub source_kind: SourceKind,
}

impl ComparableAd {
    pub fn price_per_sqm(&self) -> f64 {
        self.price / self.surface
    }
}

/// Search request around a target property.
#[derive(Debug, Clone)]
pub struct ComparableQuery {
    pub target_location: GeoPoint,
    pub target_surface: f64,
    pub target_floor: i32,
    pub target_maintenance: Level,
    pub as_of: NaiveDate,
    pub max_results: usize,
    pub initial_radius_m: f64,
}

impl ComparableQuery {
    fn validate(&self) -> Result<(), ComparablesError> {
        if self.max_results < 1 {
            return Err(ComparablesError::InvalidQuery(
                "max_results must be at least 1".into(),
            ));
        }
        if !(self.initial_radius_m > 0.0) {
            return Err(ComparablesError::InvalidQuery(format!(
                "initial radius must be positive, got {}",
                self.initial_radius_m
            )));
        }
        Ok(())
    }
}

/// Narrowing constants; the defaults are the documented procedure.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Halve the radius while candidates exceed this multiple of max_results.
    pub overshoot_factor: usize,
    /// Radius divisor per narrowing step.
    pub halve_factor: f64,
    /// Radius multiplier per expansion step when no candidate exists.
    pub expand_factor: f64,
    /// Expansion cap as a multiple of the initial radius.
    pub expand_cap_factor: f64,
    /// Floor filter keeps ads within this many floors of the target.
    pub floor_tolerance: i32,
    /// Surface filter keeps ads within this fraction of the target surface.
    pub surface_tolerance_fraction: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            overshoot_factor: 3,
            halve_factor: 2.0,
            expand_factor: 2.0,
            expand_cap_factor: 4.0,
            floor_tolerance: 2,
            surface_tolerance_fraction: 0.30,
        }
    }
}

/// Result of one comparable search.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparableResult {
    pub selected: Vec<ComparableAd>,
    /// Mean of price/surface over the kept set; absent when nothing matched.
    pub avg_price_per_sqm: Option<f64>,
    pub final_radius_m: f64,
    pub filters_applied: Vec<String>,
}

/// Immutable ad corpus with a radius index.
#[derive(Debug, Clone)]
pub struct ComparableCorpus {
    ads: Vec<ComparableAd>,
    index: PointIndex,
}

#[derive(Debug, Deserialize)]
struct RawAd {
    latitude: f64,
    longitude: f64,
    surface: f64,
    price: f64,
    floor: i32,
    maintenance: String,
    listed_date: String,
    source_kind: String,
}

/// Load the ad corpus, enforcing per-row invariants.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<ComparableCorpus, ComparablesError> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| ComparablesError::Parse {
            path: path.display().to_string(),
            row: 0,
            detail: e.to_string(),
        })?;

    let mut ads = Vec::new();
    for (i, result) in reader.deserialize::<RawAd>().enumerate() {
        let row = i + 2;
        let parse_err = |detail: String| ComparablesError::Parse {
            path: path.display().to_string(),
            row,
            detail,
        };
        let invariant_err = |detail: String| ComparablesError::InvariantViolation {
            path: path.display().to_string(),
            row,
            detail,
        };
        let raw = result.map_err(|e| parse_err(e.to_string()))?;
        let location = GeoPoint::new(raw.latitude, raw.longitude)
            .map_err(|e| parse_err(e.to_string()))?;
        let maintenance = Level::from_str(&raw.maintenance).map_err(parse_err)?;
        let listed_date = NaiveDate::parse_from_str(&raw.listed_date, "%Y-%m-%d")
            .map_err(|e| parse_err(format!("listed_date {:?}: {e}", raw.listed_date)))?;
        let source_kind = SourceKind::from_str(&raw.source_kind).map_err(parse_err)?;
        if !(raw.surface > 0.0) {
            return Err(invariant_err(format!(
                "surface must be positive, got {}",
                raw.surface
            )));
        }
        if !(raw.price > 0.0) {
            return Err(invariant_err(format!(
                "price must be positive, got {}",
                raw.price
            )));
        }
        ads.push(ComparableAd {
            location,
            surface: raw.surface,
            price: raw.price,
            floor: raw.floor,
            maintenance,
            listed_date,
            source_kind,
        });
    }
    Ok(ComparableCorpus::from_ads(ads))
}

impl ComparableCorpus {
    pub fn from_ads(ads: Vec<ComparableAd>) -> Self {
        let index = PointIndex::new(ads.iter().map(|a| a.location).collect());
        Self { ads, index }
    }

    pub fn len(&self) -> usize {
        self.ads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ads.is_empty()
    }

    pub fn ads(&self) -> &[ComparableAd] {
        &self.ads
    }

    // Candidates within `radius` listed on or before the query date, in
    // corpus order, each with its distance.
    fn candidates_within(&self, q: &ComparableQuery, radius: f64) -> Vec<(usize, f64)> {
        self.index
            .neighbors_within(q.target_location, radius)
            .into_iter()
            .filter(|&(idx, _)| self.ads[idx].listed_date <= q.as_of)
            .collect()
    }
}

/// Staged comparable search with the default narrowing constants.
pub fn find_comparables(
    corpus: &ComparableCorpus,
    query: &ComparableQuery,
) -> Result<ComparableResult, ComparablesError> {
    find_comparables_with(corpus, query, &SearchConfig::default())
}

/// Staged comparable search with explicit narrowing constants.
pub fn find_comparables_with(
    corpus: &ComparableCorpus,
    query: &ComparableQuery,
    cfg: &SearchConfig,
) -> Result<ComparableResult, ComparablesError> {
    query.validate()?;

    let mut radius = query.initial_radius_m;
    let mut candidates = corpus.candidates_within(query, radius);

    // Stage 1b: expand when empty, up to the cap.
    if candidates.is_empty() {
        let cap = query.initial_radius_m * cfg.expand_cap_factor;
        while candidates.is_empty() && radius < cap {
            radius = (radius * cfg.expand_factor).min(cap);
            candidates = corpus.candidates_within(query, radius);
        }
        if candidates.is_empty() {
            return Ok(ComparableResult {
                selected: vec![],
                avg_price_per_sqm: None,
                final_radius_m: radius,
                filters_applied: vec![],
            });
        }
    }

    // Stage 2: halve while far too many.
    while candidates.len() > cfg.overshoot_factor * query.max_results {
        radius /= cfg.halve_factor;
        candidates = corpus.candidates_within(query, radius);
    }

    // Stage 3: attribute filters in fixed order, each applied only while the
    // set is still larger than requested.
    let mut filters_applied = Vec::new();
    if candidates.len() > query.max_results {
        candidates.retain(|&(idx, _)| {
            (corpus.ads[idx].floor - query.target_floor).abs() <= cfg.floor_tolerance
        });
        filters_applied.push(format!("floor_within_{}", cfg.floor_tolerance));
    }
    if candidates.len() > query.max_results {
        candidates.retain(|&(idx, _)| corpus.ads[idx].maintenance == query.target_maintenance);
        filters_applied.push("same_maintenance".to_string());
    }
    if candidates.len() > query.max_results {
        let tol = cfg.surface_tolerance_fraction * query.target_surface;
        candidates.retain(|&(idx, _)| (corpus.ads[idx].surface - query.target_surface).abs() <= tol);
        filters_applied.push(format!(
            "surface_within_{}pct",
            (cfg.surface_tolerance_fraction * 100.0).round() as i64
        ));
    }

    // Stage 4: rank by distance, then surface difference, then corpus order.
    candidates.sort_by(|&(ia, da), &(ib, db)| {
        let surf_a = (corpus.ads[ia].surface - query.target_surface).abs();
        let surf_b = (corpus.ads[ib].surface - query.target_surface).abs();
        da.partial_cmp(&db)
            .unwrap()
            .then(surf_a.partial_cmp(&surf_b).unwrap())
            .then(ia.cmp(&ib))
    });
    candidates.truncate(query.max_results);

    let selected: Vec<ComparableAd> = candidates
        .iter()
        .map(|&(idx, _)| corpus.ads[idx].clone())
        .collect();
    let avg_price_per_sqm = if selected.is_empty() {
        None
    } else {
        Some(selected.iter().map(ComparableAd::price_per_sqm).sum::<f64>() / selected.len() as f64)
    };
    Ok(ComparableResult {
        selected,
        avg_price_per_sqm,
        final_radius_m: radius,
        filters_applied,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::haversine_distance;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::io::Write;

    fn pt(lat: f64, lon: f64) -> GeoPoint {
        GeoPoint::new(lat, lon).unwrap()
    }

    fn date(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    fn north_of(base: GeoPoint, meters: f64) -> GeoPoint {
        pt(base.lat() + meters / crate::geo::METERS_PER_DEG_LAT, base.lon())
    }

    fn ad(location: GeoPoint, surface: f64, price: f64) -> ComparableAd {
        ComparableAd {
            location,
            surface,
            price,
            floor: 2,
            maintenance: Level::Medium,
            listed_date: date(2015, 6, 1),
            source_kind: SourceKind::Advert,
        }
    }

    fn query(target: GeoPoint) -> ComparableQuery {
        ComparableQuery {
            target_location: target,
            target_surface: 90.0,
            target_floor: 2,
            target_maintenance: Level::Medium,
            as_of: date(2016, 1, 1),
            max_results: 6,
            initial_radius_m: 1000.0,
        }
    }

    #[test]
    fn few_candidates_pass_through_unchanged() {
        let base = pt(45.0, 7.6);
        let corpus = ComparableCorpus::from_ads(vec![
            ad(north_of(base, 100.0), 80.0, 160_000.0),
            ad(north_of(base, 300.0), 100.0, 250_000.0),
            ad(north_of(base, 600.0), 120.0, 360_000.0),
        ]);
        let mut q = query(base);
        q.max_results = 5;
        let res = find_comparables(&corpus, &q).unwrap();
        assert_eq!(res.selected.len(), 3);
        assert_eq!(res.final_radius_m, 1000.0);
        assert!(res.filters_applied.is_empty());
        // price/m²: 2000, 2500, 3000 -> mean 2500.
        assert!((res.avg_price_per_sqm.unwrap() - 2500.0).abs() < 1e-9);
    }

    #[test]
    fn empty_search_expands_then_reports_absent() {
        let base = pt(45.0, 7.6);
        let corpus = ComparableCorpus::from_ads(vec![ad(north_of(base, 50_000.0), 80.0, 160_000.0)]);
        let res = find_comparables(&corpus, &query(base)).unwrap();
        assert!(res.selected.is_empty());
        assert!(res.avg_price_per_sqm.is_none());
        assert_eq!(res.final_radius_m, 4000.0);
    }

    #[test]
    fn expansion_finds_candidates_within_cap() {
        let base = pt(45.0, 7.6);
        let corpus = ComparableCorpus::from_ads(vec![ad(north_of(base, 3000.0), 80.0, 160_000.0)]);
        let res = find_comparables(&corpus, &query(base)).unwrap();
        assert_eq!(res.selected.len(), 1);
        assert_eq!(res.final_radius_m, 4000.0);
    }

    #[test]
    fn future_listings_are_never_selected() {
        let base = pt(45.0, 7.6);
        let mut future = ad(north_of(base, 100.0), 80.0, 160_000.0);
        future.listed_date = date(2016, 2, 1); // after as_of
        let past = ad(north_of(base, 400.0), 100.0, 220_000.0);
        let corpus = ComparableCorpus::from_ads(vec![future, past]);
        let res = find_comparables(&corpus, &query(base)).unwrap();
        assert_eq!(res.selected.len(), 1);
        assert_eq!(res.selected[0].surface, 100.0);
        for s in &res.selected {
            assert!(s.listed_date <= date(2016, 1, 1));
        }
    }

    #[test]
    fn load_rejects_invariant_violations_naming_the_row() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(
            f,
            "latitude,longitude,surface,price,floor,maintenance,listed_date,source_kind"
        )
        .unwrap();
        writeln!(f, "45.0,7.6,80.0,160000,2,medium,2015-06-01,advert").unwrap();
        writeln!(f, "45.0,7.6,0.0,160000,2,medium,2015-06-01,advert").unwrap();
        match load_corpus(f.path()) {
            Err(ComparablesError::InvariantViolation { row, detail, .. }) => {
                assert_eq!(row, 3);
                assert!(detail.contains("surface"));
            }
            other => panic!("expected invariant violation, got {other:?}"),
        }
    }

    #[test]
    fn load_and_query_is_deterministic_across_reloads() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(
            f,
            "latitude,longitude,surface,price,floor,maintenance,listed_date,source_kind"
        )
        .unwrap();
        for i in 0..10 {
            writeln!(
                f,
                "45.0{i},7.6,8{i}.0,2{i}0000,{},medium,2015-06-01,advert",
                i % 5
            )
            .unwrap();
        }
        let a = load_corpus(f.path()).unwrap();
        let b = load_corpus(f.path()).unwrap();
        assert_eq!(a.len(), 10);
        let q = query(pt(45.05, 7.6));
        let ra = find_comparables(&a, &q).unwrap();
        let rb = find_comparables(&b, &q).unwrap();
        assert_eq!(ra.selected, rb.selected);
        assert_eq!(ra.avg_price_per_sqm, rb.avg_price_per_sqm);
    }

    /// Independent re-implementation of the staged procedure, written
    /// directly from its prose description with no shared helpers.
    fn staged_oracle(
        ads: &[ComparableAd],
        q: &ComparableQuery,
        cfg: &SearchConfig,
    ) -> (Vec<usize>, Option<f64>, f64) {
        let dist = |a: &ComparableAd| haversine_distance(q.target_location, a.location);
        let collect = |r: f64| -> Vec<usize> {
            (0..ads.len())
                .filter(|&i| dist(&ads[i]) <= r && ads[i].listed_date <= q.as_of)
                .collect()
        };
        let mut radius = q.initial_radius_m;
        let mut cand = collect(radius);
        if cand.is_empty() {
            let cap = q.initial_radius_m * cfg.expand_cap_factor;
            while cand.is_empty() && radius < cap {
                radius = (radius * cfg.expand_factor).min(cap);
                cand = collect(radius);
            }
            if cand.is_empty() {
                return (vec![], None, radius);
            }
        }
        while cand.len() > cfg.overshoot_factor * q.max_results {
            radius /= cfg.halve_factor;
            cand = collect(radius);
        }
        if cand.len() > q.max_results {
            cand.retain(|&i| (ads[i].floor - q.target_floor).abs() <= cfg.floor_tolerance);
        }
        if cand.len() > q.max_results {
            cand.retain(|&i| ads[i].maintenance == q.target_maintenance);
        }
        if cand.len() > q.max_results {
            cand.retain(|&i| {
                (ads[i].surface - q.target_surface).abs()
                    <= cfg.surface_tolerance_fraction * q.target_surface
            });
        }
        cand.sort_by(|&a, &b| {
            dist(&ads[a])
                .partial_cmp(&dist(&ads[b]))
                .unwrap()
                .then(
                    (ads[a].surface - q.target_surface)
                        .abs()
                        .partial_cmp(&(ads[b].surface - q.target_surface).abs())
                        .unwrap(),
                )
                .then(a.cmp(&b))
        });
        cand.truncate(q.max_results);
        let avg = if cand.is_empty() {
            None
        } else {
            Some(
                cand.iter()
                    .map(|&i| ads[i].price / ads[i].surface)
                    .sum::<f64>()
                    / cand.len() as f64,
            )
        };
        (cand, avg, radius)
    }

    fn random_corpus(rng: &mut ChaCha8Rng, n: usize) -> Vec<ComparableAd> {
        (0..n)
            .map(|_| {
                let location = pt(
                    45.0 + rng.random_range(-0.03..0.03),
                    7.6 + rng.random_range(-0.03..0.03),
                );
                let maintenance = match rng.random_range(0..3) {
                    0 => Level::Low,
                    1 => Level::Medium,
                    _ => Level::High,
                };
                ComparableAd {
                    location,
                    surface: rng.random_range(40.0..250.0),
                    price: rng.random_range(50_000.0..600_000.0),
                    floor: rng.random_range(-1..8),
                    maintenance,
                    listed_date: date(2015, 1, 1)
                        + chrono::Duration::days(rng.random_range(0..500)),
                    source_kind: if rng.random_range(0..4) == 0 {
                        SourceKind::PriorAppraisal
                    } else {
                        SourceKind::Advert
                    },
                }
            })
            .collect()
    }

    #[test]
    fn matches_independent_staged_oracle_on_random_queries() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let cfg = SearchConfig::default();
        let ads = random_corpus(&mut rng, 100);
        let corpus = ComparableCorpus::from_ads(ads.clone());
        for _ in 0..50 {
            let q = ComparableQuery {
                target_location: pt(
                    45.0 + rng.random_range(-0.03..0.03),
                    7.6 + rng.random_range(-0.03..0.03),
                ),
                target_surface: rng.random_range(40.0..250.0),
                target_floor: rng.random_range(-1..8),
                target_maintenance: match rng.random_range(0..3) {
                    0 => Level::Low,
                    1 => Level::Medium,
                    _ => Level::High,
                },
                as_of: date(2016, 1, 1) + chrono::Duration::days(rng.random_range(0..200)),
                max_results: rng.random_range(1..9),
                initial_radius_m: rng.random_range(300.0..3000.0),
            };
            let got = find_comparables(&corpus, &q).unwrap();
            let (want_idx, want_avg, want_radius) = staged_oracle(&ads, &q, &cfg);
            let want: Vec<ComparableAd> = want_idx.iter().map(|&i| ads[i].clone()).collect();
            assert_eq!(got.selected, want);
            assert_eq!(got.final_radius_m, want_radius);
            match (got.avg_price_per_sqm, want_avg) {
                (None, None) => {}
                (Some(a), Some(b)) => assert!((a - b).abs() < 1e-9),
                other => panic!("avg mismatch: {other:?}"),
            }
        }
    }

    #[test]
    fn result_invariants_hold_on_random_queries() {
        let mut rng = ChaCha8Rng::seed_from_u64(78);
        let ads = random_corpus(&mut rng, 120);
        let corpus = ComparableCorpus::from_ads(ads);
        for _ in 0..40 {
            let q = ComparableQuery {
                target_location: pt(
                    45.0 + rng.random_range(-0.03..0.03),
                    7.6 + rng.random_range(-0.03..0.03),
                ),
                target_surface: rng.random_range(40.0..250.0),
                target_floor: rng.random_range(-1..8),
                target_maintenance: Level::Medium,
                as_of: date(2016, 6, 1),
                max_results: rng.random_range(1..9),
                initial_radius_m: rng.random_range(300.0..3000.0),
            };
            let res = find_comparables(&corpus, &q).unwrap();
            assert!(res.selected.len() <= q.max_results);
            for s in &res.selected {
                assert!(s.listed_date <= q.as_of);
                assert!(
                    haversine_distance(q.target_location, s.location) <= res.final_radius_m
                );
            }
            if let Some(avg) = res.avg_price_per_sqm {
                let prices: Vec<f64> =
                    res.selected.iter().map(ComparableAd::price_per_sqm).collect();
                let min = prices.iter().cloned().fold(f64::INFINITY, f64::min);
                let max = prices.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                assert!(avg >= min - 1e-9 && avg <= max + 1e-9);
            }
        }
    }
}
