//! Automated valuation model (AVM) toolkit.
//!
//! The crate assembles everything needed to estimate residential property
//! values from expert appraisal corpora and open geographic data:
//!
//! - [`geo`]: coordinates, great-circle distance, point-in-polygon tests;
//! - [`omi`]: observatory zone polygons with semiannual min/max price ranges;
//! - [`poi`]: categorized points of interest and distance-weighted features;
//! - [`comparables`]: nearby-property selection with adaptive radius search;
//! - [`dataset`]: appraisal ingestion, cleaning rules, and seeded splits;
//! - [`features`]: the three feature-set schemas and `[-1, 1]` scaling;
//! - [`learn`]: six regression learners plus an OLS baseline, grid tuning,
//!   and impurity-based feature importance;
//! - [`eval`]: error metrics, scatter exports, out-of-sample evaluation;
//! - [`synth`]: deterministic synthetic city generation for end-to-end runs.
//!
//! All stores are immutable after load and all computations are pure, so a
//! loaded pipeline can serve concurrent valuation queries without locking.

pub mod comparables;
pub mod dataset;
pub mod eval;
pub mod features;
pub mod geo;
pub mod learn;
pub mod omi;
pub mod poi;
pub mod synth;
pub mod types;
