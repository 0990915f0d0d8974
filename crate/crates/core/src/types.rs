//! Small domain scalars shared across modules.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Three-step ordinal used for maintenance status, installation quality,
/// finishing quality, and view.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Low,
    Medium,
    High,
}

impl Level {
    /// Encoding used by feature vectors: low -> -1, medium -> 0, high -> 1.
    pub fn as_feature_value(self) -> f64 {
        match self {
            Level::Low => -1.0,
            Level::Medium => 0.0,
            Level::High => 1.0,
        }
    }
}

impl FromStr for Level {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "low" => Ok(Level::Low),
            "medium" => Ok(Level::Medium),
            "high" => Ok(Level::High),
            other => Err(format!(
                "unknown ordinal level {other:?}; expected low, medium, or high"
            )),
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Level::Low => "low",
            Level::Medium => "medium",
            Level::High => "high",
        };
        f.write_str(s)
    }
}
