//! Report schema shared by the CLI and the verification suites. Reports are
//! schema-stable (version field, fixed key order) and byte-identical across
//! reruns with the same seed, except for the wall-time field.

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::cert::Certificate;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub schema: u32,
    pub suite: String,
    pub version: String,
    pub seed: u64,
    /// Fully serialized inputs (echoed back for reproducibility).
    pub input: Value,
    pub certificates: Vec<Certificate>,
    pub pass: bool,
    /// Excluded from determinism comparisons.
    pub wall_time_ms: f64,
    /// Free-form numeric results (values, tables).
    pub results: Value,
}

impl Report {
    pub fn new(suite: impl Into<String>, seed: u64, input: Value) -> Self {
        Report {
            schema: SCHEMA_VERSION,
            suite: suite.into(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            input,
            certificates: Vec::new(),
            pass: false,
            wall_time_ms: 0.0,
            results: Value::Null,
        }
    }

    pub fn finish(mut self, started: std::time::Instant) -> Self {
        self.pass = self.certificates.iter().all(|c| c.pass);
        self.wall_time_ms = started.elapsed().as_secs_f64() * 1e3;
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }

    /// The report with wall-time zeroed, for byte-identity comparisons.
    pub fn deterministic_json(&self) -> String {
        let mut clone = self.clone();
        clone.wall_time_ms = 0.0;
        serde_json::to_string_pretty(&clone).expect("report serialization")
    }
}

/// Serde helpers: big integers as decimal strings (values routinely exceed
/// every fixed-precision range).
pub mod biguint_string {
    use super::*;
    use serde::de::Error;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        v: &BigUint,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<BigUint, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse::<BigUint>().map_err(D::Error::custom)
    }
}
