//! Machine-readable certificates: the record a grid verification leaves
//! behind. A certificate never proves an inequality on the continuum; it
//! states the grid, the constants in force and the worst margins observed.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Certificate {
    pub name: String,
    /// False when a precondition failed and the check did not run.
    pub applicable: bool,
    pub pass: bool,
    /// Human-readable description of the verification grid.
    pub grid: String,
    /// Constants and parameters in force, stringified for schema stability.
    pub constants: BTreeMap<String, String>,
    /// Worst slack of the lower inequality (>= 0 means satisfied).
    pub worst_lower_margin: f64,
    /// Worst slack of the upper inequality (>= 0 means satisfied).
    pub worst_upper_margin: f64,
    /// A failing point, when one exists.
    pub witness: Option<String>,
    pub details: Vec<String>,
}

impl Certificate {
    pub fn new(name: impl Into<String>) -> Self {
        Certificate {
            name: name.into(),
            applicable: true,
            pass: false,
            grid: String::new(),
            constants: BTreeMap::new(),
            worst_lower_margin: f64::INFINITY,
            worst_upper_margin: f64::INFINITY,
            witness: None,
            details: Vec::new(),
        }
    }

    pub fn not_applicable(name: impl Into<String>, reason: impl Into<String>) -> Self {
        let mut c = Certificate::new(name);
        c.applicable = false;
        c.pass = false;
        c.witness = Some(reason.into());
        c
    }

    pub fn with_grid(mut self, grid: impl Into<String>) -> Self {
        self.grid = grid.into();
        self
    }

    pub fn constant(&mut self, key: &str, value: impl ToString) {
        self.constants.insert(key.to_string(), value.to_string());
    }

    /// Record one two-sided margin observation.
    pub fn observe(&mut self, lower_margin: f64, upper_margin: f64, point: impl Fn() -> String) {
        if lower_margin < self.worst_lower_margin {
            self.worst_lower_margin = lower_margin;
            if lower_margin < 0.0 {
                self.witness = Some(format!("lower violated at {}", point()));
            }
        }
        if upper_margin < self.worst_upper_margin {
            self.worst_upper_margin = upper_margin;
            if upper_margin < 0.0 {
                self.witness = Some(format!("upper violated at {}", point()));
            }
        }
    }

    /// Close the certificate: pass iff both worst margins are nonnegative.
    pub fn finish(mut self) -> Self {
        self.pass = self.applicable
            && self.worst_lower_margin >= 0.0
            && self.worst_upper_margin >= 0.0
            && self.worst_lower_margin.is_finite()
            && self.worst_upper_margin.is_finite();
        self
    }

    /// Merge: conjunction of passes, details concatenated.
    pub fn merge_all(name: impl Into<String>, parts: Vec<Certificate>) -> Certificate {
        let mut c = Certificate::new(name);
        c.pass = parts.iter().all(|p| p.pass);
        c.applicable = parts.iter().all(|p| p.applicable);
        c.worst_lower_margin = parts
            .iter()
            .map(|p| p.worst_lower_margin)
            .fold(f64::INFINITY, f64::min);
        c.worst_upper_margin = parts
            .iter()
            .map(|p| p.worst_upper_margin)
            .fold(f64::INFINITY, f64::min);
        for p in &parts {
            if let Some(w) = &p.witness {
                if c.witness.is_none() {
                    c.witness = Some(format!("{}: {}", p.name, w));
                }
            }
        }
        c.details = parts
            .iter()
            .map(|p| format!("{}: pass={} lo={:.3e} hi={:.3e}", p.name, p.pass, p.worst_lower_margin, p.worst_upper_margin))
            .collect();
        c
    }
}
