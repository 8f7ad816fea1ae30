//! Numerical toolkit for Orlicz and Musielak-Orlicz sequence spaces:
//! Luxemburg norms, dilation-index estimation, weighted-dilation
//! constructions with exact integer multiplicities, finite-dimensional
//! Banach-Mazur distance estimation, and the twisted-Hilbert quasinorm
//! machinery, all with grid-verified certificates.

// `!(x > 0.0)` style guards are deliberate: they reject NaN where the
// non-negated comparison would let it through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cert;
pub mod construction;
pub mod geometry;
pub mod error;
pub mod grid;
pub mod indices;
pub mod kalton;
pub mod lemma32;
pub mod linalg;
pub mod literal;
pub mod mollify;
pub mod musielak;
pub mod num;
pub mod report;
pub mod orlicz;
pub mod rng;
pub mod steps;
pub mod suites;
pub mod table;

pub use cert::Certificate;
pub use error::{Error, Result};
pub use grid::{GridSpec, LogGrid};
pub use indices::{containment_report, estimate_indices, estimate_power_envelope, IndexEstimate};
pub use musielak::{FiniteVector, MusielakSection};
pub use orlicz::OrliczFunction;
pub use report::Report;
pub use geometry::{bm_distance_symmetric, BMDistanceEstimate};
