//! Model toolkit for multiplex knowledge-graph growth with superficiality.
//!
//! The crate covers the full loop: ingest N-Triples dumps into compact edge
//! files, estimate the growth parameters (relationship mix, attachment
//! strength, superficiality), evaluate the model's closed-form laws, and
//! generate synthetic graphs whose structure can be compared back against
//! the source data.

pub mod edges;
pub mod error;
pub mod evaluate;
pub mod fenwick;
pub mod generate;
pub mod hist;
pub mod ingest;
pub mod ntriples;
pub mod rng;
pub mod stats;
pub mod theory;
pub mod weights;

pub use edges::{Edge, Role};
pub use error::{Error, Result};
pub use hist::DegreeHistogram;
pub use stats::{Analysis, GraphSummary, RelationshipProfile, RoleStats, RoleSummary};
pub use theory::RelationshipCountDistribution;

/// Shortest decimal that parses back to the identical double; exponent
/// notation outside [1e-4, 1e16) keeps extreme magnitudes compact.
pub fn csv_float(x: f64) -> String {
    if x == 0.0 || (x.abs() >= 1e-4 && x.abs() < 1e16) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}
