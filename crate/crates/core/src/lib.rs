//! Composite-shape description logic for content-based image retrieval.
//!
//! Users describe an arrangement of posed basic shapes; the engine recognizes
//! such descriptions in segmented images exactly or approximately, organizes
//! descriptions in a subsumption hierarchy that indexes images, and ranks
//! retrieval results.

pub mod approx;
pub mod config;
pub mod error;
pub mod eval;
pub mod exact;
pub mod features;
pub mod geometry;
pub mod index;
pub mod ingest;
pub mod interchange;
pub mod model;
pub mod synth;

pub use error::{Error, Result};
