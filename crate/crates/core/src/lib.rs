//! Checks a (possibly partial) domain model against a natural-language
//! requirements specification and classifies every model element as
//! aligned, misaligned or unclassified, with the supporting sentences.
//!
//! Pipeline: [`preprocess`] extracts sentence-traceable concepts from the
//! text, [`slicer`] cuts a minimal sub-model around each element,
//! [`matcher`] finds the sentences that talk about it, [`generator`]
//! renders the slice as one English sentence, and [`detector`] asks an
//! LLM ensemble ([`backend`]) to compare the two.

pub mod backend;
pub mod detector;
pub mod eval;
pub mod fixtures;
pub mod generator;
pub mod inflect;
pub mod lexicon;
pub mod matcher;
pub mod model;
pub mod preprocess;
pub mod report;
pub mod slicer;

pub use lexicon::{RuleTagger, Tag, Tagger};
pub use model::{DomainModel, ElementKind, ModelElement, ModelError, Multiplicity};

/// Metrics in double precision.
pub type MetricsRow = eval::MetricsRow<f64>;
pub type Aggregate = eval::Aggregate<f64>;
