//! Entity alignment between two temporal knowledge graphs.
//!
//! Entities of both graphs are embedded by a weightless mean-aggregation
//! GNN trained with a Manhattan triplet loss on seed pairs. Predictions mix
//! cosine similarity of the embeddings with an exact temporal matching
//! score, rescale with CSLS, and optionally bootstrap new training pairs
//! from mutual nearest neighbors. Seeds can also be generated without
//! supervision from entities whose timestamps match exactly and uniquely.

pub mod aligner;
pub mod config;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod io;
pub mod kg;
pub mod matrix;
pub mod par;
pub mod pipeline;
pub mod seed_gen;
pub mod similarity;
pub mod synth;
pub mod time_match;
pub mod trainer;

pub use error::{Error, Result};
pub use kg::{AlignmentPairSet, MergedTimeVocabulary, Provenance, Quadruple, TemporalKg, TimeAnnotation, TimeId};
pub use matrix::Matrix;
pub use similarity::{SimilarityKind, SimilarityMatrix};
