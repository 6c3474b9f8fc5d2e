//! Difficulty directions in embedding spaces.
//!
//! Ordinal difficulty annotations (levels such as CEFR A1 < A2 < B1) are turned
//! into pairwise order constraints over item embeddings. The unit direction that
//! maximizes the total projected margin of those constraints has a closed form,
//! the normalized sum of `(harder − easier)` difference vectors, and its mean
//! margin serves as a compatibility score between an embedding space and the
//! annotation. For a pair of levels the score reduces to the distance between
//! the two level centroids.
//!
//! Modules:
//! - [`model`]: embeddings, labels, and constraint construction
//! - [`solver`]: the closed-form direction, compatibility scores, item consistency
//! - [`stats`]: Spearman correlation, permutation tests, model ranking
//! - [`baseline`]: linear SVM transfer baseline
//! - [`io`]: file formats
//! - [`synth`]: synthetic cone-shaped data with a known direction

// `!(x >= t)` is used on purpose so that NaN takes the failing branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod error;
pub mod io;
pub mod linalg;
pub mod model;
pub mod rng;
pub mod solver;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use model::{
    build_constraints, validate, ConstraintMode, ConstraintSet, EmbeddingSet, LabeledDataset, NormPolicy,
    ValidationReport,
};
pub use solver::{
    compatibility_report, compatibility_score, fit_direction, item_consistency, oracle_fit_direction, project,
    AnchorScope, CompatibilityEntry, CompatibilityReport, DifficultyDirection,
};
