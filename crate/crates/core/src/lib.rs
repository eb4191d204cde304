//! Log template mining toolkit.
//!
//! The pipeline has three stages:
//!
//! 1. [`signature`] masks variable tokens and groups lines by their masked
//!    form, keeping a seeded sample of representatives per group.
//! 2. [`generation`] turns each group into templates, either by asking a
//!    chat-completion endpoint or with the offline voting oracle.
//! 3. [`matcher`] binds lines to templates, extracts variables and reports
//!    coverage.
//!
//! Around it sit [`robustness`] (perturbation experiments and string
//! similarity metrics), [`mining`] (fingerprints, severities, time windows,
//! job joins, Ward clustering, KDE), [`peft`] (low-rank adapter arithmetic)
//! and [`corpus`] (synthetic corpora with known templates).

pub mod config;
pub mod corpus;
pub mod exec;
pub mod generation;
pub mod matcher;
pub mod mining;
pub mod model;
pub mod peft;
pub mod robustness;
pub mod signature;

pub use exec::Exec;
