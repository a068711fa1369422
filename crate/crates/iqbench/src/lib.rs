//! Workbench for estimating the interaction quality of spoken-dialogue
//! exchanges: corpus ingestion, temporal feature extraction on the
//! exchange / window / dialogue levels in system and user views, a
//! deterministic linear SVM, evaluation metrics, and reproducible
//! cross-validation experiment protocols.

pub mod config;
pub mod corpus;
pub mod experiments;
pub mod features;
pub mod learner;
pub mod metrics;
pub mod report;
pub mod samples;
pub mod synthgen;
