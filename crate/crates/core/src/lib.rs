//! Structural-completeness analysis for AI agent governance files
//! (`AGENTS.md` and friends).
//!
//! The pipeline: [`document`] parses a file, [`detectors`] score the five
//! principles, [`scoring`] turns those into a total, band and archetype,
//! [`resolver`] follows pointer files to where governance actually lives,
//! and [`corpus`] runs the whole thing over many files and summarises it.
//! [`report`] renders results as text, JSON or SARIF.

pub mod corpus;
pub mod detectors;
pub mod document;
pub mod locator;
pub mod report;
pub mod resolver;
pub mod scoring;

pub use corpus::{apply_filters, evaluate_corpus, evaluate_file, ingest_panel, CorpusReport};
pub use detectors::{detect, evaluate_document, PrincipleId, PrincipleScore, RuleSet, Score};
pub use document::GovernanceDocument;
pub use locator::Locator;
pub use report::{emit, Format};
pub use scoring::{aggregate, classify_archetype, Archetype, Band, Evaluation, Total, Variant};
