//! Static-analysis toolchain for sub-app privacy over-collection (SPO).
//!
//! The pipeline loads extracted sub-app packages, parses their script and
//! markup layers, runs a lifecycle-aware taint analysis from privacy sources
//! to network sinks (S_collect), extracts claimed items from privacy policies
//! (S_claim), and reports the difference S_spo = S_collect - S_claim, plus
//! corpus-level template/SDK clustering and aggregate statistics.

pub mod cli;
pub mod error;
pub mod flow;
pub mod ingest;
pub mod miner;
pub mod pipeline;
pub mod policy;
pub mod render;
pub mod script;
pub mod spo;
pub mod taxonomy;
pub mod textmatch;

pub use error::SpoError;
pub use taxonomy::Taxonomy;
