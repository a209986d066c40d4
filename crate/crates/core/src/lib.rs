//! Top-k answering of SK queries (a SPARQL basic graph pattern plus
//! keywords) over RDF graphs.
//!
//! The pipeline: ingest a graph ([`graph`]), build the frequent-star
//! structural index and the keyword index ([`star_index`], [`keyword`]),
//! then answer queries with an early-terminating backward search
//! ([`engine`]). [`baselines`] holds the exhaustive and naive reference
//! strategies used for cross-checking.

mod binio;

pub mod baselines;
pub mod cli;
pub mod engine;
pub mod error;
pub mod exec;
pub mod explorer;
pub mod graph;
pub mod keyword;
pub mod matcher;
pub mod query;
pub mod report;
pub mod star_index;
pub mod synth;

pub use engine::{answer_sk_query, Answer, EngineConfig, Outcome, SkResult};
pub use error::{Result, SkqError};
pub use exec::Execution;
pub use graph::{RdfGraph, VertexId};
pub use query::SkQuery;
pub use star_index::{IndexBundle, IndexParams};
