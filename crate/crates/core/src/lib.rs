//! Interestingness-based re-ranking of search results.
//!
//! Results fetched from a search backend are scored against a
//! domain-of-interest profile (target terms, competitor terms, stopwords)
//! and re-ordered. Two interestingness functions are built in,
//! Match-Mismatch and Tf-Idf, and [`analysis`] measures how far two orders
//! agree.

pub mod analysis;
pub mod api;
pub mod connectors;
pub mod profile;
pub mod rerank;
pub mod scoring;
pub mod text;

pub use analysis::{compare_orders, RankComparison, RankPairing};
pub use api::{AppError, CompareRequest, CompareResponse, Engine, RerankRequest, RerankResponse};
pub use connectors::{ConnectorRegistry, ConnectorSpec, FetchPolicy};
pub use profile::{DomainProfile, ProfileEntry, ProfileStore};
pub use rerank::{rerank, ScoredResult, SearchResult};
pub use scoring::{InterestingnessScore, ScorerId};
pub use text::{Stopwords, Term, TermStats};
