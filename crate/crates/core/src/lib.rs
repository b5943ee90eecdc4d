//! Provenance capture, consolidation, querying, FAIR auditing and publication
//! for simulation-based robot validation campaigns.
pub mod capture;
pub mod cli;
pub mod consolidate;
pub mod faircheck;
pub mod harness;
pub mod identity;
pub mod ldgraph;
pub mod publish;
pub mod queryengine;
pub mod vocab;
