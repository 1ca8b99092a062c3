//! Nested-belief planning toolkit for two-agent partially observable
//! domains: exact and particle-based belief filtering over models of the
//! other agent, finite-horizon planning on sampled belief sets,
//! observation-sampled lookahead trees, concentration-bound calculus, and a
//! reproducible experiment harness.

pub mod analysis;
pub mod domains;
pub mod error;
pub mod filters;
pub mod harness;
pub mod model;
pub mod planner;
pub mod rng;

pub use error::{NestError, Result};
