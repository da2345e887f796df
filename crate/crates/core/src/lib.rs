//! Core engine: mini-language substrate, test harness, invariant inference,
//! coverage-guided test generation, the genetic repair loop, and the
//! evaluation/reporting pipeline.

pub mod bundle;
pub mod config;
pub mod evaluation;
pub mod harness;
pub mod invariants;
pub mod lang;
pub mod rng;
pub mod search;
pub mod testgen;
