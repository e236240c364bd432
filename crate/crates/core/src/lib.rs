//! Debiased prompt-based event argument extraction.
//!
//! The crate is organised around the extraction workflow:
//!
//! - [`corpus`]: datasets, ontologies, dependency parses, zero-shot splits
//! - [`prompts`]: name- and ontology-based prompts, generated prompt clusters
//! - [`model`]: encoder-decoder contract, span selectors, the prompt mixture
//! - [`training`]: AdamW training with dev selection and the λ sweep
//! - [`evaluation`]: Arg-I / Arg-C / Head-C scoring
//! - [`bias_analysis`]: spurious-role and syntactic-match diagnostics
//! - [`cli`]: the `deae` command-line front end
//!
//! See the crate's `examples/` directory for one runnable program per
//! capability.

pub mod bias_analysis;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod model;
pub mod prompts;
pub mod synthetic;
pub mod training;

pub use error::{Error, Result};
