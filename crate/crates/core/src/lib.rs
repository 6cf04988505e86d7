//! Crossover operators for evolving several attributed subsets at once,
//! with a temporal-pattern-detector fitness for two-class evoked-response
//! classification.
//!
//! * [`genome`]: task specifications, features and chromosomes
//! * [`blx`]: blend crossover over attribute vectors
//! * [`crossover`]: bag partition and the exploit / explore inheritance
//! * [`evolution`]: elitist generational loop and per-generation statistics
//! * [`tpd`]: temporal pattern detector scoring
//! * [`alcotask`]: chromosome decoding and the AUC penalty
//! * [`data`]: trial preprocessing, synthetic datasets and file formats

pub mod alcotask;
pub mod blx;
pub mod crossover;
pub mod data;
pub mod error;
pub mod evolution;
pub mod genome;
pub mod rng;
pub mod tpd;

pub use error::{Error, Result};
pub use rng::RandomSource;
