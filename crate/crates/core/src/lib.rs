//! Case-difficulty benchmarking for binary classifiers.
//!
//! Features are coded into item responses, an item response theory model is
//! fitted to them, and every case receives a Case Difficulty Index (CDI): its
//! maximum-likelihood latent trait. A per-class adaptive test then feeds the
//! classifier cases of chosen difficulty and summarises the hardest level it
//! handles reliably as the Machine Learning Capability (MLC). The MLC doubles
//! as a deployment gate: new cases above it are routed to human review.
//!
//! Module map:
//!
//! - [`irt`]: 2PL and graded response models, MML-EM fitting, simulation
//! - [`cdi`]: per-case maximum-likelihood CDI, class orientation, binning
//! - [`dataprep`]: CSV ingestion, declarative feature coding, balancing,
//!   difficulty-stratified splitting
//! - [`classifier`]: feed-forward network, grid search with k-fold CV, metrics
//! - [`cat`]: the adaptive testing loop and the MLC
//! - [`gate`]: certificate-based routing of new cases
//! - [`pipeline`]: end-to-end orchestration, reports and artifacts
//! - [`synth`]: seeded synthetic data for examples and tests

pub mod cat;
pub mod cdi;
pub mod classifier;
pub mod dataprep;
pub mod error;
pub mod gate;
pub mod irt;
pub mod pipeline;
pub mod rng;
pub mod synth;

mod label;

pub use error::{Error, Result, StageFamily};
pub use label::ClassLabel;
