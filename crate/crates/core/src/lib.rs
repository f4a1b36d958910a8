//! Rank-based model selection for multi-qubit Pauli tomography.
//!
//! The crate simulates Pauli-setting count data, fits fixed-rank density
//! matrix models by maximum likelihood, selects the rank with AIC/BIC and
//! validates fits with Fisher-information asymptotics, Pearson χ² tests and
//! a parametric bootstrap.

pub mod chart;
pub mod dataset;
mod engine;
pub mod error;
pub mod fit;
pub mod io;
pub mod likelihood;
pub mod linalg;
pub mod optim;
pub mod pauli;
pub mod rng;
pub mod selection;
pub mod states;
pub mod stats;
pub mod study;

pub use dataset::{simulate_dataset, CountsDataset};
pub use error::{Error, Result};
pub use fit::{fit_full_iterative, fit_rank, naive_estimate, FitOptions, ModelFit};
pub use likelihood::{log_likelihood, loglik_gradient};
pub use pauli::{Axis, Outcome, PauliCoefficients, Setting};
pub use states::{random_state, state_from_factor, DensityMatrix, QuantumState, TrapezoidalFactor};
pub use io::{load_dataset, save_dataset};
pub use selection::{information_criteria, scan_ranks, RankScan, ScanOptions};
pub use study::{run_study1, run_study2, RunConfig, Study1Config, Study2Config, StudyReport};
