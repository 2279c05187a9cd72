//! Statistics of extreme observations: tail models in the three extremal
//! domains of attraction, the characterizing statistic family built from the
//! top order statistics of a sample, the asymptotic apparatus that goes with
//! them (normalizing sequences, limiting variances, covariance matrices), and
//! the verification machinery that checks the limit theorems at desk scale.
//!
//! The crate is organized around the pipeline
//!
//! ```text
//! models ──draw──▶ SampleBatch ──estimators──▶ StatVector
//!    │                                             │
//!    └── asymptotics (R_p, centerings, σ², Σ) ◀────┤
//!    └── bridge (Gaussian functional oracle)       │
//!    └── montecarlo (replicated limit checks) ◀────┘
//!    └── detect (domain-of-attraction labels)
//! ```
//!
//! Everything downstream of a seed is deterministic: samples, bridge paths,
//! Monte Carlo reports and detection labels reproduce bitwise for a fixed
//! configuration.

pub mod asymptotics;
pub mod bridge;
pub mod detect;
pub mod discrepancy;
pub mod error;
pub mod estimators;
pub mod models;
pub mod montecarlo;
pub mod numeric;
pub mod quad;
pub mod tolerances;

pub use asymptotics::{CoefficientSet, CovMatrix, CovRegime, GammaParam, Provenance};

pub use error::{Error, Result};
pub use estimators::{StatVector, WindowConfig};
pub use models::{Domain, PerturbationPair, RegularityClass, SampleBatch, TailModel};

pub use detect::{DetectionResult, DomainLabel};
pub use montecarlo::{ExperimentConfig, McReport, TheoremTarget};
