//! Low-coherence packings of lines in complex space.
//!
//! The main entry point is [`solver::solve`]: seeded multistart over random
//! frames, each annealed through a decreasing sequence of log-sum-exp
//! smoothing levels and minimized with a Steihaug-CG trust-region method.
//! [`analysis`] provides the lower bounds and structural certificates used to
//! judge the results, [`baseline`] an alternating-projection comparison, and
//! [`beamforming`] a MISO codebook evaluation.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod baseline;
pub mod beamforming;
pub mod error;
pub mod frames;
mod linalg;
pub mod record;
pub mod reference;
pub mod smoothing;
pub mod solver;
pub mod trustregion;

pub use analysis::{bounds_report, certify, BoundsReport, Certificate, CertificateKind, CertifyReport};
pub use baseline::{alternating_projection, AltProjConfig};
pub use error::{Error, Result};
pub use frames::{coherence, gram_summary, normalize_columns, Frame, GramSummary};
pub use record::{Method, RunRecord};
pub use smoothing::{HessianMode, SmoothObjective};
pub use solver::{solve, MethodConfig, SolveResult, SolverConfig};
pub use trustregion::TrustRegionConfig;
