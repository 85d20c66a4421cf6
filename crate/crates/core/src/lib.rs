//! Inference scaling laws for repeated sampling.
//!
//! * [`coverage`]: the Beta-failure law for pass@k, its inference loss and the
//!   difficulty density.
//! * [`correlated`]: effective number of trials under correlated attempts and
//!   the spectral estimate of the correlation exponent.
//! * [`cost`]: FLOPS budgets and the coverage they buy.
//! * [`fitting`]: parameter estimation from observed curves.
//! * [`simulator`]: Monte Carlo oracles for all of the above.

pub mod correlated;
pub mod cost;
pub mod coverage;
pub mod curve;
pub mod error;
pub mod fitting;
pub mod io;
pub mod linalg;
pub mod simulator;
pub mod specfun;

pub use correlated::{CorrelatedTrialModel, KappaEstimate, RankRange, Spectrum, TrialMatrix};
pub use cost::{CostMode, CostParams};
pub use coverage::{BetaFailureModel, DifficultyDensity};
pub use curve::CoverageCurve;
pub use error::{Error, Result};
pub use fitting::{CoverageModel, FitResult, Objective};
pub use simulator::{ModelSpec, SimConfig, SimResult, SuccessMatrix};
