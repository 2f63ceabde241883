//! Simultaneous confidence regions for the nonparametric trend of a
//! partially linear time series regression
//! `Y_i = Z_i^T beta + mu(X_i) + sigma(X_i) e_i`.
//!
//! The pipeline residualizes `Y` and `Z` on `X` with Nadaraya–Watson
//! weights, estimates `beta` by least squares on the residuals, smooths
//! the partial response for `mu` and the squared deviations for `sigma^2`,
//! and calibrates the band half-width `q_alpha sigma(x)` with a Gaussian
//! multiplier bootstrap on the truncated long-run covariance of the
//! studentized estimator.
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`); the
//! `*64` aliases below fix the scalar to `f64`.

pub mod bootstrap;
pub mod data;
pub mod dgp;
pub mod error;
pub mod estimators;
pub mod experiment;
pub mod inference;
pub mod io;
pub mod kernel;
pub mod longrun;
pub mod pipeline;
pub mod plot;
pub mod rng;
pub mod scalar;

pub use bootstrap::{empirical_quantile, sample_max_statistics, BootstrapConfig, MaxStatSample};
pub use data::{Dataset, PointSet, Region, RegionSpec};
pub use dgp::{generate_sample, DgpConfig, ErrorModel, TrueFunctions};
pub use error::{Result, ScrError};
pub use estimators::{estimate_beta, estimate_mu_star, estimate_sigma2, fit, EvalGrid, FitConfig, FitResult};
pub use experiment::{run_coverage_experiment, CoverageReport, ExperimentConfig};
pub use inference::{check_containment, construct_scr, coverage_indicator, ContainmentVerdict, NullSpec, ScrBand};
pub use kernel::{gcv_bandwidth, nw_weights, BandwidthSpec, KernelFamily, KernelSpec, WeightVector};
pub use longrun::{autocovariance, build_qhat, build_qhat_form, psd_repair, CovarianceForm, LagSpec, LongRunCov};
pub use pipeline::{analyze, Analysis, AnalysisConfig, PipelineError, Stage};
pub use scalar::Real;

pub type Dataset64 = Dataset<f64>;
pub type FitResult64 = FitResult<f64>;
pub type ScrBand64 = ScrBand<f64>;
pub type LongRunCov64 = LongRunCov<f64>;
pub type Analysis64 = Analysis<f64>;
pub type Dataset32 = Dataset<f32>;
pub type FitResult32 = FitResult<f32>;
pub type ScrBand32 = ScrBand<f32>;
