//! End-to-end band construction: weights, `beta`, `mu*`, `sigma`, the
//! long-run covariance with its bootstrap critical value, and the band.

use thiserror::Error;

use crate::bootstrap::{sample_max_statistics, BootstrapConfig, MaxStatSample};
use crate::data::Dataset;
use crate::error::ScrError;
use crate::estimators::{fit, EvalGrid, FitConfig, FitResult};
use crate::inference::{construct_scr, ScrBand};
use crate::kernel::{default_gcv_grid, BandwidthSpec, KernelFamily, KernelSpec};
use crate::longrun::{build_qhat_form, CovarianceForm, LagSpec, DEFAULT_MAX_GRID};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Bandwidth,
    Estimation,
    Covariance,
    Bootstrap,
    Band,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Stage::Config => "configuration",
            Stage::Bandwidth => "bandwidth selection",
            Stage::Estimation => "point estimation",
            Stage::Covariance => "long-run covariance",
            Stage::Bootstrap => "bootstrap calibration",
            Stage::Band => "band construction",
        };
        f.write_str(s)
    }
}

/// A module error tagged with the pipeline stage it came from.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{stage}: {source}")]
pub struct PipelineError {
    pub stage: Stage,
    #[source]
    pub source: ScrError,
}

trait AtStage<V> {
    fn at(self, stage: Stage) -> Result<V, PipelineError>;
}

impl<V> AtStage<V> for Result<V, ScrError> {
    fn at(self, stage: Stage) -> Result<V, PipelineError> {
        self.map_err(|source| PipelineError { stage, source })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisConfig<T> {
    pub kernel: KernelFamily,
    pub bandwidth: BandwidthSpec<T>,
    /// Candidates for GCV; `None` uses [`default_gcv_grid`].
    pub gcv_grid: Option<Vec<T>>,
    pub lag: LagSpec,
    pub alpha: f64,
    pub draws: usize,
    pub seed: u64,
    /// Cap on grid points entering the covariance matrix.
    pub max_grid: usize,
    pub grid: EvalGrid<T>,
    pub covariance: CovarianceForm,
}

impl<T: Real> AnalysisConfig<T> {
    pub fn with_bandwidth(h: T) -> Self {
        Self {
            kernel: KernelFamily::Epanechnikov,
            bandwidth: BandwidthSpec::Fixed(h),
            gcv_grid: None,
            lag: LagSpec::SqrtN,
            alpha: 0.05,
            draws: 1000,
            seed: 0,
            max_grid: DEFAULT_MAX_GRID,
            grid: EvalGrid::MaskedSample,
            covariance: CovarianceForm::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Analysis<T> {
    pub fit: FitResult<T>,
    pub band: ScrBand<T>,
    pub max_stats: MaxStatSample<T>,
    pub bandwidth: T,
    pub lag: usize,
    pub covariance: CovarianceForm,
    pub psd_shift: T,
    /// Grid points used for the covariance matrix.
    pub covariance_points: usize,
    pub sigma_floor_warning: bool,
}

pub fn analyze<T: Real>(data: &Dataset<T>, config: &AnalysisConfig<T>) -> Result<Analysis<T>, PipelineError> {
    let boot = BootstrapConfig::new(config.draws, config.alpha, config.seed).at(Stage::Config)?;
    let kernel = KernelSpec::new(config.kernel, data.dim()).at(Stage::Config)?;
    let n = data.len();
    let lag = config.lag.resolve(n);

    let h = {
        let default_grid;
        let grid = match &config.gcv_grid {
            Some(g) => g.as_slice(),
            None => {
                default_grid = default_gcv_grid(data.x());
                default_grid.as_slice()
            }
        };
        config.bandwidth.resolve(data.y(), data.x(), &kernel, grid).at(Stage::Bandwidth)?
    };

    let fit_cfg = FitConfig { kernel, bandwidth: h, grid: config.grid.clone() };
    let fit = fit(data, &fit_cfg).at(Stage::Estimation)?;

    let cov = build_qhat_form(&fit, data, lag, config.max_grid, config.covariance)
        .and_then(|c| c.repaired())
        .at(Stage::Covariance)?;
    let max_stats = sample_max_statistics(&cov, h, data.dim(), n, &boot).at(Stage::Bootstrap)?;
    let q_alpha = max_stats.critical_value(config.alpha).at(Stage::Bootstrap)?;
    let band = construct_scr(&fit, q_alpha, config.alpha, lag).at(Stage::Band)?;

    Ok(Analysis {
        band,
        bandwidth: h,
        lag,
        covariance: config.covariance,
        psd_shift: cov.psd_shift,
        covariance_points: cov.dim(),
        sigma_floor_warning: cov.sigma_floor_warning || fit.sigma_floored.iter().any(|&f| f),
        max_stats,
        fit,
    })
}
