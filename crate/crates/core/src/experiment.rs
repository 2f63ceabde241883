//! Monte Carlo coverage harness for the simulation design.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::data::RegionSpec;
use crate::dgp::{generate_sample, DgpConfig, ErrorModel, DEFAULT_BURN_IN};
use crate::error::{Result, ScrError};
use crate::inference::coverage_indicator;
use crate::kernel::{BandwidthSpec, KernelFamily};
use crate::longrun::{CovarianceForm, LagSpec, DEFAULT_MAX_GRID};
use crate::pipeline::{analyze, AnalysisConfig};
use crate::rng::child_seed;
use crate::scalar::Real;

/// Share of failed replications above which a cell is abandoned.
pub const MAX_FAILURE_RATE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n: usize,
    pub replications: usize,
    pub bandwidths: Vec<f64>,
    pub models: Vec<ErrorModel>,
    pub alpha: f64,
    pub draws: usize,
    pub lag: LagSpec,
    pub kernel: KernelFamily,
    pub burn_in: usize,
    pub seed: u64,
    pub max_grid: usize,
    pub covariance: CovarianceForm,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 200,
            replications: 1000,
            bandwidths: (0..=10).map(|k| 0.30 + 0.02 * k as f64).collect(),
            models: ErrorModel::standard_set().to_vec(),
            alpha: 0.05,
            draws: 1000,
            lag: LagSpec::SqrtN,
            kernel: KernelFamily::Epanechnikov,
            burn_in: DEFAULT_BURN_IN,
            seed: 20_240_501,
            max_grid: DEFAULT_MAX_GRID,
            covariance: CovarianceForm::default(),
        }
    }
}

impl ExperimentConfig {
    fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(ScrError::arg("need at least one replication"));
        }
        if self.bandwidths.is_empty() || self.models.is_empty() {
            return Err(ScrError::arg("bandwidth grid and model list must be non-empty"));
        }
        if self.bandwidths.iter().any(|&h| !(h > 0.0 && h.is_finite())) {
            return Err(ScrError::arg("bandwidths must be positive"));
        }
        Ok(())
    }

    /// Seed of the dataset for `(model, replication)`. Shared across
    /// bandwidths so that cells in one row see the same samples.
    pub fn data_seed(&self, model_index: usize, replication: usize) -> u64 {
        child_seed(self.seed, &[0, model_index as u64, replication as u64])
    }

    /// Bootstrap seed for `(cell, replication)`.
    pub fn bootstrap_seed(&self, cell_index: usize, replication: usize) -> u64 {
        child_seed(self.seed, &[1, cell_index as u64, replication as u64])
    }
}

/// Outcome of one replication.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Replication {
    pub covered: bool,
    pub q_alpha: f64,
    pub mean_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellReport {
    pub error_model: String,
    pub bandwidth: f64,
    /// `contained / replications`.
    pub coverage: f64,
    pub contained: usize,
    /// Successful replications.
    pub replications: usize,
    pub failures: usize,
    pub aborted: bool,
    pub n: usize,
    pub mean_q_alpha: f64,
    pub mean_band_width: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub failure_messages: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub cells: Vec<CellReport>,
    pub seed: u64,
    pub version: String,
    pub wall_time_secs: f64,
    pub n: usize,
    pub alpha: f64,
    pub draws: usize,
    pub replications: usize,
    pub covariance: String,
}

impl CoverageReport {
    pub fn cell(&self, model: ErrorModel, bandwidth: f64) -> Option<&CellReport> {
        let label = model.label();
        self.cells
            .iter()
            .find(|c| c.error_model == label && (c.bandwidth - bandwidth).abs() < 1e-12)
    }

    /// Coverage table: one row per bandwidth, one column per error model.
    pub fn table(&self) -> String {
        let mut models: Vec<&str> = Vec::new();
        let mut bws: Vec<f64> = Vec::new();
        for c in &self.cells {
            if !models.contains(&c.error_model.as_str()) {
                models.push(&c.error_model);
            }
            if !bws.iter().any(|&b| (b - c.bandwidth).abs() < 1e-12) {
                bws.push(c.bandwidth);
            }
        }
        let mut out = format!(
            "Coverage probability of {:.0}% SCR (n = {}, M = {})\n",
            100.0 * (1.0 - self.alpha),
            self.n,
            self.replications
        );
        out.push_str(&format!("{:>10}", "bandwidth"));
        for m in &models {
            out.push_str(&format!("{:>18}", m));
        }
        out.push('\n');
        for &b in &bws {
            out.push_str(&format!("{:>10.2}", b));
            for m in &models {
                let cell = self
                    .cells
                    .iter()
                    .find(|c| c.error_model == *m && (c.bandwidth - b).abs() < 1e-12);
                match cell {
                    Some(c) if !c.aborted => out.push_str(&format!("{:>18.3}", c.coverage)),
                    Some(_) => out.push_str(&format!("{:>18}", "aborted")),
                    None => out.push_str(&format!("{:>18}", "-")),
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Runs one replication of cell `(model_index, bandwidth)`.
pub fn run_replication<T: Real>(
    config: &ExperimentConfig,
    model_index: usize,
    cell_index: usize,
    bandwidth: f64,
    replication: usize,
) -> Result<Replication> {
    let dgp = DgpConfig::<T> {
        n: config.n,
        error_model: config.models[model_index],
        burn_in: config.burn_in,
        seed: config.data_seed(model_index, replication),
        region: RegionSpec::default(),
    };
    let (data, truth) = generate_sample(&dgp)?;
    let analysis_cfg = AnalysisConfig {
        kernel: config.kernel,
        bandwidth: BandwidthSpec::Fixed(T::lit(bandwidth)),
        gcv_grid: None,
        lag: config.lag,
        alpha: config.alpha,
        draws: config.draws,
        seed: config.bootstrap_seed(cell_index, replication),
        max_grid: config.max_grid,
        grid: Default::default(),
        covariance: config.covariance,
    };
    let analysis = analyze(&data, &analysis_cfg).map_err(|e| e.source)?;
    let covered = coverage_indicator(&analysis.band, |x| truth.mu(x[0]))?;
    Ok(Replication {
        covered,
        q_alpha: analysis.band.q_alpha.to_f64_lossy(),
        mean_width: analysis.band.mean_width().to_f64_lossy(),
    })
}

/// Coverage of the true trend for every `(model, bandwidth)` cell.
///
/// Replications run in parallel on the current rayon pool; results are
/// independent of scheduling.
pub fn run_coverage_experiment<T: Real>(config: &ExperimentConfig) -> Result<CoverageReport> {
    config.validate()?;
    let start = Instant::now();
    let nb = config.bandwidths.len();
    let m = config.replications;
    let jobs: Vec<(usize, usize, usize)> = (0..config.models.len())
        .flat_map(|mi| (0..nb).flat_map(move |bi| (0..m).map(move |r| (mi, bi, r))))
        .collect();
    let outcomes: Vec<Result<Replication>> = jobs
        .par_iter()
        .map(|&(mi, bi, r)| run_replication::<T>(config, mi, mi * nb + bi, config.bandwidths[bi], r))
        .collect();

    let mut cells = Vec::with_capacity(config.models.len() * nb);
    for (cell_index, chunk) in outcomes.chunks(m).enumerate() {
        let (mi, bi) = (cell_index / nb, cell_index % nb);
        let mut contained = 0;
        let mut ok = 0;
        let mut q_sum = 0.0;
        let mut w_sum = 0.0;
        let mut failure_messages = Vec::new();
        for o in chunk {
            match o {
                Ok(rep) => {
                    ok += 1;
                    contained += usize::from(rep.covered);
                    q_sum += rep.q_alpha;
                    w_sum += rep.mean_width;
                }
                Err(e) => {
                    if failure_messages.len() < 5 {
                        failure_messages.push(e.to_string());
                    }
                }
            }
        }
        let failures = m - ok;
        let aborted = failures as f64 > MAX_FAILURE_RATE * m as f64 || ok == 0;
        let denom = ok.max(1) as f64;
        cells.push(CellReport {
            error_model: config.models[mi].label(),
            bandwidth: config.bandwidths[bi],
            coverage: if ok > 0 { contained as f64 / ok as f64 } else { f64::NAN },
            contained,
            replications: ok,
            failures,
            aborted,
            n: config.n,
            mean_q_alpha: q_sum / denom,
            mean_band_width: w_sum / denom,
            failure_messages,
        });
    }

    Ok(CoverageReport {
        cells,
        seed: config.seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_secs: start.elapsed().as_secs_f64(),
        n: config.n,
        alpha: config.alpha,
        draws: config.draws,
        replications: m,
        covariance: config.covariance.to_string(),
    })
}
