//! Robinson's estimator of the linear coefficients, the local constant trend
//! estimator and the conditional volatility estimator.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::data::{Dataset, PointSet};
use crate::error::{Result, ScrError};
use crate::kernel::{check_bandwidth, nw_weights, sample_weight_rows, KernelSpec, WeightVector};
use crate::scalar::Real;

/// Lower bound on the estimated volatility, in response units.
pub const SIGMA_FLOOR: f64 = 1e-6;

/// Largest accepted condition number of the residualized Gram matrix.
fn max_gram_condition<T: Real>() -> T {
    T::lit(1e12).min(T::lit(1e-2) / T::machine_epsilon())
}

fn smooth_with_rows<T: Real>(rows: &[WeightVector<T>], values: &[T], ncols: usize) -> Vec<T> {
    let n = rows.len();
    let mut out = vec![T::zero(); n * ncols];
    for (i, w) in rows.iter().enumerate() {
        for (t, &wt) in w.weights.iter().enumerate() {
            if wt == T::zero() {
                continue;
            }
            for c in 0..ncols {
                out[i * ncols + c] += wt * values[t * ncols + c];
            }
        }
    }
    out
}

/// Smooths a series (or the columns of a row-major `n x ncols` matrix)
/// with the weights anchored at each sample point: element `i` is
/// `sum_t w_h(X_i, X_t) v_t`.
pub fn kernel_smooth_series<T: Real>(
    values: &[T],
    ncols: usize,
    points: &PointSet<T>,
    h: T,
    spec: &KernelSpec,
) -> Result<Vec<T>> {
    if ncols == 0 || values.len() != points.len() * ncols {
        return Err(ScrError::arg("series length does not match the number of points"));
    }
    let rows = sample_weight_rows(points, h, spec)?;
    Ok(smooth_with_rows(&rows, values, ncols))
}

/// Robinson estimate with a descriptive standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaEstimate<T> {
    pub beta: Vec<T>,
    /// Homoskedastic, serially uncorrelated standard errors. Descriptive only.
    pub naive_std_err: Vec<T>,
    /// Condition number of the residualized Gram matrix.
    pub gram_condition: T,
}

fn robinson_from_rows<T: Real>(data: &Dataset<T>, rows: &[WeightVector<T>]) -> Result<BetaEstimate<T>> {
    let l = data.n_linear();
    let y_tilde = smooth_with_rows(rows, data.y(), 1);
    let z_tilde = smooth_with_rows(rows, data.z(), l);
    let idx = data.masked_indices();
    let m = idx.len();

    let design = DMatrix::from_fn(m, l, |r, c| {
        let i = idx[r];
        data.z()[i * l + c] - z_tilde[i * l + c]
    });
    let target = DVector::from_fn(m, |r, _| data.y()[idx[r]] - y_tilde[idx[r]]);

    let qr = design.clone().qr();
    let r = qr.r();
    let sv = r.singular_values();
    let smax = sv.max();
    let smin = sv.min();
    let condition = if smin > T::zero() { (smax / smin) * (smax / smin) } else { T::lit(f64::INFINITY) };
    if !(condition <= max_gram_condition::<T>()) {
        return Err(ScrError::SingularDesign { condition: condition.to_f64_lossy() });
    }

    let mut qtb = target.clone();
    qr.q_tr_mul(&mut qtb);
    let rhs = qtb.rows(0, l).into_owned();
    let beta = r
        .solve_upper_triangular(&rhs)
        .ok_or_else(|| ScrError::Numerical("triangular solve failed".into()))?;

    let resid = &target - &design * &beta;
    let dof = m.saturating_sub(l);
    let s2 = if dof > 0 { resid.norm_squared() / T::from_usize_lossy(dof) } else { T::lit(f64::NAN) };
    let r_inv = r
        .try_inverse()
        .ok_or_else(|| ScrError::Numerical("triangular inverse failed".into()))?;
    let naive_std_err = (0..l)
        .map(|k| (s2 * r_inv.row(k).norm_squared()).sqrt())
        .collect();

    Ok(BetaEstimate { beta: beta.iter().copied().collect(), naive_std_err, gram_condition: condition })
}

/// Robinson's estimator computed on the in-region observations, with
/// `Y` and `Z` residualized on the covariates.
pub fn estimate_beta_full<T: Real>(data: &Dataset<T>, h: T, spec: &KernelSpec) -> Result<BetaEstimate<T>> {
    check_bandwidth(h)?;
    let rows = sample_weight_rows(data.x(), h, spec)?;
    robinson_from_rows(data, &rows)
}

pub fn estimate_beta<T: Real>(data: &Dataset<T>, h: T, spec: &KernelSpec) -> Result<Vec<T>> {
    estimate_beta_full(data, h, spec).map(|b| b.beta)
}

/// `mu*(x) = sum_i w_h(x, X_i) (Y_i - Z_i^T beta)`.
pub fn estimate_mu_star<T: Real>(x: &[T], data: &Dataset<T>, beta: &[T], h: T, spec: &KernelSpec) -> Result<T> {
    check_beta(data, beta)?;
    let w = nw_weights(x, data.x(), h, spec)?;
    Ok(w.apply(&data.partial_response(beta)))
}

fn weighted_sq_dev<T: Real>(w: &WeightVector<T>, values: &[T], center: T) -> T {
    w.weights.iter().zip(values).fold(T::zero(), |acc, (&wt, &v)| {
        if wt == T::zero() {
            acc
        } else {
            acc + wt * (v - center) * (v - center)
        }
    })
}

/// `sigma^2(x) = sum_t w_h(x, X_t) (Y_t - Z_t^T beta - mu*(x))^2`, floored at
/// `SIGMA_FLOOR^2`.
pub fn estimate_sigma2<T: Real>(
    x: &[T],
    data: &Dataset<T>,
    beta: &[T],
    mu_at_x: T,
    h: T,
    spec: &KernelSpec,
) -> Result<T> {
    check_beta(data, beta)?;
    let w = nw_weights(x, data.x(), h, spec)?;
    let floor = T::lit(SIGMA_FLOOR * SIGMA_FLOOR);
    Ok(weighted_sq_dev(&w, &data.partial_response(beta), mu_at_x).max(floor))
}

fn check_beta<T: Real>(data: &Dataset<T>, beta: &[T]) -> Result<()> {
    if beta.len() != data.n_linear() {
        return Err(ScrError::arg(format!(
            "beta has {} entries, design has {} columns",
            beta.len(),
            data.n_linear()
        )));
    }
    Ok(())
}

/// Where the trend and volatility are evaluated.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum EvalGrid<T> {
    /// In-region sample points, in time order.
    #[default]
    MaskedSample,
    Custom(PointSet<T>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig<T> {
    pub kernel: KernelSpec,
    pub bandwidth: T,
    pub grid: EvalGrid<T>,
}

impl<T: Real> FitConfig<T> {
    pub fn new(kernel: KernelSpec, bandwidth: T) -> Self {
        Self { kernel, bandwidth, grid: EvalGrid::MaskedSample }
    }
}

/// Point estimates over the evaluation grid plus the sample-level
/// quantities needed for the long-run covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult<T> {
    pub beta_hat: Vec<T>,
    pub beta_naive_se: Vec<T>,
    pub bandwidth: T,
    pub kernel: KernelSpec,
    pub eval_points: PointSet<T>,
    pub mu_star: Vec<T>,
    pub sigma_hat: Vec<T>,
    /// Evaluation points whose volatility sits at the floor.
    pub sigma_floored: Vec<bool>,
    /// Studentized residuals at the in-region observations, in time order.
    pub residuals: Vec<T>,
    /// `mu*`, `sigma` and studentized residuals at every observation.
    pub sample_mu: Vec<T>,
    pub sample_sigma: Vec<T>,
    pub sample_residuals: Vec<T>,
    pub sample_sigma_floored: Vec<bool>,
    /// Observation index of each evaluation point when the grid is the masked sample.
    pub eval_sample_index: Option<Vec<usize>>,
    /// Grid points skipped because their kernel window was empty.
    pub dropped: Vec<Vec<T>>,
}

impl<T: Real> FitResult<T> {
    pub fn any_sigma_floored(&self) -> bool {
        self.sample_sigma_floored.iter().chain(&self.sigma_floored).any(|&f| f)
    }
}

/// Point estimation on the configured grid: weights, `beta`, `mu*`,
/// `sigma` and the studentized residuals.
pub fn fit<T: Real>(data: &Dataset<T>, config: &FitConfig<T>) -> Result<FitResult<T>> {
    let h = config.bandwidth;
    let spec = &config.kernel;
    check_bandwidth(h)?;
    if spec.dim() != data.dim() {
        return Err(ScrError::arg(format!(
            "kernel dimension {} does not match covariate dimension {}",
            spec.dim(),
            data.dim()
        )));
    }
    let rows = sample_weight_rows(data.x(), h, spec)?;
    let est = robinson_from_rows(data, &rows)?;
    let partial = data.partial_response(&est.beta);
    let floor2 = T::lit(SIGMA_FLOOR * SIGMA_FLOOR);

    let n = data.len();
    let mut sample_mu = Vec::with_capacity(n);
    let mut sample_sigma = Vec::with_capacity(n);
    let mut sample_sigma_floored = Vec::with_capacity(n);
    for w in &rows {
        let mu = w.apply(&partial);
        let s2 = weighted_sq_dev(w, &partial, mu);
        sample_mu.push(mu);
        sample_sigma_floored.push(s2 < floor2);
        sample_sigma.push(s2.max(floor2).sqrt());
    }
    let sample_residuals: Vec<T> = (0..n).map(|i| (partial[i] - sample_mu[i]) / sample_sigma[i]).collect();
    let masked = data.masked_indices();
    let residuals = masked.iter().map(|&i| sample_residuals[i]).collect();

    let eval_sample_index = matches!(config.grid, EvalGrid::MaskedSample).then(|| masked.clone());
    let (eval_points, mu_star, sigma_hat, sigma_floored, dropped) = match &config.grid {
        EvalGrid::MaskedSample => (
            data.x().select(&masked),
            masked.iter().map(|&i| sample_mu[i]).collect(),
            masked.iter().map(|&i| sample_sigma[i]).collect(),
            masked.iter().map(|&i| sample_sigma_floored[i]).collect(),
            Vec::new(),
        ),
        EvalGrid::Custom(grid) => {
            if grid.dim() != data.dim() {
                return Err(ScrError::arg("evaluation grid dimension does not match covariates"));
            }
            let evaluated: Vec<Result<(T, T)>> = grid
                .rows()
                .collect::<Vec<_>>()
                .into_par_iter()
                .map(|x| {
                    let w = nw_weights(x, data.x(), h, spec)?;
                    let mu = w.apply(&partial);
                    Ok((mu, weighted_sq_dev(&w, &partial, mu)))
                })
                .collect();
            let mut kept = Vec::new();
            let mut mu_star = Vec::new();
            let mut sigma_hat = Vec::new();
            let mut floored = Vec::new();
            let mut dropped = Vec::new();
            for (j, r) in evaluated.into_iter().enumerate() {
                match r {
                    Ok((mu, s2)) => {
                        kept.push(j);
                        mu_star.push(mu);
                        floored.push(s2 < floor2);
                        sigma_hat.push(s2.max(floor2).sqrt());
                    }
                    Err(ScrError::EmptyWindow { .. }) => dropped.push(grid.row(j).to_vec()),
                    Err(e) => return Err(e),
                }
            }
            if kept.is_empty() {
                return Err(ScrError::EmptyWindow { point: grid.row(0).iter().map(|v| v.to_f64_lossy()).collect() });
            }
            (grid.select(&kept), mu_star, sigma_hat, floored, dropped)
        }
    };

    Ok(FitResult {
        beta_hat: est.beta,
        beta_naive_se: est.naive_std_err,
        bandwidth: h,
        kernel: *spec,
        eval_points,
        mu_star,
        sigma_hat,
        sigma_floored,
        residuals,
        sample_mu,
        sample_sigma,
        sample_residuals,
        sample_sigma_floored,
        eval_sample_index,
        dropped,
    })
}
