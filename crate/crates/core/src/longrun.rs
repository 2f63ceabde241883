//! Residual autocovariances and the truncated conditional long-run
//! covariance of the studentized trend estimator over the evaluation grid.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::data::Dataset;
use crate::error::{Result, ScrError};
use crate::estimators::FitResult;
use crate::kernel::nw_weights;
use crate::scalar::Real;

/// Empirical autocovariances `gamma(0..L)` of a residual series.
#[derive(Debug, Clone, PartialEq)]
pub struct AutocovSeq<T> {
    pub gamma: Vec<T>,
    pub n_used: usize,
}

/// `gamma(k) = m^-1 sum_{i < m-k} e_i e_{i+k}` for `k = 0..lag`. The divisor
/// is the full length `m` at every lag.
pub fn autocovariance<T: Real>(residuals: &[T], lag: usize) -> Result<AutocovSeq<T>> {
    let m = residuals.len();
    if lag == 0 || lag > m {
        return Err(ScrError::arg(format!("lag must satisfy 1 <= L <= {m}, got {lag}")));
    }
    let denom = T::from_usize_lossy(m);
    let gamma = (0..lag)
        .map(|k| {
            residuals[..m - k]
                .iter()
                .zip(&residuals[k..])
                .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
                / denom
        })
        .collect();
    Ok(AutocovSeq { gamma, n_used: m })
}

/// Truncation lag choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LagSpec {
    Fixed(usize),
    /// `floor(sqrt(n))`.
    SqrtN,
}

impl LagSpec {
    pub fn resolve(self, n: usize) -> usize {
        match self {
            LagSpec::Fixed(l) => l,
            LagSpec::SqrtN => ((n as f64).sqrt().floor() as usize).max(1),
        }
    }
}

impl std::str::FromStr for LagSpec {
    type Err = ScrError;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("sqrt") {
            return Ok(LagSpec::SqrtN);
        }
        s.parse::<usize>()
            .ok()
            .filter(|&l| l >= 1)
            .map(LagSpec::Fixed)
            .ok_or_else(|| ScrError::arg(format!("lag must be a positive integer or 'sqrt', got '{s}'")))
    }
}

/// Default cap on the number of grid points entering the covariance matrix.
pub const DEFAULT_MAX_GRID: usize = 400;

/// `max` indices spread uniformly over `0..m`, or all of them.
pub fn thin_indices(m: usize, max: usize) -> Vec<usize> {
    if m <= max || max == 0 {
        return (0..m).collect();
    }
    if max == 1 {
        return vec![0];
    }
    let step = (m - 1) as f64 / (max - 1) as f64;
    (0..max).map(|k| (k as f64 * step).round() as usize).collect()
}

#[derive(Debug, Clone, PartialEq)]
struct Spectral<T> {
    eigenvalues: Vec<T>,
    /// Symmetric square root `V diag(sqrt(lambda)) V^T`.
    root: DMatrix<T>,
}

/// Long-run covariance over (a subset of) the evaluation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LongRunCov<T> {
    pub matrix: DMatrix<T>,
    pub lag: usize,
    /// Total amount added to the spectrum by [`LongRunCov::repaired`].
    pub psd_shift: T,
    /// Rows/columns refer to these indices of the fit's evaluation grid.
    pub grid_indices: Vec<usize>,
    /// Set when some volatility estimate entering the matrix sits at the floor.
    pub sigma_floor_warning: bool,
    spectral: Option<Spectral<T>>,
}

impl<T: Real> LongRunCov<T> {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_repaired(&self) -> bool {
        self.spectral.is_some()
    }

    /// Wraps an arbitrary symmetric matrix (testing and external use).
    pub fn from_matrix(matrix: DMatrix<T>, lag: usize) -> Result<Self> {
        if !matrix.is_square() {
            return Err(ScrError::arg("covariance matrix must be square"));
        }
        let m = matrix.nrows();
        Ok(Self {
            matrix,
            lag,
            psd_shift: T::zero(),
            grid_indices: (0..m).collect(),
            sigma_floor_warning: false,
            spectral: None,
        })
    }

    /// Applies [`psd_repair`] and caches the symmetric square root.
    pub fn repaired(self) -> Result<Self> {
        let rep = psd_repair(&self.matrix)?;
        let sqrt_vals = rep.eigenvalues.iter().map(|&v| v.max(T::zero()).sqrt());
        let scaled = DMatrix::from_fn(rep.eigenvectors.nrows(), rep.eigenvectors.ncols(), {
            let s: Vec<T> = sqrt_vals.collect();
            let v = &rep.eigenvectors;
            move |r, c| v[(r, c)] * s[c]
        });
        let root = symmetrize(&(&scaled * rep.eigenvectors.transpose()));
        Ok(Self {
            matrix: rep.matrix,
            psd_shift: self.psd_shift + rep.psd_shift,
            spectral: Some(Spectral { eigenvalues: rep.eigenvalues, root }),
            ..self
        })
    }

    /// Eigenvalues after repair.
    pub fn eigenvalues(&self) -> Option<&[T]> {
        self.spectral.as_ref().map(|s| s.eigenvalues.as_slice())
    }

    pub(crate) fn root(&self) -> Option<&DMatrix<T>> {
        self.spectral.as_ref().map(|s| &s.root)
    }
}

fn symmetrize<T: Real>(q: &DMatrix<T>) -> DMatrix<T> {
    let half = T::lit(0.5);
    DMatrix::from_fn(q.nrows(), q.ncols(), |r, c| (q[(r, c)] + q[(c, r)]) * half)
}

/// How the long-run covariance is assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CovarianceForm {
    /// Lags `|k| < L` between observations, with the volatility ratios
    /// `sigma(X_i) sigma(X_{i+k}) / (sigma(x_j) sigma(x_j'))`. Works on any grid.
    #[default]
    VolatilityWeighted,
    /// The abbreviated recipe: the lag is tied to the time distance of the two
    /// grid points, `Q_{j,j'} = h^d n gamma(|j-j'|) sum_i w_h(X_j, X_i) w_h(X_j', X_{i+j-j'})`
    /// for `|j - j'| <= L` and zero otherwise, without volatility ratios.
    /// Only defined when the grid is the masked sample.
    IndexBanded,
}

impl std::str::FromStr for CovarianceForm {
    type Err = ScrError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "weighted" | "volatility-weighted" => Ok(Self::VolatilityWeighted),
            "banded" | "index-banded" => Ok(Self::IndexBanded),
            other => Err(ScrError::arg(format!("unknown covariance form '{other}' (weighted|banded)"))),
        }
    }
}

impl std::fmt::Display for CovarianceForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::VolatilityWeighted => "weighted",
            Self::IndexBanded => "banded",
        })
    }
}

/// Builds the truncated long-run covariance on all evaluation points.
pub fn build_qhat<T: Real>(fit: &FitResult<T>, data: &Dataset<T>, lag: usize) -> Result<LongRunCov<T>> {
    build_qhat_on(fit, data, lag, &(0..fit.eval_points.len()).collect::<Vec<_>>())
}

/// Builds the covariance in the requested form on at most `max_points`
/// thinned evaluation points.
pub fn build_qhat_form<T: Real>(
    fit: &FitResult<T>,
    data: &Dataset<T>,
    lag: usize,
    max_points: usize,
    form: CovarianceForm,
) -> Result<LongRunCov<T>> {
    let grid = thin_indices(fit.eval_points.len(), max_points);
    match form {
        CovarianceForm::VolatilityWeighted => build_qhat_on(fit, data, lag, &grid),
        CovarianceForm::IndexBanded => build_qhat_banded(fit, data, lag, &grid),
    }
}

/// Same as [`build_qhat`], restricted to at most `max_points` uniformly
/// thinned evaluation points.
pub fn build_qhat_thinned<T: Real>(
    fit: &FitResult<T>,
    data: &Dataset<T>,
    lag: usize,
    max_points: usize,
) -> Result<LongRunCov<T>> {
    build_qhat_on(fit, data, lag, &thin_indices(fit.eval_points.len(), max_points))
}

/// `Q_{j,j'} = h^d n sum_{|k|<L} sum_i c_{j,j',i,k} w_h(x_j, X_i) w_h(x_j', X_{i+k}) gamma(|k|)`
/// with `c = sigma(X_i) sigma(X_{i+k}) / (sigma(x_j) sigma(x_j'))`.
///
/// Assembled as `h^d n A G A^T`, where `A_{j,i} = w_h(x_j, X_i) sigma(X_i) / sigma(x_j)`
/// and `G` is the banded Toeplitz matrix of `gamma`.
fn build_qhat_on<T: Real>(fit: &FitResult<T>, data: &Dataset<T>, lag: usize, grid: &[usize]) -> Result<LongRunCov<T>> {
    let n = data.len();
    if lag == 0 || lag >= n {
        return Err(ScrError::arg(format!("lag must satisfy 1 <= L < n = {n}, got {lag}")));
    }
    if fit.sample_residuals.len() != n || fit.sample_sigma.len() != n {
        return Err(ScrError::arg("fit does not belong to this dataset"));
    }
    let acov = autocovariance(&fit.sample_residuals, lag)?;
    let gamma = &acov.gamma;
    let h = fit.bandwidth;
    let m = grid.len();

    let a_rows: Vec<Vec<T>> = grid
        .par_iter()
        .map(|&j| {
            let w = nw_weights(fit.eval_points.row(j), data.x(), h, &fit.kernel)?;
            let sj = fit.sigma_hat[j];
            Ok(w.weights
                .iter()
                .zip(&fit.sample_sigma)
                .map(|(&wi, &si)| wi * si / sj)
                .collect())
        })
        .collect::<Result<_>>()?;
    let a = DMatrix::from_fn(m, n, |r, c| a_rows[r][c]);

    // B = A G, using only lags |k| < L.
    let b_rows: Vec<Vec<T>> = a_rows
        .par_iter()
        .map(|row| {
            let mut out = vec![T::zero(); n];
            for (i, &ai) in row.iter().enumerate() {
                if ai == T::zero() {
                    continue;
                }
                let lo = i.saturating_sub(lag - 1);
                let hi = (i + lag - 1).min(n - 1);
                for (ip, o) in out.iter_mut().enumerate().take(hi + 1).skip(lo) {
                    *o += ai * gamma[i.abs_diff(ip)];
                }
            }
            out
        })
        .collect();
    let b = DMatrix::from_fn(m, n, |r, c| b_rows[r][c]);

    let scale = h.powi(data.dim() as i32) * T::from_usize_lossy(n);
    let q = (b * a.transpose()) * scale;

    // Only floored volatilities that actually carry weight matter.
    let sigma_floor_warning = grid.iter().any(|&j| fit.sigma_floored[j])
        || (0..n).any(|i| fit.sample_sigma_floored[i] && a_rows.iter().any(|row| row[i] != T::zero()));
    Ok(LongRunCov {
        matrix: symmetrize(&q),
        lag,
        psd_shift: T::zero(),
        grid_indices: grid.to_vec(),
        sigma_floor_warning,
        spectral: None,
    })
}

fn build_qhat_banded<T: Real>(fit: &FitResult<T>, data: &Dataset<T>, lag: usize, grid: &[usize]) -> Result<LongRunCov<T>> {
    let n = data.len();
    if lag == 0 || lag >= n {
        return Err(ScrError::arg(format!("lag must satisfy 1 <= L < n = {n}, got {lag}")));
    }
    if fit.sample_residuals.len() != n {
        return Err(ScrError::arg("fit does not belong to this dataset"));
    }
    let times = fit
        .eval_sample_index
        .as_ref()
        .ok_or_else(|| ScrError::arg("the banded covariance form needs the masked-sample evaluation grid"))?;
    let gamma = autocovariance(&fit.sample_residuals, lag + 1)?.gamma;
    let h = fit.bandwidth;
    let m = grid.len();
    let weights: Vec<Vec<T>> = grid
        .par_iter()
        .map(|&j| nw_weights(fit.eval_points.row(j), data.x(), h, &fit.kernel).map(|w| w.weights))
        .collect::<Result<_>>()?;
    let scale = h.powi(data.dim() as i32) * T::from_usize_lossy(n);

    let rows: Vec<Vec<T>> = (0..m)
        .into_par_iter()
        .map(|a| {
            let ta = times[grid[a]];
            (0..m)
                .map(|b| {
                    let tb = times[grid[b]];
                    let k = ta.abs_diff(tb);
                    if k > lag {
                        return T::zero();
                    }
                    // Pairs (i, i + ta - tb) with both indices in range.
                    let s = if ta >= tb {
                        weights[a][..n - k].iter().zip(&weights[b][k..]).fold(T::zero(), |acc, (&u, &v)| acc + u * v)
                    } else {
                        weights[a][k..].iter().zip(&weights[b][..n - k]).fold(T::zero(), |acc, (&u, &v)| acc + u * v)
                    };
                    scale * s * gamma[k]
                })
                .collect()
        })
        .collect();
    let q = DMatrix::from_fn(m, m, |r, c| rows[r][c]);
    Ok(LongRunCov {
        matrix: symmetrize(&q),
        lag,
        psd_shift: T::zero(),
        grid_indices: grid.to_vec(),
        sigma_floor_warning: grid.iter().any(|&j| fit.sigma_floored[j]),
        spectral: None,
    })
}

/// Result of [`psd_repair`].
#[derive(Debug, Clone, PartialEq)]
pub struct PsdRepair<T> {
    pub matrix: DMatrix<T>,
    /// `max(0, -lambda_min)` plus the jitter.
    pub psd_shift: T,
    /// Spectrum of `matrix` (clipped, plus jitter).
    pub eigenvalues: Vec<T>,
    pub eigenvectors: DMatrix<T>,
}

/// Clips negative eigenvalues to zero and adds a jitter of
/// `1e-12 * trace / m` to the whole spectrum.
pub fn psd_repair<T: Real>(q: &DMatrix<T>) -> Result<PsdRepair<T>> {
    if !q.is_square() {
        return Err(ScrError::arg("psd_repair needs a square matrix"));
    }
    let m = q.nrows();
    if m == 0 {
        return Err(ScrError::arg("psd_repair needs a non-empty matrix"));
    }
    if q.iter().any(|v| !v.is_finite()) {
        return Err(ScrError::Numerical("covariance matrix has non-finite entries".into()));
    }
    let eig = SymmetricEigen::try_new(q.clone(), T::default_epsilon(), 1000 * m.max(10)).ok_or_else(|| {
        let diag_min = q.diagonal().min();
        let diag_max = q.diagonal().max();
        ScrError::Numerical(format!(
            "symmetric eigendecomposition did not converge (m = {m}, diagonal range [{diag_min:e}, {diag_max:e}], Frobenius norm {:e})",
            q.norm()
        ))
    })?;
    let lambda_min = eig.eigenvalues.min();
    let trace = q.trace().max(T::zero());
    let jitter = T::lit(1e-12) * trace / T::from_usize_lossy(m);
    let clip = (-lambda_min).max(T::zero());
    let eigenvalues: Vec<T> = eig.eigenvalues.iter().map(|&v| v.max(T::zero()) + jitter).collect();

    let matrix = if lambda_min >= T::zero() {
        let mut out = q.clone();
        for i in 0..m {
            out[(i, i)] += jitter;
        }
        out
    } else {
        let v = &eig.eigenvectors;
        let scaled = DMatrix::from_fn(m, m, |r, c| v[(r, c)] * eigenvalues[c]);
        symmetrize(&(scaled * v.transpose()))
    };
    Ok(PsdRepair { matrix, psd_shift: clip + jitter, eigenvalues, eigenvectors: eig.eigenvectors })
}
