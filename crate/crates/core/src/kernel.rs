//! Product kernels, Nadaraya–Watson weights and GCV bandwidth selection.

use rayon::prelude::*;

use crate::data::PointSet;
use crate::error::{Result, ScrError};
use crate::scalar::Real;

/// `P(|N(0,1)| <= 1)`; normalizes the Gaussian density restricted to `[-1, 1]`.
const TRUNCATED_GAUSSIAN_MASS: f64 = 0.682_689_492_137_085_9;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelFamily {
    /// `3/4 (1 - u^2)` on `[-1, 1]`.
    Epanechnikov,
    /// Standard normal density restricted to `[-1, 1]` and renormalized.
    GaussianTruncated,
}

impl std::str::FromStr for KernelFamily {
    type Err = ScrError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "epanechnikov" | "epa" => Ok(KernelFamily::Epanechnikov),
            "gaussian" | "gaussian-truncated" | "truncated-gaussian" => Ok(KernelFamily::GaussianTruncated),
            other => Err(ScrError::arg(format!("unknown kernel family '{other}'"))),
        }
    }
}

impl std::fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            KernelFamily::Epanechnikov => f.write_str("epanechnikov"),
            KernelFamily::GaussianTruncated => f.write_str("gaussian-truncated"),
        }
    }
}

/// A `d`-variate product kernel supported on `[-1, 1]^d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KernelSpec {
    family: KernelFamily,
    dim: usize,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(ScrError::arg("kernel dimension must be positive"));
        }
        Ok(Self { family, dim })
    }

    pub fn epanechnikov(dim: usize) -> Result<Self> {
        Self::new(KernelFamily::Epanechnikov, dim)
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// One univariate factor.
    #[inline]
    pub fn univariate<T: Real>(&self, u: T) -> T {
        if u.abs() > T::one() {
            return T::zero();
        }
        match self.family {
            KernelFamily::Epanechnikov => T::lit(0.75) * (T::one() - u * u),
            KernelFamily::GaussianTruncated => {
                T::lit(INV_SQRT_2PI / TRUNCATED_GAUSSIAN_MASS) * (-(u * u) * T::lit(0.5)).exp()
            }
        }
    }

    /// `K(u)`, no dimension check.
    #[inline]
    fn product<T: Real>(&self, u: impl Iterator<Item = T>) -> T {
        let mut acc = T::one();
        for ui in u {
            let k = self.univariate(ui);
            if k == T::zero() {
                return T::zero();
            }
            acc *= k;
        }
        acc
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.dim {
            return Err(ScrError::arg(format!(
                "kernel has dimension {} but argument has {len} coordinates",
                self.dim
            )));
        }
        Ok(())
    }

    /// `K(u)`.
    pub fn eval<T: Real>(&self, u: &[T]) -> Result<T> {
        self.check_dim(u.len())?;
        Ok(self.product(u.iter().copied()))
    }

    /// `K_h(v) = K(v / h) / h^d`.
    pub fn eval_scaled<T: Real>(&self, h: T, v: &[T]) -> Result<T> {
        check_bandwidth(h)?;
        self.check_dim(v.len())?;
        Ok(self.scaled_unchecked(h, v))
    }

    #[inline]
    fn scaled_unchecked<T: Real>(&self, h: T, v: &[T]) -> T {
        let k = self.product(v.iter().map(|&vi| vi / h));
        if k == T::zero() {
            k
        } else {
            k / h.powi(self.dim as i32)
        }
    }

    /// `K_h(x - X_t)` for every `t`.
    fn scaled_row<T: Real>(&self, h: T, x: &[T], points: &PointSet<T>) -> Vec<T> {
        let mut diff = vec![T::zero(); self.dim];
        points
            .rows()
            .map(|p| {
                for ((dj, &xj), &pj) in diff.iter_mut().zip(x).zip(p) {
                    *dj = xj - pj;
                }
                self.scaled_unchecked(h, &diff)
            })
            .collect()
    }
}

pub fn kernel_eval<T: Real>(spec: &KernelSpec, u: &[T]) -> Result<T> {
    spec.eval(u)
}

pub fn scaled_kernel_eval<T: Real>(spec: &KernelSpec, h: T, v: &[T]) -> Result<T> {
    spec.eval_scaled(h, v)
}

pub(crate) fn check_bandwidth<T: Real>(h: T) -> Result<()> {
    if !(h.is_finite() && h > T::zero()) {
        return Err(ScrError::arg(format!("bandwidth must be positive and finite, got {h}")));
    }
    Ok(())
}

/// Normalized kernel weights anchored at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector<T> {
    pub weights: Vec<T>,
    pub anchor: Vec<T>,
}

impl<T: Real> WeightVector<T> {
    /// `sum_t w_t v_t`.
    pub fn apply(&self, values: &[T]) -> T {
        self.weights
            .iter()
            .zip(values)
            .fold(T::zero(), |acc, (&w, &v)| if w == T::zero() { acc } else { acc + w * v })
    }
}

/// Nadaraya–Watson weights `w_h(x, X_t) = K_h(x - X_t) / sum_s K_h(x - X_s)`.
///
/// Fails with [`ScrError::EmptyWindow`] when no point lies within the
/// kernel window around `x`.
pub fn nw_weights<T: Real>(x: &[T], points: &PointSet<T>, h: T, spec: &KernelSpec) -> Result<WeightVector<T>> {
    check_bandwidth(h)?;
    spec.check_dim(x.len())?;
    spec.check_dim(points.dim())?;
    if points.is_empty() {
        return Err(ScrError::arg("no sample points"));
    }
    let mut weights = spec.scaled_row(h, x, points);
    let total = weights.iter().fold(T::zero(), |acc, &w| acc + w);
    if !(total > T::lit(1e-300)) {
        return Err(ScrError::EmptyWindow {
            point: x.iter().map(|v| v.to_f64_lossy()).collect(),
        });
    }
    for w in &mut weights {
        *w /= total;
    }
    Ok(WeightVector { weights, anchor: x.to_vec() })
}

/// Weights anchored at every sample point. Never empty: the self-weight is `K(0) > 0`.
pub(crate) fn sample_weight_rows<T: Real>(points: &PointSet<T>, h: T, spec: &KernelSpec) -> Result<Vec<WeightVector<T>>> {
    (0..points.len())
        .into_par_iter()
        .map(|i| nw_weights(points.row(i), points, h, spec))
        .collect()
}

/// How the smoothing bandwidth is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum BandwidthSpec<T> {
    Fixed(T),
    /// GCV choice scaled by `multiplier * n^(-exponent)`.
    GcvUndersmoothed { multiplier: T, exponent: T },
}

impl<T: Real> BandwidthSpec<T> {
    /// Default undersmoothing: `c_u = 1`, `delta_u = 2/15`.
    pub fn gcv_default() -> Self {
        BandwidthSpec::GcvUndersmoothed { multiplier: T::one(), exponent: T::lit(2.0 / 15.0) }
    }

    pub fn resolve(&self, y: &[T], points: &PointSet<T>, spec: &KernelSpec, grid: &[T]) -> Result<T> {
        match *self {
            BandwidthSpec::Fixed(h) => {
                check_bandwidth(h)?;
                Ok(h)
            }
            BandwidthSpec::GcvUndersmoothed { multiplier, exponent } => {
                if !(multiplier > T::zero() && exponent > T::zero()) {
                    return Err(ScrError::arg("undersmoothing multiplier and exponent must be positive"));
                }
                let sel = gcv_bandwidth(y, points, spec, grid)?;
                Ok(undersmooth(sel.bandwidth, y.len(), multiplier, exponent))
            }
        }
    }
}

/// `h * c * n^(-delta)`.
pub fn undersmooth<T: Real>(h: T, n: usize, multiplier: T, exponent: T) -> T {
    h * multiplier * T::from_usize_lossy(n).powf(-exponent)
}

/// Outcome of a GCV grid search.
#[derive(Debug, Clone, PartialEq)]
pub struct GcvSelection<T> {
    pub bandwidth: T,
    /// `(h, GCV(h))`; `None` where `tr(S_h)/n >= 1`.
    pub scores: Vec<(T, Option<T>)>,
}

/// GCV score and `(1 - tr(S_h)/n)^2` for one bandwidth.
fn gcv_score<T: Real>(y: &[T], points: &PointSet<T>, spec: &KernelSpec, h: T) -> Result<Option<(T, T)>> {
    let rows = sample_weight_rows(points, h, spec)?;
    let n = T::from_usize_lossy(y.len());
    let mut rss = T::zero();
    let mut trace = T::zero();
    for (i, w) in rows.iter().enumerate() {
        trace += w.weights[i];
        // Y_i - sum_t w_t Y_t, written so that constant data gives exactly zero.
        let resid = w
            .weights
            .iter()
            .zip(y)
            .fold(T::zero(), |acc, (&wt, &yt)| if wt == T::zero() { acc } else { acc + wt * (y[i] - yt) });
        rss += resid * resid;
    }
    let ratio = trace / n;
    if ratio >= T::one() {
        return Ok(None);
    }
    let denom = (T::one() - ratio) * (T::one() - ratio);
    Ok(Some((rss / n / denom, denom)))
}

/// Minimizes `GCV(h) = n^-1 sum (Y_i - Yhat_i)^2 / (1 - tr(S_h)/n)^2` over `grid`.
///
/// Ties in the score go to the candidate with the larger `(1 - tr/n)^2`.
pub fn gcv_bandwidth<T: Real>(y: &[T], points: &PointSet<T>, spec: &KernelSpec, grid: &[T]) -> Result<GcvSelection<T>> {
    if grid.is_empty() {
        return Err(ScrError::arg("empty bandwidth grid"));
    }
    if y.len() != points.len() {
        return Err(ScrError::arg("response and covariates differ in length"));
    }
    for &h in grid {
        check_bandwidth(h)?;
    }
    let evaluated = grid
        .iter()
        .map(|&h| gcv_score(y, points, spec, h).map(|s| (h, s)))
        .collect::<Result<Vec<_>>>()?;

    let mut best: Option<(T, T, T)> = None;
    for &(h, s) in &evaluated {
        if let Some((score, denom)) = s {
            let better = match best {
                None => true,
                Some((_, bs, bd)) => score < bs || (score == bs && denom > bd),
            };
            if better {
                best = Some((h, score, denom));
            }
        }
    }
    let (bandwidth, _, _) = best.ok_or(ScrError::DegenerateSmoother)?;
    Ok(GcvSelection {
        bandwidth,
        scores: evaluated.into_iter().map(|(h, s)| (h, s.map(|(score, _)| score))).collect(),
    })
}

/// Default search grid: `s * {0.10, 0.15, ..., 1.50}` with `s` the mean
/// coordinate standard deviation.
pub fn default_gcv_grid<T: Real>(points: &PointSet<T>) -> Vec<T> {
    let n = T::from_usize_lossy(points.len());
    let mut total_sd = T::zero();
    for j in 0..points.dim() {
        let col = points.column(j);
        let mean = col.iter().fold(T::zero(), |a, &v| a + v) / n;
        let var = col.iter().fold(T::zero(), |a, &v| a + (v - mean) * (v - mean)) / n;
        total_sd += var.sqrt();
    }
    let mut s = total_sd / T::from_usize_lossy(points.dim());
    if !(s > T::zero()) {
        s = T::one();
    }
    (2..=30).map(|k| s * T::lit(0.05 * k as f64)).collect()
}
