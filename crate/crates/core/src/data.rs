//! Observations `(Y_i, Z_i, X_i)` and the region of interest.

use crate::error::{Result, ScrError};
use crate::scalar::Real;

/// `n` points in `R^d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet<T> {
    coords: Vec<T>,
    dim: usize,
}

impl<T: Real> PointSet<T> {
    pub fn new(coords: Vec<T>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(ScrError::arg("point dimension must be positive"));
        }
        if coords.len() % dim != 0 {
            return Err(ScrError::arg(format!(
                "{} coordinates do not divide into points of dimension {dim}",
                coords.len()
            )));
        }
        Ok(Self { coords, dim })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(ScrError::arg("ragged point rows"));
        }
        Self::new(rows.concat(), dim)
    }

    /// Univariate points.
    pub fn from_scalars(values: Vec<T>) -> Self {
        Self { coords: values, dim: 1 }
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[T]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[T] {
        &self.coords
    }

    /// Values of coordinate `j` across all points.
    pub fn column(&self, j: usize) -> Vec<T> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        let mut coords = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            coords.extend_from_slice(self.row(i));
        }
        Self { coords, dim: self.dim }
    }
}

/// Product of closed intervals `[lo_j, hi_j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Region<T> {
    bounds: Vec<(T, T)>,
}

impl<T: Real> Region<T> {
    pub fn new(bounds: Vec<(T, T)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(ScrError::arg("region needs at least one interval"));
        }
        for (j, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite()) || lo > hi {
                return Err(ScrError::arg(format!("invalid interval [{lo}, {hi}] for coordinate {j}")));
            }
        }
        Ok(Self { bounds })
    }

    /// Per-coordinate empirical quantile box `[q_lower, q_upper]`.
    pub fn quantile_box(points: &PointSet<T>, lower: f64, upper: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lower) || !(0.0..=1.0).contains(&upper) || lower > upper {
            return Err(ScrError::arg(format!("bad quantile levels ({lower}, {upper})")));
        }
        if points.is_empty() {
            return Err(ScrError::arg("cannot build a quantile box from no points"));
        }
        let bounds = (0..points.dim())
            .map(|j| {
                let mut col = points.column(j);
                col.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
                (interpolated_quantile(&col, lower), interpolated_quantile(&col, upper))
            })
            .collect();
        Self::new(bounds)
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(T, T)] {
        &self.bounds
    }

    pub fn contains(&self, x: &[T]) -> bool {
        x.len() == self.bounds.len()
            && x.iter().zip(&self.bounds).all(|(&v, &(lo, hi))| lo <= v && v <= hi)
    }
}

/// Linear-interpolation quantile of sorted data (Hyndman–Fan type 7).
pub(crate) fn interpolated_quantile<T: Real>(sorted: &[T], level: f64) -> T {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = level * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = T::lit(pos - lo as f64);
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// How the region of interest is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum RegionSpec<T> {
    /// Empirical per-coordinate quantile box.
    QuantileBox { lower: f64, upper: f64 },
    Explicit(Region<T>),
}

impl<T> Default for RegionSpec<T> {
    fn default() -> Self {
        RegionSpec::QuantileBox { lower: 0.05, upper: 0.95 }
    }
}

impl<T: Real> RegionSpec<T> {
    pub fn resolve(&self, points: &PointSet<T>) -> Result<Region<T>> {
        match self {
            RegionSpec::QuantileBox { lower, upper } => Region::quantile_box(points, *lower, *upper),
            RegionSpec::Explicit(r) => {
                if r.dim() != points.dim() {
                    return Err(ScrError::arg(format!(
                        "region has {} intervals but covariates have dimension {}",
                        r.dim(),
                        points.dim()
                    )));
                }
                Ok(r.clone())
            }
        }
    }
}

/// Aligned series with the region mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    y: Vec<T>,
    /// `n x l`, row-major.
    z: Vec<T>,
    n_linear: usize,
    x: PointSet<T>,
    region: Region<T>,
    mask: Vec<bool>,
}

impl<T: Real> Dataset<T> {
    /// `z` is row-major with `n_linear` columns.
    pub fn new(y: Vec<T>, z: Vec<T>, n_linear: usize, x: PointSet<T>, region: &RegionSpec<T>) -> Result<Self> {
        let n = y.len();
        if n < 2 {
            return Err(ScrError::data(format!("need at least 2 observations, got {n}")));
        }
        if n_linear == 0 {
            return Err(ScrError::arg("at least one linear regressor is required"));
        }
        if z.len() != n * n_linear {
            return Err(ScrError::data(format!(
                "linear design has {} entries, expected {n} x {n_linear}",
                z.len()
            )));
        }
        if x.len() != n {
            return Err(ScrError::data(format!("{} covariate rows for {n} responses", x.len())));
        }
        for i in 0..n {
            let finite = y[i].is_finite()
                && z[i * n_linear..(i + 1) * n_linear].iter().all(|v| v.is_finite())
                && x.row(i).iter().all(|v| v.is_finite());
            if !finite {
                return Err(ScrError::data(format!("non-finite value in observation {i}")));
            }
        }
        let region = region.resolve(&x)?;
        let mask: Vec<bool> = x.rows().map(|r| region.contains(r)).collect();
        let masked = mask.iter().filter(|&&m| m).count();
        if masked < n_linear + 1 {
            return Err(ScrError::data(format!(
                "only {masked} observations inside the region; need at least {}",
                n_linear + 1
            )));
        }
        Ok(Self { y, z, n_linear, x, region, mask })
    }

    /// One linear regressor and one covariate.
    pub fn univariate(y: Vec<T>, z: Vec<T>, x: Vec<T>, region: &RegionSpec<T>) -> Result<Self> {
        Self::new(y, z, 1, PointSet::from_scalars(x), region)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn y(&self) -> &[T] {
        &self.y
    }

    pub fn z(&self) -> &[T] {
        &self.z
    }

    #[inline]
    pub fn z_row(&self, i: usize) -> &[T] {
        &self.z[i * self.n_linear..(i + 1) * self.n_linear]
    }

    pub fn n_linear(&self) -> usize {
        self.n_linear
    }

    pub fn x(&self) -> &PointSet<T> {
        &self.x
    }

    pub fn dim(&self) -> usize {
        self.x.dim()
    }

    pub fn region(&self) -> &Region<T> {
        &self.region
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn masked_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.mask[i]).collect()
    }

    /// `Y_i - Z_i^T beta` for every observation.
    pub fn partial_response(&self, beta: &[T]) -> Vec<T> {
        (0..self.len())
            .map(|i| self.y[i] - dot(self.z_row(i), beta))
            .collect()
    }

    /// Same data with `Y` replaced.
    pub fn with_response(&self, y: Vec<T>) -> Result<Self> {
        Self::new(y, self.z.clone(), self.n_linear, self.x.clone(), &RegionSpec::Explicit(self.region.clone()))
    }
}

#[inline]
pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&u, &v)| acc + u * v)
}
