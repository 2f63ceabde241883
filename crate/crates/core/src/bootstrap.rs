//! Gaussian multiplier bootstrap for the maximum statistic.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Result, ScrError};
use crate::longrun::LongRunCov;
use crate::rng::substream;
use crate::scalar::Real;

/// Smallest accepted number of bootstrap draws.
pub const MIN_DRAWS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapConfig {
    pub draws: usize,
    pub alpha: f64,
    pub seed: u64,
}

impl BootstrapConfig {
    pub fn new(draws: usize, alpha: f64, seed: u64) -> Result<Self> {
        let cfg = Self { draws, alpha, seed };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.draws < MIN_DRAWS {
            return Err(ScrError::arg(format!("need at least {MIN_DRAWS} bootstrap draws, got {}", self.draws)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(ScrError::arg(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        Ok(())
    }
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self { draws: 1000, alpha: 0.05, seed: 0 }
    }
}

/// Draws of `max_j |Z_j| / sqrt(h^d n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxStatSample<T> {
    pub values: Vec<T>,
    /// The divisor `sqrt(h^d n)`.
    pub scale: T,
}

impl<T: Real> MaxStatSample<T> {
    /// `(1 - alpha)` empirical quantile.
    pub fn critical_value(&self, alpha: f64) -> Result<T> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(ScrError::arg(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        empirical_quantile(&self.values, 1.0 - alpha)
    }
}

/// Draw number `index` of `Z ~ N(0, Q)`, computed as `Q^{1/2} xi` with the
/// symmetric eigen-root. Each draw uses its own substream.
pub fn gaussian_draw<T: Real>(cov: &LongRunCov<T>, seed: u64, index: u64) -> Result<Vec<T>> {
    let root = cov
        .root()
        .ok_or_else(|| ScrError::arg("covariance must be PSD-repaired before sampling"))?;
    Ok(draw_with_root(root, seed, index))
}

/// Draws per matrix product in [`sample_max_statistics`].
const DRAW_BLOCK: usize = 128;

fn fill_innovations<'a, T: Real>(out: impl Iterator<Item = &'a mut T>, seed: u64, index: u64) {
    let mut rng = substream(seed, &[index]);
    for v in out {
        let x: f64 = StandardNormal.sample(&mut rng);
        *v = T::lit(x);
    }
}

fn draw_with_root<T: Real>(root: &DMatrix<T>, seed: u64, index: u64) -> Vec<T> {
    let mut xi = DVector::<T>::zeros(root.nrows());
    fill_innovations(xi.iter_mut(), seed, index);
    (root * xi).iter().copied().collect()
}

pub fn sample_max_statistics<T: Real>(
    cov: &LongRunCov<T>,
    h: T,
    dim: usize,
    n: usize,
    config: &BootstrapConfig,
) -> Result<MaxStatSample<T>> {
    config.validate()?;
    let root = cov
        .root()
        .ok_or_else(|| ScrError::arg("covariance must be PSD-repaired before sampling"))?;
    let scale = (h.powi(dim as i32) * T::from_usize_lossy(n)).sqrt();
    if !(scale > T::zero()) {
        return Err(ScrError::arg("h^d n must be positive"));
    }
    let m = root.nrows();
    let values = (0..config.draws as u64)
        .collect::<Vec<_>>()
        .par_chunks(DRAW_BLOCK)
        .flat_map_iter(|block| {
            // One GEMM per block of draws; column c holds the innovations of draw block[c].
            let mut xi = DMatrix::<T>::zeros(m, block.len());
            for (c, &k) in block.iter().enumerate() {
                fill_innovations(xi.column_mut(c).iter_mut(), config.seed, k);
            }
            let z = root * xi;
            z.column_iter()
                .map(|col| col.iter().fold(T::zero(), |acc, v| acc.max(v.abs())) / scale)
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(MaxStatSample { values, scale })
}

/// Order statistic `ceil(level * N)` (1-based) of the sorted values.
pub fn empirical_quantile<T: Real>(values: &[T], level: f64) -> Result<T> {
    if values.is_empty() {
        return Err(ScrError::arg("empirical quantile of an empty sample"));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(ScrError::arg(format!("quantile level must lie in (0, 1), got {level}")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite bootstrap values"));
    let n = sorted.len();
    // Guard against level * n landing a hair above an integer.
    let rank = ((level * n as f64) - 1e-9).ceil().max(1.0) as usize;
    Ok(sorted[rank.min(n) - 1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn quantile_examples() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(empirical_quantile(&v, 0.95).unwrap(), 95.0);
        assert_eq!(empirical_quantile(&v, 1.0 - 0.05).unwrap(), 95.0);
        assert_eq!(empirical_quantile(&[7.0], 0.3).unwrap(), 7.0);
        assert!(empirical_quantile::<f64>(&[], 0.5).is_err());
    }

    #[test]
    fn half_normal_quantile() {
        let mut rng = substream(9, &[0]);
        let v: Vec<f64> = (0..100_000).map(|_| StandardNormal.sample(&mut rng)).map(f64::abs).collect();
        assert!((empirical_quantile(&v, 0.95).unwrap() - 1.96).abs() <= 0.02);
    }

    #[test]
    fn config_validation() {
        assert!(BootstrapConfig::new(99, 0.05, 1).is_err());
        assert!(BootstrapConfig::new(100, 0.0, 1).is_err());
        assert!(BootstrapConfig::new(100, 1.0, 1).is_err());
        assert!(BootstrapConfig::new(100, 0.1, 1).is_ok());
    }

    #[test]
    fn zero_covariance_gives_zero_maxima() {
        let cov = LongRunCov::from_matrix(DMatrix::<f64>::zeros(4, 4), 1).unwrap().repaired().unwrap();
        let s = sample_max_statistics(&cov, 0.5, 1, 10, &BootstrapConfig::new(200, 0.05, 3).unwrap()).unwrap();
        assert!(s.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn unrepaired_covariance_is_rejected() {
        let cov = LongRunCov::from_matrix(DMatrix::<f64>::identity(2, 2), 1).unwrap();
        assert!(sample_max_statistics(&cov, 1.0, 1, 1, &BootstrapConfig::default()).is_err());
    }

    #[test]
    fn reproducible() {
        let cov = LongRunCov::from_matrix(DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 2.0]), 1)
            .unwrap()
            .repaired()
            .unwrap();
        let cfg = BootstrapConfig::new(500, 0.05, 42).unwrap();
        let a = sample_max_statistics(&cov, 0.4, 1, 200, &cfg).unwrap();
        let b = sample_max_statistics(&cov, 0.4, 1, 200, &cfg).unwrap();
        assert_eq!(a, b);
    }
}
