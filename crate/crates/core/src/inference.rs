//! Simultaneous confidence bands and containment tests.

use crate::data::PointSet;
use crate::error::{Result, ScrError};
use crate::estimators::FitResult;
use crate::scalar::Real;

/// Band `mu*(x_j) -/+ q_alpha sigma(x_j)` over the evaluation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScrBand<T> {
    pub eval_points: PointSet<T>,
    pub mu_star: Vec<T>,
    pub sigma_hat: Vec<T>,
    pub lower: Vec<T>,
    pub upper: Vec<T>,
    pub q_alpha: T,
    pub alpha: f64,
    pub h_used: T,
    pub lag_used: usize,
}

impl<T: Real> ScrBand<T> {
    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn half_widths(&self) -> Vec<T> {
        self.sigma_hat.iter().map(|&s| self.q_alpha * s).collect()
    }

    pub fn mean_width(&self) -> T {
        let total = self.lower.iter().zip(&self.upper).fold(T::zero(), |acc, (&l, &u)| acc + (u - l));
        total / T::from_usize_lossy(self.len().max(1))
    }
}

pub fn construct_scr<T: Real>(fit: &FitResult<T>, q_alpha: T, alpha: f64, lag: usize) -> Result<ScrBand<T>> {
    if !(q_alpha.is_finite() && q_alpha >= T::zero()) {
        return Err(ScrError::arg(format!("critical value must be finite and non-negative, got {q_alpha}")));
    }
    let (lower, upper) = fit
        .mu_star
        .iter()
        .zip(&fit.sigma_hat)
        .map(|(&m, &s)| (m - q_alpha * s, m + q_alpha * s))
        .unzip();
    Ok(ScrBand {
        eval_points: fit.eval_points.clone(),
        mu_star: fit.mu_star.clone(),
        sigma_hat: fit.sigma_hat.clone(),
        lower,
        upper,
        q_alpha,
        alpha,
        h_used: fit.bandwidth,
        lag_used: lag,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BandSide {
    Below,
    Above,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation<T> {
    pub point: Vec<T>,
    pub value: T,
    pub side: BandSide,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContainmentVerdict<T> {
    pub contained: bool,
    pub violations: Vec<Violation<T>>,
}

/// Checks `lower_j <= candidate(x_j) <= upper_j` at every grid point.
/// Boundary contact counts as contained.
pub fn check_containment<T: Real, F>(band: &ScrBand<T>, candidate: F) -> Result<ContainmentVerdict<T>>
where
    F: Fn(&[T]) -> T,
{
    let mut violations = Vec::new();
    for (j, x) in band.eval_points.rows().enumerate() {
        let v = candidate(x);
        if !v.is_finite() {
            return Err(ScrError::arg(format!(
                "candidate is not finite at {:?}",
                x.iter().map(|c| c.to_f64_lossy()).collect::<Vec<_>>()
            )));
        }
        if v < band.lower[j] {
            violations.push(Violation { point: x.to_vec(), value: v, side: BandSide::Below });
        } else if v > band.upper[j] {
            violations.push(Violation { point: x.to_vec(), value: v, side: BandSide::Above });
        }
    }
    Ok(ContainmentVerdict { contained: violations.is_empty(), violations })
}

pub fn coverage_indicator<T: Real, F>(band: &ScrBand<T>, truth: F) -> Result<bool>
where
    F: Fn(&[T]) -> T,
{
    check_containment(band, truth).map(|v| v.contained)
}

/// Parametric null hypotheses accepted on the command line.
#[derive(Debug, Clone, PartialEq)]
pub enum NullSpec {
    /// `mu(x) = c`.
    Constant(f64),
    /// `mu(x) = a + b_1 x_1 + ... + b_d x_d`.
    Linear { intercept: f64, slopes: Vec<f64> },
}

impl NullSpec {
    pub fn eval<T: Real>(&self, x: &[T]) -> T {
        match self {
            NullSpec::Constant(c) => T::lit(*c),
            NullSpec::Linear { intercept, slopes } => x
                .iter()
                .zip(slopes)
                .fold(T::lit(*intercept), |acc, (&xi, &b)| acc + T::lit(b) * xi),
        }
    }

    pub fn check_dim(&self, dim: usize) -> Result<()> {
        match self {
            NullSpec::Linear { slopes, .. } if slopes.len() != dim => Err(ScrError::arg(format!(
                "linear null has {} slopes for {dim} covariates",
                slopes.len()
            ))),
            _ => Ok(()),
        }
    }
}

impl std::str::FromStr for NullSpec {
    type Err = ScrError;

    /// `zero`, `constant:<c>` or `linear:<a>,<b1>[,<b2>...]`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || ScrError::arg(format!("cannot parse null specification '{s}'"));
        let nums = |body: &str| -> Result<Vec<f64>> {
            body.split(',').map(|t| t.trim().parse::<f64>().map_err(|_| bad())).collect()
        };
        if s.eq_ignore_ascii_case("zero") {
            return Ok(NullSpec::Constant(0.0));
        }
        let (kind, body) = s.split_once(':').ok_or_else(bad)?;
        match kind.to_ascii_lowercase().as_str() {
            "constant" | "const" => {
                let v = nums(body)?;
                if v.len() != 1 {
                    return Err(bad());
                }
                Ok(NullSpec::Constant(v[0]))
            }
            "linear" => {
                let v = nums(body)?;
                if v.len() < 2 {
                    return Err(bad());
                }
                Ok(NullSpec::Linear { intercept: v[0], slopes: v[1..].to_vec() })
            }
            _ => Err(bad()),
        }
    }
}
