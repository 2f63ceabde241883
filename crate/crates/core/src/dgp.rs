//! Synthetic data from the simulation design
//! `y_i = 0.5 z_i + (0.3 + 0.4 x_i) + sqrt(0.1 + 0.1 x_i^2) e_i`.

use rand_distr::{Distribution, StandardNormal};

use crate::data::{Dataset, RegionSpec};
use crate::error::{Result, ScrError};
use crate::rng::substream;
use crate::scalar::Real;

/// Terms kept from the covariate MA(inf) filter `sum_k 0.1^k delta_{i-k}`.
pub const COVARIATE_MA_TERMS: usize = 17;
pub const MIN_BURN_IN: usize = 100;
pub const DEFAULT_BURN_IN: usize = 500;

const STREAM_DELTA: u64 = 0;
const STREAM_U: u64 = 1;
const STREAM_ETA: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ErrorModel {
    StdNormal,
    /// `e_i = phi e_{i-1} + eta_i`.
    Ar1 { phi: f64 },
    /// `e_i = eta_i + theta eta_{i-1}`.
    Ma1 { theta: f64 },
    Arma11 { phi: f64, theta: f64 },
}

impl ErrorModel {
    pub const AR1: ErrorModel = ErrorModel::Ar1 { phi: 0.1 };
    pub const MA1: ErrorModel = ErrorModel::Ma1 { theta: 0.2 };
    pub const ARMA11: ErrorModel = ErrorModel::Arma11 { phi: 0.1, theta: 0.2 };

    /// The four models of the simulation design.
    pub fn standard_set() -> [ErrorModel; 4] {
        [ErrorModel::StdNormal, Self::AR1, Self::MA1, Self::ARMA11]
    }

    fn coefficients(self) -> (f64, f64) {
        match self {
            ErrorModel::StdNormal => (0.0, 0.0),
            ErrorModel::Ar1 { phi } => (phi, 0.0),
            ErrorModel::Ma1 { theta } => (0.0, theta),
            ErrorModel::Arma11 { phi, theta } => (phi, theta),
        }
    }

    /// Stationary variance for unit-variance innovations.
    pub fn stationary_variance(self) -> f64 {
        let (phi, theta) = self.coefficients();
        (1.0 + 2.0 * phi * theta + theta * theta) / (1.0 - phi * phi)
    }

    pub fn label(self) -> String {
        match self {
            ErrorModel::StdNormal => "std-normal".into(),
            ErrorModel::Ar1 { phi } => format!("ar1({phi})"),
            ErrorModel::Ma1 { theta } => format!("ma1({theta})"),
            ErrorModel::Arma11 { phi, theta } => format!("arma11({phi},{theta})"),
        }
    }
}

impl std::str::FromStr for ErrorModel {
    type Err = ScrError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "normal" | "std-normal" | "iid" => Ok(ErrorModel::StdNormal),
            "ar1" => Ok(Self::AR1),
            "ma1" => Ok(Self::MA1),
            "arma11" | "arma" => Ok(Self::ARMA11),
            other => Self::standard_set()
                .into_iter()
                .find(|m| m.label() == other)
                .ok_or_else(|| ScrError::arg(format!("unknown error model '{other}'"))),
        }
    }
}

impl std::fmt::Display for ErrorModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DgpConfig<T> {
    pub n: usize,
    pub error_model: ErrorModel,
    pub burn_in: usize,
    pub seed: u64,
    pub region: RegionSpec<T>,
}

impl<T: Real> DgpConfig<T> {
    pub fn new(n: usize, error_model: ErrorModel, seed: u64) -> Self {
        Self { n, error_model, burn_in: DEFAULT_BURN_IN, seed, region: RegionSpec::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(ScrError::arg("simulated sample needs n >= 2"));
        }
        if self.burn_in < MIN_BURN_IN {
            return Err(ScrError::arg(format!("burn-in must be at least {MIN_BURN_IN}")));
        }
        Ok(())
    }
}

/// `beta = 0.5`, `mu(x) = 0.3 + 0.4 x`, `sigma(x) = sqrt(0.1 + 0.1 x^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrueFunctions;

impl TrueFunctions {
    pub fn beta<T: Real>(&self) -> T {
        T::lit(0.5)
    }

    pub fn mu<T: Real>(&self, x: T) -> T {
        T::lit(0.3) + T::lit(0.4) * x
    }

    pub fn sigma<T: Real>(&self, x: T) -> T {
        (T::lit(0.1) + T::lit(0.1) * x * x).sqrt()
    }
}

fn normals<T: Real>(seed: u64, stream: u64, len: usize) -> Vec<T> {
    let mut rng = substream(seed, &[stream]);
    (0..len)
        .map(|_| {
            let v: f64 = StandardNormal.sample(&mut rng);
            T::lit(v)
        })
        .collect()
}

/// `x_i = sum_{k < 17} 0.1^k delta_{i-k}` and `z_i = 0.2 + 0.4 x_i + u_i`.
///
/// `delta` must hold `n + 16` values (oldest first); `u` holds `n`.
pub fn covariates_from_innovations<T: Real>(delta: &[T], u: &[T]) -> Result<(Vec<T>, Vec<T>)> {
    let n = u.len();
    if delta.len() != n + COVARIATE_MA_TERMS - 1 {
        return Err(ScrError::arg(format!(
            "need {} covariate innovations for n = {n}, got {}",
            n + COVARIATE_MA_TERMS - 1,
            delta.len()
        )));
    }
    let coef: Vec<T> = (0..COVARIATE_MA_TERMS).map(|k| T::lit(0.1f64.powi(k as i32))).collect();
    let x: Vec<T> = (0..n)
        .map(|i| {
            let now = i + COVARIATE_MA_TERMS - 1;
            coef.iter().enumerate().fold(T::zero(), |acc, (k, &c)| acc + c * delta[now - k])
        })
        .collect();
    let z = x.iter().zip(u).map(|(&xi, &ui)| T::lit(0.2) + T::lit(0.4) * xi + ui).collect();
    Ok((x, z))
}

pub fn simulate_covariates<T: Real>(n: usize, seed: u64) -> (Vec<T>, Vec<T>) {
    let delta = normals(seed, STREAM_DELTA, n + COVARIATE_MA_TERMS - 1);
    let u = normals(seed, STREAM_U, n);
    covariates_from_innovations(&delta, &u).expect("innovation lengths match")
}

/// Runs the error recursion from zero initial values over `eta` and drops
/// the first `burn_in` outputs.
pub fn errors_from_innovations<T: Real>(model: ErrorModel, eta: &[T], burn_in: usize) -> Vec<T> {
    let (phi, theta) = model.coefficients();
    let (phi, theta) = (T::lit(phi), T::lit(theta));
    let mut prev_e = T::zero();
    let mut prev_eta = T::zero();
    let mut out = Vec::with_capacity(eta.len().saturating_sub(burn_in));
    for (i, &e) in eta.iter().enumerate() {
        let cur = match model {
            ErrorModel::StdNormal => e,
            _ => phi * prev_e + e + theta * prev_eta,
        };
        prev_e = cur;
        prev_eta = e;
        if i >= burn_in {
            out.push(cur);
        }
    }
    out
}

pub fn simulate_errors<T: Real>(model: ErrorModel, n: usize, burn_in: usize, seed: u64) -> Result<Vec<T>> {
    if burn_in < MIN_BURN_IN {
        return Err(ScrError::arg(format!("burn-in must be at least {MIN_BURN_IN}")));
    }
    let eta = normals(seed, STREAM_ETA, n + burn_in);
    Ok(errors_from_innovations(model, &eta, burn_in))
}

/// `y = 0.5 z + mu(x) + sigma(x) e`.
pub fn assemble_response<T: Real>(x: &[T], z: &[T], errors: &[T]) -> Vec<T> {
    let truth = TrueFunctions;
    x.iter()
        .zip(z)
        .zip(errors)
        .map(|((&xi, &zi), &ei)| truth.beta::<T>() * zi + truth.mu(xi) + truth.sigma(xi) * ei)
        .collect()
}

pub fn generate_sample<T: Real>(config: &DgpConfig<T>) -> Result<(Dataset<T>, TrueFunctions)> {
    config.validate()?;
    let (x, z) = simulate_covariates::<T>(config.n, config.seed);
    let e = simulate_errors::<T>(config.error_model, config.n, config.burn_in, config.seed)?;
    let y = assemble_response(&x, &z, &e);
    Ok((Dataset::univariate(y, z, x, &config.region)?, TrueFunctions))
}
