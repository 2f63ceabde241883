//! Randomized invariants over 50 configurations.

use nalgebra::SymmetricEigen;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use scr_core::{
    analyze, build_qhat, fit, generate_sample, nw_weights, AnalysisConfig, DgpConfig, ErrorModel, FitConfig,
    KernelSpec, PointSet,
};

use crate::Verdict;

#[derive(Debug, Clone)]
struct Case {
    n: usize,
    model: usize,
    h: f64,
    seed: u64,
    lag: usize,
    alpha: (f64, f64),
    shift: f64,
    delta: f64,
    scale: f64,
    /// Dyadic covariates, anchor, translation and bandwidth for the exact check.
    dyadic: (Vec<i32>, i32, i32, i32),
}

fn cases() -> impl Strategy<Value = Case> {
    (
        (60usize..150, 0usize..4, 0.35f64..0.9, any::<u64>(), 1usize..8),
        (0.01f64..0.2, 0.01f64..0.2, -5.0f64..5.0, -2.0f64..2.0, 0.5f64..4.0),
        (prop::collection::vec(-2048i32..2048, 2..40), -2048i32..2048, -4096i32..4096, 64i32..2048),
    )
        .prop_map(|((n, model, h, seed, lag), (a1, da, shift, delta, scale), dyadic)| Case {
            n,
            model,
            h,
            seed,
            lag,
            alpha: (a1, a1 + da),
            shift,
            delta,
            scale,
            dyadic,
        })
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

fn check(case: &Case) -> Result<(), TestCaseError> {
    let model = ErrorModel::standard_set()[case.model];
    let dgp = DgpConfig::<f64>::new(case.n, model, case.seed);
    let (data, _) = generate_sample(&dgp).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let base = AnalysisConfig {
        draws: 300,
        seed: case.seed ^ 0x5eed,
        lag: scr_core::LagSpec::Fixed(case.lag),
        ..AnalysisConfig::with_bandwidth(case.h)
    };
    let run = |d: &scr_core::Dataset<f64>, alpha: f64| {
        analyze(d, &AnalysisConfig { alpha, ..base.clone() }).map_err(|e| TestCaseError::fail(e.to_string()))
    };

    // Nesting: the smaller alpha gives the wider band.
    let wide = run(&data, case.alpha.0)?;
    let narrow = run(&data, case.alpha.1)?;
    for j in 0..wide.band.len() {
        prop_assert!(wide.band.lower[j] <= narrow.band.lower[j] && wide.band.upper[j] >= narrow.band.upper[j]);
    }

    // Affine response map: Y -> s Y + c + delta Z moves the band to s * band + c.
    let y2: Vec<f64> = (0..data.len())
        .map(|i| case.scale * data.y()[i] + case.shift + case.delta * data.z()[i])
        .collect();
    let moved = run(&data.with_response(y2).unwrap(), case.alpha.0)?;
    prop_assert!(close(moved.band.q_alpha, wide.band.q_alpha, 1e-8), "q {} vs {}", moved.band.q_alpha, wide.band.q_alpha);
    prop_assert!(close(moved.fit.beta_hat[0], case.scale * wide.fit.beta_hat[0] + case.delta, 1e-8));
    for j in 0..wide.band.len() {
        prop_assert!(close(moved.band.lower[j], case.scale * wide.band.lower[j] + case.shift, 1e-7));
        prop_assert!(close(moved.band.upper[j], case.scale * wide.band.upper[j] + case.shift, 1e-7));
    }

    // Bitwise reproducibility.
    let (again, _) = generate_sample(&dgp).unwrap();
    prop_assert!(again.y().iter().zip(data.y()).all(|(a, b)| a.to_bits() == b.to_bits()));
    let twice = run(&again, case.alpha.0)?;
    prop_assert_eq!(twice.band.q_alpha.to_bits(), wide.band.q_alpha.to_bits());
    prop_assert!(twice.band.lower.iter().zip(&wide.band.lower).all(|(a, b)| a.to_bits() == b.to_bits()));
    prop_assert!(twice.band.upper.iter().zip(&wide.band.upper).all(|(a, b)| a.to_bits() == b.to_bits()));

    // Repaired covariance is PSD.
    let spec = KernelSpec::epanechnikov(1).unwrap();
    let f = fit(&data, &FitConfig::new(spec, case.h)).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let cov = build_qhat(&f, &data, case.lag).unwrap().repaired().unwrap();
    let min_eig = SymmetricEigen::new(cov.matrix.clone()).eigenvalues.min();
    prop_assert!(min_eig >= -1e-10, "min eigenvalue {min_eig}");

    // Weights: exact under dyadic translation, 1e-12 under scaling.
    let (ks, anchor, shift, hk) = &case.dyadic;
    let unit = 1.0 / 1024.0;
    let xs: Vec<f64> = ks.iter().map(|&k| k as f64 * unit).collect();
    let x0 = xs[(*anchor).unsigned_abs() as usize % xs.len()];
    let h = *hk as f64 * unit;
    let c = *shift as f64 * unit;
    let w = nw_weights(&[x0], &PointSet::from_scalars(xs.clone()), h, &spec).unwrap().weights;
    let wt = nw_weights(&[x0 + c], &PointSet::from_scalars(xs.iter().map(|v| v + c).collect()), h, &spec)
        .unwrap()
        .weights;
    prop_assert!(w.iter().zip(&wt).all(|(a, b)| a.to_bits() == b.to_bits()));
    let s = case.scale;
    let ws = nw_weights(&[s * x0], &PointSet::from_scalars(xs.iter().map(|v| s * v).collect()), s * h, &spec)
        .unwrap()
        .weights;
    prop_assert!(w.iter().zip(&ws).all(|(a, b)| (a - b).abs() <= 1e-12));
    Ok(())
}

pub fn suite() -> Verdict {
    let config = Config { cases: 50, failure_persistence: None, ..Config::default() };
    let mut runner = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    match runner.run(&cases(), |case| check(&case)) {
        Ok(()) => Verdict::new(
            true,
            "nesting in alpha, affine equivariance, weight translation/scale, PSD repair, reproducibility hold on 50 configurations",
        ),
        Err(e) => Verdict::new(false, format!("{e}")),
    }
}
