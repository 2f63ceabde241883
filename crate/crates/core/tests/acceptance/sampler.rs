use nalgebra::DMatrix;
use scr_core::bootstrap::gaussian_draw;
use scr_core::{sample_max_statistics, BootstrapConfig, LongRunCov};

use crate::Verdict;

const DRAWS: usize = 100_000;

pub fn fidelity() -> Verdict {
    // B B^T for a fixed B: PSD with correlated coordinates.
    let b = DMatrix::from_row_slice(
        5,
        5,
        &[
            1.0, 0.0, 0.0, 0.0, 0.0, //
            0.5, 0.8, 0.0, 0.0, 0.0, //
            -0.3, 0.2, 0.6, 0.0, 0.0, //
            0.1, -0.4, 0.3, 0.9, 0.0, //
            0.0, 0.0, 0.2, -0.5, 0.4,
        ],
    );
    let q = &b * b.transpose();
    let cov = LongRunCov::from_matrix(q.clone(), 1).unwrap().repaired().unwrap();
    let mut acc = DMatrix::<f64>::zeros(5, 5);
    for k in 0..DRAWS as u64 {
        let z = nalgebra::DVector::from_vec(gaussian_draw(&cov, 5_000, k).unwrap());
        acc += &z * z.transpose();
    }
    let sample = acc / DRAWS as f64;
    let rel = (&sample - &q).norm() / q.norm();

    let unit = LongRunCov::from_matrix(DMatrix::from_element(1, 1, 1.0), 1).unwrap().repaired().unwrap();
    let cfg = BootstrapConfig::new(DRAWS, 0.05, 5_001).unwrap();
    let stats = sample_max_statistics(&unit, 1.0, 1, 1, &cfg).unwrap();
    let mean = stats.values.iter().sum::<f64>() / DRAWS as f64;
    let target = (2.0 / std::f64::consts::PI).sqrt();

    Verdict::new(
        rel <= 0.05 && (mean - target).abs() <= 0.01,
        format!(
            "5x5 sample covariance relative Frobenius error {rel:.4} (need <= 0.05); \
             mean max|Z| for unit variance {mean:.4} vs {target:.4} (need ±0.01)"
        ),
    )
}
