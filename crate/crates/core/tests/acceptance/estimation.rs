use scr_core::rng::child_seed;
use scr_core::{estimate_beta, generate_sample, DgpConfig, ErrorModel, KernelSpec};

use crate::Verdict;

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

/// Median absolute error of the linear coefficient at `n` over 200 seeds.
/// The bandwidth follows the undersmoothing order `n^(-1/3)`.
fn median_error(n: usize) -> f64 {
    let spec = KernelSpec::epanechnikov(1).unwrap();
    let h = 0.4 * (200.0 / n as f64).powf(1.0 / 3.0);
    let errs = (0..200u64)
        .map(|s| {
            let cfg = DgpConfig::<f64>::new(n, ErrorModel::StdNormal, child_seed(3_000, &[n as u64, s]));
            let (data, truth) = generate_sample(&cfg).expect("sample");
            (estimate_beta(&data, h, &spec).expect("beta")[0] - truth.beta::<f64>()).abs()
        })
        .collect();
    median(errs)
}

pub fn beta_rate() -> Verdict {
    let small = median_error(200);
    let large = median_error(800);
    let factor = small / large;
    Verdict::new(
        (1.4..=2.9).contains(&factor),
        format!("median |beta - 0.5|: n=200 {small:.4}, n=800 {large:.4}, factor {factor:.3} (need [1.4, 2.9])"),
    )
}
