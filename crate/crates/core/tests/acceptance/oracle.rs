//! Brute-force oracles written directly from the defining sums.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use scr_core::estimators::SIGMA_FLOOR;
use scr_core::{
    autocovariance, build_qhat, fit, nw_weights, Dataset, FitConfig, KernelFamily, KernelSpec, PointSet, Region,
    RegionSpec,
};

use crate::Verdict;

fn kernel_1d(family: KernelFamily, u: f64) -> f64 {
    if u.abs() > 1.0 {
        return 0.0;
    }
    match family {
        KernelFamily::Epanechnikov => 0.75 * (1.0 - u * u),
        // Any positive constant works here: it cancels in the weights.
        KernelFamily::GaussianTruncated => (-0.5 * u * u).exp(),
    }
}

fn weight_row(family: KernelFamily, x: &[f64], pts: &[Vec<f64>], h: f64) -> Vec<f64> {
    let raw: Vec<f64> = pts
        .iter()
        .map(|p| x.iter().zip(p).map(|(a, b)| kernel_1d(family, (a - b) / h)).product())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|k| k / total).collect()
}

fn gamma_oracle(e: &[f64], k: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..e.len() {
        if i + k < e.len() {
            s += e[i] * e[i + k];
        }
    }
    s / e.len() as f64
}

struct Instance {
    data: Dataset<f64>,
    rows: Vec<Vec<f64>>,
    family: KernelFamily,
    h: f64,
    lag: usize,
}

fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    loop {
        let n = rng.random_range(6..=30);
        let d = rng.random_range(1..=2);
        let l = rng.random_range(1..=2);
        let family = if rng.random_bool(0.5) { KernelFamily::Epanechnikov } else { KernelFamily::GaussianTruncated };
        let h = rng.random_range(0.5..1.6);
        let lag = rng.random_range(1..=5.min(n - 1));
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.sample(StandardNormal)).collect()).collect();
        let z: Vec<f64> = (0..n * l).map(|_| rng.sample(StandardNormal)).collect();
        let y: Vec<f64> = (0..n)
            .map(|i| {
                let lin: f64 = (0..l).map(|c| 0.5 * z[i * l + c]).sum();
                lin + rows[i][0].sin() + 0.5 * rng.sample::<f64, _>(StandardNormal)
            })
            .collect();
        let region = if rng.random_bool(0.5) {
            RegionSpec::default()
        } else {
            RegionSpec::Explicit(Region::new(vec![(-1.0, 1.0); d]).unwrap())
        };
        let x = PointSet::from_rows(&rows).unwrap();
        if let Ok(data) = Dataset::new(y, z, l, x, &region) {
            return Instance { data, rows, family, h, lag };
        }
    }
}

/// Recomputes every ingredient from the definitions and sums over
/// `(j, j', i, k)` directly. Returns the largest relative discrepancy.
fn qhat_discrepancy(inst: &Instance) -> Result<f64, String> {
    let data = &inst.data;
    let spec = KernelSpec::new(inst.family, data.dim()).unwrap();
    let f = match fit(data, &FitConfig::new(spec, inst.h)) {
        Ok(f) => f,
        Err(e) => return Err(format!("fit failed: {e}")),
    };
    let q = build_qhat(&f, data, inst.lag).map_err(|e| e.to_string())?;

    let n = data.len();
    let l = data.n_linear();
    let partial: Vec<f64> = (0..n)
        .map(|i| data.y()[i] - (0..l).map(|c| data.z()[i * l + c] * f.beta_hat[c]).sum::<f64>())
        .collect();
    let w: Vec<Vec<f64>> = inst.rows.iter().map(|x| weight_row(inst.family, x, &inst.rows, inst.h)).collect();
    let mu: Vec<f64> = (0..n).map(|i| (0..n).map(|t| w[i][t] * partial[t]).sum()).collect();
    let sigma: Vec<f64> = (0..n)
        .map(|i| {
            let s2: f64 = (0..n).map(|t| w[i][t] * (partial[t] - mu[i]).powi(2)).sum();
            s2.max(SIGMA_FLOOR * SIGMA_FLOOR).sqrt()
        })
        .collect();
    let eps: Vec<f64> = (0..n).map(|i| (partial[i] - mu[i]) / sigma[i]).collect();
    let gamma: Vec<f64> = (0..inst.lag).map(|k| gamma_oracle(&eps, k)).collect();
    let grid = data.masked_indices();
    let m = grid.len();
    let scale = inst.h.powi(data.dim() as i32) * n as f64;
    let lag = inst.lag as i64;

    let mut raw = vec![vec![0.0; m]; m];
    for (a, &j) in grid.iter().enumerate() {
        for (b, &jp) in grid.iter().enumerate() {
            let mut s = 0.0;
            for k in (1 - lag)..lag {
                for i in 0..n as i64 {
                    let ik = i + k;
                    if ik < 0 || ik >= n as i64 {
                        continue;
                    }
                    let (i, ik) = (i as usize, ik as usize);
                    let c = sigma[i] * sigma[ik] / (sigma[j] * sigma[jp]);
                    s += c * w[j][i] * w[jp][ik] * gamma[k.unsigned_abs() as usize];
                }
            }
            raw[a][b] = scale * s;
        }
    }
    let mut max_abs: f64 = 0.0;
    let mut max_diff: f64 = 0.0;
    for a in 0..m {
        for b in 0..m {
            let want = 0.5 * (raw[a][b] + raw[b][a]);
            max_abs = max_abs.max(want.abs());
            max_diff = max_diff.max((q.matrix[(a, b)] - want).abs());
        }
    }
    Ok(if max_abs > 0.0 { max_diff / max_abs } else { max_diff })
}

pub fn suite() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4_000);

    let mut worst_q: f64 = 0.0;
    let mut q_errors = Vec::new();
    for _ in 0..100 {
        let inst = random_instance(&mut rng);
        match qhat_discrepancy(&inst) {
            Ok(r) => worst_q = worst_q.max(r),
            Err(e) => q_errors.push(e),
        }
    }

    let mut acov_exact = true;
    for _ in 0..200 {
        let m = rng.random_range(1..=200);
        let e: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
        let lag = rng.random_range(1..=m.min(20));
        let got = autocovariance(&e, lag).unwrap().gamma;
        acov_exact &= got.iter().enumerate().all(|(k, g)| g.to_bits() == gamma_oracle(&e, k).to_bits());
    }

    let mut worst_sum: f64 = 0.0;
    let mut negative = false;
    for _ in 0..1000 {
        let n = rng.random_range(1..=50);
        let d = rng.random_range(1..=3);
        let family = if rng.random_bool(0.5) { KernelFamily::Epanechnikov } else { KernelFamily::GaussianTruncated };
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
        let anchor = &rows[rng.random_range(0..n)];
        let h = rng.random_range(0.05..3.0);
        let x: Vec<f64> = anchor.iter().map(|v| v + rng.random_range(-0.5..0.5) * h).collect();
        let pts = PointSet::from_rows(&rows).unwrap();
        let w = nw_weights(&x, &pts, h, &KernelSpec::new(family, d).unwrap()).unwrap();
        worst_sum = worst_sum.max((w.weights.iter().sum::<f64>() - 1.0).abs());
        negative |= w.weights.iter().any(|&v| v < 0.0);
    }

    let pass = q_errors.is_empty() && worst_q <= 1e-10 && acov_exact && worst_sum <= 1e-12 && !negative;
    let mut detail = format!(
        "Q-hat max relative error {worst_q:.2e} over 100 instances (need <= 1e-10); autocovariance bitwise {}; \
         weight sums max |sum - 1| {worst_sum:.2e} over 1000 (need <= 1e-12){}",
        if acov_exact { "equal" } else { "DIFFERENT" },
        if negative { "; negative weight seen" } else { "" }
    );
    if !q_errors.is_empty() {
        detail.push_str(&format!("; {} instances failed: {}", q_errors.len(), q_errors[0]));
    }
    Verdict::new(pass, detail)
}
