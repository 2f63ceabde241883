//! Monte Carlo criteria on the simulation design.

use scr_core::rng::child_seed;
use scr_core::{
    analyze, check_containment, generate_sample, run_coverage_experiment, AnalysisConfig, DgpConfig, ErrorModel,
    ExperimentConfig,
};

use crate::Verdict;

fn cell_coverage(model: ErrorModel, h: f64, replications: usize) -> f64 {
    let cfg = ExperimentConfig { replications, bandwidths: vec![h], models: vec![model], ..Default::default() };
    let report = run_coverage_experiment::<f64>(&cfg).expect("coverage run");
    let cell = &report.cells[0];
    assert!(!cell.aborted, "cell {} h={h} aborted: {:?}", cell.error_model, cell.failure_messages);
    cell.coverage
}

/// Published coverages at M = 1000 with their tolerances.
pub fn table_one_cells() -> Verdict {
    let targets = [
        (ErrorModel::StdNormal, 0.40, 0.950, 0.03),
        (ErrorModel::ARMA11, 0.42, 0.954, 0.03),
        (ErrorModel::AR1, 0.30, 0.858, 0.05),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (model, h, want, tol) in targets {
        let got = cell_coverage(model, h, 1000);
        let ok = (got - want).abs() <= tol;
        pass &= ok;
        parts.push(format!(
            "{} h={h:.2}: {got:.3} vs {want:.3}±{tol} {}",
            model.label(),
            if ok { "ok" } else { "out" }
        ));
    }
    Verdict::new(pass, parts.join("; "))
}

/// Coverage at h = 0.30 below coverage at h = 0.42 for every error model.
pub fn monotone_in_bandwidth() -> Verdict {
    let cfg = ExperimentConfig { replications: 500, bandwidths: vec![0.30, 0.42], ..Default::default() };
    let report = run_coverage_experiment::<f64>(&cfg).expect("coverage run");
    let mut pass = true;
    let mut parts = Vec::new();
    for model in ErrorModel::standard_set() {
        let lo = report.cell(model, 0.30).expect("cell").coverage;
        let hi = report.cell(model, 0.42).expect("cell").coverage;
        pass &= lo < hi;
        parts.push(format!("{} {lo:.3} -> {hi:.3}", model.label()));
    }
    Verdict::new(pass, parts.join("; "))
}

/// The zero function must fall outside the band in at least 95 of 100 samples.
pub fn zero_null_power() -> Verdict {
    let models = ErrorModel::standard_set();
    let mut rejected = 0;
    for rep in 0..100u64 {
        let model = models[rep as usize % models.len()];
        let (data, _) = generate_sample(&DgpConfig::<f64>::new(200, model, child_seed(7_000, &[rep]))).expect("sample");
        let cfg = AnalysisConfig { seed: child_seed(7_001, &[rep]), ..AnalysisConfig::with_bandwidth(0.40) };
        let analysis = analyze(&data, &cfg).expect("analysis");
        let verdict = check_containment(&analysis.band, |_| 0.0).expect("containment");
        rejected += usize::from(!verdict.contained);
    }
    Verdict::new(rejected >= 95, format!("{rejected}/100 rejections at h=0.40, alpha=0.05 (need >= 95)"))
}
