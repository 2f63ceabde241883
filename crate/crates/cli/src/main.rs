//! `scr`: simultaneous confidence regions from the command line.
//!
//! Every run writes into `<out>/run-<unixtime>-s<seed>`.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use scr_core::io::{
    load_csv_dataset, parse_region, write_band_csv, write_dataset_csv, AnalysisSummary, ColumnSchema, NullTestSummary,
};
use scr_core::plot::{band_slices_svg, band_svg};
use scr_core::{
    analyze, check_containment, generate_sample, run_coverage_experiment, AnalysisConfig, BandwidthSpec,
    CovarianceForm, Dataset, DgpConfig, ErrorModel, ExperimentConfig, KernelFamily, LagSpec, NullSpec, RegionSpec,
    ScrError,
};

#[derive(Parser, Debug)]
#[command(name = "scr", version, about = "Simultaneous confidence regions for partially linear time series regression")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate the band from a CSV file or a simulated sample.
    Analyze {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        method: MethodArgs,
        /// Also check this candidate trend: zero, constant:<c>, linear:<a>,<b1>[,...].
        #[arg(long)]
        null: Option<String>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Write a simulated sample as CSV.
    Simulate {
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Monte Carlo coverage of the band over error models and bandwidths.
    Coverage {
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long, default_value_t = 1000)]
        replications: usize,
        /// Comma-separated bandwidths.
        #[arg(long, value_delimiter = ',', default_values_t = default_bandwidths())]
        bandwidths: Vec<f64>,
        /// Comma-separated error models (std-normal, ar1, ma1, arma11).
        #[arg(long, value_delimiter = ',', default_values_t = vec!["std-normal".to_string(), "ar1".into(), "ma1".into(), "arma11".into()])]
        models: Vec<String>,
        #[arg(long, default_value = "epanechnikov")]
        kernel: String,
        #[arg(long, default_value = "sqrt")]
        lag: String,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = 1000)]
        draws: usize,
        #[arg(long, default_value_t = 20_240_501)]
        seed: u64,
        #[arg(long, default_value_t = 500)]
        burn_in: usize,
        /// Covariance assembly: weighted (default) or banded.
        #[arg(long, default_value = "weighted")]
        cov_form: String,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Estimate the band and check whether a candidate trend lies inside it.
    Test {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        method: MethodArgs,
        #[arg(long)]
        null: String,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn default_bandwidths() -> Vec<f64> {
    (0..=10).map(|k| ((30 + 2 * k) as f64) / 100.0).collect()
}

#[derive(Args, Debug)]
struct InputArgs {
    /// CSV file with a header row.
    #[arg(long, conflicts_with = "dgp", required_unless_present = "dgp")]
    input: Option<PathBuf>,
    /// Simulate instead (seeded by --seed): std-normal, ar1, ma1 or arma11.
    #[arg(long)]
    dgp: Option<String>,
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 500)]
    burn_in: usize,
    /// Response column.
    #[arg(long, default_value = "y")]
    y: String,
    /// Linear regressor columns (default: every column starting with 'z').
    #[arg(long, value_delimiter = ',')]
    z: Vec<String>,
    /// Covariate columns (default: every column starting with 'x').
    #[arg(long, value_delimiter = ',')]
    x: Vec<String>,
}

#[derive(Args, Debug)]
struct SimArgs {
    #[arg(long, default_value = "std-normal")]
    model: String,
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 500)]
    burn_in: usize,
}

#[derive(Args, Debug)]
struct MethodArgs {
    #[arg(long, default_value = "epanechnikov")]
    kernel: String,
    /// Fixed bandwidth; without it the bandwidth is the undersmoothed GCV choice.
    #[arg(long, conflicts_with = "gcv")]
    bandwidth: Option<f64>,
    /// Undersmoothed GCV bandwidth (the default).
    #[arg(long)]
    gcv: bool,
    #[arg(long, default_value_t = 1.0)]
    undersmooth_c: f64,
    #[arg(long, default_value_t = 2.0 / 15.0)]
    undersmooth_exp: f64,
    /// Truncation lag: a positive integer or 'sqrt'.
    #[arg(long, default_value = "sqrt")]
    lag: String,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 1000)]
    draws: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// q05q95 (default) or explicit bounds a,b[;c,d].
    #[arg(long, default_value = "q05q95")]
    region: String,
    /// Cap on grid points in the covariance matrix.
    #[arg(long, default_value_t = scr_core::longrun::DEFAULT_MAX_GRID)]
    max_grid: usize,
    /// Covariance assembly: weighted (default) or banded.
    #[arg(long, default_value = "weighted")]
    cov_form: String,
}

/// Failure classes with their exit codes.
#[derive(Debug)]
enum Failure {
    Config(anyhow::Error),
    Data(anyhow::Error),
    Numeric(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Data(_) => 3,
            Failure::Numeric(_) => 4,
        }
    }

    fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Config(e) | Failure::Data(e) | Failure::Numeric(e) => e,
        }
    }
}

impl From<ScrError> for Failure {
    fn from(e: ScrError) -> Self {
        match e {
            ScrError::Argument(_) => Failure::Config(e.into()),
            ScrError::Data(_) | ScrError::Io(_) => Failure::Data(e.into()),
            ScrError::EmptyWindow { .. }
            | ScrError::SingularDesign { .. }
            | ScrError::DegenerateSmoother
            | ScrError::Numerical(_) => Failure::Numeric(e.into()),
        }
    }
}

impl From<scr_core::PipelineError> for Failure {
    fn from(e: scr_core::PipelineError) -> Self {
        let stage = e.stage;
        match Failure::from(e.source) {
            Failure::Config(x) => Failure::Config(x.context(format!("stage {stage}"))),
            Failure::Data(x) => Failure::Data(x.context(format!("stage {stage}"))),
            Failure::Numeric(x) => Failure::Numeric(x.context(format!("stage {stage}"))),
        }
    }
}

fn io_failure(e: std::io::Error, what: &Path) -> Failure {
    Failure::Data(anyhow::Error::new(e).context(format!("cannot write {}", what.display())))
}

type Outcome<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.code())
        }
    }
}

fn run(cli: Cli) -> Outcome<()> {
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(Failure::Config(anyhow::anyhow!("--workers must be positive")));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| Failure::Config(e.into()))?;
    }
    match cli.command {
        Command::Analyze { input, method, null, out } => {
            let null = null.map(|s| parse_null(&s)).transpose()?;
            run_analysis(&input, &method, null, &out)
        }
        Command::Test { input, method, null, out } => {
            let null = parse_null(&null)?;
            run_analysis(&input, &method, Some(null), &out)
        }
        Command::Simulate { sim, seed, out } => run_simulate(&sim, seed, &out),
        Command::Coverage {
            n,
            replications,
            bandwidths,
            models,
            kernel,
            lag,
            alpha,
            draws,
            seed,
            burn_in,
            cov_form,
            out,
        } => {
            let models = models.iter().map(|m| m.parse::<ErrorModel>()).collect::<Result<Vec<_>, _>>()?;
            let config = ExperimentConfig {
                n,
                replications,
                bandwidths,
                models,
                alpha,
                draws,
                lag: lag.parse::<LagSpec>()?,
                kernel: kernel.parse::<KernelFamily>()?,
                burn_in,
                seed,
                covariance: cov_form.parse::<CovarianceForm>()?,
                ..Default::default()
            };
            run_coverage(&config, &out)
        }
    }
}

fn parse_null(s: &str) -> Outcome<(NullSpec, String)> {
    Ok((s.parse::<NullSpec>()?, s.to_string()))
}

/// Creates `<out>/run-<unixtime>-s<seed>`, adding a suffix if it exists.
fn run_dir(out: &Path, seed: u64) -> Outcome<PathBuf> {
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let base = format!("run-{secs}-s{seed}");
    let mut dir = out.join(&base);
    let mut k = 2;
    while dir.exists() {
        dir = out.join(format!("{base}-{k}"));
        k += 1;
    }
    fs::create_dir_all(&dir).map_err(|e| io_failure(e, &dir))?;
    Ok(dir)
}

fn write_file(path: &Path, contents: &[u8]) -> Outcome<()> {
    fs::write(path, contents).map_err(|e| io_failure(e, path))
}

fn load_input(input: &InputArgs, region: &RegionSpec<f64>, seed: u64) -> Outcome<Dataset<f64>> {
    if let Some(model) = &input.dgp {
        let model: ErrorModel = model.parse()?;
        let cfg = DgpConfig { n: input.n, error_model: model, burn_in: input.burn_in, seed, region: region.clone() };
        return Ok(generate_sample(&cfg)?.0);
    }
    let path = input.input.as_ref().expect("clap requires --input or --dgp");
    let schema = if input.z.is_empty() && input.x.is_empty() {
        None
    } else if input.z.is_empty() || input.x.is_empty() {
        return Err(Failure::Config(anyhow::anyhow!("give both --z and --x, or neither")));
    } else {
        Some(ColumnSchema { y: input.y.clone(), z: input.z.clone(), x: input.x.clone() })
    };
    Ok(load_csv_dataset(path, schema.as_ref(), region)?)
}

fn analysis_config(method: &MethodArgs) -> Outcome<AnalysisConfig<f64>> {
    let bandwidth = match method.bandwidth {
        Some(h) => BandwidthSpec::Fixed(h),
        None => BandwidthSpec::GcvUndersmoothed { multiplier: method.undersmooth_c, exponent: method.undersmooth_exp },
    };
    Ok(AnalysisConfig {
        kernel: method.kernel.parse()?,
        bandwidth,
        lag: method.lag.parse()?,
        alpha: method.alpha,
        draws: method.draws,
        seed: method.seed,
        max_grid: method.max_grid,
        covariance: method.cov_form.parse()?,
        ..AnalysisConfig::with_bandwidth(1.0)
    })
}

fn run_analysis(input: &InputArgs, method: &MethodArgs, null: Option<(NullSpec, String)>, out: &Path) -> Outcome<()> {
    let region: RegionSpec<f64> = parse_region(&method.region)?;
    let config = analysis_config(method)?;
    let data = load_input(input, &region, config.seed)?;
    if let Some((spec, _)) = &null {
        spec.check_dim(data.dim())?;
    }
    let analysis = analyze(&data, &config)?;

    let mut summary = AnalysisSummary::new(&data, &analysis, config.draws, config.seed);
    if let Some((spec, label)) = &null {
        let verdict = check_containment(&analysis.band, |x| spec.eval(x))?;
        summary.null_test = Some(NullTestSummary::new(label, &verdict));
    }

    let dir = run_dir(out, config.seed)?;
    let band_path = dir.join("band.csv");
    let mut band_csv = Vec::new();
    write_band_csv(&mut band_csv, &analysis.band)?;
    write_file(&band_path, &band_csv)?;
    let mut json = summary.to_json()?;
    json.push('\n');
    write_file(&dir.join("summary.json"), json.as_bytes())?;
    write_plots(&dir, &analysis.band, null.as_ref().map(|(s, _)| s));

    println!("run directory: {}", dir.display());
    println!(
        "h = {:.4}, L = {}, q_alpha = {:.4}, beta_hat = {:?}",
        summary.bandwidth, summary.lag, summary.q_alpha, summary.beta_hat
    );
    if summary.sigma_floor_warning {
        eprintln!("warning: some volatility estimates sit at the floor");
    }
    if let Some(t) = &summary.null_test {
        let verdict = if t.rejected { "rejected" } else { "not rejected" };
        println!("null {}: {verdict} ({} violating points)", t.null, t.violations);
    }
    Ok(())
}

/// Plots are decoration: failures are reported and ignored.
fn write_plots(dir: &Path, band: &scr_core::ScrBand<f64>, null: Option<&NullSpec>) {
    let mut files = Vec::new();
    match band.eval_points.dim() {
        1 => {
            let curve = null.map(|s| {
                let s = s.clone();
                move |x: f64| s.eval(&[x])
            });
            let svg = match &curve {
                Some(c) => band_svg(band, Some(c as &dyn Fn(f64) -> f64)),
                None => band_svg(band, None),
            };
            files.push(("band.svg".to_string(), svg));
        }
        2 => {
            for (label, svg) in band_slices_svg(band, 4) {
                files.push((format!("band_{label}.svg"), svg));
            }
        }
        _ => {}
    }
    for (name, svg) in files {
        let path = dir.join(name);
        if let Err(e) = fs::write(&path, svg) {
            eprintln!("warning: could not write {}: {e}", path.display());
        }
    }
}

fn run_simulate(sim: &SimArgs, seed: u64, out: &Path) -> Outcome<()> {
    let cfg = DgpConfig::<f64> {
        n: sim.n,
        error_model: sim.model.parse()?,
        burn_in: sim.burn_in,
        seed,
        region: RegionSpec::default(),
    };
    let (data, _) = generate_sample(&cfg)?;
    let dir = run_dir(out, seed)?;
    let path = dir.join("dataset.csv");
    let mut buf = Vec::new();
    write_dataset_csv(&mut buf, &data)?;
    write_file(&path, &buf)?;
    println!("{}", path.display());
    Ok(())
}

fn run_coverage(config: &ExperimentConfig, out: &Path) -> Outcome<()> {
    let report = run_coverage_experiment::<f64>(config)?;
    let dir = run_dir(out, config.seed)?;
    let json = serde_json::to_string_pretty(&report)
        .context("serializing coverage report")
        .map_err(Failure::Data)?;
    write_file(&dir.join("coverage.json"), format!("{json}\n").as_bytes())?;
    let table = report.table();
    write_file(&dir.join("coverage.txt"), table.as_bytes())?;
    print!("{table}");
    for c in report.cells.iter().filter(|c| c.failures > 0) {
        eprintln!(
            "warning: {} h={}: {} failed replications{}",
            c.error_model,
            c.bandwidth,
            c.failures,
            if c.aborted { " (cell aborted)" } else { "" }
        );
    }
    println!("run directory: {}", dir.display());
    Ok(())
}
