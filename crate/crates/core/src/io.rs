//! CSV ingestion and emission, run summaries.

use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::data::{Dataset, PointSet, Region, RegionSpec};
use crate::error::{Result, ScrError};
use crate::inference::{BandSide, ContainmentVerdict, ScrBand};
use crate::pipeline::Analysis;
use crate::scalar::Real;

/// Which CSV columns hold the response, the linear regressors and the covariates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnSchema {
    pub y: String,
    pub z: Vec<String>,
    pub x: Vec<String>,
}

impl ColumnSchema {
    /// `y`, then every `z*` column and every `x*` column in header order.
    pub fn infer(headers: &[String]) -> Result<Self> {
        let pick = |prefix: char| -> Vec<String> {
            headers.iter().filter(|h| h.starts_with(prefix)).cloned().collect()
        };
        let schema = Self { y: "y".into(), z: pick('z'), x: pick('x') };
        if !headers.iter().any(|h| h == "y") {
            return Err(ScrError::data("no 'y' column; pass the column roles explicitly"));
        }
        if schema.z.is_empty() || schema.x.is_empty() {
            return Err(ScrError::data("could not infer z*/x* columns from the header"));
        }
        Ok(schema)
    }
}

/// Formats with 17 significant digits; parsing the text recovers the value exactly.
pub fn format_float<T: Real>(v: T) -> String {
    format!("{:.16e}", v.to_f64_lossy())
}

fn lf_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

fn csv_err(e: csv::Error) -> ScrError {
    ScrError::Io(e.to_string())
}

pub fn read_csv_dataset<T: Real, R: Read>(reader: R, schema: Option<&ColumnSchema>, region: &RegionSpec<T>) -> Result<Dataset<T>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| ScrError::data(format!("cannot read header row: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    let schema = match schema {
        Some(s) => s.clone(),
        None => ColumnSchema::infer(&headers)?,
    };
    let column = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| ScrError::data(format!("missing column '{name}'")))
    };
    let y_col = column(&schema.y)?;
    let z_cols = schema.z.iter().map(|c| column(c)).collect::<Result<Vec<_>>>()?;
    let x_cols = schema.x.iter().map(|c| column(c)).collect::<Result<Vec<_>>>()?;
    if z_cols.is_empty() || x_cols.is_empty() {
        return Err(ScrError::data("need at least one z column and one x column"));
    }

    let (mut y, mut z, mut x) = (Vec::new(), Vec::new(), Vec::new());
    for (r, record) in rdr.records().enumerate() {
        let row = r + 1;
        let record = record.map_err(|e| ScrError::data(format!("row {row}: {e}")))?;
        let cell = |c: usize| -> Result<T> {
            let name = &headers[c];
            let raw = record
                .get(c)
                .ok_or_else(|| ScrError::data(format!("row {row}: missing value for column '{name}'")))?;
            let v: f64 = raw
                .parse()
                .map_err(|_| ScrError::data(format!("row {row}, column '{name}': '{raw}' is not a number")))?;
            if !v.is_finite() {
                return Err(ScrError::data(format!("row {row}, column '{name}': non-finite value '{raw}'")));
            }
            Ok(T::lit(v))
        };
        y.push(cell(y_col)?);
        for &c in &z_cols {
            z.push(cell(c)?);
        }
        for &c in &x_cols {
            x.push(cell(c)?);
        }
    }
    let l = z_cols.len();
    if y.len() < l + 2 {
        return Err(ScrError::data(format!("{} data rows; need at least {}", y.len(), l + 2)));
    }
    Dataset::new(y, z, l, PointSet::new(x, x_cols.len())?, region)
}

pub fn load_csv_dataset<T: Real>(path: &Path, schema: Option<&ColumnSchema>, region: &RegionSpec<T>) -> Result<Dataset<T>> {
    let file = std::fs::File::open(path).map_err(|e| ScrError::Io(format!("{}: {e}", path.display())))?;
    read_csv_dataset(std::io::BufReader::new(file), schema, region)
}

/// Columns `y, z1.., x1..`.
pub fn write_dataset_csv<T: Real, W: Write>(writer: W, data: &Dataset<T>) -> Result<()> {
    let mut w = lf_writer(writer);
    let mut header = vec!["y".to_string()];
    header.extend((1..=data.n_linear()).map(|k| format!("z{k}")));
    header.extend((1..=data.dim()).map(|k| format!("x{k}")));
    w.write_record(&header).map_err(csv_err)?;
    for i in 0..data.len() {
        let mut rec = vec![format_float(data.y()[i])];
        rec.extend(data.z_row(i).iter().map(|&v| format_float(v)));
        rec.extend(data.x().row(i).iter().map(|&v| format_float(v)));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `x1.., mu_star, sigma_hat, lower, upper`.
pub fn write_band_csv<T: Real, W: Write>(writer: W, band: &ScrBand<T>) -> Result<()> {
    let mut w = lf_writer(writer);
    let d = band.eval_points.dim();
    let mut header: Vec<String> = (1..=d).map(|k| format!("x{k}")).collect();
    header.extend(["mu_star", "sigma_hat", "lower", "upper"].map(String::from));
    w.write_record(&header).map_err(csv_err)?;
    for (j, x) in band.eval_points.rows().enumerate() {
        let mut rec: Vec<String> = x.iter().map(|&v| format_float(v)).collect();
        rec.extend([band.mu_star[j], band.sigma_hat[j], band.lower[j], band.upper[j]].map(format_float));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Parses `q05q95` style quantile boxes or explicit `a,b[;c,d...]` intervals.
pub fn parse_region<T: Real>(s: &str) -> Result<RegionSpec<T>> {
    let bad = || ScrError::arg(format!("cannot parse region '{s}'"));
    let t = s.trim();
    if let Some(rest) = t.strip_prefix('q') {
        let (lo, hi) = rest.split_once('q').ok_or_else(bad)?;
        let level = |v: &str| -> Result<f64> {
            if v.is_empty() || !v.chars().all(|c| c.is_ascii_digit()) {
                return Err(bad());
            }
            Ok(v.parse::<f64>().map_err(|_| bad())? / 10f64.powi(v.len() as i32))
        };
        let (lower, upper) = (level(lo)?, level(hi)?);
        if lower >= upper {
            return Err(bad());
        }
        return Ok(RegionSpec::QuantileBox { lower, upper });
    }
    let bounds = t
        .split(';')
        .map(|iv| {
            let (a, b) = iv.split_once(',').ok_or_else(bad)?;
            let a: f64 = a.trim().parse().map_err(|_| bad())?;
            let b: f64 = b.trim().parse().map_err(|_| bad())?;
            Ok((T::lit(a), T::lit(b)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RegionSpec::Explicit(Region::new(bounds)?))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViolationSummary {
    pub point: Vec<f64>,
    pub value: f64,
    pub side: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NullTestSummary {
    pub null: String,
    pub rejected: bool,
    pub violations: usize,
    pub violation_points: Vec<ViolationSummary>,
}

impl NullTestSummary {
    pub fn new<T: Real>(label: &str, verdict: &ContainmentVerdict<T>) -> Self {
        Self {
            null: label.to_string(),
            rejected: !verdict.contained,
            violations: verdict.violations.len(),
            violation_points: verdict
                .violations
                .iter()
                .map(|v| ViolationSummary {
                    point: v.point.iter().map(|c| c.to_f64_lossy()).collect(),
                    value: v.value.to_f64_lossy(),
                    side: match v.side {
                        BandSide::Below => "below",
                        BandSide::Above => "above",
                    },
                })
                .collect(),
        }
    }
}

/// Everything a run reports besides the band itself.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisSummary {
    pub n: usize,
    pub n_in_region: usize,
    pub dim: usize,
    pub n_linear: usize,
    pub region: Vec<[f64; 2]>,
    pub kernel: String,
    pub beta_hat: Vec<f64>,
    /// Homoskedastic, serially uncorrelated standard errors; descriptive only.
    pub beta_naive_se: Vec<f64>,
    pub bandwidth: f64,
    pub lag: usize,
    pub covariance: String,
    pub alpha: f64,
    pub draws: usize,
    pub seed: u64,
    pub q_alpha: f64,
    pub psd_shift: f64,
    pub covariance_points: usize,
    pub eval_points: usize,
    pub dropped_points: Vec<Vec<f64>>,
    pub sigma_floor_warning: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub null_test: Option<NullTestSummary>,
}

impl AnalysisSummary {
    pub fn new<T: Real>(data: &Dataset<T>, analysis: &Analysis<T>, draws: usize, seed: u64) -> Self {
        let f = |v: &[T]| v.iter().map(|x| x.to_f64_lossy()).collect::<Vec<_>>();
        Self {
            n: data.len(),
            n_in_region: data.masked_indices().len(),
            dim: data.dim(),
            n_linear: data.n_linear(),
            region: data
                .region()
                .bounds()
                .iter()
                .map(|&(a, b)| [a.to_f64_lossy(), b.to_f64_lossy()])
                .collect(),
            kernel: analysis.fit.kernel.family().to_string(),
            beta_hat: f(&analysis.fit.beta_hat),
            beta_naive_se: f(&analysis.fit.beta_naive_se),
            bandwidth: analysis.bandwidth.to_f64_lossy(),
            lag: analysis.lag,
            covariance: analysis.covariance.to_string(),
            alpha: analysis.band.alpha,
            draws,
            seed,
            q_alpha: analysis.band.q_alpha.to_f64_lossy(),
            psd_shift: analysis.psd_shift.to_f64_lossy(),
            covariance_points: analysis.covariance_points,
            eval_points: analysis.band.len(),
            dropped_points: analysis.fit.dropped.iter().map(|p| f(p)).collect(),
            sigma_floor_warning: analysis.sigma_floor_warning,
            null_test: None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| ScrError::Io(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_small_file() {
        let text = "y,z1,x1\n1.0,0.5,0.1\n2.0,0.25,0.2\n3.0,-1,0.3\n";
        let region = RegionSpec::Explicit(Region::new(vec![(0.0, 1.0)]).unwrap());
        let d: Dataset<f64> = read_csv_dataset(text.as_bytes(), None, &region).unwrap();
        assert_eq!((d.len(), d.n_linear(), d.dim()), (3, 1, 1));
        assert_eq!(d.y(), &[1.0, 2.0, 3.0]);
        assert_eq!(d.z(), &[0.5, 0.25, -1.0]);
    }

    #[test]
    fn nan_cell_names_row_and_column() {
        let text = "y,z1,x1\n1.0,0.5,0.1\n2.0,NaN,0.2\n3.0,-1,0.3\n";
        let err = read_csv_dataset::<f64, _>(text.as_bytes(), None, &RegionSpec::default()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 2") && msg.contains("'z1'"), "{msg}");
    }

    #[test]
    fn parse_errors() {
        let missing = "y,z1,w\n1,2,3\n";
        assert!(read_csv_dataset::<f64, _>(missing.as_bytes(), None, &RegionSpec::default()).is_err());
        let schema = ColumnSchema { y: "y".into(), z: vec!["z1".into()], x: vec!["x9".into()] };
        let text = "y,z1,x1\n1,2,3\n";
        let err = read_csv_dataset::<f64, _>(text.as_bytes(), Some(&schema), &RegionSpec::default()).unwrap_err();
        assert!(err.to_string().contains("x9"));
        let text = "y,z1,x1\n1,abc,3\n2,1,1\n3,1,1\n";
        let err = read_csv_dataset::<f64, _>(text.as_bytes(), None, &RegionSpec::default()).unwrap_err();
        assert!(err.to_string().contains("'abc'"));
        let text = "y,z1,x1\n1,2,3\n2,1,1\n";
        let err = read_csv_dataset::<f64, _>(text.as_bytes(), None, &RegionSpec::default()).unwrap_err();
        assert!(err.to_string().contains("need at least 3"));
    }

    #[test]
    fn region_parsing() {
        assert_eq!(parse_region::<f64>("q05q95").unwrap(), RegionSpec::QuantileBox { lower: 0.05, upper: 0.95 });
        assert_eq!(parse_region::<f64>("q1q9").unwrap(), RegionSpec::QuantileBox { lower: 0.1, upper: 0.9 });
        assert_eq!(
            parse_region::<f64>("-1,1;0,2").unwrap(),
            RegionSpec::Explicit(Region::new(vec![(-1.0, 1.0), (0.0, 2.0)]).unwrap())
        );
        assert!(parse_region::<f64>("q95q05").is_err());
        assert!(parse_region::<f64>("1;2").is_err());
    }

    #[test]
    fn format_is_seventeen_digits() {
        assert_eq!(format_float(0.1f64), "1.0000000000000001e-1");
        assert_eq!(format_float(0.1f64).parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn simulated_dataset_round_trips_bitwise() {
        use crate::dgp::{generate_sample, DgpConfig, ErrorModel};
        let (data, _) = generate_sample(&DgpConfig::<f64>::new(150, ErrorModel::ARMA11, 17)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let mut buf = Vec::new();
        write_dataset_csv(&mut buf, &data).unwrap();
        std::fs::write(&path, &buf).unwrap();
        let back: Dataset<f64> = load_csv_dataset(&path, None, &RegionSpec::default()).unwrap();
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(back.y()), bits(data.y()));
        assert_eq!(bits(back.z()), bits(data.z()));
        assert_eq!(bits(back.x().as_slice()), bits(data.x().as_slice()));
        assert_eq!(back.mask(), data.mask());
    }
}
