//! Dataset ingestion and standardization.

use anyhow::{bail, Context, Result};
use dgev_core::{DatasetSpec, Standardization};
use std::path::Path;

/// Read a two-column comma-delimited file with a one-line header:
/// time label, then the observed value. Row order is preserved.
pub fn load_dataset(path: &Path) -> Result<DatasetSpec> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read dataset {}", path.display()))?;
    let mut lines = text.lines().enumerate();
    let header = match lines.next() {
        Some((_, h)) => h.trim().to_string(),
        None => bail!("{}: empty file", path.display()),
    };

    let mut labels = Vec::new();
    let mut values = Vec::new();
    for (i, raw) in lines {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line == header {
            bail!("{}: line {line_no}: duplicate header", path.display());
        }
        let mut fields = line.split(',');
        let (label, value) = match (fields.next(), fields.next(), fields.next()) {
            (Some(l), Some(v), None) => (l.trim(), v.trim()),
            _ => bail!(
                "{}: line {line_no}: expected two comma-separated columns",
                path.display()
            ),
        };
        let value: f64 = value.parse().map_err(|_| {
            anyhow::anyhow!("{}: line {line_no}: non-numeric value `{value}`", path.display())
        })?;
        if !value.is_finite() {
            bail!("{}: line {line_no}: non-finite value `{value}`", path.display());
        }
        labels.push(label.to_string());
        values.push(value);
    }
    if values.len() < 2 {
        bail!("{}: T >= 2 required, got T={}", path.display(), values.len());
    }
    Ok(DatasetSpec::new(values, labels, None, None)?)
}

/// Multiply the observations by -1 (block minima become block maxima).
pub fn negate(data: DatasetSpec) -> DatasetSpec {
    DatasetSpec {
        y: data.y.iter().map(|v| -v).collect(),
        ..data
    }
}

/// Standardize to zero mean and unit standard deviation, recording the
/// (mean, sd) pair so summaries can be reported in both scales.
pub fn standardize(data: DatasetSpec) -> Result<DatasetSpec> {
    let n = data.y.len() as f64;
    let mean = data.y.iter().sum::<f64>() / n;
    let var = data.y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    let sd = var.sqrt();
    if !(sd > 0.0) {
        bail!("cannot standardize: standard deviation is zero");
    }
    Ok(DatasetSpec {
        y: data.y.iter().map(|v| (v - mean) / sd).collect(),
        standardization: Some(Standardization { mean, sd }),
        ..data
    })
}
