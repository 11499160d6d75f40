//! Output artifacts: draw files, beta summary, summary report, ACF tables,
//! histogram/density tables, and the run log.
//!
//! Every data file is deterministic for a fixed (data, config, seed); the
//! only volatile output is `timing.txt`, which is excluded from the
//! reproducibility contract (see README).

use anyhow::{bail, Context, Result};
use dgev_core::diagnostics::{self, Summary};
use dgev_core::gibbs::ChainDraws;
use dgev_core::{DatasetSpec, LatentPath, Standardization};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Format a float with 17 significant digits (round-trippable f64).
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Names of the scalar parameters in file order.
#[cfg(test)]
fn param_names(seasonal: bool) -> Vec<&'static str> {
    if seasonal {
        vec!["mu", "psi", "xi", "phi", "a1", "a2", "sigma"]
    } else {
        vec!["mu", "psi", "xi", "phi", "sigma"]
    }
}

fn param_columns(draws: &ChainDraws) -> Vec<(&'static str, &[f64])> {
    let mut cols: Vec<(&'static str, &[f64])> = vec![
        ("mu", &draws.mu),
        ("psi", &draws.psi),
        ("xi", &draws.xi),
        ("phi", &draws.phi),
    ];
    if let (Some(a1), Some(a2)) = (&draws.a1, &draws.a2) {
        cols.push(("a1", a1));
        cols.push(("a2", a2));
    }
    cols.push(("sigma", &draws.sigma));
    cols
}

/// Verify the output directory is writable before any sampling starts.
pub fn preflight(out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create output directory {}", out_dir.display()))?;
    let probe = out_dir.join(".dgev-write-probe");
    std::fs::write(&probe, b"probe")
        .with_context(|| format!("output directory {} is not writable", out_dir.display()))?;
    std::fs::remove_file(&probe).ok();
    Ok(())
}

/// Write the simulated dataset and its latent path.
pub fn write_simulation(out_dir: &Path, data: &DatasetSpec, beta: &LatentPath) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();

    let mut text = String::from("t,value\n");
    for (label, y) in data.time_index.iter().zip(&data.y) {
        writeln!(text, "{label},{}", fmt17(*y)).unwrap();
    }
    let path = out_dir.join("dataset.csv");
    std::fs::write(&path, text)?;
    files.push(path);

    let mut text = String::from("t,beta\n");
    for (label, b) in data.time_index.iter().zip(&beta.beta) {
        writeln!(text, "{label},{}", fmt17(*b)).unwrap();
    }
    let path = out_dir.join("latent.csv");
    std::fs::write(&path, text)?;
    files.push(path);

    Ok(files)
}

/// Everything `fit` writes besides the draws themselves.
pub struct RunMeta<'a> {
    pub command: &'a str,
    pub data_path: String,
    pub t_len: usize,
    pub seasonal: bool,
    pub freq: Option<f64>,
    pub negate: bool,
    pub standardization: Option<Standardization>,
    pub seed: u64,
    pub n_iter: usize,
    pub burn_in: usize,
    pub n_particles: usize,
    pub thin_beta: usize,
    pub proposal: String,
}

/// Write all fit artifacts; returns the list of files written.
pub fn write_outputs(
    out_dir: &Path,
    draws: &ChainDraws,
    summary: &Summary,
    meta: &RunMeta,
) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    files.push(write_draws(out_dir, draws)?);
    files.push(write_beta_summary(out_dir, summary)?);
    files.push(write_summary(out_dir, draws, summary, meta)?);
    files.push(write_acf(out_dir, draws)?);
    files.push(write_density(out_dir, draws)?);
    files.push(write_run_log(out_dir, draws)?);
    if let Some(s) = meta.standardization {
        files.push(write_standardization(out_dir, s, meta.negate)?);
    }
    files.push(write_timing(out_dir, draws)?);
    Ok(files)
}

/// (a) scalar draws: one row per kept iteration.
fn write_draws(out_dir: &Path, draws: &ChainDraws) -> Result<PathBuf> {
    let cols = param_columns(draws);
    let mut text = String::from("iter");
    for (name, _) in &cols {
        text.push(',');
        text.push_str(name);
    }
    text.push('\n');
    for (row, iter) in draws.kept_iters.iter().enumerate() {
        write!(text, "{iter}").unwrap();
        for (_, col) in &cols {
            text.push(',');
            text.push_str(&fmt17(col[row]));
        }
        text.push('\n');
    }
    let path = out_dir.join("draws.csv");
    std::fs::write(&path, text)?;
    Ok(path)
}

/// (b) per-t latent summary with the extremeness flag.
fn write_beta_summary(out_dir: &Path, summary: &Summary) -> Result<PathBuf> {
    let mut text = String::from("t,median,q025,q975,flag\n");
    if let Some(beta) = &summary.beta {
        for t in 0..beta.median.len() {
            writeln!(
                text,
                "{},{},{},{},{}",
                t + 1,
                fmt17(beta.median[t]),
                fmt17(beta.q025[t]),
                fmt17(beta.q975[t]),
                if beta.extreme[t] { "extreme" } else { "" }
            )
            .unwrap();
        }
    }
    let path = out_dir.join("beta_summary.csv");
    std::fs::write(&path, text)?;
    Ok(path)
}

/// (c) the summary report: SummaryRow table plus run metadata. Wall-clock
/// timings go to timing.txt so this file is byte-reproducible.
fn write_summary(
    out_dir: &Path,
    draws: &ChainDraws,
    summary: &Summary,
    meta: &RunMeta,
) -> Result<PathBuf> {
    let mut text = String::new();
    writeln!(text, "dgev {} summary", meta.command).unwrap();
    writeln!(text, "=================").unwrap();
    writeln!(text, "model: {}", if meta.seasonal { "seasonal-dgev" } else { "dgev" }).unwrap();
    writeln!(text, "data: {} (T = {})", meta.data_path, meta.t_len).unwrap();
    if let Some(f) = meta.freq {
        writeln!(text, "freq: {}", fmt17(f)).unwrap();
    }
    writeln!(text, "negate: {}", meta.negate).unwrap();
    match meta.standardization {
        Some(s) => writeln!(
            text,
            "standardize: true (mean = {}, sd = {})",
            fmt17(s.mean),
            fmt17(s.sd)
        )
        .unwrap(),
        None => writeln!(text, "standardize: false").unwrap(),
    }
    writeln!(text, "seed: {}", meta.seed).unwrap();
    writeln!(text, "n_iter: {}", meta.n_iter).unwrap();
    writeln!(text, "burn_in: {}", meta.burn_in).unwrap();
    writeln!(text, "n_particles: {}", meta.n_particles).unwrap();
    writeln!(text, "thin_beta: {}", meta.thin_beta).unwrap();
    writeln!(text, "proposal: {}", meta.proposal).unwrap();
    writeln!(text, "kept_draws: {}", draws.kept()).unwrap();
    writeln!(
        text,
        "acceptance_rate_theta: {}",
        fmt17(draws.theta_acceptance_rate())
    )
    .unwrap();
    writeln!(text, "acceptance_rate_phi: {}", fmt17(draws.phi_acceptance_rate())).unwrap();
    let failed = draws.run_log.records.iter().filter(|r| r.pgas_failed).count();
    writeln!(text, "pgas_failed_sweeps: {failed}").unwrap();
    writeln!(text, "wall_time: see timing.txt").unwrap();

    writeln!(text).unwrap();
    writeln!(text, "posterior summary (draw scale)").unwrap();
    writeln!(text, "parameter,median,ci_low,ci_high,inefficiency").unwrap();
    for row in &summary.rows {
        writeln!(
            text,
            "{},{},{},{},{}",
            row.name,
            fmt17(row.median),
            fmt17(row.ci_low),
            fmt17(row.ci_high),
            fmt17(row.inefficiency)
        )
        .unwrap();
    }

    if let Some(s) = meta.standardization {
        // mu, psi, sigma, a1, a2 transform back affinely; xi and phi are
        // scale-free. Quantiles commute with the monotone transform and the
        // inefficiency factor is affine-invariant.
        writeln!(text).unwrap();
        writeln!(text, "posterior summary (original units)").unwrap();
        writeln!(text, "parameter,median,ci_low,ci_high,inefficiency").unwrap();
        for row in &summary.rows {
            let (scale, shift) = match row.name.as_str() {
                "mu" => (s.sd, s.mean),
                "psi" | "sigma" | "a1" | "a2" => (s.sd, 0.0),
                _ => (1.0, 0.0),
            };
            writeln!(
                text,
                "{},{},{},{},{}",
                row.name,
                fmt17(shift + scale * row.median),
                fmt17(shift + scale * row.ci_low),
                fmt17(shift + scale * row.ci_high),
                fmt17(row.inefficiency)
            )
            .unwrap();
        }
    }

    if !draws.run_log.warnings.is_empty() {
        writeln!(text).unwrap();
        for w in &draws.run_log.warnings {
            writeln!(text, "warning: {w}").unwrap();
        }
    }

    let path = out_dir.join("summary.txt");
    std::fs::write(&path, text)?;
    Ok(path)
}

/// (d) per-parameter autocorrelations to lag 100 (or what the chain allows).
fn write_acf(out_dir: &Path, draws: &ChainDraws) -> Result<PathBuf> {
    let cols = param_columns(draws);
    let max_lag = 100.min(draws.kept().saturating_sub(1)).max(1);
    let mut series = Vec::new();
    for (_, col) in &cols {
        series.push(diagnostics::acf(col, max_lag).unwrap_or_else(|_| vec![f64::NAN; max_lag + 1]));
    }
    let mut text = String::from("lag");
    for (name, _) in &cols {
        text.push(',');
        text.push_str(name);
    }
    text.push('\n');
    for lag in 0..=max_lag {
        write!(text, "{lag}").unwrap();
        for s in &series {
            text.push(',');
            text.push_str(&fmt17(s[lag]));
        }
        text.push('\n');
    }
    let path = out_dir.join("acf.csv");
    std::fs::write(&path, text)?;
    Ok(path)
}

/// Histogram and kernel-density table per parameter.
fn write_density(out_dir: &Path, draws: &ChainDraws) -> Result<PathBuf> {
    let mut text = String::from("param,bin_left,bin_right,frequency,density\n");
    for (name, col) in param_columns(draws) {
        if let Ok(h) = diagnostics::histogram_density(col) {
            for i in 0..h.frequency.len() {
                writeln!(
                    text,
                    "{name},{},{},{},{}",
                    fmt17(h.edges[i]),
                    fmt17(h.edges[i + 1]),
                    fmt17(h.frequency[i]),
                    fmt17(h.density[i])
                )
                .unwrap();
            }
        }
    }
    let path = out_dir.join("density.csv");
    std::fs::write(&path, text)?;
    Ok(path)
}

/// Per-iteration run log: acceptance flags, PGAS effective sample size, and
/// proposal adaptation events.
fn write_run_log(out_dir: &Path, draws: &ChainDraws) -> Result<PathBuf> {
    let mut text = String::from(
        "iter,theta_accepted,phi_accepted,min_ess,c_adaptations,theta_opt_converged,phi_opt_converged,fallback_rw,pgas_failed\n",
    );
    for r in &draws.run_log.records {
        writeln!(
            text,
            "{},{},{},{},{},{},{},{},{}",
            r.iter,
            r.theta_accepted as u8,
            r.phi_accepted as u8,
            fmt17(r.min_ess),
            r.c_adaptations,
            r.theta_opt_converged as u8,
            r.phi_opt_converged as u8,
            r.fallback_rw as u8,
            r.pgas_failed as u8
        )
        .unwrap();
    }
    for w in &draws.run_log.warnings {
        writeln!(text, "# warning: {w}").unwrap();
    }
    let path = out_dir.join("run.log");
    std::fs::write(&path, text)?;
    Ok(path)
}

fn write_standardization(out_dir: &Path, s: Standardization, negate: bool) -> Result<PathBuf> {
    let text = format!("mean,sd,negate\n{},{},{}\n", fmt17(s.mean), fmt17(s.sd), negate);
    let path = out_dir.join("standardization.csv");
    std::fs::write(&path, text)?;
    Ok(path)
}

/// Wall-clock timings; the one output excluded from byte-reproducibility.
fn write_timing(out_dir: &Path, draws: &ChainDraws) -> Result<PathBuf> {
    let t = draws.timing;
    let text = format!(
        "phase,seconds\ntheta,{:.3}\nsigma2,{:.3}\nphi,{:.3}\nseasonal,{:.3}\npgas,{:.3}\ntotal,{:.3}\n",
        t.theta_s, t.sigma_s, t.phi_s, t.seasonal_s, t.pgas_s, t.total_s
    );
    let path = out_dir.join("timing.txt");
    std::fs::write(&path, text)?;
    Ok(path)
}

/// Columns of a previously written draws file, keyed by header name.
pub struct DrawsFile {
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
    pub iters: Vec<usize>,
}

/// Read back a draws.csv produced by `fit`.
pub fn read_draws(path: &Path) -> Result<DrawsFile> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read draws {}", path.display()))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    let names: Vec<String> = header.split(',').map(|s| s.to_string()).collect();
    if names.first().map(String::as_str) != Some("iter") {
        bail!("{}: expected an `iter` first column", path.display());
    }
    let n_cols = names.len() - 1;
    let mut columns = vec![Vec::new(); n_cols];
    let mut iters = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != names.len() {
            bail!("{}: line {}: ragged row", path.display(), i + 2);
        }
        iters.push(fields[0].parse::<usize>().with_context(|| {
            format!("{}: line {}: bad iter", path.display(), i + 2)
        })?);
        for (j, f) in fields[1..].iter().enumerate() {
            columns[j].push(f.parse::<f64>().with_context(|| {
                format!("{}: line {}: bad value", path.display(), i + 2)
            })?);
        }
    }
    Ok(DrawsFile { names: names[1..].to_vec(), columns, iters })
}

/// Post-hoc summary from a draws file: summary.txt + acf.csv in `out_dir`.
pub fn summarize_draws_dir(draws_dir: &Path, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let draws_file = read_draws(&draws_dir.join("draws.csv"))?;
    let standardization = read_standardization(&draws_dir.join("standardization.csv"))?;

    let mut files = Vec::new();
    let mut text = String::from("dgev summarize\n=================\n");
    writeln!(text, "draws: {}", draws_dir.join("draws.csv").display()).unwrap();
    writeln!(text, "kept_draws: {}", draws_file.iters.len()).unwrap();
    writeln!(text).unwrap();
    writeln!(text, "posterior summary (draw scale)").unwrap();
    writeln!(text, "parameter,median,ci_low,ci_high,inefficiency").unwrap();
    let mut rows = Vec::new();
    for (name, col) in draws_file.names.iter().zip(&draws_file.columns) {
        let mut sorted = col.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let batch = diagnostics::DEFAULT_IF_BATCH.min(col.len().saturating_sub(1)).max(1);
        let inefficiency = diagnostics::inefficiency_factor(col, batch).unwrap_or(f64::NAN);
        let row = (
            name.clone(),
            diagnostics::quantile_sorted(&sorted, 0.5),
            diagnostics::quantile_sorted(&sorted, 0.025),
            diagnostics::quantile_sorted(&sorted, 0.975),
            inefficiency,
        );
        writeln!(
            text,
            "{},{},{},{},{}",
            row.0,
            fmt17(row.1),
            fmt17(row.2),
            fmt17(row.3),
            fmt17(row.4)
        )
        .unwrap();
        rows.push(row);
    }
    if let Some((s, _negate)) = standardization {
        writeln!(text).unwrap();
        writeln!(text, "posterior summary (original units)").unwrap();
        writeln!(text, "parameter,median,ci_low,ci_high,inefficiency").unwrap();
        for row in &rows {
            let (scale, shift) = match row.0.as_str() {
                "mu" => (s.sd, s.mean),
                "psi" | "sigma" | "a1" | "a2" => (s.sd, 0.0),
                _ => (1.0, 0.0),
            };
            writeln!(
                text,
                "{},{},{},{},{}",
                row.0,
                fmt17(shift + scale * row.1),
                fmt17(shift + scale * row.2),
                fmt17(shift + scale * row.3),
                fmt17(row.4)
            )
            .unwrap();
        }
    }
    let path = out_dir.join("summary.txt");
    std::fs::write(&path, text)?;
    files.push(path);

    // ACF table.
    let kept = draws_file.iters.len();
    let max_lag = 100.min(kept.saturating_sub(1)).max(1);
    let mut text = String::from("lag");
    for name in &draws_file.names {
        text.push(',');
        text.push_str(name);
    }
    text.push('\n');
    let series: Vec<Vec<f64>> = draws_file
        .columns
        .iter()
        .map(|col| diagnostics::acf(col, max_lag).unwrap_or_else(|_| vec![f64::NAN; max_lag + 1]))
        .collect();
    for lag in 0..=max_lag {
        write!(text, "{lag}").unwrap();
        for s in &series {
            text.push(',');
            text.push_str(&fmt17(s[lag]));
        }
        text.push('\n');
    }
    let path = out_dir.join("acf.csv");
    std::fs::write(&path, text)?;
    files.push(path);
    Ok(files)
}

fn read_standardization(path: &Path) -> Result<Option<(Standardization, bool)>> {
    if !path.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(path)?;
    let line = text.lines().nth(1).unwrap_or_default();
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != 3 {
        bail!("{}: malformed standardization record", path.display());
    }
    Ok(Some((
        Standardization { mean: fields[0].parse()?, sd: fields[1].parse()? },
        fields[2].parse()?,
    )))
}
