//! `dgev`: simulate, fit and summarize dependent-GEV models from the
//! command line.

mod config;
mod dataset;
mod output;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand};
use config::Config;
use dgev_core::diagnostics;
use dgev_core::gibbs::{run_chain, DEFAULT_SEED};
use dgev_core::pgas::ProposalKind;
use dgev_core::simulate::simulate_dataset;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "dgev", version, about = "Bayesian inference for dependent GEV models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset from the model.
    Simulate {
        /// Configuration file (key = value).
        #[arg(long)]
        config: PathBuf,
        /// Output directory (defaults to $DGEV_OUT_DIR).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the MCMC sampler on a dataset.
    Fit {
        /// Two-column CSV of (time label, value) with a one-line header.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Fit the seasonal model (requires a frequency).
        #[arg(long)]
        seasonal: bool,
        /// Cycles per time step, e.g. 0.0027378 for annual cycles in daily data.
        #[arg(long)]
        freq: Option<f64>,
        /// Multiply the data by -1 (block minima become maxima).
        #[arg(long)]
        negate: bool,
        /// Standardize to zero mean / unit sd before fitting; summaries are
        /// reported in both scales.
        #[arg(long)]
        standardize: bool,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Recompute posterior summaries from a previous fit's draws directory.
    Summarize {
        /// Directory containing draws.csv from a fit.
        #[arg(long)]
        draws: PathBuf,
        /// Output directory (defaults to the draws directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn resolve_out(opt: Option<PathBuf>) -> Result<PathBuf> {
    opt.or_else(|| std::env::var_os("DGEV_OUT_DIR").map(PathBuf::from))
        .ok_or_else(|| anyhow!("no output directory: pass --out or set DGEV_OUT_DIR"))
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run() -> Result<()> {
    match Cli::parse().command {
        Command::Simulate { config, out, seed } => {
            let cfg = Config::parse_file(&config)?;
            let out = resolve_out(out)?;
            output::preflight(&out)?;
            let seed = seed.or(cfg.seed()?).unwrap_or(DEFAULT_SEED);
            let spec = cfg.sim_spec(seed)?;
            let (data, beta) = simulate_dataset(&spec)?;
            let files = output::write_simulation(&out, &data, &beta)?;
            println!(
                "simulated T={} observations (seed {seed}); wrote {} files to {}",
                spec.t_len,
                files.len(),
                out.display()
            );
            Ok(())
        }
        Command::Fit { data, config, out, seasonal, freq, negate, standardize, seed } => {
            let cfg = Config::parse_file(&config)?;
            let out = resolve_out(out)?;
            output::preflight(&out)?;

            let mut dataset = dataset::load_dataset(&data)?;
            let do_negate = negate || cfg.negate()?;
            if do_negate {
                dataset = dataset::negate(dataset);
            }
            let do_standardize = standardize || cfg.standardize()?;
            if do_standardize {
                dataset = dataset::standardize(dataset)?;
            }

            let seasonal = seasonal || cfg.seasonal()?;
            let freq = freq.or(cfg.freq()?);
            let seed = seed.or(cfg.seed()?).unwrap_or(DEFAULT_SEED);
            let chain = cfg.chain_config(seasonal, freq, seed)?;
            dataset.freq = chain.freq;

            let draws = run_chain(&dataset, &chain).context("MCMC run failed")?;
            let summary = diagnostics::summarize(&draws);
            let meta = output::RunMeta {
                command: "fit",
                data_path: data.display().to_string(),
                t_len: dataset.len(),
                seasonal,
                freq: chain.freq,
                negate: do_negate,
                standardization: dataset.standardization,
                seed,
                n_iter: chain.n_iter,
                burn_in: chain.burn_in,
                n_particles: chain.n_particles,
                thin_beta: chain.thin_beta,
                proposal: match chain.proposal.kind {
                    ProposalKind::InverseTransformT => format!(
                        "inverse_t (t_df = {}, c = {})",
                        chain.proposal.t_df, chain.proposal.c
                    ),
                    ProposalKind::Linearized => format!("linearized (c = {})", chain.proposal.c),
                },
            };
            let files = output::write_outputs(&out, &draws, &summary, &meta)?;
            for w in &draws.run_log.warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "fit complete: {} kept draws in {:.1}s; wrote {} files to {}",
                draws.kept(),
                draws.timing.total_s,
                files.len(),
                out.display()
            );
            Ok(())
        }
        Command::Summarize { draws, out } => {
            let out = out.unwrap_or_else(|| draws.clone());
            output::preflight(&out)?;
            let files = output::summarize_draws_dir(&draws, &out)?;
            println!("wrote {} files to {}", files.len(), out.display());
            Ok(())
        }
    }
}
