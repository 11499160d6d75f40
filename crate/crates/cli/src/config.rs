//! Plain-text `key = value` configuration files.
//!
//! Keys mirror the chain configuration plus `sim_*` keys for the simulator
//! and `prior_*` keys for hyperparameters. Command-line flags override file
//! values. Unknown keys are errors so typos cannot silently fall back to
//! defaults.

use anyhow::{anyhow, bail, Context, Result};
use dgev_core::gibbs::ChainConfig;
use dgev_core::pgas::{ProposalConfig, ProposalKind};
use dgev_core::simulate::SimSpec;
use dgev_core::{GevParams, ModelParams, Priors, Seasonal};
use std::collections::BTreeMap;
use std::path::Path;

/// Parsed configuration with every field optional; defaults are applied when
/// the typed configs are built.
#[derive(Debug, Clone, Default)]
pub struct Config {
    values: BTreeMap<String, (String, usize)>,
}

const KNOWN_KEYS: &[&str] = &[
    // chain
    "n_iter",
    "burn_in",
    "n_particles",
    "thin_beta",
    "seed",
    "proposal",
    "c",
    "t_df",
    "t_scale_floor",
    "seasonal",
    "freq",
    "standardize",
    "negate",
    // priors
    "prior_mu_mean",
    "prior_mu_var",
    "prior_psi_shape",
    "prior_psi_rate",
    "prior_xi_mean",
    "prior_xi_var",
    "prior_sigma2_shape",
    "prior_sigma2_scale",
    "prior_a1_var",
    "prior_a2_var",
    // simulation
    "sim_t",
    "sim_mu",
    "sim_psi",
    "sim_xi",
    "sim_phi",
    "sim_sigma",
    "sim_a1",
    "sim_a2",
];

impl Config {
    pub fn parse_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        Self::parse_str(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn parse_str(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw_line) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw_line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {line_no}: expected `key = value`, got `{line}`"))?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                bail!("line {line_no}: unknown key `{key}`");
            }
            if values.insert(key.clone(), (value, line_no)).is_some() {
                bail!("line {line_no}: duplicate key `{key}`");
            }
        }
        Ok(Self { values })
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|(v, _)| v.as_str())
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.values.get(key) {
            None => Ok(None),
            Some((v, line)) => v.parse::<T>().map(Some).map_err(|_| {
                anyhow!("line {line}: cannot parse `{key} = {v}` as {}", std::any::type_name::<T>())
            }),
        }
    }

    fn parse_bool(&self, key: &str) -> Result<Option<bool>> {
        match self.get(key) {
            None => Ok(None),
            Some("true") | Some("1") | Some("yes") => Ok(Some(true)),
            Some("false") | Some("0") | Some("no") => Ok(Some(false)),
            Some(v) => bail!("cannot parse `{key} = {v}` as bool"),
        }
    }

    pub fn seed(&self) -> Result<Option<u64>> {
        self.parse::<u64>("seed")
    }

    pub fn standardize(&self) -> Result<bool> {
        Ok(self.parse_bool("standardize")?.unwrap_or(false))
    }

    pub fn negate(&self) -> Result<bool> {
        Ok(self.parse_bool("negate")?.unwrap_or(false))
    }

    pub fn seasonal(&self) -> Result<bool> {
        Ok(self.parse_bool("seasonal")?.unwrap_or(false))
    }

    pub fn freq(&self) -> Result<Option<f64>> {
        self.parse::<f64>("freq")
    }

    fn priors(&self) -> Result<Priors> {
        let d = Priors::default();
        Ok(Priors {
            mu_mean: self.parse("prior_mu_mean")?.unwrap_or(d.mu_mean),
            mu_var: self.parse("prior_mu_var")?.unwrap_or(d.mu_var),
            psi_shape: self.parse("prior_psi_shape")?.unwrap_or(d.psi_shape),
            psi_rate: self.parse("prior_psi_rate")?.unwrap_or(d.psi_rate),
            xi_mean: self.parse("prior_xi_mean")?.unwrap_or(d.xi_mean),
            xi_var: self.parse("prior_xi_var")?.unwrap_or(d.xi_var),
            sigma2_shape: self.parse("prior_sigma2_shape")?.unwrap_or(d.sigma2_shape),
            sigma2_scale: self.parse("prior_sigma2_scale")?.unwrap_or(d.sigma2_scale),
            a1_var: self.parse("prior_a1_var")?.unwrap_or(d.a1_var),
            a2_var: self.parse("prior_a2_var")?.unwrap_or(d.a2_var),
        })
    }

    fn proposal(&self) -> Result<ProposalConfig> {
        let d = ProposalConfig::default();
        let kind = match self.get("proposal") {
            None => d.kind,
            Some("inverse_t") | Some("inverse_transform_t") => ProposalKind::InverseTransformT,
            Some("linearized") => ProposalKind::Linearized,
            Some(v) => bail!("unknown proposal `{v}` (expected inverse_t or linearized)"),
        };
        Ok(ProposalConfig {
            kind,
            c: self.parse("c")?.unwrap_or(d.c),
            t_df: self.parse("t_df")?.unwrap_or(d.t_df),
            t_scale_floor: self.parse("t_scale_floor")?.unwrap_or(d.t_scale_floor),
        })
    }

    /// Build the chain configuration, applying defaults for missing keys.
    pub fn chain_config(&self, seasonal: bool, freq: Option<f64>, seed: u64) -> Result<ChainConfig> {
        let d = ChainConfig::default();
        let config = ChainConfig {
            n_iter: self.parse("n_iter")?.unwrap_or(d.n_iter),
            burn_in: self.parse("burn_in")?.unwrap_or(d.burn_in),
            n_particles: self.parse("n_particles")?.unwrap_or(d.n_particles),
            thin_beta: self.parse("thin_beta")?.unwrap_or(d.thin_beta),
            seed,
            proposal: self.proposal()?,
            priors: self.priors()?,
            seasonal,
            freq,
        };
        config.validate()?;
        Ok(config)
    }

    /// Build the simulation settings; defaults are the illustrative-study values.
    pub fn sim_spec(&self, seed: u64) -> Result<SimSpec> {
        let t_len: usize = self.parse("sim_t")?.unwrap_or(1000);
        let mu = self.parse("sim_mu")?.unwrap_or(0.5);
        let psi = self.parse("sim_psi")?.unwrap_or(0.3);
        let xi = self.parse("sim_xi")?.unwrap_or(0.05);
        let phi = self.parse("sim_phi")?.unwrap_or(0.8);
        let sigma: f64 = self.parse("sim_sigma")?.unwrap_or(0.1);
        if sigma < 0.0 {
            bail!("sim_sigma must be >= 0");
        }
        let seasonal = if self.seasonal()? {
            let freq = self
                .freq()?
                .ok_or_else(|| anyhow!("seasonal simulation requires freq"))?;
            Some(Seasonal {
                a1: self.parse("sim_a1")?.unwrap_or(1.0),
                a2: self.parse("sim_a2")?.unwrap_or(2.0),
                omega: 2.0 * std::f64::consts::PI * freq,
            })
        } else {
            None
        };
        let params = ModelParams::new(GevParams::new(mu, psi, xi)?, phi, sigma * sigma, seasonal)?;
        Ok(SimSpec::new(t_len, params, seed)?)
    }
}
