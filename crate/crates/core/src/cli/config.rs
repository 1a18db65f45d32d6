use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::Args;
use serde::{Deserialize, Serialize};

use super::parse_method;
use crate::analysis::{Method, OutputFormat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Convergence,
    #[default]
    Compare,
}

/// Every experiment setting. Loaded from a flat TOML file and overridden by
/// command-line flags; `threads` and `out` never affect results and are not
/// echoed into output files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: CommandKind,
    pub p: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
    pub grid: Vec<usize>,
    #[serde(rename = "K")]
    pub trajectories: usize,
    pub ref_n: usize,
    pub w_ratio: f64,
    pub eps_exp: f64,
    pub scale: f64,
    pub margin: f64,
    /// Fixed truncation level for convergence studies (default 500).
    #[serde(rename = "M", skip_serializing_if = "Option::is_none")]
    pub coords: Option<usize>,
    pub zero_drift: bool,
    pub method: Method,
    pub seed: u64,
    #[serde(skip_serializing)]
    pub threads: usize,
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: CommandKind::Compare,
            p: 0.9,
            horizon: None,
            x0: None,
            grid: vec![200, 400, 800],
            trajectories: 300,
            ref_n: 100_000,
            w_ratio: 1.0,
            eps_exp: 1.0 / 3.0,
            scale: 0.15,
            margin: 0.03,
            coords: None,
            zero_drift: false,
            method: Method::Equidistant,
            seed: 1,
            threads: 0,
            out: None,
            format: OutputFormat::Csv,
        }
    }
}

fn parse_format(s: &str) -> Result<OutputFormat, String> {
    match s {
        "csv" => Ok(OutputFormat::Csv),
        "json" => Ok(OutputFormat::Json),
        _ => Err(format!("unknown format `{s}` (expected csv or json)")),
    }
}

fn parse_command(s: &str) -> Result<CommandKind, String> {
    match s {
        "convergence" => Ok(CommandKind::Convergence),
        "compare" => Ok(CommandKind::Compare),
        _ => Err(format!(
            "unknown command `{s}` (expected convergence or compare)"
        )),
    }
}

/// Flags shared by the experiment subcommands; each one, when given,
/// overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Flat TOML file with `RunConfig` keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_parser = parse_command)]
    pub command: Option<CommandKind>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub x0: Option<f64>,
    /// Shorthand for a one-point grid.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<usize>>,
    #[arg(long = "K")]
    pub trajectories: Option<usize>,
    #[arg(long = "ref-n")]
    pub ref_n: Option<usize>,
    #[arg(long = "w-ratio")]
    pub w_ratio: Option<f64>,
    #[arg(long = "eps-exp")]
    pub eps_exp: Option<f64>,
    #[arg(long)]
    pub scale: Option<f64>,
    #[arg(long)]
    pub margin: Option<f64>,
    #[arg(long = "M")]
    pub coords: Option<usize>,
    #[arg(long = "zero-drift")]
    pub zero_drift: bool,
    #[arg(long, value_parser = parse_method)]
    pub method: Option<Method>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_parser = parse_format)]
    pub format: Option<OutputFormat>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Defaults, then the config file, then flags.
    pub fn resolve(o: &Overrides) -> anyhow::Result<Self> {
        let mut cfg = match &o.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            None => RunConfig::default(),
        };
        macro_rules! take {
            ($($field:ident),*) => {$(
                if let Some(v) = o.$field.clone() {
                    cfg.$field = v;
                }
            )*};
        }
        take!(
            command,
            p,
            trajectories,
            ref_n,
            w_ratio,
            eps_exp,
            scale,
            margin,
            method,
            seed,
            threads,
            format,
            grid
        );
        if o.horizon.is_some() {
            cfg.horizon = o.horizon;
        }
        if o.x0.is_some() {
            cfg.x0 = o.x0;
        }
        if o.coords.is_some() {
            cfg.coords = o.coords;
        }
        if o.out.is_some() {
            cfg.out = o.out.clone();
        }
        if let Some(n) = o.n {
            cfg.grid = vec![n];
        }
        cfg.zero_drift |= o.zero_drift;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if !(self.p > 0.5 && self.p.is_finite()) {
            bail!("p must exceed 1/2, got {}", self.p);
        }
        if let Some(h) = self.horizon {
            if !(h > 0.0 && h.is_finite()) {
                bail!("horizon must be positive, got {h}");
            }
        }
        if let Some(x) = self.x0 {
            if !x.is_finite() {
                bail!("x0 must be finite");
            }
        }
        if self.grid.is_empty() || self.grid[0] == 0 {
            bail!("grid must be a non-empty list of positive integers");
        }
        if self.grid.windows(2).any(|w| w[1] <= w[0]) {
            bail!("grid must be strictly increasing");
        }
        if self.trajectories < 2 {
            bail!("K must be at least 2");
        }
        if self.ref_n == 0 {
            bail!("ref_n must be positive");
        }
        if !(self.w_ratio >= 1.0 && self.w_ratio.is_finite()) {
            bail!("w_ratio must be at least 1, got {}", self.w_ratio);
        }
        if !(self.eps_exp > 0.0 && self.eps_exp < 0.5) {
            bail!("eps_exp must lie in (0, 1/2), got {}", self.eps_exp);
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            bail!("scale must be positive, got {}", self.scale);
        }
        if !(self.margin > 0.0 && self.margin.is_finite()) {
            bail!("margin must be positive, got {}", self.margin);
        }
        if self.coords == Some(0) {
            bail!("M must be at least 1");
        }
        Ok(())
    }
}
