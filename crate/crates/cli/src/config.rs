use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Flags shared by every subcommand. Any of them may also come from a TOML
/// file given with `--config`; flags win.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ExperimentConfig {
    /// TOML file supplying any of the other flags.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Problem size (the maximum size for verify-coupling and lemma-grid).
    #[arg(long)]
    pub n: Option<usize>,

    /// Comma-separated problem sizes.
    #[arg(long, value_delimiter = ',')]
    pub n_grid: Option<Vec<usize>>,

    #[arg(long)]
    pub t_max: Option<usize>,

    #[arg(long)]
    pub trials: Option<usize>,

    /// Master seed; required by the stochastic subcommands.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Distance threshold for exact-tv, ε for schramm.
    #[arg(long)]
    pub eps: Option<f64>,

    #[arg(long)]
    pub delta: Option<f64>,

    /// Schedule start index; defaults to the one with 2^(j+1) = n^(1/3).
    #[arg(long)]
    pub j: Option<f64>,

    /// Worker threads (defaults to all cores).
    #[arg(long)]
    pub threads: Option<usize>,

    #[arg(long, value_enum)]
    pub format: Option<Format>,

    /// Output file (defaults to stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Fill the wall_ms column. Timings make output non-reproducible.
    #[arg(long)]
    #[serde(default)]
    pub wall_time: bool,
}

impl ExperimentConfig {
    /// Fills every unset field from `file`.
    pub fn merged_over(self, file: ExperimentConfig) -> ExperimentConfig {
        ExperimentConfig {
            config: self.config,
            n: self.n.or(file.n),
            n_grid: self.n_grid.or(file.n_grid),
            t_max: self.t_max.or(file.t_max),
            trials: self.trials.or(file.trials),
            seed: self.seed.or(file.seed),
            eps: self.eps.or(file.eps),
            delta: self.delta.or(file.delta),
            j: self.j.or(file.j),
            threads: self.threads.or(file.threads),
            format: self.format.or(file.format),
            out: self.out.or(file.out),
            wall_time: self.wall_time || file.wall_time,
        }
    }

    /// Reads `--config` if given and merges it under the flags.
    pub fn resolve(self) -> Result<ExperimentConfig, CliError> {
        match self.config.clone() {
            None => Ok(self),
            Some(path) => Ok(self.merged_over(load(&path)?)),
        }
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or(Format::Csv)
    }

    pub fn seed(&self) -> Result<u64, CliError> {
        self.seed
            .ok_or_else(|| CliError::Usage("--seed is required for this subcommand".into()))
    }

    /// `--n-grid`, else `[--n]`, else `default`.
    pub fn sizes(&self, default: &[usize]) -> Result<Vec<usize>, CliError> {
        let grid = match (&self.n_grid, self.n) {
            (Some(g), _) => g.clone(),
            (None, Some(n)) => vec![n],
            (None, None) => default.to_vec(),
        };
        if grid.is_empty() {
            return Err(CliError::Usage("the n grid is empty".into()));
        }
        Ok(grid)
    }

    pub fn trials(&self, default: usize) -> Result<usize, CliError> {
        match self.trials.unwrap_or(default) {
            0 => Err(CliError::Usage("--trials must be positive".into())),
            t => Ok(t),
        }
    }
}

pub fn load(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))
}
