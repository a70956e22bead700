use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};

use monocorr::sequences::SequenceKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Paircorr,
    Triple,
    Gaps,
    Threegap,
    ExpsumCheck,
    BprocessGrid,
    Diagonal,
    Assembly,
    Barrier,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum KindArg {
    Monomial,
    Linear,
    SqrtNoSquares,
}

impl From<KindArg> for SequenceKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Monomial => SequenceKind::Monomial,
            KindArg::Linear => SequenceKind::Linear,
            KindArg::SqrtNoSquares => SequenceKind::SqrtNoSquares,
        }
    }
}

/// Command-line flags; each overrides the same key from `--config`.
#[derive(Debug, Parser)]
#[command(name = "monocorr", version, about = "Correlation experiments for alpha * n^theta mod 1")]
pub struct Cli {
    /// Subcommand; may instead come from the config file.
    #[arg(value_enum)]
    pub command: Option<Command>,
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    /// Comma-separated list of exponents (barrier, bprocess-grid).
    #[arg(long, value_delimiter = ',')]
    pub thetas: Option<Vec<f64>>,
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    pub n_list: Option<Vec<u64>>,
    /// Test function, e.g. `fejer:1.0`, `gaussian:0.5`, `bump:2`.
    #[arg(long)]
    pub f: Option<String>,
    /// Second test function for `triple`; defaults to `--f`.
    #[arg(long)]
    pub g: Option<String>,
    #[arg(long)]
    pub gamma: Option<u32>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub bins: Option<usize>,
    /// Include the diagonal `i = j` in `paircorr`.
    #[arg(long)]
    pub with_diagonal: bool,
    /// Use the direct O(N²) evaluators.
    #[arg(long)]
    pub naive: bool,
    /// Fill the `runtime_ms` CSV column (breaks byte-identical reruns).
    #[arg(long)]
    pub record_timings: bool,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Refuse segments whose working set exceeds this many MiB (default 4096).
    #[arg(long)]
    pub memory_cap_mb: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<KindArg>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thetas: Option<Vec<f64>>,
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    #[serde(rename = "N_list", skip_serializing_if = "Option::is_none")]
    pub n_list: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<String>,
    #[serde(rename = "Gamma", skip_serializing_if = "Option::is_none")]
    pub gamma: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
    #[serde(default)]
    pub with_diagonal: bool,
    #[serde(default)]
    pub naive: bool,
    #[serde(default)]
    pub record_timings: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub memory_cap_mb: Option<u64>,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: String,
        source: serde_json::Error,
    },
    #[error("missing command")]
    MissingCommand,
    #[error("{} requires `{field}`", command.name())]
    Missing { command: Command, field: &'static str },
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
}

impl Command {
    pub fn name(self) -> String {
        self.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default()
    }
}

/// Segment bytes per point: angles, sorted copy and error bounds.
const BYTES_PER_POINT: u64 = 32;
const DEFAULT_MEMORY_CAP_MB: u64 = 4096;

fn load(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.display().to_string(),
        source,
    })?;
    if text.trim().is_empty() {
        return Ok(RunConfig::default());
    }
    serde_json::from_str(&text).map_err(|source| ConfigError::Parse {
        path: path.display().to_string(),
        source,
    })
}

impl RunConfig {
    /// File values first, flags on top.
    pub fn resolve(cli: Cli) -> Result<(Command, RunConfig), ConfigError> {
        let mut cfg = match &cli.config {
            Some(p) => load(p)?,
            None => RunConfig::default(),
        };
        macro_rules! overlay {
            ($($field:ident),*) => {$(
                if cli.$field.is_some() {
                    cfg.$field = cli.$field;
                }
            )*};
        }
        overlay!(command, kind, alpha, theta, thetas, n, n_list, f, g, gamma, epsilon, seed, threads, bins, output_dir, memory_cap_mb);
        cfg.with_diagonal |= cli.with_diagonal;
        cfg.naive |= cli.naive;
        cfg.record_timings |= cli.record_timings;
        let command = cfg.command.ok_or(ConfigError::MissingCommand)?;
        Ok((command, cfg))
    }

    pub fn require<T: Clone>(&self, command: Command, field: &'static str, v: &Option<T>) -> Result<T, ConfigError> {
        v.clone().ok_or(ConfigError::Missing { command, field })
    }

    /// `N_list`, or the single `N`.
    pub fn sizes(&self, command: Command) -> Result<Vec<u64>, ConfigError> {
        match (&self.n_list, self.n) {
            (Some(list), _) if !list.is_empty() => Ok(list.clone()),
            (_, Some(n)) => Ok(vec![n]),
            _ => Err(ConfigError::Missing { command, field: "N or N_list" }),
        }
    }

    /// Rejects point counts whose in-memory segment would exceed the cap.
    pub fn check_memory(&self, n: u64) -> Result<(), ConfigError> {
        let cap = self.memory_cap_mb.unwrap_or(DEFAULT_MEMORY_CAP_MB);
        let need = n.saturating_mul(BYTES_PER_POINT) >> 20;
        if need > cap {
            return Err(ConfigError::Invalid {
                field: "N",
                reason: format!("needs about {need} MiB, above memory_cap_mb = {cap}"),
            });
        }
        Ok(())
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from("monocorr-out"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cli(args: &[&str]) -> Cli {
        Cli::parse_from(std::iter::once("monocorr").chain(args.iter().copied()))
    }

    #[test]
    fn n_list_wins_over_n() {
        let (_, cfg) = RunConfig::resolve(cli(&["gaps", "--n", "5", "--n-list", "1,2"])).unwrap();
        assert_eq!(cfg.sizes(Command::Gaps).unwrap(), vec![1, 2]);
    }

    #[test]
    fn missing_sizes_name_the_field() {
        let (cmd, cfg) = RunConfig::resolve(cli(&["diagonal"])).unwrap();
        let err = cfg.sizes(cmd).unwrap_err().to_string();
        assert_eq!(err, "diagonal requires `N or N_list`");
    }

    #[test]
    fn schema_uses_upper_case_sizes() {
        let cfg: RunConfig = serde_json::from_str(r#"{"command": "expsum-check", "N": 7, "Gamma": 3}"#).unwrap();
        assert_eq!((cfg.command, cfg.n, cfg.gamma), (Some(Command::ExpsumCheck), Some(7), Some(3)));
        assert!(serde_json::from_str::<RunConfig>(r#"{"n": 7}"#).is_err());
    }

    #[test]
    fn memory_cap() {
        let cfg = RunConfig {
            memory_cap_mb: Some(1),
            ..RunConfig::default()
        };
        assert!(cfg.check_memory(1 << 15).is_ok());
        assert!(cfg.check_memory(1 << 16).is_err());
    }
}
