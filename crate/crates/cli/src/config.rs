//! Flags, the optional flat JSON config file, and their merge.

use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};

use hlgrad::seed::DEFAULT_SEED;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Adaptive,
    Baseline,
    Resources,
    Threshold,
    Micro,
    Fig4,
    Fig5,
    Fig6,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelName {
    Ideal,
    Hs,
    Grover,
}

/// Adaptive quantum gradient estimation: simulations, baselines and resource counts.
///
/// Every command writes CSV (to --out or stdout) preceded by `#` comment
/// lines recording the command, the resolved settings and the seed.
#[derive(Parser, Debug)]
#[command(name = "hlgrad", version)]
pub struct Cli {
    pub command: Command,
    /// Number of observables.
    #[arg(long = "M")]
    pub m: Option<usize>,
    /// System dimension (power of two).
    #[arg(long)]
    pub d: Option<f64>,
    /// Target precision; a comma-separated list for fig5's adaptive line.
    #[arg(long, value_delimiter = ',')]
    pub eps: Option<Vec<f64>>,
    /// Baseline precision parameter(s), comma separated.
    #[arg(long = "eps-add", value_delimiter = ',')]
    pub eps_add: Option<Vec<f64>>,
    /// Baseline failure probabilities, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub delta: Option<Vec<f64>>,
    /// Failure constant of the adaptive schedule, or the smoothness constant
    /// of the baseline.
    #[arg(long)]
    pub c: Option<f64>,
    /// Monte-Carlo runs of the adaptive harness.
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub model: Option<ModelName>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Oracle-conversion overhead of the baseline query count.
    #[arg(long)]
    pub overhead: Option<u64>,
    /// Number of random expectation-value sets for baseline sweeps.
    #[arg(long = "g-sets")]
    pub g_sets: Option<usize>,
    /// Monte-Carlo samples for baseline marginals (default: size-dependent).
    #[arg(long = "n-mc")]
    pub n_mc: Option<usize>,
    /// System sizes (qubits) for fig6, comma separated.
    #[arg(long = "n-grid", value_delimiter = ',')]
    pub n_grid: Option<Vec<f64>>,
    /// Flat JSON file with any of the keys above; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Contents of a config file. Keys match the long flag names.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    #[serde(rename = "M")]
    m: Option<usize>,
    d: Option<f64>,
    eps: Option<OneOrMany>,
    eps_add: Option<OneOrMany>,
    delta: Option<OneOrMany>,
    c: Option<f64>,
    runs: Option<usize>,
    seed: Option<u64>,
    model: Option<ModelName>,
    out: Option<PathBuf>,
    overhead: Option<u64>,
    g_sets: Option<usize>,
    n_mc: Option<usize>,
    n_grid: Option<OneOrMany>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    fn into_vec(self) -> Vec<f64> {
        match self {
            OneOrMany::One(v) => vec![v],
            OneOrMany::Many(v) => v,
        }
    }
}

/// Flags merged over the config file; unset values stay `None` and each
/// command applies its own defaults.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Settings {
    pub command: Command,
    #[serde(rename = "M")]
    pub m: Option<usize>,
    pub d: Option<f64>,
    pub eps: Option<Vec<f64>>,
    pub eps_add: Option<Vec<f64>>,
    pub delta: Option<Vec<f64>>,
    pub c: Option<f64>,
    pub runs: Option<usize>,
    pub seed: u64,
    pub model: Option<ModelName>,
    pub out: Option<PathBuf>,
    pub overhead: Option<u64>,
    pub g_sets: Option<usize>,
    pub n_mc: Option<usize>,
    pub n_grid: Option<Vec<f64>>,
}

impl Settings {
    pub fn resolve(cli: &Cli) -> Result<Self, String> {
        let file = match &cli.config {
            Some(path) => read_config(path)?,
            None => FileConfig::default(),
        };
        Ok(Settings {
            command: cli.command,
            m: cli.m.or(file.m),
            d: cli.d.or(file.d),
            eps: cli.eps.clone().or(file.eps.map(OneOrMany::into_vec)),
            eps_add: cli.eps_add.clone().or(file.eps_add.map(OneOrMany::into_vec)),
            delta: cli.delta.clone().or(file.delta.map(OneOrMany::into_vec)),
            c: cli.c.or(file.c),
            runs: cli.runs.or(file.runs),
            seed: cli.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            model: cli.model.or(file.model),
            out: cli.out.clone().or(file.out),
            overhead: cli.overhead.or(file.overhead),
            g_sets: cli.g_sets.or(file.g_sets),
            n_mc: cli.n_mc.or(file.n_mc),
            n_grid: cli.n_grid.clone().or(file.n_grid.map(OneOrMany::into_vec)),
        })
    }
}

fn read_config(path: &PathBuf) -> Result<FileConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| {
        format!(
            "{}:{}:{}: malformed config: {e}",
            path.display(),
            e.line(),
            e.column()
        )
    })
}
