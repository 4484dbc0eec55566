use std::path::{Path, PathBuf};

use clap::Args;
use facegraph_core::connectivity::ConnectivityConfig;
use facegraph_core::enrollment::DEFAULT_THETA;
use facegraph_core::graphdoc::{AnalysisConfig, StyleConfig};
use facegraph_core::layout::SolverConfig;
use serde::Deserialize;

use crate::Failure;

/// Paths and knobs shared by the pipeline commands. Every field is optional so a
/// `--config` file can fill in what the command line leaves out.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// faces.jsonl
    #[arg(long)]
    pub faces: Option<PathBuf>,
    /// enrolled.jsonl
    #[arg(long)]
    pub enrolled: Option<PathBuf>,
    /// Optional images.json with paths and sizes
    #[arg(long)]
    pub images: Option<PathBuf>,
    /// matches.json written by `match`
    #[arg(long)]
    pub matches: Option<PathBuf>,
    /// presence.json written by `match`
    #[arg(long)]
    pub presence: Option<PathBuf>,
    /// connectivity.json written by `connect`
    #[arg(long)]
    pub connectivity: Option<PathBuf>,
    /// layout.json written by `layout`
    #[arg(long)]
    pub layout: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Match threshold on descriptor cosine similarity [default: 0.4]
    #[arg(long)]
    pub theta: Option<f64>,
    /// Distance cut-off in face scales [default: 4]
    #[arg(long)]
    pub n_f: Option<f64>,
    /// Minimum face-scale ratio for closeness [default: 0.7]
    #[arg(long)]
    pub size_similarity_min: Option<f64>,
    /// Gate closeness on `ratio < min` instead of `ratio >= min`
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub literal_size_gate: Option<bool>,
    /// Weights of C,D,Z,E,H [default: 1,1,1,1,1]
    #[arg(long, value_delimiter = ',')]
    pub weights: Option<Vec<f64>>,
    /// Seed of the layout warm start [default: 42]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Simplex iteration cap [default: 200 per coordinate]
    #[arg(long)]
    pub max_iterations: Option<usize>,
    #[arg(long)]
    pub x_tolerance: Option<f64>,
    #[arg(long)]
    pub f_tolerance: Option<f64>,
    /// Initial simplex edge length
    #[arg(long)]
    pub initial_step: Option<f64>,
    /// Spring-embedder iterations
    #[arg(long)]
    pub fd_iterations: Option<usize>,
}

macro_rules! prefer {
    ($a:ident, $b:ident; $($f:ident),*) => {
        RunConfig { $($f: $a.$f.or($b.$f)),* }
    };
}

impl RunConfig {
    /// Fields set in `self` win over those in `file`.
    pub fn over(self, file: RunConfig) -> RunConfig {
        let (a, b) = (self, file);
        prefer!(a, b; faces, enrolled, images, matches, presence, connectivity, layout, out,
            theta, n_f, size_similarity_min, literal_size_gate, weights, seed,
            max_iterations, x_tolerance, f_tolerance, initial_step, fd_iterations)
    }

    pub fn load(path: &Path) -> Result<RunConfig, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::input(format!("cannot read config file {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| Failure::input(format!("invalid config file {}: {e}", path.display())))
    }

    pub fn require<'a>(field: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, Failure> {
        field
            .as_deref()
            .ok_or_else(|| Failure::input(format!("missing --{flag}")))
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    pub fn theta(&self) -> f64 {
        self.theta.unwrap_or(DEFAULT_THETA)
    }

    pub fn connectivity_config(&self) -> Result<ConnectivityConfig, Failure> {
        let d = ConnectivityConfig::default();
        let weights = match &self.weights {
            None => d.weights,
            Some(w) => <[f64; 5]>::try_from(w.as_slice()).map_err(|_| {
                Failure::input(format!("--weights takes 5 values (C,D,Z,E,H), got {}", w.len()))
            })?,
        };
        Ok(ConnectivityConfig {
            n_f: self.n_f.unwrap_or(d.n_f),
            size_similarity_min: self.size_similarity_min.unwrap_or(d.size_similarity_min),
            literal_size_gate: self.literal_size_gate.unwrap_or(d.literal_size_gate),
            weights,
            ..d
        })
    }

    pub fn solver_config(&self) -> SolverConfig {
        let d = SolverConfig::default();
        SolverConfig {
            max_iterations: self.max_iterations.or(d.max_iterations),
            x_tolerance: self.x_tolerance.unwrap_or(d.x_tolerance),
            f_tolerance: self.f_tolerance.unwrap_or(d.f_tolerance),
            initial_step: self.initial_step.unwrap_or(d.initial_step),
            fd_iterations: self.fd_iterations.unwrap_or(d.fd_iterations),
            seed: self.seed.unwrap_or(d.seed),
            ..d
        }
    }

    pub fn analysis_config(&self) -> Result<AnalysisConfig, Failure> {
        Ok(AnalysisConfig {
            theta: self.theta(),
            connectivity: self.connectivity_config()?,
            solver: self.solver_config(),
            style: StyleConfig::default(),
        })
    }
}
