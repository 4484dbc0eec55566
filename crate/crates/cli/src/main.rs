mod commands;
mod config;

use std::net::IpAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;

/// Build a who-is-connected-to-whom graph from the faces of an image collection.
#[derive(Debug, Parser)]
#[command(name = "facegraph", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct PipelineArgs {
    /// TOML file with the same keys as the flags; explicit flags win
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    run: RunConfig,
}

impl PipelineArgs {
    fn resolve(self) -> Result<RunConfig, Failure> {
        match &self.config {
            Some(path) => Ok(self.run.over(RunConfig::load(path)?)),
            None => Ok(self.run),
        }
    }
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// graph.json written by `analyze` or `render`
    #[arg(long)]
    graph: PathBuf,
    /// Defaults to connectivity.json next to the graph
    #[arg(long)]
    connectivity: Option<PathBuf>,
    /// Defaults to presence.json next to the graph
    #[arg(long)]
    presence: Option<PathBuf>,
    /// Directory holding the collection's images
    #[arg(long)]
    image_root: Option<PathBuf>,
    /// Built explorer UI to host at `/`
    #[arg(long)]
    ui_dir: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1")]
    host: IpAddr,
    #[arg(long, default_value_t = facegraph_service::DEFAULT_PORT)]
    port: u16,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// [default: 8]
    #[arg(long)]
    n_subjects: Option<usize>,
    /// [default: 200]
    #[arg(long)]
    n_images: Option<usize>,
    /// [default: 2]
    #[arg(long)]
    n_groups: Option<usize>,
    /// [default: 7]
    #[arg(long)]
    seed: Option<u64>,
    /// Descriptor perturbation bound [default: 0.1]
    #[arg(long)]
    noise: Option<f64>,
    /// Chance a group member shows up in one of the group's images [default: 0.75]
    #[arg(long)]
    attendance: Option<f64>,
    /// Chance of an unenrolled bystander per image [default: 0.25]
    #[arg(long)]
    bystander_rate: Option<f64>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the whole pipeline and write every artifact
    Analyze(PipelineArgs),
    /// Match faces to enrolled subjects: matches.json, presence.json
    Match(PipelineArgs),
    /// Connectivity matrices from faces and matches: connectivity.json
    Connect(PipelineArgs),
    /// Node placement from connectivity: layout.json
    Layout(PipelineArgs),
    /// Styled graph from connectivity, layout and presence: graph.json, graph.svg
    Render(PipelineArgs),
    /// Serve a computed graph over HTTP
    Serve(ServeArgs),
    /// Generate a synthetic collection with planted groups
    Synth(SynthArgs),
}

#[derive(Debug)]
pub struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    pub fn busy(message: impl Into<String>) -> Self {
        Self {
            code: 3,
            message: message.into(),
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Analyze(a) => commands::cmd_analyze(a.resolve()?),
        Command::Match(a) => commands::cmd_match(a.resolve()?),
        Command::Connect(a) => commands::cmd_connect(a.resolve()?),
        Command::Layout(a) => commands::cmd_layout(a.resolve()?),
        Command::Render(a) => commands::cmd_render(a.resolve()?),
        Command::Serve(a) => commands::cmd_serve(a),
        Command::Synth(a) => commands::cmd_synth(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
