use std::path::PathBuf;

use buildsmith_core::BackendKind;
use clap::{Args, Parser, Subcommand};

use crate::config::Options;

#[derive(Debug, Parser)]
#[command(
    name = "buildsmith",
    version,
    about = "Build C/C++ repositories from source with an LLM-driven Dockerfile agent"
)]
pub struct Cli {
    /// More log output (-v info, -vv debug). RUST_LOG overrides.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the agent loop on one or more repositories.
    Build(RunArgs),
    /// Try each detected build system's default commands, without an LLM.
    Baseline(RunArgs),
    /// Aggregate session reports from artifact directories.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Local directory or git URL; repeat for several projects.
    #[arg(long = "source", value_name = "PATH|URL")]
    pub sources: Vec<String>,
    /// Commit, tag or branch to check out.
    #[arg(long)]
    pub commit: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    /// Repair rounds after the first attempt.
    #[arg(long)]
    pub max_steps: Option<u32>,
    /// Wall-clock limit per project, in seconds.
    #[arg(long = "time-limit", value_name = "SECONDS")]
    pub time_limit: Option<f64>,
    /// container or local-sandbox.
    #[arg(long)]
    pub backend: Option<BackendKind>,
    #[arg(long)]
    pub artifact_dir: Option<PathBuf>,
    /// Record every LLM exchange to this transcript file.
    #[arg(long, conflicts_with = "replay")]
    pub transcript: Option<PathBuf>,
    /// Replay LLM responses from this transcript instead of calling the API.
    #[arg(long)]
    pub replay: Option<PathBuf>,
    /// Build-system catalog (TOML) replacing the built-in one.
    #[arg(long)]
    pub catalog: Option<PathBuf>,
    /// Directory of prompt template overrides.
    #[arg(long)]
    pub templates: Option<PathBuf>,
    /// Keep built images instead of pruning them.
    #[arg(long)]
    pub keep_images: bool,
    /// Config file (TOML) with the same keys as the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Projects built in parallel.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Container engine endpoint, e.g. unix:///var/run/docker.sock.
    #[arg(long)]
    pub docker_host: Option<String>,
    #[arg(long)]
    pub token_budget: Option<usize>,
    /// Chat-completions API base URL.
    #[arg(long)]
    pub api_base: Option<String>,
}

impl RunArgs {
    pub fn options(&self) -> Options {
        Options {
            sources: (!self.sources.is_empty()).then(|| self.sources.clone()),
            commit: self.commit.clone(),
            model: self.model.clone(),
            max_steps: self.max_steps,
            wall_clock_limit: self.time_limit,
            backend: self.backend,
            artifact_dir: self.artifact_dir.clone(),
            transcript: self.transcript.clone(),
            replay: self.replay.clone(),
            catalog: self.catalog.clone(),
            templates: self.templates.clone(),
            keep_images: self.keep_images.then_some(true),
            docker_host: self.docker_host.clone(),
            jobs: self.jobs,
            token_budget: self.token_budget,
            api_base: self.api_base.clone(),
            rates: None,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Artifact directories (or single project directories) to scan.
    pub dirs: Vec<PathBuf>,
    /// Where to write the aggregate record.
    #[arg(long, default_value = "aggregate.json")]
    pub out: PathBuf,
}
