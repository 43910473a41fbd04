//! Running build solutions, reading their logs and judging the outcome.

mod docker;
mod judge;
mod sandbox;
mod taxonomy;
mod window;

use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use docker::{DockerBackend, Endpoint};
pub use judge::{judge, primary_components, Outcome, Verdict, DISCRIMINATOR_MALFORMED};
pub use sandbox::{copy_tree, normalize_virtual, LocalSandbox};
pub use taxonomy::{classify_error, classify_lines, Category, ErrorTaxonomyLabel, Subcategory};
pub use window::{
    select_failure_window, BuildStatus, FailureExtract, FailureKind, LogCapture, ERROR_WINDOW,
    NON_ERROR_WINDOW,
};

use crate::error::Result;
use crate::generator::BuildSolution;

pub trait Backend: Send + Sync {
    fn name(&self) -> &'static str;

    /// Builds `solution` with `context_dir` as the build context. Engine
    /// failures to reach the backend are errors; build failures are logs.
    fn execute(
        &self,
        solution: &BuildSolution,
        context_dir: &Path,
        timeout: Duration,
    ) -> Result<LogCapture>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, Hash)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    #[default]
    Container,
    LocalSandbox,
}

impl std::str::FromStr for BackendKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "container" | "docker" => Ok(BackendKind::Container),
            "local-sandbox" | "sandbox" => Ok(BackendKind::LocalSandbox),
            other => Err(crate::Error::Config(format!("unknown backend `{other}`"))),
        }
    }
}

/// Backend for `kind`. The container backend uses `engine_host` or the
/// environment default; the choice is never silently swapped.
pub fn make_backend(
    kind: BackendKind,
    engine_host: Option<&str>,
    keep_images: bool,
) -> Result<Box<dyn Backend>> {
    Ok(match kind {
        BackendKind::Container => Box::new(DockerBackend::new(
            Endpoint::parse(engine_host)?,
            keep_images,
        )),
        BackendKind::LocalSandbox => Box::new(LocalSandbox::new()),
    })
}

pub fn execute(
    backend: &dyn Backend,
    solution: &BuildSolution,
    context_dir: &Path,
    timeout: Duration,
) -> Result<LogCapture> {
    backend.execute(solution, context_dir, timeout)
}

/// Writes `build.rev<N>.log` and `verdict.rev<N>.json`.
pub fn persist_attempt(
    dir: &Path,
    revision: u32,
    logs: &LogCapture,
    verdict: &Verdict,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut text = logs.lines.join("\n");
    text.push('\n');
    std::fs::write(dir.join(format!("build.rev{revision}.log")), text)?;
    let mut json = serde_json::to_string_pretty(verdict)?;
    json.push('\n');
    std::fs::write(dir.join(format!("verdict.rev{revision}.json")), json)?;
    Ok(())
}
