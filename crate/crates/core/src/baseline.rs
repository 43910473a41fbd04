//! Default-command baseline: detect every build system present and run each
//! one's catalog commands until one exits cleanly. No LLM involved.

use std::collections::HashSet;
use std::path::Path;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use tracing::info;

use crate::catalog::{BuildSystem, Catalog, CatalogEntry};
use crate::error::{Error, Result};
use crate::executor::{Backend, BuildStatus};
use crate::generator::BuildSolution;
use crate::parser::{enumerate_build_files, fallback_order, BuildFile};

/// Every catalog match under `root`, by priority, then depth, then path.
pub fn detect_all(root: &Path, catalog: &Catalog) -> Result<Vec<BuildFile>> {
    Ok(fallback_order(
        &enumerate_build_files(root, catalog)?,
        catalog,
    ))
}

/// Minimal Dockerfile: default base image, the system's setup line, the
/// source tree, then the default commands in the entry file's directory.
pub fn baseline_dockerfile(entry: &CatalogEntry, entry_file: &str, catalog: &Catalog) -> String {
    let mut text = format!(
        "FROM {}\nENV DEBIAN_FRONTEND=noninteractive\n",
        catalog.default_base_image
    );
    if let Some(setup) = &entry.setup {
        text.push_str(&format!("RUN {setup}\n"));
    }
    text.push_str("COPY . /src\n");
    let workdir = match entry_file.rsplit_once('/') {
        Some((dir, _)) => format!("/src/{dir}"),
        None => "/src".to_string(),
    };
    text.push_str(&format!("WORKDIR {workdir}\n"));
    for cmd in &entry.default_commands {
        text.push_str(&format!("RUN {cmd}\n"));
    }
    text
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineOutcome {
    Success,
    Failure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineAttempt {
    pub system: BuildSystem,
    pub entry_file: String,
    pub dockerfile: String,
    pub exit_status: BuildStatus,
    pub duration: f64,
    pub log_file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineReport {
    pub project: String,
    pub outcome: BaselineOutcome,
    pub attempts: Vec<BaselineAttempt>,
    pub duration: f64,
}

impl BaselineReport {
    pub fn exit_code(&self) -> i32 {
        match self.outcome {
            BaselineOutcome::Success => 0,
            BaselineOutcome::Failure => 1,
        }
    }
}

/// Tries each detected system once, in order, stopping at the first clean
/// exit. Logs go to `<artifact_dir>/baseline.<n>.<system>.log`.
pub fn run_defaults(
    root: &Path,
    project: &str,
    catalog: &Catalog,
    backend: &dyn Backend,
    timeout: Duration,
    artifact_dir: &Path,
) -> Result<BaselineReport> {
    let start = Instant::now();
    let detected = detect_all(root, catalog)?;
    if detected.is_empty() {
        return Err(Error::NoBuildSystem);
    }
    std::fs::create_dir_all(artifact_dir)?;
    let mut seen = HashSet::new();
    let mut attempts = Vec::new();
    let mut outcome = BaselineOutcome::Failure;
    for found in detected {
        if !seen.insert(found.system.clone()) {
            continue;
        }
        let Some(entry) = catalog.entry(&found.system) else {
            continue;
        };
        let dockerfile = baseline_dockerfile(entry, &found.path, catalog);
        let solution = BuildSolution::new(
            dockerfile.clone(),
            0,
            format!("default commands for {}", found.system),
        )?;
        info!(system = %found.system, entry = %found.path, "trying default commands");
        let logs = backend.execute(&solution, root, timeout)?;
        let log_file = format!(
            "baseline.{}.{}.log",
            attempts.len(),
            found.system.as_str().to_ascii_lowercase()
        );
        let mut text = logs.lines.join("\n");
        text.push('\n');
        std::fs::write(artifact_dir.join(&log_file), text)?;
        attempts.push(BaselineAttempt {
            system: found.system,
            entry_file: found.path,
            dockerfile,
            exit_status: logs.exit_status,
            duration: logs.duration,
            log_file,
        });
        if logs.exit_status == BuildStatus::Ok {
            outcome = BaselineOutcome::Success;
            break;
        }
    }
    let report = BaselineReport {
        project: project.to_string(),
        outcome,
        attempts,
        duration: start.elapsed().as_secs_f64(),
    };
    let mut json = serde_json::to_string_pretty(&report)?;
    json.push('\n');
    std::fs::write(artifact_dir.join("baseline.json"), json)?;
    Ok(report)
}
