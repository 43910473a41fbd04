//! The bounded parse, generate, execute, judge and repair loop.

mod signature;

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use tracing::{info, warn};

pub use signature::{mark_resolved, normalize_signature, ErrorSignature, ResolutionHistory};

use crate::catalog::Catalog;
use crate::error::{Error, Result};
use crate::executor::{
    judge, persist_attempt, primary_components, select_failure_window, Backend, BackendKind,
    BuildStatus, ErrorTaxonomyLabel, FailureKind, Verdict,
};
use crate::generator::{
    assemble_generation_prompt, generate_initial, generation_session, repair, BuildSolution,
    TemplateSet,
};
use crate::llm::{compute_cost, Cost, Gateway, Rates, TokenUsage};
use crate::parser::{parse_project, HostProbe, ParseOptions};

pub const SESSION_LAYOUT: &str =
    "one long-lived session for generation and repair; a fresh session per parser call and per discriminator step";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentConfig {
    /// Repair rounds after the initial attempt.
    pub max_steps: u32,
    /// Seconds.
    pub wall_clock_limit: f64,
    pub model: String,
    pub backend: BackendKind,
    pub token_budget: usize,
    pub artifact_dir: PathBuf,
    pub keep_images: bool,
    pub rates: Rates,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            max_steps: 10,
            wall_clock_limit: 14_400.0,
            model: "gpt-4o".into(),
            backend: BackendKind::Container,
            token_budget: 100_000,
            artifact_dir: PathBuf::from("artifacts"),
            keep_images: false,
            rates: Rates::default(),
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.wall_clock_limit > 0.0 && self.wall_clock_limit.is_finite()) {
            return Err(Error::Config(
                "wall_clock_limit must be a positive number of seconds".into(),
            ));
        }
        if self.token_budget == 0 {
            return Err(Error::Config("token_budget must be positive".into()));
        }
        if self.model.trim().is_empty() {
            return Err(Error::Config("model must not be empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunOutcome {
    Success,
    FailureStepsExhausted,
    FailureTimeout,
    FailureFatal,
}

impl RunOutcome {
    /// Process exit code: 0 success, 1 build failure, 2 fatal.
    pub fn exit_code(self) -> i32 {
        match self {
            RunOutcome::Success => 0,
            RunOutcome::FailureStepsExhausted | RunOutcome::FailureTimeout => 1,
            RunOutcome::FailureFatal => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttemptRecord {
    pub revision: u32,
    pub exit_status: BuildStatus,
    pub verdict: Verdict,
    pub taxonomy: Option<ErrorTaxonomyLabel>,
    pub signature: Option<ErrorSignature>,
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FatalCause {
    pub code: String,
    pub message: String,
}

impl From<&Error> for FatalCause {
    fn from(e: &Error) -> Self {
        Self {
            code: e.code().into(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub project: String,
    pub outcome: RunOutcome,
    pub model: String,
    pub build_system: Option<String>,
    pub attempts: Vec<AttemptRecord>,
    pub usage: TokenUsage,
    pub cost: Cost,
    pub duration: f64,
    pub final_dockerfile: Option<String>,
    pub fatal_cause: Option<FatalCause>,
    pub session_layout: String,
}

impl SessionReport {
    /// Copy with every duration zeroed, for comparing runs.
    pub fn without_timings(&self) -> Self {
        let mut r = self.clone();
        r.duration = 0.0;
        for a in &mut r.attempts {
            a.duration = 0.0;
        }
        r
    }

    pub fn executions(&self) -> usize {
        self.attempts.len()
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut json = serde_json::to_string_pretty(self)?;
        json.push('\n');
        std::fs::write(dir.join("report.json"), json)?;
        Ok(())
    }
}

/// Everything a run needs besides the repository and the LLM.
pub struct RunEnv<'a> {
    pub catalog: &'a Catalog,
    pub templates: &'a TemplateSet,
    pub probe: &'a dyn HostProbe,
    pub backend: &'a dyn Backend,
}

struct Loop<'a> {
    repo: &'a Path,
    project: &'a str,
    config: &'a AgentConfig,
    gateway: &'a Gateway,
    env: &'a RunEnv<'a>,
    dir: PathBuf,
    start: Instant,
    limit: Duration,
    report: SessionReport,
}

impl Loop<'_> {
    fn remaining(&self) -> Option<Duration> {
        self.limit
            .checked_sub(self.start.elapsed())
            .filter(|d| !d.is_zero())
    }

    /// Runs until an outcome is reached. `Err` means a fatal error.
    fn drive(&mut self) -> Result<RunOutcome> {
        let opts = ParseOptions {
            catalog: self.env.catalog,
            templates: self.env.templates,
            token_budget: self.config.token_budget,
            probe: self.env.probe,
        };
        let context = parse_project(self.repo, self.project, &opts, self.gateway)?;
        self.report.build_system = Some(context.guess.system.to_string());
        let mut json = serde_json::to_string_pretty(&context)?;
        json.push('\n');
        std::fs::write(self.dir.join("context.json"), json)?;
        let components = primary_components(&context);

        let mut session =
            generation_session(self.gateway, self.config.token_budget, self.env.templates)?;
        let prompt = assemble_generation_prompt(&context, self.env.templates, self.env.catalog)?;
        let mut solution =
            generate_initial(&mut session, &prompt, self.env.catalog, self.env.templates)?;
        solution.persist(&self.dir)?;

        let mut history: ResolutionHistory = Vec::new();
        for step in 0..=self.config.max_steps {
            let Some(remaining) = self.remaining() else {
                info!(step, "wall-clock limit reached before executing");
                return Ok(RunOutcome::FailureTimeout);
            };
            info!(step, revision = solution.revision, "executing");
            let logs = self.env.backend.execute(&solution, self.repo, remaining)?;
            let verdict = judge(
                self.gateway,
                self.config.token_budget,
                &solution.dockerfile_text,
                &logs,
                &components,
                self.env.catalog,
                self.env.templates,
            )?;
            persist_attempt(&self.dir, solution.revision, &logs, &verdict)?;

            if verdict.is_success() {
                mark_resolved(&mut session, &history, None);
                self.push_attempt(&solution, logs.exit_status, logs.duration, verdict, None);
                self.report.final_dockerfile = Some(solution.dockerfile_text.clone());
                return Ok(RunOutcome::Success);
            }

            let extract = select_failure_window(
                &logs,
                &solution.dockerfile_text,
                Some(self.config.token_budget / 4),
            );
            let sig = normalize_signature(&extract.window);
            let diagnosis =
                (extract.kind == FailureKind::NonError).then(|| verdict.judgment.clone());
            self.push_attempt(
                &solution,
                logs.exit_status,
                logs.duration,
                verdict,
                Some(sig.clone()),
            );

            if logs.exit_status == BuildStatus::Timeout && self.remaining().is_none() {
                return Ok(RunOutcome::FailureTimeout);
            }
            if step == self.config.max_steps {
                return Ok(RunOutcome::FailureStepsExhausted);
            }
            mark_resolved(&mut session, &history, Some(&sig));
            let repaired = repair(
                &mut session,
                &solution,
                &extract,
                diagnosis.as_deref(),
                self.env.templates,
            )?;
            history.push((sig, repaired.exchange_ids));
            solution = repaired.solution;
            solution.persist(&self.dir)?;
        }
        unreachable!("the loop returns on its last step")
    }

    fn push_attempt(
        &mut self,
        solution: &BuildSolution,
        exit_status: BuildStatus,
        duration: f64,
        verdict: Verdict,
        signature: Option<ErrorSignature>,
    ) {
        let taxonomy = verdict.taxonomy;
        self.report.attempts.push(AttemptRecord {
            revision: solution.revision,
            exit_status,
            verdict,
            taxonomy,
            signature,
            duration,
        });
    }
}

/// Runs one project end to end and writes its artifacts under
/// `<artifact_dir>/<project>/`. Fatal errors end the run with
/// `failure-fatal` and are recorded, not returned.
pub fn run_project(
    repo: &Path,
    project: &str,
    config: &AgentConfig,
    gateway: &Gateway,
    env: &RunEnv<'_>,
) -> SessionReport {
    let dir = config.artifact_dir.join(project);
    let mut run = Loop {
        repo,
        project,
        config,
        gateway,
        env,
        dir: dir.clone(),
        start: Instant::now(),
        limit: Duration::from_secs_f64(config.wall_clock_limit.max(0.0)),
        report: SessionReport {
            project: project.to_string(),
            outcome: RunOutcome::FailureFatal,
            model: gateway.model().to_string(),
            build_system: None,
            attempts: Vec::new(),
            usage: TokenUsage::default(),
            cost: Cost::default(),
            duration: 0.0,
            final_dockerfile: None,
            fatal_cause: None,
            session_layout: SESSION_LAYOUT.into(),
        },
    };
    let outcome = config
        .validate()
        .and_then(|_| std::fs::create_dir_all(&dir).map_err(Error::from))
        .and_then(|_| run.drive());
    let mut report = run.report;
    match outcome {
        Ok(o) => report.outcome = o,
        Err(e) => {
            warn!(project, error = %e, "run ended with a fatal error");
            report.outcome = RunOutcome::FailureFatal;
            report.fatal_cause = Some(FatalCause::from(&e));
        }
    }
    report.usage = gateway.total_usage();
    report.cost = compute_cost(report.usage, config.rates);
    report.duration = run.start.elapsed().as_secs_f64();
    info!(project, outcome = ?report.outcome, executions = report.attempts.len(), cost = %report.cost, "run finished");
    if let Err(e) = report.write(&dir) {
        warn!(error = %e, "could not write report");
    }
    report
}
