//! Dockerfile synthesis and repair from parsed project facts.

mod dockerfile;
mod template;

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use tracing::{info, warn};

pub use dockerfile::{
    base_image, extract_dockerfile, lint_dockerfile, parse_instructions, run_command, Instruction,
    LintIssue, LintReport, Severity, MISSING_BASE_IMAGE, NO_BUILD_INSTRUCTION, NO_RUN_INSTRUCTION,
};
pub use template::{PromptTemplate, Scenario, TemplateSet};

use crate::catalog::Catalog;
use crate::error::{Error, Result};
use crate::executor::{FailureExtract, FailureKind};
use crate::llm::{ChatSession, Gateway, MessageId, Outgoing, Tag};
use crate::parser::{DependencySpec, DocDigest, ProjectContext};

const EXTRACT_ATTEMPTS: usize = 3;
const RATIONALE_CHARS: usize = 600;

pub const NONE_DETECTED: &str = "none detected";

const RETRY_MESSAGE: &str = "I could not find a Dockerfile in that reply. Reply with the complete \
                             Dockerfile in a single fenced code block labelled `dockerfile`, \
                             starting with a FROM line.";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildSolution {
    pub dockerfile_text: String,
    pub base_image: String,
    pub revision: u32,
    pub parent_revision: Option<u32>,
    pub rationale: String,
}

impl BuildSolution {
    /// Fails with `generation-failed` when the text has no base image.
    pub fn new(dockerfile_text: String, revision: u32, rationale: String) -> Result<Self> {
        let base = base_image(&dockerfile_text)
            .ok_or_else(|| Error::GenerationFailed("Dockerfile has no FROM line".into()))?;
        Ok(Self {
            dockerfile_text,
            base_image: base,
            revision,
            parent_revision: revision.checked_sub(1),
            rationale,
        })
    }

    pub fn file_name(&self) -> String {
        format!("dockerfile.rev{}", self.revision)
    }

    pub fn persist(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(self.file_name()), &self.dockerfile_text)?;
        Ok(())
    }
}

pub fn lint_solution(solution: &BuildSolution, catalog: &Catalog) -> LintReport {
    lint_dockerfile(&solution.dockerfile_text, catalog)
}

/// A long-lived session for generation and repair, seeded with the system prompt.
pub fn generation_session(
    gateway: &Gateway,
    token_budget: usize,
    templates: &TemplateSet,
) -> Result<ChatSession> {
    let mut session = gateway.session(token_budget);
    session.push_system(templates.render("system", &HashMap::new())?)?;
    Ok(session)
}

fn render_dependencies(deps: &[DependencySpec]) -> String {
    if deps.is_empty() {
        return format!("- {NONE_DETECTED}");
    }
    deps.iter()
        .map(|d| {
            let kind = serde_json::to_value(d.source_kind)
                .ok()
                .and_then(|v| v.as_str().map(str::to_string))
                .unwrap_or_default();
            format!(
                "- {} ({}) from {} [{kind}]",
                d.name, d.version_constraint, d.origin_path
            )
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn render_docs(docs: &[DocDigest]) -> String {
    if docs.is_empty() {
        return "No build documentation found.".into();
    }
    docs.iter()
        .map(|d| {
            let mut s = format!("### {}\n{}", d.path, d.summary);
            if !d.build_hints.is_empty() {
                s.push_str("\nBuild hints:");
                for h in &d.build_hints {
                    s.push_str("\n- ");
                    s.push_str(h);
                }
            }
            s
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}

/// Renders the nested generation prompt: structure guidance, requirement
/// notes, environment, dependencies and doc digests, in that order.
pub fn assemble_generation_prompt(
    context: &ProjectContext,
    templates: &TemplateSet,
    catalog: &Catalog,
) -> Result<String> {
    let structure = templates.render(
        "dockerfile_structure",
        &HashMap::from([("base_image", catalog.default_base_image.clone())]),
    )?;
    let requirements = templates.render("requirements", &HashMap::new())?;
    templates.render(
        "generate",
        &HashMap::from([
            ("dockerfile_structure", structure),
            ("requirements", requirements),
            ("environment", context.environment.render()),
            ("dependencies", render_dependencies(&context.dependencies)),
            ("docs", render_docs(&context.docs)),
            ("project_name", context.project_name.clone()),
            ("build_system", context.guess.system.to_string()),
            ("entry_file", context.guess.entry_file.clone()),
        ]),
    )
}

/// Sends `first`, then up to two correction prompts, until a reply holds a
/// Dockerfile with a base image. Returns the text, the reply prose, and the
/// ids of every request sent.
fn request_dockerfile(
    session: &mut ChatSession,
    first: Outgoing,
) -> Result<(String, String, Vec<MessageId>)> {
    let tags = first.tags.clone();
    let mut message = first;
    let mut ids = Vec::new();
    for attempt in 0..EXTRACT_ATTEMPTS {
        let reply = session.send(message)?;
        ids.push(reply.request_id);
        match extract_dockerfile(&reply.text) {
            Ok(text) if base_image(&text).is_some() => {
                return Ok((
                    text,
                    dockerfile::prose_outside_fences(&reply.text, RATIONALE_CHARS),
                    ids,
                ));
            }
            Ok(_) => warn!(attempt, "extracted Dockerfile has no FROM line"),
            Err(_) => warn!(attempt, "no Dockerfile in reply"),
        }
        message = Outgoing {
            content: RETRY_MESSAGE.into(),
            tags: tags.clone(),
        };
    }
    Err(Error::GenerationFailed(format!(
        "no usable Dockerfile after {EXTRACT_ATTEMPTS} attempts"
    )))
}

/// Produces revision 0. The generation prompt is pinned so pruning never
/// drops the project facts. Lint errors get one self-repair round.
pub fn generate_initial(
    session: &mut ChatSession,
    prompt: &str,
    catalog: &Catalog,
    templates: &TemplateSet,
) -> Result<BuildSolution> {
    let (mut text, mut rationale, _) =
        request_dockerfile(session, Outgoing::new(prompt).tagged(Tag::Pinned))?;
    let report = lint_dockerfile(&text, catalog);
    if report.has_errors() {
        info!(issues = %report.render(), "lint errors; asking for a fix");
        let fix = templates.render(
            "lint_fix",
            &HashMap::from([
                ("lint_issues", report.render()),
                ("dockerfile", text.clone()),
            ]),
        )?;
        let (fixed, why, _) = request_dockerfile(session, Outgoing::new(fix))?;
        text = fixed;
        if !why.is_empty() {
            rationale = why;
        }
    }
    BuildSolution::new(text, 0, rationale)
}

#[derive(Debug, Clone)]
pub struct Repaired {
    pub solution: BuildSolution,
    /// Requests of the tagged error exchange(s), for resolution bookkeeping.
    pub exchange_ids: Vec<MessageId>,
}

fn describe_kind(kind: FailureKind) -> &'static str {
    match kind {
        FailureKind::Error => "error (the build stopped with an error)",
        FailureKind::NonError => {
            "non-error (the build finished without reporting an error, but it did not actually build the project)"
        }
    }
}

/// Produces revision `solution.revision + 1` from a failure extract. The
/// exchange is tagged as an error exchange.
pub fn repair(
    session: &mut ChatSession,
    solution: &BuildSolution,
    failure: &FailureExtract,
    diagnosis: Option<&str>,
    templates: &TemplateSet,
) -> Result<Repaired> {
    let diagnosis = match diagnosis.map(str::trim).filter(|d| !d.is_empty()) {
        Some(d) => format!("Reviewer notes: {d}"),
        None => String::new(),
    };
    let window = if failure.window.is_empty() {
        "(no output)".to_string()
    } else {
        failure.window.join("\n")
    };
    let dockerfile_text = failure
        .dockerfile_text
        .as_deref()
        .unwrap_or(&solution.dockerfile_text);
    let prompt = templates.render(
        "repair",
        &HashMap::from([
            ("revision", solution.revision.to_string()),
            ("dockerfile", dockerfile_text.to_string()),
            ("failure_kind", describe_kind(failure.kind).to_string()),
            ("diagnosis", diagnosis),
            ("failure_window", window),
        ]),
    )?;
    let (text, mut rationale, exchange_ids) =
        request_dockerfile(session, Outgoing::new(prompt).tagged(Tag::ErrorExchange))?;
    let revision = solution.revision + 1;
    let mut next = BuildSolution::new(text, revision, String::new())?;
    if next.base_image != solution.base_image {
        let note = format!(
            "base image changed from {} to {}",
            solution.base_image, next.base_image
        );
        info!("{note}");
        rationale = if rationale.is_empty() {
            note
        } else {
            format!("{note}. {rationale}")
        };
    }
    next.rationale = rationale;
    Ok(Repaired {
        solution: next,
        exchange_ids,
    })
}
