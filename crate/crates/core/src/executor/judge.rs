use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use tracing::warn;

use super::taxonomy::{classify_error, ErrorTaxonomyLabel};
use super::window::{select_failure_window, BuildStatus, FailureKind, LogCapture};
use crate::catalog::Catalog;
use crate::error::Result;
use crate::generator::{lint_dockerfile, TemplateSet};
use crate::json::extract_json;
use crate::llm::Gateway;
use crate::parser::ProjectContext;

const ATTEMPTS: usize = 3;

pub const DISCRIMINATOR_MALFORMED: &str = "discriminator-malformed";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Success,
    Failure,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub outcome: Outcome,
    pub static_ok: bool,
    pub dynamic_ok: bool,
    pub judgment: String,
    pub reflection_ok: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub reflection: String,
    #[serde(default)]
    pub taxonomy: Option<ErrorTaxonomyLabel>,
}

impl Verdict {
    fn from_parts(
        static_ok: bool,
        dynamic_ok: bool,
        judgment: String,
        reflection_ok: bool,
        reflection: String,
    ) -> Self {
        let outcome = if static_ok && dynamic_ok && reflection_ok {
            Outcome::Success
        } else {
            Outcome::Failure
        };
        Self {
            outcome,
            static_ok,
            dynamic_ok,
            judgment,
            reflection_ok,
            reflection,
            taxonomy: None,
        }
    }

    pub fn is_success(&self) -> bool {
        self.outcome == Outcome::Success
    }

    fn malformed(static_ok: bool, dynamic_ok: bool, what: &str) -> Self {
        warn!("{what}");
        Self::from_parts(
            static_ok,
            dynamic_ok,
            DISCRIMINATOR_MALFORMED.into(),
            false,
            what.into(),
        )
    }
}

#[derive(Deserialize)]
struct JudgeReply {
    static_ok: bool,
    dynamic_ok: bool,
    #[serde(default, alias = "reasoning")]
    judgment: String,
}

#[derive(Deserialize)]
struct ReflectReply {
    adheres: bool,
    #[serde(default, alias = "reason")]
    explanation: String,
}

/// The documented primary components, else the entry file's default target.
pub fn primary_components(context: &ProjectContext) -> String {
    let mut lines: Vec<String> = context
        .docs
        .iter()
        .flat_map(|d| {
            d.build_hints
                .iter()
                .map(move |h| format!("   - {h} (from {})", d.path))
        })
        .collect();
    lines.push(format!(
        "   - the default target of {} ({})",
        context.guess.entry_file, context.guess.system
    ));
    lines.join("\n")
}

/// Asks in a fresh session until the reply parses, at most three times.
fn ask<T: serde::de::DeserializeOwned>(
    gateway: &Gateway,
    token_budget: usize,
    prompt: String,
) -> Result<Option<(T, String)>> {
    let mut session = gateway.session(token_budget);
    let mut message = prompt;
    for attempt in 0..ATTEMPTS {
        let reply = session.send(message.as_str())?;
        if let Some(parsed) = extract_json::<T>(&reply.text) {
            return Ok(Some((parsed, reply.text)));
        }
        warn!(attempt, "discriminator reply did not parse");
        message = "Reply with only the JSON object in the requested shape.".into();
    }
    Ok(None)
}

/// Two-step discriminator. A build that exited with an error is a failure
/// without consulting the LLM. Otherwise step one judges the static and
/// dynamic criteria and step two checks that the judgment followed them.
/// The static criterion also requires a build command in the Dockerfile.
pub fn judge(
    gateway: &Gateway,
    token_budget: usize,
    dockerfile_text: &str,
    logs: &LogCapture,
    primary_components: &str,
    catalog: &Catalog,
    templates: &TemplateSet,
) -> Result<Verdict> {
    let has_build = lint_dockerfile(dockerfile_text, catalog).has_build_instruction();
    let extract = select_failure_window(logs, dockerfile_text, Some(token_budget / 2));
    if logs.exit_status != BuildStatus::Ok {
        let what = match logs.exit_status {
            BuildStatus::Timeout => "the build timed out",
            _ => "the build exited with an error",
        };
        let mut v = Verdict::from_parts(
            has_build,
            false,
            format!("{what}; no LLM judgment needed"),
            false,
            String::new(),
        );
        debug_assert_eq!(extract.kind, FailureKind::Error);
        v.taxonomy = Some(classify_error(&extract));
        return Ok(v);
    }

    let prompt = templates.render(
        "judge",
        &HashMap::from([
            ("primary_components", primary_components.to_string()),
            ("exit_status", "0 (no error reported)".to_string()),
            ("dockerfile", dockerfile_text.to_string()),
            ("log_window", extract.window.join("\n")),
        ]),
    )?;
    let Some((step1, raw)) = ask::<JudgeReply>(gateway, token_budget, prompt)? else {
        return Ok(Verdict::malformed(
            false,
            false,
            "judgment reply never matched the expected JSON shape",
        ));
    };
    let static_ok = step1.static_ok && has_build;
    let mut judgment = if step1.judgment.trim().is_empty() {
        raw.trim().to_string()
    } else {
        step1.judgment.trim().to_string()
    };
    if step1.static_ok && !has_build {
        judgment.push_str(
            "\n[lint] the Dockerfile contains no build command, so the static criterion fails",
        );
    }
    if !(static_ok && step1.dynamic_ok) {
        return Ok(Verdict::from_parts(
            static_ok,
            step1.dynamic_ok,
            judgment,
            false,
            "skipped: step one already failed".into(),
        ));
    }

    let prompt = templates.render(
        "reflect",
        &HashMap::from([
            ("primary_components", primary_components.to_string()),
            ("judgment", judgment.clone()),
        ]),
    )?;
    let Some((step2, _)) = ask::<ReflectReply>(gateway, token_budget, prompt)? else {
        return Ok(Verdict::malformed(
            static_ok,
            step1.dynamic_ok,
            "reflection reply never matched the expected JSON shape",
        ));
    };
    Ok(Verdict::from_parts(
        static_ok,
        step1.dynamic_ok,
        judgment,
        step2.adheres,
        step2.explanation,
    ))
}
