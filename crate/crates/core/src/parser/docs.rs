use std::collections::HashMap;
use std::path::Path;

use serde::Deserialize;
use tracing::warn;

use super::DocDigest;
use crate::error::Result;
use crate::generator::TemplateSet;
use crate::json::extract_json;
use crate::llm::{ChatSession, Gateway};

pub const NO_BUILD_INFORMATION: &str = "no build information";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocFilter {
    pub paths: Vec<String>,
    /// The reply was unusable and the input was passed through.
    pub flagged: bool,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum FilterReply {
    List(Vec<String>),
    Object {
        #[serde(alias = "relevant", alias = "keep", alias = "files")]
        paths: Vec<String>,
    },
}

/// Second filtering round: the LLM sees only the project name and the
/// paths. Output preserves input order and never adds paths.
pub fn filter_docs_llm(
    paths: &[String],
    project_name: &str,
    session: &mut ChatSession,
    templates: &TemplateSet,
) -> Result<DocFilter> {
    if paths.is_empty() {
        return Ok(DocFilter {
            paths: Vec::new(),
            flagged: false,
        });
    }
    let listing = paths
        .iter()
        .map(|p| format!("- {p}"))
        .collect::<Vec<_>>()
        .join("\n");
    let prompt = templates.render(
        "doc_filter",
        &HashMap::from([
            ("project_name", project_name.to_string()),
            ("paths", listing),
        ]),
    )?;
    let reply = session.send(prompt)?;
    let keep = match extract_json::<FilterReply>(&reply.text) {
        Some(FilterReply::List(v)) | Some(FilterReply::Object { paths: v }) => v,
        None => {
            warn!("doc filter reply is not a JSON list; keeping all documents");
            return Ok(DocFilter {
                paths: paths.to_vec(),
                flagged: true,
            });
        }
    };
    let keep: Vec<&str> = keep
        .iter()
        .map(|p| p.trim().trim_start_matches("./"))
        .collect();
    Ok(DocFilter {
        paths: paths
            .iter()
            .filter(|p| keep.contains(&p.as_str()))
            .cloned()
            .collect(),
        flagged: false,
    })
}

#[derive(Deserialize)]
struct SummaryReply {
    #[serde(default)]
    summary: String,
    #[serde(default, alias = "hints")]
    build_hints: Vec<String>,
}

/// Splits text into chunks of at most `max_chars` characters, preferring
/// line boundaries.
pub(crate) fn chunk_text(text: &str, max_chars: usize) -> Vec<String> {
    let max_chars = max_chars.max(1);
    let mut chunks = Vec::new();
    let mut current = String::new();
    let mut current_len = 0;
    for line in text.split_inclusive('\n') {
        let mut line = line;
        loop {
            let len = line.chars().count();
            if current_len + len <= max_chars {
                current.push_str(line);
                current_len += len;
                break;
            }
            if current_len > 0 {
                chunks.push(std::mem::take(&mut current));
                current_len = 0;
                continue;
            }
            // A single line longer than a chunk.
            let split = line
                .char_indices()
                .nth(max_chars)
                .map_or(line.len(), |(i, _)| i);
            chunks.push(line[..split].to_string());
            line = &line[split..];
            if line.is_empty() {
                break;
            }
        }
    }
    if !current.is_empty() {
        chunks.push(current);
    }
    chunks
}

/// One digest per readable file. Files larger than a chunk are summarized
/// chunk by chunk and the results merged.
pub fn summarize_docs(
    root: &Path,
    paths: &[String],
    project_name: &str,
    gateway: &Gateway,
    token_budget: usize,
    templates: &TemplateSet,
) -> Result<(Vec<DocDigest>, Vec<String>)> {
    // A chunk may use a quarter of the budget; at ~4 chars per token that is
    // `token_budget` characters.
    let chunk_chars = token_budget.max(64);
    let mut digests = Vec::new();
    let mut warnings = Vec::new();
    for path in paths {
        let text = match std::fs::read(root.join(path)) {
            Ok(bytes) => String::from_utf8_lossy(&bytes).into_owned(),
            Err(e) => {
                let msg = format!("{path}: unreadable, skipped: {e}");
                warn!("{msg}");
                warnings.push(msg);
                continue;
            }
        };
        let chunks = chunk_text(&text, chunk_chars);
        let mut summaries = Vec::new();
        let mut hints: Vec<String> = Vec::new();
        for (i, chunk) in chunks.iter().enumerate() {
            let chunk_info = if chunks.len() > 1 {
                format!("(part {} of {})", i + 1, chunks.len())
            } else {
                String::new()
            };
            let prompt = templates.render(
                "doc_summary",
                &HashMap::from([
                    ("project_name", project_name.to_string()),
                    ("path", path.clone()),
                    ("chunk_info", chunk_info),
                    ("content", chunk.clone()),
                ]),
            )?;
            let mut session = gateway.session(token_budget);
            let reply = session.send(prompt)?.text;
            let parsed = extract_json::<SummaryReply>(&reply).unwrap_or(SummaryReply {
                summary: reply.trim().to_string(),
                build_hints: Vec::new(),
            });
            if !parsed.summary.trim().is_empty() {
                summaries.push(parsed.summary.trim().to_string());
            }
            for h in parsed.build_hints {
                let h = h.trim().to_string();
                if !h.is_empty() && !hints.contains(&h) {
                    hints.push(h);
                }
            }
        }
        let summary = if summaries.is_empty() {
            NO_BUILD_INFORMATION.to_string()
        } else {
            summaries.join("\n")
        };
        digests.push(DocDigest {
            path: path.clone(),
            summary,
            build_hints: hints,
        });
    }
    Ok((digests, warnings))
}
