use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use serde::Deserialize;
use tracing::warn;

use super::scan::BuildFile;
use super::{BuildSystemGuess, DocDigest};
use crate::catalog::Catalog;
use crate::error::{Error, Result};
use crate::generator::TemplateSet;
use crate::json::extract_json;
use crate::llm::ChatSession;

const ATTEMPTS: usize = 3;
const TREE_LIMIT: usize = 80;

/// Catalog priority, then shallower paths, then lexicographic.
pub fn fallback_order(candidates: &[BuildFile], catalog: &Catalog) -> Vec<BuildFile> {
    let mut sorted = candidates.to_vec();
    sorted.sort_by(|a, b| {
        catalog
            .priority(&a.system)
            .cmp(&catalog.priority(&b.system))
            .then_with(|| {
                a.path
                    .matches('/')
                    .count()
                    .cmp(&b.path.matches('/').count())
            })
            .then_with(|| a.path.cmp(&b.path))
    });
    sorted
}

#[derive(Deserialize)]
struct Pick {
    #[serde(default, alias = "system")]
    build_system: Option<String>,
    #[serde(default, alias = "entry", alias = "path")]
    entry_file: Option<String>,
    #[serde(default)]
    rationale: Option<String>,
}

fn resolve<'a>(pick: &Pick, ordered: &'a [BuildFile]) -> Option<&'a BuildFile> {
    let entry = pick
        .entry_file
        .as_deref()
        .map(|e| e.trim().trim_start_matches("./").trim_start_matches('/'));
    let system = pick.build_system.as_deref().map(str::trim);
    let system_matches =
        |c: &BuildFile| system.is_none_or(|s| c.system.as_str().eq_ignore_ascii_case(s));
    if let Some(entry) = entry {
        if let Some(c) = ordered
            .iter()
            .find(|c| c.path == entry && system_matches(c))
        {
            return Some(c);
        }
        if let Some(c) = ordered.iter().find(|c| c.path == entry) {
            return Some(c);
        }
    }
    let system = system?;
    ordered
        .iter()
        .find(|c| c.system.as_str().eq_ignore_ascii_case(system))
}

fn top_level_tree(root: &Path) -> String {
    let Ok(read) = std::fs::read_dir(root) else {
        return "(unavailable)".into();
    };
    let mut names: Vec<String> = read
        .flatten()
        .map(|e| {
            let name = e.file_name().to_string_lossy().into_owned();
            if e.file_type().is_ok_and(|t| t.is_dir()) {
                format!("{name}/")
            } else {
                name
            }
        })
        .filter(|n| n != ".git/")
        .collect();
    names.sort();
    let more = names.len().saturating_sub(TREE_LIMIT);
    names.truncate(TREE_LIMIT);
    let mut out = names.join("\n");
    if more > 0 {
        out.push_str(&format!("\n... and {more} more"));
    }
    out
}

fn doc_hints(docs: &[DocDigest]) -> String {
    let lines: Vec<String> = docs
        .iter()
        .flat_map(|d| {
            d.build_hints
                .iter()
                .map(move |h| format!("- ({}) {h}", d.path))
        })
        .collect();
    if lines.is_empty() {
        "none".into()
    } else {
        lines.join("\n")
    }
}

/// Picks the build system and entry file. A lone system is chosen without
/// consulting the LLM; otherwise the LLM chooses, constrained to the
/// candidate list, with the catalog priority order as fallback.
pub fn identify_build_system(
    root: &Path,
    candidates: &[BuildFile],
    docs: &[DocDigest],
    project_name: &str,
    session: &mut ChatSession,
    templates: &TemplateSet,
    catalog: &Catalog,
) -> Result<BuildSystemGuess> {
    if candidates.is_empty() {
        return Err(Error::NoBuildSystem);
    }
    let ordered = fallback_order(candidates, catalog);
    let guess = |chosen: &BuildFile, rationale: String| BuildSystemGuess {
        system: chosen.system.clone(),
        entry_file: chosen.path.clone(),
        rationale,
        alternates: ordered.iter().filter(|c| *c != chosen).cloned().collect(),
    };

    let systems: BTreeSet<_> = ordered.iter().map(|c| &c.system).collect();
    if systems.len() == 1 {
        return Ok(guess(
            &ordered[0],
            format!(
                "only {} entry files present; chose the top-level one",
                ordered[0].system
            ),
        ));
    }

    let listing = ordered
        .iter()
        .map(|c| format!("- {}: {}", c.system, c.path))
        .collect::<Vec<_>>()
        .join("\n");
    let prompt = templates.render(
        "identify",
        &HashMap::from([
            ("project_name", project_name.to_string()),
            ("candidates", listing),
            ("file_tree", top_level_tree(root)),
            ("doc_hints", doc_hints(docs)),
        ]),
    )?;

    let mut message = prompt;
    for attempt in 0..ATTEMPTS {
        let reply = session.send(message.as_str())?;
        if let Some(pick) = extract_json::<Pick>(&reply.text) {
            if let Some(chosen) = resolve(&pick, &ordered) {
                let rationale = pick
                    .rationale
                    .filter(|r| !r.trim().is_empty())
                    .unwrap_or_else(|| "selected by the model".into());
                return Ok(guess(chosen, rationale));
            }
        }
        warn!(attempt, "build-system reply named no valid candidate");
        message = "That answer does not name a build system and entry file from the list. \
                   Reply with only the JSON object, copying one system and one path exactly."
            .to_string();
    }
    Ok(guess(
        &ordered[0],
        format!(
            "fallback: the model named no valid candidate after {ATTEMPTS} attempts; chose {} by priority order",
            ordered[0].system
        ),
    ))
}
