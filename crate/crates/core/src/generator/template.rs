//! Prompt templates with `{{name}}` placeholders.
//!
//! Templates ship inside the crate and can be overridden file-by-file from a
//! directory. Each placeholder must occur exactly once in its template, and
//! rendering requires a binding for every one of them.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Identify,
    DocRag,
    Generate,
    Repair,
    Judge,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub id: String,
    pub scenario: Scenario,
    pub body: String,
    pub required_placeholders: BTreeSet<String>,
}

fn placeholder_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\{\{\s*([A-Za-z_][A-Za-z0-9_]*)\s*\}\}").unwrap())
}

impl PromptTemplate {
    pub fn new(id: impl Into<String>, scenario: Scenario, body: impl Into<String>) -> Result<Self> {
        let id = id.into();
        let body = body.into();
        let mut required = BTreeSet::new();
        for cap in placeholder_re().captures_iter(&body) {
            if !required.insert(cap[1].to_string()) {
                return Err(Error::InvalidTemplate(format!(
                    "template `{id}` uses placeholder `{}` more than once",
                    &cap[1]
                )));
            }
        }
        Ok(Self {
            id,
            scenario,
            body,
            required_placeholders: required,
        })
    }

    /// Substitutes every placeholder in one pass; substituted text is not
    /// re-scanned.
    pub fn render(&self, bindings: &HashMap<&str, String>) -> Result<String> {
        let mut out = String::with_capacity(self.body.len());
        let mut last = 0;
        for cap in placeholder_re().captures_iter(&self.body) {
            let whole = cap.get(0).unwrap();
            let name = &cap[1];
            let value = bindings
                .get(name)
                .ok_or_else(|| Error::TemplateIncomplete {
                    template: self.id.clone(),
                    placeholder: name.to_string(),
                })?;
            out.push_str(&self.body[last..whole.start()]);
            out.push_str(value);
            last = whole.end();
        }
        out.push_str(&self.body[last..]);
        Ok(out)
    }
}

macro_rules! builtin {
    ($($id:literal => $scenario:expr),* $(,)?) => {
        &[$(($id, $scenario, include_str!(concat!("../../templates/", $id, ".txt")))),*]
    };
}

const BUILTIN: &[(&str, Scenario, &str)] = builtin![
    "system" => Scenario::Generate,
    "identify" => Scenario::Identify,
    "doc_filter" => Scenario::DocRag,
    "doc_summary" => Scenario::DocRag,
    "dockerfile_structure" => Scenario::Generate,
    "requirements" => Scenario::Generate,
    "generate" => Scenario::Generate,
    "repair" => Scenario::Repair,
    "lint_fix" => Scenario::Repair,
    "judge" => Scenario::Judge,
    "reflect" => Scenario::Judge,
];

/// All prompt templates, read-only once loaded.
#[derive(Debug, Clone)]
pub struct TemplateSet {
    templates: HashMap<String, PromptTemplate>,
}

impl TemplateSet {
    pub fn builtin() -> Self {
        let templates = BUILTIN
            .iter()
            .map(|(id, scenario, body)| {
                let t =
                    PromptTemplate::new(*id, *scenario, *body).expect("builtin template is valid");
                (id.to_string(), t)
            })
            .collect();
        Self { templates }
    }

    /// Builtin templates, with any `<id>.txt` found in `dir` taking precedence.
    pub fn with_overrides(dir: &Path) -> Result<Self> {
        let mut set = Self::builtin();
        for (id, scenario, _) in BUILTIN {
            let path = dir.join(format!("{id}.txt"));
            if path.is_file() {
                let body = std::fs::read_to_string(&path)?;
                let t = PromptTemplate::new(*id, *scenario, body)?;
                let builtin = &set.templates[*id];
                if t.required_placeholders != builtin.required_placeholders {
                    return Err(Error::InvalidTemplate(format!(
                        "{}: placeholders {:?} differ from the expected {:?}",
                        path.display(),
                        t.required_placeholders,
                        builtin.required_placeholders
                    )));
                }
                set.templates.insert(id.to_string(), t);
            }
        }
        Ok(set)
    }

    pub fn get(&self, id: &str) -> &PromptTemplate {
        self.templates
            .get(id)
            .unwrap_or_else(|| panic!("unknown template `{id}`"))
    }

    pub fn render(&self, id: &str, bindings: &HashMap<&str, String>) -> Result<String> {
        self.get(id).render(bindings)
    }
}

impl Default for TemplateSet {
    fn default() -> Self {
        Self::builtin()
    }
}
