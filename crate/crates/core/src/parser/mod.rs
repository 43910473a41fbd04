//! Repository analysis: host environment, dependency manifests, build-system
//! identification and build documentation digests.

mod deps;
mod docs;
mod environment;
mod identify;
mod scan;

use std::path::Path;

use serde::{Deserialize, Serialize};
use tracing::info;

pub use deps::{
    compare_versions, extract_dependencies, merge as merge_dependencies, DependencyScan,
    DependencySpec, SourceKind, VersionConstraint,
};
pub use docs::{filter_docs_llm, summarize_docs, DocFilter};
pub use environment::{
    apply_lscpu, apply_os_release, apply_uname, extract_environment, extract_environment_with,
    HostProbe, SystemProbe,
};
pub use identify::{fallback_order, identify_build_system};
pub use scan::{
    collect_docs, collect_docs_capped, enumerate_build_files, walk_files, BuildFile, DocScan,
    DOC_SIZE_CAP,
};

use crate::catalog::{BuildSystem, Catalog};
use crate::error::{Error, Result};
use crate::generator::TemplateSet;
use crate::llm::Gateway;

/// Marker for facts that could not be determined.
pub const UNKNOWN: &str = "unknown";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvironmentInfo {
    pub cpu_arch: String,
    pub cpu_model: String,
    pub core_count: Option<u32>,
    pub os_name: String,
    pub os_version: String,
    pub kernel: String,
    pub gpu_present: bool,
}

impl EnvironmentInfo {
    pub fn unknown() -> Self {
        Self {
            cpu_arch: UNKNOWN.into(),
            cpu_model: UNKNOWN.into(),
            core_count: None,
            os_name: UNKNOWN.into(),
            os_version: UNKNOWN.into(),
            kernel: UNKNOWN.into(),
            gpu_present: false,
        }
    }

    pub fn render(&self) -> String {
        format!(
            "- CPU architecture: {}\n- CPU model: {}\n- CPU cores: {}\n- Operating system: {} {}\n- Kernel: {}\n- GPU present: {}",
            self.cpu_arch,
            self.cpu_model,
            self.core_count.map_or(UNKNOWN.to_string(), |n| n.to_string()),
            self.os_name,
            self.os_version,
            self.kernel,
            if self.gpu_present { "yes" } else { "no" },
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildSystemGuess {
    pub system: BuildSystem,
    pub entry_file: String,
    pub rationale: String,
    pub alternates: Vec<BuildFile>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocDigest {
    pub path: String,
    pub summary: String,
    pub build_hints: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectContext {
    pub project_name: String,
    pub environment: EnvironmentInfo,
    pub dependencies: Vec<DependencySpec>,
    pub guess: BuildSystemGuess,
    pub docs: Vec<DocDigest>,
    /// Non-fatal problems met while parsing (skipped manifests, oversized docs, ...).
    #[serde(default)]
    pub warnings: Vec<String>,
}

pub struct ParseOptions<'a> {
    pub catalog: &'a Catalog,
    pub templates: &'a TemplateSet,
    pub token_budget: usize,
    pub probe: &'a dyn HostProbe,
}

/// Runs every extractor once. Each LLM call gets its own short-lived session.
pub fn parse_project(
    root: &Path,
    project_name: &str,
    opts: &ParseOptions<'_>,
    gateway: &Gateway,
) -> Result<ProjectContext> {
    let environment = extract_environment_with(opts.probe);
    let candidates = enumerate_build_files(root, opts.catalog)?;
    if candidates.is_empty() {
        return Err(Error::NoBuildSystem);
    }

    let mut warnings = Vec::new();
    let scan = collect_docs(root, opts.catalog)?;
    warnings.extend(scan.warnings);
    let filtered = {
        let mut session = gateway.session(opts.token_budget);
        filter_docs_llm(&scan.paths, project_name, &mut session, opts.templates)?
    };
    if filtered.flagged {
        warnings.push("doc filter reply was malformed; kept every keyword match".into());
    }
    let (docs, doc_warnings) = summarize_docs(
        root,
        &filtered.paths,
        project_name,
        gateway,
        opts.token_budget,
        opts.templates,
    )?;
    warnings.extend(doc_warnings);

    let deps = extract_dependencies(root, opts.catalog)?;
    warnings.extend(deps.warnings);

    let guess = {
        let mut session = gateway.session(opts.token_budget);
        identify_build_system(
            root,
            &candidates,
            &docs,
            project_name,
            &mut session,
            opts.templates,
            opts.catalog,
        )?
    };
    info!(system = %guess.system, entry = %guess.entry_file, "identified build system");

    Ok(ProjectContext {
        project_name: project_name.to_string(),
        environment,
        dependencies: deps.dependencies,
        guess,
        docs,
        warnings,
    })
}
