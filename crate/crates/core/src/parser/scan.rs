use std::io::Read;
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use tracing::warn;
use walkdir::WalkDir;

use crate::catalog::{BuildSystem, Catalog};
use crate::error::{Error, Result};

/// 256 KiB.
pub const DOC_SIZE_CAP: u64 = 256 * 1024;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BuildFile {
    pub path: String,
    pub system: BuildSystem,
}

/// Repo-relative, `/`-separated paths of every non-ignored regular file,
/// in lexicographic order.
pub fn walk_files(root: &Path, catalog: &Catalog) -> Result<Vec<String>> {
    std::fs::read_dir(root).map_err(|e| Error::ScanFailed {
        path: root.to_path_buf(),
        reason: e.to_string(),
    })?;
    let mut files = Vec::new();
    let walker = WalkDir::new(root)
        .follow_links(false)
        .sort_by_file_name()
        .into_iter()
        .filter_entry(|e| e.depth() == 0 || !catalog.is_ignored(&relative(root, e.path())));
    for entry in walker {
        let entry = match entry {
            Ok(e) => e,
            Err(e) => {
                warn!(error = %e, "skipping unreadable entry");
                continue;
            }
        };
        if entry.file_type().is_file() {
            files.push(relative(root, entry.path()));
        }
    }
    files.sort();
    Ok(files)
}

pub(crate) fn relative(root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path);
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

/// Every file matching a catalog marker, paired with the system it marks.
pub fn enumerate_build_files(root: &Path, catalog: &Catalog) -> Result<Vec<BuildFile>> {
    let mut out = Vec::new();
    for path in walk_files(root, catalog)? {
        for system in catalog.systems_for(&path) {
            out.push(BuildFile {
                path: path.clone(),
                system: system.clone(),
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DocScan {
    pub paths: Vec<String>,
    pub warnings: Vec<String>,
}

fn doc_keyword() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"(?i)(readme|build|install|compil|contribut|howto|getting[-_ ]?started|quick[-_ ]?start|setup|depend|requirement|faq|usage)",
        )
        .unwrap()
    })
}

const TEXT_EXTENSIONS: &[&str] = &[
    "md", "markdown", "txt", "rst", "adoc", "asciidoc", "org", "textile", "wiki", "html", "htm",
    "mdx",
];

fn is_text_like_name(name: &str) -> bool {
    match name.rsplit_once('.') {
        None => true,
        Some(("", _)) => false,
        Some((_, ext)) => TEXT_EXTENSIONS.contains(&ext.to_ascii_lowercase().as_str()),
    }
}

fn in_doc_dir(path: &str) -> bool {
    let mut parts: Vec<&str> = path.split('/').collect();
    parts.pop();
    parts.iter().any(|p| {
        matches!(
            p.to_ascii_lowercase().as_str(),
            "doc" | "docs" | "documentation"
        )
    })
}

fn looks_binary(path: &Path) -> bool {
    let mut buf = [0u8; 8192];
    let Ok(mut f) = std::fs::File::open(path) else {
        return true;
    };
    let n = f.read(&mut buf).unwrap_or(0);
    buf[..n].contains(&0)
}

/// First filtering round: keyword match on file names plus anything text-like
/// under a doc/docs directory. Oversized and binary files are dropped.
pub fn collect_docs(root: &Path, catalog: &Catalog) -> Result<DocScan> {
    collect_docs_capped(root, catalog, DOC_SIZE_CAP)
}

pub fn collect_docs_capped(root: &Path, catalog: &Catalog, size_cap: u64) -> Result<DocScan> {
    let mut scan = DocScan::default();
    for path in walk_files(root, catalog)? {
        let name = path.rsplit('/').next().unwrap_or(&path);
        if !is_text_like_name(name) {
            continue;
        }
        let stem = name.split('.').next().unwrap_or(name);
        if !(doc_keyword().is_match(stem) || in_doc_dir(&path)) {
            continue;
        }
        let full = root.join(&path);
        let size = std::fs::metadata(&full).map(|m| m.len()).unwrap_or(0);
        if size > size_cap {
            let msg = format!("{path}: {size} bytes exceeds the {size_cap}-byte doc cap, skipped");
            warn!("{msg}");
            scan.warnings.push(msg);
            continue;
        }
        if looks_binary(&full) {
            continue;
        }
        scan.paths.push(path);
    }
    Ok(scan)
}
