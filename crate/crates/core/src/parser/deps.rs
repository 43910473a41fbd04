//! Static dependency extraction from package-manager manifests and build
//! files: vcpkg.json, conanfile.txt/.py, CMake `find_package` and
//! `pkg_check_modules`, and `.gitmodules`.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use tracing::warn;

use super::scan::walk_files;
use crate::catalog::Catalog;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", content = "version", rename_all = "kebab-case")]
pub enum VersionConstraint {
    Any,
    Exact(String),
    AtLeast(String),
    /// Free-form range such as `>=1.0 <2.0`.
    Range(String),
}

impl VersionConstraint {
    fn rank(&self) -> u8 {
        match self {
            VersionConstraint::Any => 0,
            VersionConstraint::AtLeast(_) => 1,
            VersionConstraint::Range(_) => 2,
            VersionConstraint::Exact(_) => 3,
        }
    }

    /// Ordering by tightness; `Greater` means `self` is tighter.
    fn tightness(&self, other: &Self) -> Ordering {
        match (self, other) {
            (VersionConstraint::AtLeast(a), VersionConstraint::AtLeast(b)) => {
                compare_versions(a, b)
            }
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl fmt::Display for VersionConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VersionConstraint::Any => f.write_str("any"),
            VersionConstraint::Exact(v) => write!(f, "=={v}"),
            VersionConstraint::AtLeast(v) => write!(f, ">={v}"),
            VersionConstraint::Range(r) => f.write_str(r),
        }
    }
}

/// Numeric-aware dotted version comparison.
pub fn compare_versions(a: &str, b: &str) -> Ordering {
    let parts = |s: &str| -> Vec<u64> {
        s.split(|c: char| !c.is_ascii_digit())
            .filter(|p| !p.is_empty())
            .map(|p| p.parse().unwrap_or(0))
            .collect()
    };
    let (pa, pb) = (parts(a), parts(b));
    for i in 0..pa.len().max(pb.len()) {
        let x = pa.get(i).copied().unwrap_or(0);
        let y = pb.get(i).copied().unwrap_or(0);
        match x.cmp(&y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceKind {
    SystemPackage,
    PackageManagerManifest,
    BuildFileDeclaration,
    Submodule,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependencySpec {
    pub name: String,
    pub version_constraint: VersionConstraint,
    pub source_kind: SourceKind,
    pub origin_path: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DependencyScan {
    pub dependencies: Vec<DependencySpec>,
    pub warnings: Vec<String>,
}

pub fn extract_dependencies(root: &Path, catalog: &Catalog) -> Result<DependencyScan> {
    let mut found = Vec::new();
    let mut warnings = Vec::new();
    for path in walk_files(root, catalog)? {
        let name = path.rsplit('/').next().unwrap_or(&path);
        let parser: fn(&str, &str) -> std::result::Result<Vec<DependencySpec>, String> = match name
        {
            "vcpkg.json" => parse_vcpkg,
            "conanfile.txt" => parse_conanfile_txt,
            "conanfile.py" => parse_conanfile_py,
            "CMakeLists.txt" => parse_cmake,
            n if n.ends_with(".cmake") => parse_cmake,
            ".gitmodules" => parse_gitmodules,
            _ => continue,
        };
        let text = match std::fs::read_to_string(root.join(&path)) {
            Ok(t) => t,
            Err(e) => {
                warnings.push(format!("{path}: unreadable: {e}"));
                continue;
            }
        };
        match parser(&text, &path) {
            Ok(specs) => found.extend(specs),
            Err(e) => {
                let msg = format!("{path}: malformed manifest skipped: {e}");
                warn!("{msg}");
                warnings.push(msg);
            }
        }
    }
    Ok(DependencyScan {
        dependencies: merge(found),
        warnings,
    })
}

/// Merges duplicates (case-insensitive name) keeping the tightest
/// constraint, first seen on ties, and sorts by name.
pub fn merge(specs: Vec<DependencySpec>) -> Vec<DependencySpec> {
    let mut by_name: HashMap<String, DependencySpec> = HashMap::new();
    for spec in specs {
        let key = spec.name.to_ascii_lowercase();
        match by_name.get(&key) {
            Some(existing)
                if spec
                    .version_constraint
                    .tightness(&existing.version_constraint)
                    != Ordering::Greater => {}
            _ => {
                by_name.insert(key, spec);
            }
        }
    }
    let mut out: Vec<_> = by_name.into_values().collect();
    out.sort_by(|a, b| {
        a.name
            .to_ascii_lowercase()
            .cmp(&b.name.to_ascii_lowercase())
            .then_with(|| a.name.cmp(&b.name))
    });
    out
}

fn spec(name: &str, c: VersionConstraint, kind: SourceKind, origin: &str) -> DependencySpec {
    DependencySpec {
        name: name.to_string(),
        version_constraint: c,
        source_kind: kind,
        origin_path: origin.to_string(),
    }
}

pub fn parse_vcpkg(text: &str, origin: &str) -> std::result::Result<Vec<DependencySpec>, String> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    let deps = match value.get("dependencies") {
        None => return Ok(out),
        Some(serde_json::Value::Array(a)) => a,
        Some(_) => return Err("`dependencies` is not an array".into()),
    };
    let kind = SourceKind::PackageManagerManifest;
    for dep in deps {
        match dep {
            serde_json::Value::String(name) if !name.is_empty() => {
                out.push(spec(name, VersionConstraint::Any, kind, origin))
            }
            serde_json::Value::Object(obj) => {
                let name = obj
                    .get("name")
                    .and_then(|n| n.as_str())
                    .filter(|n| !n.is_empty())
                    .ok_or("dependency object without a name")?;
                let c = match obj.get("version>=").and_then(|v| v.as_str()) {
                    Some(v) => VersionConstraint::AtLeast(v.to_string()),
                    None => VersionConstraint::Any,
                };
                out.push(spec(name, c, kind, origin));
            }
            other => return Err(format!("unexpected dependency entry {other}")),
        }
    }
    if let Some(serde_json::Value::Array(overrides)) = value.get("overrides") {
        for o in overrides {
            let name = o.get("name").and_then(|n| n.as_str());
            let version = ["version", "version-string", "version-semver"]
                .iter()
                .find_map(|k| o.get(*k).and_then(|v| v.as_str()));
            if let (Some(n), Some(v)) = (name, version) {
                out.push(spec(
                    n,
                    VersionConstraint::Exact(v.to_string()),
                    kind,
                    origin,
                ));
            }
        }
    }
    Ok(out)
}

/// `name/version[@user/channel][#rev]` where version may be `[range]`.
fn parse_conan_reference(reference: &str) -> Option<(String, VersionConstraint)> {
    let reference = reference.split('#').next()?.trim();
    let (name, rest) = reference.split_once('/')?;
    if name.is_empty()
        || !name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || "_-.+".contains(c))
    {
        return None;
    }
    let version = rest.split('@').next()?.trim();
    let c = if let Some(range) = version.strip_prefix('[').and_then(|v| v.strip_suffix(']')) {
        let range = range.trim();
        match range.strip_prefix(">=") {
            Some(v) if !v.contains([' ', '<', ',']) => {
                VersionConstraint::AtLeast(v.trim().to_string())
            }
            _ => VersionConstraint::Range(range.to_string()),
        }
    } else if version.is_empty() || version == "*" {
        VersionConstraint::Any
    } else {
        VersionConstraint::Exact(version.to_string())
    };
    Some((name.to_string(), c))
}

pub fn parse_conanfile_txt(
    text: &str,
    origin: &str,
) -> std::result::Result<Vec<DependencySpec>, String> {
    let mut out = Vec::new();
    let mut in_requires = false;
    for raw in text.lines() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') && line.ends_with(']') && !line.contains('/') {
            in_requires = matches!(line, "[requires]" | "[tool_requires]" | "[build_requires]");
            continue;
        }
        if in_requires {
            let (name, c) =
                parse_conan_reference(line).ok_or_else(|| format!("bad requirement `{line}`"))?;
            out.push(spec(&name, c, SourceKind::PackageManagerManifest, origin));
        }
    }
    Ok(out)
}

fn quoted_reference() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r#"["']([A-Za-z0-9_.+-]+/(?:\[[^\]"']*\]|[A-Za-z0-9_.+*-]+)(?:@[A-Za-z0-9_./+-]*)?(?:#[A-Za-z0-9]*)?)["']"#)
            .unwrap()
    })
}

pub fn parse_conanfile_py(
    text: &str,
    origin: &str,
) -> std::result::Result<Vec<DependencySpec>, String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    for raw in text.lines() {
        let line = raw.split('#').next().unwrap_or("");
        let mentions = line.contains("requires");
        if !(mentions || depth > 0) {
            continue;
        }
        for cap in quoted_reference().captures_iter(line) {
            if let Some((name, c)) = parse_conan_reference(&cap[1]) {
                out.push(spec(&name, c, SourceKind::PackageManagerManifest, origin));
            }
        }
        if mentions && line.contains('=') || depth > 0 {
            depth += line.matches(['(', '[']).count() as i32;
            depth -= line.matches([')', ']']).count() as i32;
            // Brackets inside version ranges balance out on the same line.
            depth = depth.max(0);
        }
    }
    Ok(out)
}

fn find_package_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?is)\bfind_package\s*\(([^)]*)\)").unwrap())
}

fn pkg_modules_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?is)\bpkg_(?:check_modules|search_module)\s*\(([^)]*)\)").unwrap()
    })
}

fn strip_cmake_comments(text: &str) -> String {
    text.lines()
        .map(|l| match l.find('#') {
            Some(i) => &l[..i],
            None => l,
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn looks_like_version(s: &str) -> bool {
    s.chars().next().is_some_and(|c| c.is_ascii_digit())
        && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '.')
}

pub fn parse_cmake(text: &str, origin: &str) -> std::result::Result<Vec<DependencySpec>, String> {
    let text = strip_cmake_comments(text);
    let mut out = Vec::new();
    let kind = SourceKind::BuildFileDeclaration;
    for cap in find_package_re().captures_iter(&text) {
        let args: Vec<&str> = cap[1].split_whitespace().collect();
        let Some(name) = args.first() else { continue };
        if name.contains('$') || name.contains('"') {
            continue;
        }
        let version = args.get(1).filter(|v| looks_like_version(v));
        let exact = args.iter().any(|a| a.eq_ignore_ascii_case("EXACT"));
        let c = match version {
            Some(v) if exact => VersionConstraint::Exact(v.to_string()),
            Some(v) => VersionConstraint::AtLeast(v.to_string()),
            None => VersionConstraint::Any,
        };
        out.push(spec(name, c, kind, origin));
    }
    const KEYWORDS: &[&str] = &[
        "REQUIRED",
        "QUIET",
        "IMPORTED_TARGET",
        "GLOBAL",
        "NO_CMAKE_PATH",
        "NO_CMAKE_ENVIRONMENT_PATH",
    ];
    for cap in pkg_modules_re().captures_iter(&text) {
        // Glue `mod >= 1.0` into `mod>=1.0`.
        let mut tokens = Vec::new();
        let mut it = cap[1]
            .split_whitespace()
            .skip(1)
            .filter(|t| !KEYWORDS.contains(t))
            .peekable();
        while let Some(t) = it.next() {
            let is_op = |s: &&str| matches!(*s, ">=" | "<=" | "=" | "<" | ">");
            match it.next_if(is_op) {
                Some(op) => match it.next() {
                    Some(v) => tokens.push(format!("{t}{op}{v}")),
                    None => tokens.push(t.to_string()),
                },
                None => tokens.push(t.to_string()),
            }
        }
        for t in tokens {
            if t.contains('$') {
                continue;
            }
            let (name, c) = if let Some((n, v)) = t.split_once(">=") {
                (n, VersionConstraint::AtLeast(v.to_string()))
            } else if let Some((n, v)) = t.split_once("<=") {
                (n, VersionConstraint::Range(format!("<={v}")))
            } else if let Some((n, v)) = t.split_once('=') {
                (n, VersionConstraint::Exact(v.to_string()))
            } else if let Some((n, v)) = t.split_once('<') {
                (n, VersionConstraint::Range(format!("<{v}")))
            } else if let Some((n, v)) = t.split_once('>') {
                (n, VersionConstraint::Range(format!(">{v}")))
            } else {
                (t.as_str(), VersionConstraint::Any)
            };
            if !name.is_empty() {
                out.push(spec(name, c, kind, origin));
            }
        }
    }
    Ok(out)
}

pub fn parse_gitmodules(
    text: &str,
    origin: &str,
) -> std::result::Result<Vec<DependencySpec>, String> {
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix("[submodule") {
            let name = rest.trim().trim_end_matches(']').trim().trim_matches('"');
            let base = name.rsplit('/').next().unwrap_or(name);
            if base.is_empty() {
                return Err(format!("bad submodule header `{line}`"));
            }
            out.push(spec(
                base,
                VersionConstraint::Any,
                SourceKind::Submodule,
                origin,
            ));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vcpkg_manifest() {
        let got = parse_vcpkg(
            r#"{"dependencies": ["fmt", {"name": "zlib", "version>=": "1.2.11"}]}"#,
            "vcpkg.json",
        )
        .unwrap();
        assert_eq!(got[0].name, "fmt");
        assert_eq!(got[0].version_constraint, VersionConstraint::Any);
        assert_eq!(got[1].name, "zlib");
        assert_eq!(
            got[1].version_constraint,
            VersionConstraint::AtLeast("1.2.11".into())
        );
        assert!(parse_vcpkg("{not json", "vcpkg.json").is_err());
    }

    #[test]
    fn conanfile_txt() {
        let got = parse_conanfile_txt("[requires]\nfmt/10.1.1\n", "conanfile.txt").unwrap();
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].name, "fmt");
        assert_eq!(
            got[0].version_constraint,
            VersionConstraint::Exact("10.1.1".into())
        );

        let got = parse_conanfile_txt(
            "[requires]\nboost/[>=1.80 <1.85]\nzlib/1.3@conan/stable # pinned\n[generators]\nCMakeDeps\n",
            "conanfile.txt",
        )
        .unwrap();
        assert_eq!(got.len(), 2);
        assert_eq!(
            got[0].version_constraint,
            VersionConstraint::Range(">=1.80 <1.85".into())
        );
        assert_eq!(
            got[1].version_constraint,
            VersionConstraint::Exact("1.3".into())
        );
    }

    #[test]
    fn conanfile_py() {
        let text = r#"
from conan import ConanFile

class App(ConanFile):
    settings = "os", "arch"
    exports_sources = "src/main.cpp", "CMakeLists.txt"
    requires = (
        "openssl/3.1.2",
        "spdlog/[>=1.11]",
    )

    def requirements(self):
        self.requires("fmt/10.1.1")
"#;
        let got = parse_conanfile_py(text, "conanfile.py").unwrap();
        let names: Vec<_> = got.iter().map(|d| d.name.as_str()).collect();
        assert_eq!(names, ["openssl", "spdlog", "fmt"]);
        assert_eq!(
            got[1].version_constraint,
            VersionConstraint::AtLeast("1.11".into())
        );
    }

    #[test]
    fn cmake_declarations() {
        let got = parse_cmake("find_package(OpenSSL 1.1 REQUIRED)", "CMakeLists.txt").unwrap();
        assert_eq!(
            got,
            vec![spec(
                "OpenSSL",
                VersionConstraint::AtLeast("1.1".into()),
                SourceKind::BuildFileDeclaration,
                "CMakeLists.txt"
            )]
        );
        let got = parse_cmake(
            "# find_package(Commented)\nfind_package(Boost 1.74 EXACT COMPONENTS system)\nfind_package(Threads)\npkg_check_modules(GLIB REQUIRED glib-2.0>=2.50 libpng)\npkg_check_modules(X IMPORTED_TARGET sqlite3 >= 3.30)",
            "CMakeLists.txt",
        )
        .unwrap();
        let pairs: Vec<_> = got
            .iter()
            .map(|d| (d.name.as_str(), d.version_constraint.to_string()))
            .collect();
        assert_eq!(
            pairs,
            [
                ("Boost", "==1.74".to_string()),
                ("Threads", "any".to_string()),
                ("glib-2.0", ">=2.50".to_string()),
                ("libpng", "any".to_string()),
                ("sqlite3", ">=3.30".to_string()),
            ]
        );
    }

    #[test]
    fn gitmodules() {
        let got = parse_gitmodules(
            "[submodule \"third_party/googletest\"]\n\tpath = third_party/googletest\n\turl = https://github.com/google/googletest\n",
            ".gitmodules",
        )
        .unwrap();
        assert_eq!(got[0].name, "googletest");
        assert_eq!(got[0].source_kind, SourceKind::Submodule);
    }

    #[test]
    fn merge_prefers_tighter_constraint_then_first_seen() {
        let a = spec(
            "zlib",
            VersionConstraint::Any,
            SourceKind::BuildFileDeclaration,
            "CMakeLists.txt",
        );
        let b = spec(
            "ZLIB",
            VersionConstraint::AtLeast("1.2".into()),
            SourceKind::BuildFileDeclaration,
            "x.cmake",
        );
        let c = spec(
            "zlib",
            VersionConstraint::Exact("1.3".into()),
            SourceKind::PackageManagerManifest,
            "conanfile.txt",
        );
        let d = spec(
            "zlib",
            VersionConstraint::Exact("1.2.13".into()),
            SourceKind::PackageManagerManifest,
            "vcpkg.json",
        );
        let merged = merge(vec![a.clone(), b.clone()]);
        assert_eq!(merged, vec![b.clone()]);
        let merged = merge(vec![a, b, c.clone(), d]);
        assert_eq!(merged, vec![c]);

        let lo = spec(
            "fmt",
            VersionConstraint::AtLeast("9".into()),
            SourceKind::BuildFileDeclaration,
            "a",
        );
        let hi = spec(
            "fmt",
            VersionConstraint::AtLeast("10.1".into()),
            SourceKind::BuildFileDeclaration,
            "b",
        );
        assert_eq!(merge(vec![lo, hi.clone()]), vec![hi]);
    }

    #[test]
    fn version_compare() {
        assert_eq!(compare_versions("1.10", "1.9"), Ordering::Greater);
        assert_eq!(compare_versions("1.2", "1.2.0"), Ordering::Equal);
    }
}
