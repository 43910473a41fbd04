//! Build-system catalog: marker patterns, default commands and the
//! build-command lexicon shared by lint and the discriminator.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use globset::{Glob, GlobSet, GlobSetBuilder};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::shell;

const DEFAULT_CATALOG: &str = include_str!("../catalog/default.toml");

/// Name of a build system as listed in the catalog (`CMake`, `Make`, ...).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BuildSystem(pub String);

impl BuildSystem {
    pub fn new(name: impl Into<String>) -> Self {
        Self(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for BuildSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for BuildSystem {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CatalogEntry {
    #[serde(rename = "name")]
    pub system: BuildSystem,
    pub priority: u32,
    #[serde(rename = "markers")]
    pub marker_patterns: Vec<String>,
    /// Tool installation needed on a fresh base image.
    #[serde(default)]
    pub setup: Option<String>,
    #[serde(rename = "commands")]
    pub default_commands: Vec<String>,
}

#[derive(Debug, Deserialize)]
struct CatalogFile {
    default_base_image: String,
    #[serde(default)]
    ignore: Vec<String>,
    #[serde(default)]
    build_lexicon: Vec<String>,
    #[serde(rename = "system")]
    systems: Vec<CatalogEntry>,
}

#[derive(Debug, Clone)]
pub struct Catalog {
    pub default_base_image: String,
    pub ignore_globs: Vec<String>,
    pub build_lexicon: Vec<String>,
    /// Sorted by priority.
    entries: Vec<CatalogEntry>,
    markers: Vec<GlobSet>,
    ignore: GlobSet,
}

impl Catalog {
    /// The catalog shipped with the crate.
    pub fn builtin() -> Self {
        Self::from_toml(DEFAULT_CATALOG).expect("builtin catalog is valid")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let file: CatalogFile =
            toml::from_str(text).map_err(|e| Error::Config(format!("catalog: {e}")))?;
        let mut entries = file.systems;
        let mut priorities = HashSet::new();
        let mut names = HashSet::new();
        for entry in &entries {
            if entry.marker_patterns.is_empty() {
                return Err(Error::Config(format!(
                    "catalog: {} has no markers",
                    entry.system
                )));
            }
            if entry.default_commands.is_empty() {
                return Err(Error::Config(format!(
                    "catalog: {} has no default commands",
                    entry.system
                )));
            }
            if !priorities.insert(entry.priority) {
                return Err(Error::Config(format!(
                    "catalog: duplicate priority {}",
                    entry.priority
                )));
            }
            if !names.insert(entry.system.clone()) {
                return Err(Error::Config(format!(
                    "catalog: duplicate system {}",
                    entry.system
                )));
            }
        }
        entries.sort_by_key(|e| e.priority);

        let markers = entries
            .iter()
            .map(|e| build_globset(&e.marker_patterns, true))
            .collect::<Result<Vec<_>>>()?;
        let ignore = build_globset(&file.ignore, false)?;
        Ok(Self {
            default_base_image: file.default_base_image,
            ignore_globs: file.ignore,
            build_lexicon: file.build_lexicon,
            entries,
            markers,
            ignore,
        })
    }

    /// Replaces the ignore globs.
    pub fn with_ignore(mut self, globs: Vec<String>) -> Result<Self> {
        self.ignore = build_globset(&globs, false)?;
        self.ignore_globs = globs;
        Ok(self)
    }

    pub fn entries(&self) -> &[CatalogEntry] {
        &self.entries
    }

    pub fn entry(&self, system: &BuildSystem) -> Option<&CatalogEntry> {
        self.entries.iter().find(|e| &e.system == system)
    }

    /// Priority rank of a system; unknown systems sort last.
    pub fn priority(&self, system: &BuildSystem) -> u32 {
        self.entry(system).map_or(u32::MAX, |e| e.priority)
    }

    /// Every system whose marker matches the file name of `rel_path`.
    pub fn systems_for(&self, rel_path: &str) -> Vec<&BuildSystem> {
        let name = rel_path.rsplit('/').next().unwrap_or(rel_path);
        self.entries
            .iter()
            .zip(&self.markers)
            .filter(|(_, set)| set.is_match(name))
            .map(|(e, _)| &e.system)
            .collect()
    }

    pub fn is_ignored(&self, rel_path: &str) -> bool {
        if self.ignore.is_match(rel_path) {
            return true;
        }
        // A directory glob like `vendor/**` also covers the directory itself.
        self.ignore.is_match(format!("{rel_path}/x"))
    }

    /// True when any top-level segment of `command` is a build command.
    pub fn is_build_command(&self, command: &str) -> bool {
        shell::segments(command).iter().any(|seg| {
            !shell::is_package_manager(seg)
                && self
                    .build_lexicon
                    .iter()
                    .any(|phrase| shell::segment_matches_phrase(seg, phrase))
        })
    }
}

impl Default for Catalog {
    fn default() -> Self {
        Self::builtin()
    }
}

fn build_globset(patterns: &[String], literal_separator: bool) -> Result<GlobSet> {
    let mut builder = GlobSetBuilder::new();
    for p in patterns {
        let glob = globset::GlobBuilder::new(p)
            .literal_separator(literal_separator)
            .build()
            .or_else(|_| Glob::new(p))
            .map_err(|e| Error::Config(format!("bad glob `{p}`: {e}")))?;
        builder.add(glob);
    }
    builder
        .build()
        .map_err(|e| Error::Config(format!("glob set: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_catalog_loads_with_unique_priorities() {
        let cat = Catalog::builtin();
        assert!(cat.entries().len() >= 20);
        let names: Vec<_> = cat
            .entries()
            .iter()
            .take(5)
            .map(|e| e.system.as_str())
            .collect();
        assert_eq!(names, ["CMake", "Make", "Autotools", "Bazel", "Meson"]);
        assert_eq!(cat.default_base_image, "ubuntu:22.04");
    }

    #[test]
    fn markers_match_file_names() {
        let cat = Catalog::builtin();
        assert_eq!(
            cat.systems_for("src/CMakeLists.txt"),
            vec![&BuildSystem::from("CMake")]
        );
        assert_eq!(
            cat.systems_for("app.pro"),
            vec![&BuildSystem::from("QMake")]
        );
        assert!(cat.systems_for("src/main.c").is_empty());
        assert_eq!(
            cat.systems_for("conanfile.py"),
            vec![&BuildSystem::from("Conan")]
        );
    }

    #[test]
    fn ignore_globs_cover_directories() {
        let cat = Catalog::builtin();
        assert!(cat.is_ignored("third_party/zlib/Makefile"));
        assert!(cat.is_ignored("third_party"));
        assert!(cat.is_ignored(".git"));
        assert!(!cat.is_ignored("src/third_party_notes.md"));
    }

    #[test]
    fn build_lexicon() {
        let cat = Catalog::builtin();
        assert!(cat.is_build_command("./configure && make"));
        assert!(cat.is_build_command("cmake -S . -B build && cmake --build build"));
        assert!(!cat.is_build_command("apt-get install -y make cmake"));
        assert!(!cat.is_build_command("mkdir build && cd build && cmake .."));
        assert!(!cat.is_build_command("cargo build"));
    }

    #[test]
    fn rejects_duplicate_priorities() {
        let text = r#"
default_base_image = "x"
[[system]]
name = "A"
priority = 1
markers = ["a"]
commands = ["a"]
[[system]]
name = "B"
priority = 1
markers = ["b"]
commands = ["b"]
"#;
        assert!(matches!(Catalog::from_toml(text), Err(Error::Config(_))));
    }
}
