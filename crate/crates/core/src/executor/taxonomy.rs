//! Build-failure taxonomy and the ordered rule table that assigns it.
//!
//! Labels are for reporting only; nothing in the loop branches on them.

use std::fmt;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::window::FailureExtract;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    LibraryIssues,
    BuildToolchainIssues,
    ConfigurationIssues,
    OtherIssues,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Subcategory {
    LibraryNotInstalled,
    LibraryNotInPath,
    LibraryVersionInconsistency,
    BuildSystemVersionConflict,
    OtherToolsMissingOrConflicting,
    OSPlatformIncompatibility,
    IncorrectBuildCommands,
    ProjectConfigurationIssues,
    MemoryIssues,
    SourceCodeIssues,
    UnstableBranch,
    Unclassified,
}

impl Subcategory {
    pub const ALL: [Subcategory; 12] = [
        Subcategory::LibraryNotInstalled,
        Subcategory::LibraryNotInPath,
        Subcategory::LibraryVersionInconsistency,
        Subcategory::BuildSystemVersionConflict,
        Subcategory::OtherToolsMissingOrConflicting,
        Subcategory::OSPlatformIncompatibility,
        Subcategory::IncorrectBuildCommands,
        Subcategory::ProjectConfigurationIssues,
        Subcategory::MemoryIssues,
        Subcategory::SourceCodeIssues,
        Subcategory::UnstableBranch,
        Subcategory::Unclassified,
    ];

    pub fn category(self) -> Category {
        use Subcategory::*;
        match self {
            LibraryNotInstalled | LibraryNotInPath | LibraryVersionInconsistency => {
                Category::LibraryIssues
            }
            BuildSystemVersionConflict | OtherToolsMissingOrConflicting => {
                Category::BuildToolchainIssues
            }
            OSPlatformIncompatibility | IncorrectBuildCommands | ProjectConfigurationIssues => {
                Category::ConfigurationIssues
            }
            MemoryIssues | SourceCodeIssues | UnstableBranch | Unclassified => {
                Category::OtherIssues
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ErrorTaxonomyLabel {
    pub category: Category,
    pub subcategory: Subcategory,
}

impl From<Subcategory> for ErrorTaxonomyLabel {
    fn from(subcategory: Subcategory) -> Self {
        Self {
            category: subcategory.category(),
            subcategory,
        }
    }
}

impl fmt::Display for ErrorTaxonomyLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}/{:?}", self.category, self.subcategory)
    }
}

/// First match wins, so more specific rules come first.
const RULES: &[(&str, Subcategory)] = &[
    (
        r"(?i)cmake (version )?\d+(\.\d+)* or higher is required",
        Subcategory::BuildSystemVersionConflict,
    ),
    (
        r"(?i)compatibility with cmake < [0-9.]+ has been removed",
        Subcategory::BuildSystemVersionConflict,
    ),
    (
        r"(?i)meson version is .* but project requires",
        Subcategory::BuildSystemVersionConflict,
    ),
    (
        r"(?i)(autoconf|automake) version [0-9.]+ or higher is required",
        Subcategory::BuildSystemVersionConflict,
    ),
    (
        r"(?i)requires? (at least )?(cmake|meson|automake|autoconf|bazel|scons|ninja) (version )?[0-9]",
        Subcategory::BuildSystemVersionConflict,
    ),
    (
        r"(?i)virtual memory exhausted|out of memory|cannot allocate memory|killed signal terminated program|fatal error: killed",
        Subcategory::MemoryIssues,
    ),
    (
        r"(?i)\bcuda\b|\bnvcc\b|\bcudnn\b|unsupported (platform|architecture|operating system)|exec format error|not supported on this (platform|architecture)|unrecognized command[- ]line option '-m",
        Subcategory::OSPlatformIncompatibility,
    ),
    (
        r"(?i)found unsuitable version|version mismatch|requested '[^']+' but version of|requires? .*version .* but .* (is installed|was found|found)",
        Subcategory::LibraryVersionInconsistency,
    ),
    (
        r"(?i)fatal error: (\S*/)?config\.h: no such file",
        Subcategory::ProjectConfigurationIssues,
    ),
    (
        r"(?i)fatal error: [^:]+\.(h|hh|hpp|hxx)[>\x22]?: no such file or directory",
        Subcategory::LibraryNotInstalled,
    ),
    (
        r"(?i)could not find a package configuration file|could not find \w+ \(missing|no package '[^']+' found|package '?[\w.+-]+'?,? required by .*not found|unable to locate package|/ld: cannot find -l|library not found for -l",
        Subcategory::LibraryNotInstalled,
    ),
    (
        r"(?i)error while loading shared libraries|ld_library_path|pkg_config_path|cannot open shared object file",
        Subcategory::LibraryNotInPath,
    ),
    (
        r"(?i)no cmake_(c|cxx)_compiler could be found|command not found|: not found$|: \d+: \S+: not found|could not find (git|python|perl|ninja|pkg-config)|no acceptable c compiler",
        Subcategory::OtherToolsMissingOrConflicting,
    ),
    (
        r"(?i)no rule to make target|no targets specified and no makefile found|cmake error: unknown argument|unrecognized option|unknown (option|argument)|does not appear to contain cmakelists\.txt",
        Subcategory::IncorrectBuildCommands,
    ),
    (
        r"(?i)(configure|autogen\.sh|bootstrap(\.sh)?|build\.sh): no such file|git submodule|fatal: not a git repository|the source directory .* does not exist",
        Subcategory::ProjectConfigurationIssues,
    ),
    (
        r"(?i)undefined reference to|error: expected|was not declared in this scope|syntax error|has no member named|error: (invalid|no matching|conflicting|redefinition)",
        Subcategory::SourceCodeIssues,
    ),
    (
        r"(?i)fatal: reference is not a tree|error: pathspec '.*' did not match|fatal: couldn't find remote ref",
        Subcategory::UnstableBranch,
    ),
];

fn rules() -> &'static [(Regex, Subcategory)] {
    static COMPILED: OnceLock<Vec<(Regex, Subcategory)>> = OnceLock::new();
    COMPILED.get_or_init(|| {
        RULES
            .iter()
            .map(|(re, sub)| (Regex::new(re).expect("taxonomy rule compiles"), *sub))
            .collect()
    })
}

/// Assigns a label from the ordered rule table; `Unclassified` when nothing
/// matches. Pure and total.
pub fn classify_error(failure: &FailureExtract) -> ErrorTaxonomyLabel {
    classify_lines(&failure.window)
}

pub fn classify_lines(lines: &[String]) -> ErrorTaxonomyLabel {
    for (re, sub) in rules() {
        if lines.iter().any(|l| re.is_match(l)) {
            return (*sub).into();
        }
    }
    Subcategory::Unclassified.into()
}
