use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use buildsmith_core::catalog::Catalog;
use buildsmith_core::generator::TemplateSet;
use buildsmith_core::llm::{Gateway, RetryPolicy, ScriptedTransport};
use buildsmith_core::parser::{
    collect_docs, enumerate_build_files, extract_dependencies, filter_docs_llm, SourceKind,
    VersionConstraint,
};
use proptest::prelude::*;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures/repos")
        .join(name)
}

fn deps(name: &str) -> Vec<(String, VersionConstraint, SourceKind, String)> {
    extract_dependencies(&fixture(name), &Catalog::builtin())
        .unwrap()
        .dependencies
        .into_iter()
        .map(|d| (d.name, d.version_constraint, d.source_kind, d.origin_path))
        .collect()
}

fn row(
    name: &str,
    c: VersionConstraint,
    k: SourceKind,
    origin: &str,
) -> (String, VersionConstraint, SourceKind, String) {
    (name.into(), c, k, origin.into())
}

use SourceKind::{BuildFileDeclaration as Decl, PackageManagerManifest as Manifest, Submodule};
use VersionConstraint::{Any, AtLeast, Exact, Range};

#[test]
fn vcpkg_fixture_dependencies() {
    assert_eq!(
        deps("deps_vcpkg"),
        vec![
            row("fmt", Exact("10.1.1".into()), Manifest, "vcpkg.json"),
            row("libpng", AtLeast("1.6.37".into()), Manifest, "vcpkg.json"),
            row("PNG", Any, Decl, "CMakeLists.txt"),
            row("zlib", Any, Manifest, "vcpkg.json"),
        ]
    );
}

#[test]
fn conan_fixture_dependencies() {
    assert_eq!(
        deps("deps_conan"),
        vec![
            row("boost", Exact("1.83.0".into()), Manifest, "conanfile.txt"),
            row("cmake", Exact("3.27.7".into()), Manifest, "conanfile.txt"),
            row(
                "openssl",
                Range(">=3.0 <4".into()),
                Manifest,
                "conanfile.txt"
            ),
            row("zlib", AtLeast("1.2.11".into()), Manifest, "conanfile.txt"),
        ]
    );
}

#[test]
fn cmake_fixture_dependencies() {
    assert_eq!(
        deps("deps_cmake"),
        vec![
            row("CURL", AtLeast("7.68".into()), Decl, "cmake/Deps.cmake"),
            row("Eigen3", AtLeast("3.4".into()), Decl, "CMakeLists.txt"),
            row("gio-2.0", Any, Decl, "CMakeLists.txt"),
            row("glib-2.0", AtLeast("2.56".into()), Decl, "CMakeLists.txt"),
            row("imgui", Any, Submodule, ".gitmodules"),
            row("PkgConfig", Any, Decl, "CMakeLists.txt"),
            row("SDL2", Exact("2.0.20".into()), Decl, "CMakeLists.txt"),
            row("Threads", Any, Decl, "CMakeLists.txt"),
        ]
    );
}

/// File names with the system each one marks, read off the catalog by hand.
const NAMES: &[(&str, Option<&str>)] = &[
    ("CMakeLists.txt", Some("CMake")),
    ("Makefile", Some("Make")),
    ("configure.ac", Some("Autotools")),
    ("meson.build", Some("Meson")),
    ("BUILD.bazel", Some("Bazel")),
    ("SConstruct", Some("SCons")),
    ("build.ninja", Some("Ninja")),
    ("viewer.pro", Some("QMake")),
    ("vcpkg.json", Some("Vcpkg")),
    ("main.c", None),
    ("README.md", None),
    ("notes.txt", None),
];
const DIRS: &[&str] = &[
    "",
    "src",
    "src/lib",
    "docs",
    "third_party",
    "third_party/zlib",
    "vendor",
    "tools/vendor",
    "external",
];
const IGNORED_TOPS: &[&str] = &["third_party", "vendor", "external", ".git"];

fn oracle(root: &Path) -> BTreeSet<(String, String)> {
    fn walk(dir: &Path, rel: &str, out: &mut BTreeSet<(String, String)>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let entry = entry.unwrap();
            let name = entry.file_name().to_string_lossy().into_owned();
            let path = if rel.is_empty() {
                name.clone()
            } else {
                format!("{rel}/{name}")
            };
            if entry.file_type().unwrap().is_dir() {
                if rel.is_empty() && IGNORED_TOPS.contains(&name.as_str()) {
                    continue;
                }
                walk(&entry.path(), &path, out);
            } else if let Some((_, Some(system))) = NAMES.iter().find(|(n, _)| *n == name) {
                out.insert((path, system.to_string()));
            }
        }
    }
    let mut out = BTreeSet::new();
    walk(root, "", &mut out);
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn enumerate_matches_brute_force_walk(files in proptest::collection::vec((0..DIRS.len(), 0..NAMES.len()), 0..24)) {
        let tmp = tempfile::tempdir().unwrap();
        for (d, n) in &files {
            let dir = tmp.path().join(DIRS[*d]);
            std::fs::create_dir_all(&dir).unwrap();
            std::fs::write(dir.join(NAMES[*n].0), "x\n").unwrap();
        }
        let got: BTreeSet<(String, String)> = enumerate_build_files(tmp.path(), &Catalog::builtin())
            .unwrap()
            .into_iter()
            .map(|b| (b.path, b.system.to_string()))
            .collect();
        prop_assert_eq!(got, oracle(tmp.path()));
    }

    #[test]
    fn llm_filter_output_is_subset_of_collected(
        picks in proptest::collection::vec(0..6usize, 0..8),
        extra in proptest::collection::vec("[a-z]{1,8}\\.md", 0..3),
        garbage in any::<bool>(),
    ) {
        let tmp = tempfile::tempdir().unwrap();
        let names = ["README.md", "INSTALL", "BUILDING.txt", "docs/guide.md", "docs/api/ref.rst", "CONTRIBUTING.md"];
        for n in names {
            let p = tmp.path().join(n);
            std::fs::create_dir_all(p.parent().unwrap()).unwrap();
            std::fs::write(p, "build with make\n").unwrap();
        }
        let collected = collect_docs(tmp.path(), &Catalog::builtin()).unwrap().paths;
        let mut reply: Vec<String> = picks.iter().map(|i| names[*i].to_string()).collect();
        reply.extend(extra);
        let text = if garbage { "I think the README matters".to_string() } else { serde_json::to_string(&reply).unwrap() };
        let gw = Gateway::new(Arc::new(ScriptedTransport::new([text])), "m").with_retry(RetryPolicy::immediate());
        let mut session = gw.session(100_000);
        let filtered = filter_docs_llm(&collected, "p", &mut session, &TemplateSet::builtin()).unwrap();
        prop_assert!(filtered.paths.iter().all(|p| collected.contains(p)));
        let positions: Vec<usize> = filtered.paths.iter().map(|p| collected.iter().position(|c| c == p).unwrap()).collect();
        prop_assert!(positions.windows(2).all(|w| w[0] < w[1]));
    }
}

#[test]
fn fixture_build_files() {
    let catalog = Catalog::builtin();
    let got: Vec<(String, String)> = enumerate_build_files(&fixture("autotools_hello"), &catalog)
        .unwrap()
        .into_iter()
        .map(|b| (b.path, b.system.to_string()))
        .collect();
    assert_eq!(
        got,
        vec![("configure.ac".to_string(), "Autotools".to_string())]
    );
    let docs = collect_docs(&fixture("make_missing_header"), &catalog).unwrap();
    assert_eq!(docs.paths, vec!["INSTALL"]);
}
