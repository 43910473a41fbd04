//! Getting a repository onto local disk: clone a URL or copy a directory
//! into a private work tree.

use std::path::{Path, PathBuf};
use std::process::Command;

use buildsmith_core::executor::copy_tree;
use buildsmith_core::{Error, Result};
use tempfile::TempDir;
use tracing::info;

/// A private copy of the source tree, removed on drop.
#[derive(Debug)]
pub struct Checkout {
    pub project: String,
    pub root: PathBuf,
    _work: TempDir,
}

pub fn is_remote(source: &str) -> bool {
    source.contains("://") || source.starts_with("git@")
}

/// Project name from a path or URL: the last component without `.git`,
/// restricted to characters safe in a directory name.
pub fn project_name(source: &str) -> String {
    let last = source
        .trim_end_matches('/')
        .rsplit(['/', ':'])
        .next()
        .unwrap_or_default()
        .trim_end_matches(".git");
    let name: String = last
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "-_.".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect();
    if name.is_empty() || name.chars().all(|c| c == '.') {
        "project".into()
    } else {
        name
    }
}

fn git(args: &[&str], cwd: Option<&Path>) -> Result<()> {
    let mut cmd = Command::new("git");
    cmd.args(args);
    if let Some(dir) = cwd {
        cmd.current_dir(dir);
    }
    let out = cmd
        .output()
        .map_err(|e| Error::InvalidInput(format!("cannot run git: {e}")))?;
    if out.status.success() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "git {} failed: {}",
            args.first().copied().unwrap_or_default(),
            String::from_utf8_lossy(&out.stderr).trim()
        )))
    }
}

/// Clones or copies `source` into a fresh work tree, checking out `commit`
/// when given.
pub fn acquire(source: &str, commit: Option<&str>) -> Result<Checkout> {
    let project = if is_remote(source) {
        project_name(source)
    } else {
        let path = Path::new(source);
        if !path.is_dir() {
            return Err(Error::InvalidInput(format!(
                "source {source} is not a directory"
            )));
        }
        let canonical = path.canonicalize()?;
        project_name(&canonical.to_string_lossy())
    };
    let work = tempfile::Builder::new()
        .prefix("buildsmith-src-")
        .tempdir()?;
    let root = work.path().join(&project);
    let dest = root.to_string_lossy().into_owned();

    match (is_remote(source), commit) {
        (false, None) => {
            info!(source, "copying source tree");
            copy_tree(Path::new(source), &root)?;
        }
        (remote, commit) => {
            info!(source, ?commit, "cloning");
            let mut args = vec!["clone", "--quiet", "--recurse-submodules"];
            if remote && commit.is_none() {
                args.extend(["--depth", "1", "--shallow-submodules"]);
            }
            args.extend([source, dest.as_str()]);
            git(&args, None)?;
            if let Some(rev) = commit {
                git(&["checkout", "--quiet", rev], Some(&root))?;
                git(
                    &["submodule", "update", "--init", "--recursive", "--quiet"],
                    Some(&root),
                )?;
            }
        }
    }
    Ok(Checkout {
        project,
        root,
        _work: work,
    })
}
