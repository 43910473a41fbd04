//! Test backend that interprets a Dockerfile subset on the host.
//!
//! `FROM` is ignored, `COPY`/`ADD`/`WORKDIR` operate inside a scratch root,
//! `ENV`/`ARG` feed the environment and `RUN` lines execute with `sh -c`.
//! Package managers are stubbed out, network tools refuse to run, and where
//! the host allows it commands run in a fresh network namespace. This is a
//! harness for deterministic tests, not a security boundary.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader};
use std::os::unix::fs::PermissionsExt;
use std::os::unix::process::CommandExt;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::mpsc::{self, RecvTimeoutError};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use tracing::debug;
use walkdir::WalkDir;

use super::window::{BuildStatus, LogCapture};
use super::Backend;
use crate::error::{Error, Result};
use crate::generator::{parse_instructions, run_command, BuildSolution, Instruction};

const STUBBED: &[&str] = &[
    "apt-get",
    "apt",
    "aptitude",
    "yum",
    "dnf",
    "apk",
    "zypper",
    "pacman",
    "pip",
    "pip3",
    "conda",
    "brew",
    "add-apt-repository",
    "snap",
    "dpkg-reconfigure",
    "locale-gen",
];
const REFUSED: &[&str] = &["curl", "wget", "ssh", "scp", "nc"];
const DEAD_PROXY: &str = "http://127.0.0.1:9";

#[derive(Debug, Clone, Default)]
pub struct LocalSandbox {
    /// Keep the scratch directory after the run (for debugging).
    pub keep_scratch: bool,
}

impl LocalSandbox {
    pub fn new() -> Self {
        Self::default()
    }
}

/// Mounts the scratch directory over itself and makes the host root
/// read-only; `$1` is the scratch directory, `$2` the command.
const ISOLATE: &str = "mount --bind \"$1\" \"$1\" && mount -o remount,bind,ro / \
    && cd \"$PWD\" || { echo '[sandbox] isolation setup failed' >&2; exit 97; }; exec sh -c \"$2\"";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Isolation {
    /// New network and mount namespaces, host filesystem read-only.
    Full,
    /// New network namespace only.
    Network,
    None,
}

fn probe(args: &[&str]) -> bool {
    Command::new("unshare")
        .args(args)
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .status()
        .is_ok_and(|s| s.success())
}

fn isolation() -> Isolation {
    static LEVEL: OnceLock<Isolation> = OnceLock::new();
    *LEVEL.get_or_init(|| {
        let Ok(dir) = tempfile::tempdir() else {
            return Isolation::None;
        };
        let dir = dir.path().to_string_lossy().into_owned();
        if probe(&["-rmn", "sh", "-c", ISOLATE, "probe", &dir, "true"]) {
            Isolation::Full
        } else if probe(&["-rn", "true"]) {
            Isolation::Network
        } else {
            Isolation::None
        }
    })
}

/// Lexically normalizes `path` against `cwd` inside a virtual root; `..`
/// never climbs above `/`.
pub fn normalize_virtual(cwd: &str, path: &str) -> String {
    let joined = if path.starts_with('/') {
        path.to_string()
    } else {
        format!("{cwd}/{path}")
    };
    let mut parts: Vec<&str> = Vec::new();
    for comp in joined.split('/') {
        match comp {
            "" | "." => {}
            ".." => {
                parts.pop();
            }
            c => parts.push(c),
        }
    }
    format!("/{}", parts.join("/"))
}

fn expand_vars(text: &str, env: &BTreeMap<String, String>) -> String {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if c != '$' {
            out.push(c);
            continue;
        }
        let rest = &text[i + 1..];
        let (name, used) = if let Some(inner) = rest.strip_prefix('{') {
            match inner.find('}') {
                Some(end) => (&inner[..end], end + 2),
                None => ("", 0),
            }
        } else {
            let end = rest
                .find(|ch: char| !(ch.is_ascii_alphanumeric() || ch == '_'))
                .unwrap_or(rest.len());
            (&rest[..end], end)
        };
        if name.is_empty() {
            out.push('$');
            continue;
        }
        let name = name.split(":-").next().unwrap_or(name);
        out.push_str(env.get(name).map_or("", String::as_str));
        for _ in 0..used {
            chars.next();
        }
    }
    out
}

/// Splits on whitespace, honouring single and double quotes.
fn words(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quote: Option<char> = None;
    let mut any = false;
    for c in text.chars() {
        match quote {
            Some(q) if c == q => quote = None,
            Some(_) => cur.push(c),
            None if c == '"' || c == '\'' => {
                quote = Some(c);
                any = true;
            }
            None if c.is_whitespace() => {
                if any || !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                    any = false;
                }
            }
            None => cur.push(c),
        }
    }
    if any || !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn parse_env(args: &str) -> Vec<(String, String)> {
    let ws = words(args);
    if ws.first().is_some_and(|w| w.contains('=')) {
        ws.into_iter()
            .filter_map(|w| {
                w.split_once('=')
                    .map(|(k, v)| (k.to_string(), v.to_string()))
            })
            .collect()
    } else {
        let mut it = args.trim().splitn(2, char::is_whitespace);
        match (it.next(), it.next()) {
            (Some(k), Some(v)) if !k.is_empty() => vec![(k.to_string(), v.trim().to_string())],
            _ => Vec::new(),
        }
    }
}

/// Arguments of COPY/ADD, with flags removed. Handles the JSON array form.
fn copy_args(args: &str) -> Vec<String> {
    let mut rest = args.trim();
    while rest.starts_with("--") {
        rest = rest
            .split_once(char::is_whitespace)
            .map_or("", |(_, r)| r)
            .trim_start();
    }
    if rest.starts_with('[') {
        if let Ok(v) = serde_json::from_str::<Vec<String>>(rest) {
            return v;
        }
    }
    words(rest)
}

/// Copies `src` into `dest`, preserving symlinks.
pub fn copy_tree(src: &Path, dest: &Path) -> std::io::Result<()> {
    for entry in WalkDir::new(src).follow_links(false) {
        let entry = entry.map_err(std::io::Error::other)?;
        let rel = entry.path().strip_prefix(src).unwrap_or(Path::new(""));
        let target = dest.join(rel);
        let ft = entry.file_type();
        if ft.is_dir() {
            std::fs::create_dir_all(&target)?;
        } else if ft.is_symlink() {
            let link = std::fs::read_link(entry.path())?;
            let _ = std::fs::remove_file(&target);
            std::os::unix::fs::symlink(link, &target)?;
        } else {
            if let Some(parent) = target.parent() {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::copy(entry.path(), &target)?;
        }
    }
    Ok(())
}

struct Run<'a> {
    context: &'a Path,
    rootfs: PathBuf,
    shims: PathBuf,
    home: PathBuf,
    tmp: PathBuf,
    workdir: String,
    env: BTreeMap<String, String>,
    /// Top-level directories the Dockerfile created inside the root.
    tops: Vec<String>,
    lines: Vec<String>,
}

enum StepEnd {
    Done,
    Failed,
    TimedOut,
}

impl Run<'_> {
    fn host(&self, virtual_path: &str) -> PathBuf {
        self.rootfs.join(virtual_path.trim_start_matches('/'))
    }

    fn note_top(&mut self, virtual_path: &str) {
        if let Some(top) = virtual_path.trim_start_matches('/').split('/').next() {
            if !top.is_empty() && !self.tops.iter().any(|t| t == top) {
                self.tops.push(top.to_string());
            }
        }
    }

    /// Points absolute references to directories the build created at
    /// their copies inside the scratch root.
    fn rewrite_paths(&self, text: &str) -> String {
        let mut out = String::with_capacity(text.len());
        let bytes = text.as_bytes();
        let mut i = 0;
        'scan: while i < text.len() {
            if bytes[i] == b'/' {
                let prev_ok = i == 0
                    || matches!(
                        bytes[i - 1],
                        b' ' | b'\t' | b'=' | b':' | b'"' | b'\'' | b'(' | b'\n'
                    );
                if prev_ok {
                    for top in &self.tops {
                        let end = i + 1 + top.len();
                        if text[i + 1..].starts_with(top.as_str())
                            && (end == text.len()
                                || !matches!(bytes[end], b'a'..=b'z' | b'A'..=b'Z' | b'0'..=b'9' | b'_' | b'-' | b'.'))
                        {
                            out.push_str(&self.rootfs.to_string_lossy());
                            out.push('/');
                            out.push_str(top);
                            i = end;
                            continue 'scan;
                        }
                    }
                }
            }
            let ch = text[i..].chars().next().unwrap();
            out.push(ch);
            i += ch.len_utf8();
        }
        out
    }

    fn command_env(&self) -> Vec<(String, String)> {
        let mut env = vec![
            (
                "PATH".to_string(),
                format!(
                    "{}:/usr/local/sbin:/usr/local/bin:/usr/sbin:/usr/bin:/sbin:/bin",
                    self.shims.display()
                ),
            ),
            ("HOME".into(), self.home.display().to_string()),
            ("TMPDIR".into(), self.tmp.display().to_string()),
            ("LANG".into(), "C.UTF-8".into()),
            ("LC_ALL".into(), "C".into()),
        ];
        for var in [
            "http_proxy",
            "https_proxy",
            "HTTP_PROXY",
            "HTTPS_PROXY",
            "ALL_PROXY",
            "all_proxy",
        ] {
            env.push((var.into(), DEAD_PROXY.into()));
        }
        for (k, v) in &self.env {
            if k == "PATH" {
                // Keep the shims first.
                env[0].1 = format!("{}:{}", self.shims.display(), self.rewrite_paths(v));
            } else {
                env.push((k.clone(), self.rewrite_paths(v)));
            }
        }
        env
    }

    fn run_shell(&mut self, cmd: &str, deadline: Instant) -> Result<StepEnd> {
        let cwd = self.host(&self.workdir);
        std::fs::create_dir_all(&cwd)?;
        let script = self.rewrite_paths(cmd);
        let scratch = self
            .rootfs
            .parent()
            .unwrap_or(&self.rootfs)
            .to_string_lossy()
            .into_owned();
        let mut command = match isolation() {
            Isolation::Full => {
                let mut c = Command::new("unshare");
                c.args(["-rmn", "sh", "-c", ISOLATE, "sandbox", &scratch, &script]);
                c
            }
            Isolation::Network => {
                let mut c = Command::new("unshare");
                c.args(["-rn", "sh", "-c", &script]);
                c
            }
            Isolation::None => {
                let mut c = Command::new("sh");
                c.args(["-c", &script]);
                c
            }
        };
        let (reader, writer) = std::io::pipe()?;
        command
            .current_dir(&cwd)
            .env_clear()
            .envs(self.command_env())
            .stdin(Stdio::null())
            .stdout(writer.try_clone()?)
            .stderr(writer)
            .process_group(0);
        let mut child = command.spawn()?;
        drop(command);

        let (tx, rx) = mpsc::channel();
        let pump = std::thread::spawn(move || {
            let mut r = BufReader::new(reader);
            let mut buf = Vec::new();
            loop {
                buf.clear();
                match r.read_until(b'\n', &mut buf) {
                    Ok(0) | Err(_) => break,
                    Ok(_) => {
                        let line = String::from_utf8_lossy(&buf)
                            .trim_end_matches(['\n', '\r'])
                            .to_string();
                        if tx.send(line).is_err() {
                            break;
                        }
                    }
                }
            }
        });

        let pgid = child.id() as i32;
        let kill_group = || unsafe {
            libc::kill(-pgid, libc::SIGKILL);
        };
        let mut exited = None;
        let end = loop {
            let now = Instant::now();
            if now >= deadline {
                kill_group();
                let _ = child.wait();
                break StepEnd::TimedOut;
            }
            match rx.recv_timeout((deadline - now).min(Duration::from_millis(50))) {
                Ok(line) => self.lines.push(line),
                Err(RecvTimeoutError::Disconnected) => {
                    let status = match exited {
                        Some(s) => s,
                        None => child.wait()?,
                    };
                    break if status.success() {
                        StepEnd::Done
                    } else {
                        StepEnd::Failed
                    };
                }
                Err(RecvTimeoutError::Timeout) => {
                    if exited.is_none() {
                        if let Some(status) = child.try_wait()? {
                            exited = Some(status);
                            // Stragglers holding the pipe open die with the step.
                            kill_group();
                        }
                    }
                }
            }
        };
        if matches!(end, StepEnd::TimedOut) {
            // The pump may be blocked on a pipe held by a killed process;
            // collect what is already buffered and move on.
            while let Ok(line) = rx.try_recv() {
                self.lines.push(line);
            }
        } else {
            let _ = pump.join();
        }
        if matches!(end, StepEnd::Failed) {
            let code = exited.and_then(|s| s.code()).unwrap_or(1);
            self.lines.push(format!(
                "The command '/bin/sh -c {cmd}' returned a non-zero code: {code}"
            ));
        }
        Ok(end)
    }

    fn copy(&mut self, inst: &Instruction) -> std::result::Result<(), String> {
        if inst.args.contains("--from=") {
            return Err("multi-stage COPY --from is not supported by the local sandbox".into());
        }
        let args: Vec<String> = copy_args(&expand_vars(&inst.args, &self.env));
        if args.len() < 2 {
            return Err(format!(
                "{} requires a source and a destination",
                inst.keyword
            ));
        }
        let (dest, sources) = args.split_last().unwrap();
        let dest_virtual = normalize_virtual(&self.workdir, dest);
        let dest_is_dir =
            dest.ends_with('/') || sources.len() > 1 || self.host(&dest_virtual).is_dir();
        self.note_top(&dest_virtual);
        for src in sources {
            if src.contains("://") {
                return Err(format!(
                    "network access is disabled in the local sandbox: {src}"
                ));
            }
            let rel = normalize_virtual("/", src);
            let from = self.context.join(rel.trim_start_matches('/'));
            let meta = std::fs::symlink_metadata(&from)
                .map_err(|_| format!("COPY failed: file not found in build context: {src}"))?;
            let result = if meta.is_dir() {
                copy_tree(&from, &self.host(&dest_virtual))
            } else {
                let target = if dest_is_dir {
                    self.host(&dest_virtual)
                        .join(from.file_name().unwrap_or_default())
                } else {
                    self.host(&dest_virtual)
                };
                target
                    .parent()
                    .map_or(Ok(()), std::fs::create_dir_all)
                    .and_then(|_| std::fs::copy(&from, &target).map(|_| ()))
            };
            result.map_err(|e| format!("COPY failed: {src}: {e}"))?;
        }
        Ok(())
    }
}

fn write_shims(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let write = |name: &str, body: String| -> Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, body)?;
        std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755))?;
        Ok(())
    };
    for name in STUBBED {
        write(
            name,
            format!(
                "#!/bin/sh\necho \"[sandbox] package manager call skipped: {name} $*\"\nexit 0\n"
            ),
        )?;
    }
    for name in REFUSED {
        write(
            name,
            format!(
                "#!/bin/sh\necho \"[sandbox] network access is disabled: {name} $*\" >&2\nexit 1\n"
            ),
        )?;
    }
    write("sudo", "#!/bin/sh\nexec \"$@\"\n".into())?;
    write(
        "git",
        "#!/bin/sh\ncase \"$1\" in\n  clone|fetch|pull|ls-remote)\n    echo \"[sandbox] network access is disabled: git $*\" >&2\n    exit 1;;\n  submodule)\n    case \"$2\" in update|sync) echo \"[sandbox] network access is disabled: git $*\" >&2; exit 1;; esac;;\nesac\nfor d in /usr/bin /bin /usr/local/bin; do\n  [ -x \"$d/git\" ] && exec \"$d/git\" \"$@\"\ndone\necho \"git: not found\" >&2\nexit 127\n"
            .into(),
    )?;
    Ok(())
}

impl Backend for LocalSandbox {
    fn name(&self) -> &'static str {
        "local-sandbox"
    }

    fn execute(
        &self,
        solution: &BuildSolution,
        context_dir: &Path,
        timeout: Duration,
    ) -> Result<LogCapture> {
        if timeout.is_zero() {
            return Err(Error::InvalidInput(
                "execution timeout must be positive".into(),
            ));
        }
        let start = Instant::now();
        let deadline = start + timeout;
        let scratch = tempfile::Builder::new()
            .prefix("buildsmith-sandbox-")
            .tempdir()?;
        let base = scratch.path().to_path_buf();
        let mut run = Run {
            context: context_dir,
            rootfs: base.join("root"),
            shims: base.join("shims"),
            home: base.join("home"),
            tmp: base.join("tmp"),
            workdir: "/".into(),
            env: BTreeMap::new(),
            tops: Vec::new(),
            lines: Vec::new(),
        };
        for d in [&run.rootfs, &run.home, &run.tmp] {
            std::fs::create_dir_all(d)?;
        }
        write_shims(&run.shims)?;
        run.lines.push(format!(
            "[sandbox] isolation: {}",
            match isolation() {
                Isolation::Full => "no network, read-only host filesystem",
                Isolation::Network => "no network",
                Isolation::None => "none (proxy variables and command shims only)",
            }
        ));

        let instructions = parse_instructions(&solution.dockerfile_text);
        let total = instructions.len();
        let mut status = BuildStatus::Ok;
        for (n, inst) in instructions.iter().enumerate() {
            if Instant::now() >= deadline {
                status = BuildStatus::Timeout;
                break;
            }
            run.lines.push(format!(
                "Step {}/{} : {} {}",
                n + 1,
                total,
                inst.keyword,
                inst.args
            ));
            let outcome: std::result::Result<(), String> = match inst.keyword.as_str() {
                "FROM" => {
                    run.lines
                        .push(" ---> base image is not pulled by the local sandbox".into());
                    Ok(())
                }
                "ARG" => {
                    let arg = expand_vars(&inst.args, &run.env);
                    if let Some((k, v)) = arg.split_once('=') {
                        run.env
                            .entry(k.trim().to_string())
                            .or_insert_with(|| v.trim().to_string());
                    }
                    Ok(())
                }
                "ENV" => {
                    for (k, v) in parse_env(&inst.args) {
                        let v = expand_vars(&v, &run.env);
                        run.env.insert(k, v);
                    }
                    Ok(())
                }
                "WORKDIR" => {
                    let path = expand_vars(inst.args.trim(), &run.env);
                    run.workdir = normalize_virtual(&run.workdir, &path);
                    let workdir = run.workdir.clone();
                    run.note_top(&workdir);
                    std::fs::create_dir_all(run.host(&workdir)).map_err(|e| e.to_string())
                }
                "COPY" | "ADD" => run.copy(inst),
                "RUN" => match run.run_shell(&run_command(&inst.args), deadline)? {
                    StepEnd::Done => Ok(()),
                    StepEnd::Failed => Err(String::new()),
                    StepEnd::TimedOut => {
                        status = BuildStatus::Timeout;
                        break;
                    }
                },
                other => {
                    run.lines
                        .push(format!(" ---> {other} has no effect in the local sandbox"));
                    Ok(())
                }
            };
            if let Err(msg) = outcome {
                if !msg.is_empty() {
                    run.lines.push(msg);
                }
                status = BuildStatus::Error;
                break;
            }
        }
        if status == BuildStatus::Timeout {
            run.lines
                .push(format!("build timed out after {} s", timeout.as_secs_f64()));
        } else if status == BuildStatus::Ok {
            run.lines.push("Successfully built (local sandbox)".into());
        }
        let mut duration = start.elapsed();
        if status == BuildStatus::Timeout && duration < timeout {
            duration = timeout;
        }
        if self.keep_scratch {
            let kept = scratch.keep();
            debug!(path = %kept.display(), "kept sandbox scratch directory");
        }
        Ok(LogCapture::new(run.lines, status, duration.as_secs_f64()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn solution(text: &str) -> BuildSolution {
        BuildSolution::new(text.to_string(), 0, String::new()).unwrap()
    }

    fn exec(text: &str, ctx: &Path, secs: f64) -> LogCapture {
        LocalSandbox::new()
            .execute(&solution(text), ctx, Duration::from_secs_f64(secs))
            .unwrap()
    }

    #[test]
    fn exit_one_is_error() {
        let ctx = tempfile::tempdir().unwrap();
        let logs = exec(
            "FROM ubuntu:22.04\nRUN echo hi && exit 1\n",
            ctx.path(),
            30.0,
        );
        assert_eq!(logs.exit_status, BuildStatus::Error);
        assert!(logs.lines.iter().any(|l| l == "hi"));
    }

    #[test]
    fn sleeping_command_times_out() {
        let ctx = tempfile::tempdir().unwrap();
        let start = Instant::now();
        let logs = exec("FROM ubuntu:22.04\nRUN sleep 30\n", ctx.path(), 1.0);
        assert_eq!(logs.exit_status, BuildStatus::Timeout);
        assert!(logs.duration >= 1.0);
        assert!(start.elapsed() < Duration::from_secs(10));
    }

    #[test]
    fn copy_workdir_and_absolute_paths_stay_in_scratch() {
        let ctx = tempfile::tempdir().unwrap();
        std::fs::write(ctx.path().join("hello.txt"), "hello\n").unwrap();
        let logs = exec(
            "FROM ubuntu:22.04\nCOPY . /src\nWORKDIR /src\nRUN cat hello.txt && cp /src/hello.txt /src/copy.txt && cat /src/copy.txt\n",
            ctx.path(),
            30.0,
        );
        assert_eq!(logs.exit_status, BuildStatus::Ok, "{:?}", logs.lines);
        assert_eq!(logs.lines.iter().filter(|l| *l == "hello").count(), 2);
        assert!(!Path::new("/src/copy.txt").exists());
        assert!(!ctx.path().join("copy.txt").exists());
    }

    #[test]
    fn relative_writes_in_workdir_succeed() {
        let ctx = tempfile::tempdir().unwrap();
        let logs = exec("FROM ubuntu:22.04\nCOPY . /src\nWORKDIR /src\nRUN mkdir -p build && cd build && touch out && ls\n", ctx.path(), 30.0);
        assert_eq!(logs.exit_status, BuildStatus::Ok, "{:?}", logs.lines);
        assert!(logs.lines.iter().any(|l| l == "out"));
    }

    #[test]
    fn package_managers_are_stubbed_and_network_refused() {
        let ctx = tempfile::tempdir().unwrap();
        let logs = exec(
            "FROM ubuntu:22.04\nRUN apt-get update && apt-get install -y cmake\n",
            ctx.path(),
            30.0,
        );
        assert_eq!(logs.exit_status, BuildStatus::Ok, "{:?}", logs.lines);
        assert!(logs
            .lines
            .iter()
            .any(|l| l.contains("package manager call skipped")));
        let logs = exec(
            "FROM ubuntu:22.04\nRUN curl -fsSL http://example.com/x.tar.gz\n",
            ctx.path(),
            30.0,
        );
        assert_eq!(logs.exit_status, BuildStatus::Error);
        let logs = exec(
            "FROM ubuntu:22.04\nADD http://example.com/x.tar.gz /src/\n",
            ctx.path(),
            30.0,
        );
        assert_eq!(logs.exit_status, BuildStatus::Error);
    }

    #[test]
    fn env_and_arg_reach_commands() {
        let ctx = tempfile::tempdir().unwrap();
        let logs = exec(
            "FROM ubuntu:22.04\nARG JOBS=3\nENV GREETING=\"hi there\" OTHER=x\nRUN echo \"$GREETING $JOBS\"\n",
            ctx.path(),
            30.0,
        );
        assert!(
            logs.lines.iter().any(|l| l == "hi there 3"),
            "{:?}",
            logs.lines
        );
    }

    #[test]
    fn missing_copy_source_is_error() {
        let ctx = tempfile::tempdir().unwrap();
        let logs = exec("FROM ubuntu:22.04\nCOPY nope /src/\n", ctx.path(), 30.0);
        assert_eq!(logs.exit_status, BuildStatus::Error);
    }

    #[test]
    fn host_filesystem_is_read_only_when_isolated() {
        if isolation() != Isolation::Full {
            eprintln!("mount namespaces unavailable; skipping");
            return;
        }
        let ctx = tempfile::tempdir().unwrap();
        let outside = tempfile::tempdir().unwrap();
        let target = outside.path().join("escape");
        let logs = exec(
            &format!("FROM ubuntu:22.04\nRUN touch {}\n", target.display()),
            ctx.path(),
            30.0,
        );
        assert_eq!(logs.exit_status, BuildStatus::Error, "{:?}", logs.lines);
        assert!(!target.exists());
    }

    proptest! {
        #[test]
        fn virtual_paths_never_leave_root(cwd in "(/[a-z.]{1,3}){0,4}", p in "(\\.\\./|[a-z]{1,3}/|/){0,8}[a-z]{0,3}") {
            let v = normalize_virtual(&cwd, &p);
            prop_assert!(v.starts_with('/'));
            prop_assert!(!v.split('/').any(|c| c == ".." || c == "."));
            let root = Path::new("/scratch/root");
            let host = root.join(v.trim_start_matches('/'));
            prop_assert!(host.starts_with(root));
        }
    }
}
