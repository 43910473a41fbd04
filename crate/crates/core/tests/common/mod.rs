#![allow(dead_code)]

use std::collections::VecDeque;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use buildsmith_core::catalog::BuildSystem;
use buildsmith_core::error::Result;
use buildsmith_core::executor::{Backend, BuildStatus, LogCapture};
use buildsmith_core::generator::BuildSolution;
use buildsmith_core::llm::{Gateway, RetryPolicy, ScriptedTransport};
use buildsmith_core::parser::{
    BuildSystemGuess, DocDigest, EnvironmentInfo, HostProbe, ProjectContext,
};

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures/repos")
        .join(name)
}

pub fn scripted<I, S>(replies: I) -> (Gateway, Arc<ScriptedTransport>)
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let t = Arc::new(ScriptedTransport::new(replies));
    (
        Gateway::new(t.clone(), "test-model").with_retry(RetryPolicy::immediate()),
        t,
    )
}

/// Host probe with fixed answers so parsed contexts are reproducible.
pub struct FixedProbe;

impl HostProbe for FixedProbe {
    fn run(&self, program: &str, _args: &[&str]) -> Option<String> {
        match program {
            "uname" => Some("Linux buildhost 5.15.0-76-generic x86_64 GNU/Linux\n".into()),
            "lscpu" => {
                Some("Architecture: x86_64\nCPU(s): 8\nModel name: Intel(R) Xeon(R)\n".into())
            }
            _ => None,
        }
    }

    fn read_file(&self, path: &str) -> Option<String> {
        (path == "/etc/os-release").then(|| "NAME=\"Ubuntu\"\nVERSION_ID=\"22.04\"\n".to_string())
    }

    fn path_exists(&self, _path: &str) -> bool {
        false
    }
}

/// Backend that replays canned outcomes in order, optionally sleeping first.
pub struct ScriptedBackend {
    outcomes: Mutex<VecDeque<LogCapture>>,
    pub executed: Mutex<Vec<BuildSolution>>,
    pub delay: Duration,
}

impl ScriptedBackend {
    pub fn new(outcomes: impl IntoIterator<Item = LogCapture>) -> Self {
        Self {
            outcomes: Mutex::new(outcomes.into_iter().collect()),
            executed: Mutex::default(),
            delay: Duration::ZERO,
        }
    }

    pub fn executions(&self) -> usize {
        self.executed.lock().unwrap().len()
    }
}

impl Backend for ScriptedBackend {
    fn name(&self) -> &'static str {
        "scripted"
    }

    fn execute(
        &self,
        solution: &BuildSolution,
        _context_dir: &Path,
        timeout: Duration,
    ) -> Result<LogCapture> {
        self.executed.lock().unwrap().push(solution.clone());
        if !self.delay.is_zero() {
            let slept = self.delay.min(timeout);
            std::thread::sleep(slept);
            if slept < self.delay {
                return Ok(LogCapture::new(
                    vec!["killed after timeout".into()],
                    BuildStatus::Timeout,
                    slept.as_secs_f64(),
                ));
            }
        }
        Ok(self
            .outcomes
            .lock()
            .unwrap()
            .pop_front()
            .unwrap_or_else(|| error_log("no more scripted outcomes")))
    }
}

pub fn error_log(msg: &str) -> LogCapture {
    LogCapture::new(
        vec![
            "Step 5/5 : RUN make".into(),
            format!("/src/main.c:3:10: fatal error: {msg}"),
            "The command '/bin/sh -c make' returned a non-zero code: 2".into(),
        ],
        BuildStatus::Error,
        0.5,
    )
}

pub fn progress_log() -> LogCapture {
    LogCapture::new(
        vec![
            "-- Performing Test C_FLAG_WALL - Success".into(),
            "[  3%] Building CXX object CMakeFiles/app.dir/main.cpp.o".into(),
            "[100%] Built target app".into(),
        ],
        BuildStatus::Ok,
        0.5,
    )
}

pub fn fenced(dockerfile: &str) -> String {
    format!("Here is the Dockerfile.\n\n```dockerfile\n{dockerfile}```\n")
}

pub const JUDGE_OK: &str = r#"{"static_ok": true, "dynamic_ok": true, "judgment": "The Dockerfile runs make and the log shows compile progress for the default target."}"#;
pub const REFLECT_OK: &str = r#"{"adheres": true, "explanation": "Both criteria were checked."}"#;

pub fn sample_context(docs: Vec<DocDigest>) -> ProjectContext {
    ProjectContext {
        project_name: "demo".into(),
        environment: EnvironmentInfo::unknown(),
        dependencies: Vec::new(),
        guess: BuildSystemGuess {
            system: BuildSystem::new("CMake"),
            entry_file: "CMakeLists.txt".into(),
            rationale: "only CMake entry files present".into(),
            alternates: Vec::new(),
        },
        docs,
        warnings: Vec::new(),
    }
}
