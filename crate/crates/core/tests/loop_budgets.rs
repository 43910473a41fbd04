mod common;

use std::time::Duration;

use buildsmith_core::catalog::Catalog;
use buildsmith_core::executor::BuildStatus;
use buildsmith_core::generator::TemplateSet;
use buildsmith_core::orchestrator::{run_project, AgentConfig, RunEnv, RunOutcome};
use common::{
    error_log, fenced, fixture, progress_log, scripted, FixedProbe, ScriptedBackend, JUDGE_OK,
    REFLECT_OK,
};

const DOCKERFILE: &str = "FROM ubuntu:22.04\nRUN apt-get update && apt-get install -y build-essential cmake\nCOPY . /src\nWORKDIR /src\nRUN mkdir build && cd build && cmake .. && make\n";
const DOC_FILTER: &str = r#"["README.md"]"#;
const SUMMARY: &str = r#"{"summary": "CMake hello world.", "build_hints": ["mkdir build && cd build && cmake .. && make"]}"#;

/// LLM replies for a cmake_hello run in which the first `failures`
/// executions fail, under `max_steps`.
fn replies(failures: u32, max_steps: u32) -> Vec<String> {
    let mut r = vec![
        DOC_FILTER.to_string(),
        SUMMARY.to_string(),
        fenced(DOCKERFILE),
    ];
    let repairs = failures.min(max_steps);
    for i in 0..repairs {
        r.push(fenced(
            &DOCKERFILE.replace("make\n", &format!("make -j{}\n", i + 2)),
        ));
    }
    if failures <= max_steps {
        r.push(JUDGE_OK.into());
        r.push(REFLECT_OK.into());
    }
    r
}

fn run(
    max_steps: u32,
    failures: u32,
    wall_clock_limit: f64,
    delay: Duration,
) -> (buildsmith_core::SessionReport, usize, usize) {
    let tmp = tempfile::tempdir().unwrap();
    let config = AgentConfig {
        max_steps,
        wall_clock_limit,
        artifact_dir: tmp.path().to_path_buf(),
        ..AgentConfig::default()
    };
    let (gw, transport) = scripted(replies(failures, max_steps));
    let mut outcomes: Vec<_> = (0..failures)
        .map(|i| error_log(&format!("lib{i}.h: No such file or directory")))
        .collect();
    outcomes.push(progress_log());
    let mut backend = ScriptedBackend::new(outcomes);
    backend.delay = delay;
    let (catalog, templates) = (Catalog::builtin(), TemplateSet::builtin());
    let env = RunEnv {
        catalog: &catalog,
        templates: &templates,
        probe: &FixedProbe,
        backend: &backend,
    };
    let report = run_project(&fixture("cmake_hello"), "cmake_hello", &config, &gw, &env);
    (report, backend.executions(), transport.remaining())
}

#[test]
fn executions_follow_the_boundary_table() {
    for s in [0u32, 1, 5, 10] {
        for f in [0u32, 1, 2, 5, 9, 10, 11, 15] {
            let (report, executions, left) = run(s, f, 14_400.0, Duration::ZERO);
            let expected = (f.min(s) + 1) as usize;
            assert_eq!(executions, expected, "s={s} f={f}");
            assert_eq!(report.executions(), expected, "s={s} f={f}");
            assert_eq!(left, 0, "s={s} f={f}: unused replies");
            let outcome = if f <= s {
                RunOutcome::Success
            } else {
                RunOutcome::FailureStepsExhausted
            };
            assert_eq!(report.outcome, outcome, "s={s} f={f}");
            assert_eq!(
                report.final_dockerfile.is_some(),
                outcome == RunOutcome::Success
            );
            let revisions: Vec<u32> = report.attempts.iter().map(|a| a.revision).collect();
            assert_eq!(revisions, (0..expected as u32).collect::<Vec<_>>());
            if outcome == RunOutcome::Success {
                assert!(report.attempts.last().unwrap().verdict.is_success());
            }
        }
    }
}

#[test]
fn default_budget_success_after_one_repair() {
    let (report, executions, _) = run(10, 1, 14_400.0, Duration::ZERO);
    assert_eq!(report.outcome, RunOutcome::Success);
    assert_eq!(executions, 2);
    assert_eq!(report.attempts[0].exit_status, BuildStatus::Error);
    assert!(report.attempts[0].signature.is_some());
}

#[test]
fn one_second_wall_clock_yields_failure_timeout() {
    let (report, executions, _) = run(10, 0, 1.0, Duration::from_secs(3));
    assert_eq!(report.outcome, RunOutcome::FailureTimeout);
    assert_eq!(report.outcome.exit_code(), 1);
    assert_eq!(executions, 1);
    assert_eq!(report.attempts[0].exit_status, BuildStatus::Timeout);
}

#[test]
fn fatal_error_is_recorded() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = tempfile::tempdir().unwrap();
    let config = AgentConfig {
        artifact_dir: tmp.path().to_path_buf(),
        ..AgentConfig::default()
    };
    let (gw, _) = scripted(Vec::<String>::new());
    let backend = ScriptedBackend::new([]);
    let (catalog, templates) = (Catalog::builtin(), TemplateSet::builtin());
    let env = RunEnv {
        catalog: &catalog,
        templates: &templates,
        probe: &FixedProbe,
        backend: &backend,
    };
    let report = run_project(empty.path(), "empty", &config, &gw, &env);
    assert_eq!(report.outcome, RunOutcome::FailureFatal);
    assert_eq!(report.fatal_cause.as_ref().unwrap().code, "no-build-system");
    assert!(report.attempts.is_empty());
    assert!(tmp.path().join("empty/report.json").is_file());
}
