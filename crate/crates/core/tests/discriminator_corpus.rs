use std::path::Path;
use std::sync::Arc;

use buildsmith_core::catalog::Catalog;
use buildsmith_core::executor::{judge, BuildStatus, LogCapture, Outcome, DISCRIMINATOR_MALFORMED};
use buildsmith_core::generator::TemplateSet;
use buildsmith_core::llm::{Gateway, RetryPolicy, ScriptedTransport};
use serde::Deserialize;

#[derive(Deserialize)]
struct Corpus {
    cases: Vec<Case>,
}

#[derive(Deserialize)]
struct Case {
    id: String,
    label: Outcome,
    exit_status: BuildStatus,
    dockerfile: String,
    log: Vec<String>,
    replies: Vec<String>,
    judgment: Option<String>,
}

fn corpus() -> Vec<Case> {
    let path =
        Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/discriminator/corpus.json");
    serde_json::from_str::<Corpus>(&std::fs::read_to_string(path).unwrap())
        .unwrap()
        .cases
}

const COMPONENTS: &str = "the default target of CMakeLists.txt (CMake)";

#[test]
fn corpus_shape() {
    let cases = corpus();
    assert!(cases.len() >= 20);
    let successes = cases
        .iter()
        .filter(|c| {
            c.label == Outcome::Success && c.log.iter().any(|l| l.contains("Building CXX object"))
        })
        .count();
    assert!(successes >= 5);
    let non_error = cases
        .iter()
        .filter(|c| {
            c.label == Outcome::Failure
                && c.exit_status == BuildStatus::Ok
                && c.id.starts_with("nonerror")
        })
        .count();
    assert!(non_error >= 5);
    assert!(cases
        .iter()
        .any(|c| c.id == "reflection-rejects-seeded-judgment"));
}

#[test]
fn judge_agrees_with_every_label() {
    let catalog = Catalog::builtin();
    let templates = TemplateSet::builtin();
    let mut disagreements = Vec::new();
    for case in corpus() {
        let transport = Arc::new(ScriptedTransport::new(case.replies.clone()));
        let gw = Gateway::new(transport.clone(), "m").with_retry(RetryPolicy::immediate());
        let logs = LogCapture::new(case.log.clone(), case.exit_status, 1.0);
        let verdict = judge(
            &gw,
            100_000,
            &case.dockerfile,
            &logs,
            COMPONENTS,
            &catalog,
            &templates,
        )
        .unwrap();
        if verdict.outcome != case.label {
            disagreements.push(format!(
                "{}: expected {:?}, got {:?} ({})",
                case.id, case.label, verdict.outcome, verdict.judgment
            ));
        }
        assert_eq!(
            transport.remaining(),
            0,
            "{}: unused scripted replies",
            case.id
        );
        if let Some(j) = &case.judgment {
            assert_eq!(&verdict.judgment, j, "{}", case.id);
        }
        if case.exit_status != BuildStatus::Ok {
            assert!(
                transport.requests().is_empty(),
                "{}: error exits must not consult the LLM",
                case.id
            );
            assert!(verdict.taxonomy.is_some());
        }
    }
    assert!(disagreements.is_empty(), "{disagreements:#?}");
}

#[test]
fn reflection_forces_failure_on_seeded_judgment() {
    let case = corpus()
        .into_iter()
        .find(|c| c.id == "reflection-rejects-seeded-judgment")
        .unwrap();
    let gw = Gateway::new(Arc::new(ScriptedTransport::new(case.replies.clone())), "m")
        .with_retry(RetryPolicy::immediate());
    let logs = LogCapture::new(case.log, case.exit_status, 1.0);
    let v = judge(
        &gw,
        100_000,
        &case.dockerfile,
        &logs,
        COMPONENTS,
        &Catalog::builtin(),
        &TemplateSet::builtin(),
    )
    .unwrap();
    assert!(v.static_ok && v.dynamic_ok);
    assert!(!v.reflection_ok);
    assert_eq!(v.outcome, Outcome::Failure);
}

#[test]
fn lint_guard_overrides_a_lenient_static_claim() {
    let case = corpus()
        .into_iter()
        .find(|c| c.id == "nonerror-packages-only-fooled-judge")
        .unwrap();
    let transport = Arc::new(ScriptedTransport::new(case.replies.clone()));
    let gw = Gateway::new(transport.clone(), "m").with_retry(RetryPolicy::immediate());
    let logs = LogCapture::new(case.log, case.exit_status, 1.0);
    let v = judge(
        &gw,
        100_000,
        &case.dockerfile,
        &logs,
        COMPONENTS,
        &Catalog::builtin(),
        &TemplateSet::builtin(),
    )
    .unwrap();
    assert!(!v.static_ok);
    assert_eq!(
        transport.requests().len(),
        1,
        "reflection must be skipped once step one fails"
    );
    assert_ne!(v.judgment, DISCRIMINATOR_MALFORMED);
}
