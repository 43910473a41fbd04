use serde::{Deserialize, Serialize};

use crate::catalog::Catalog;
use crate::error::{Error, Result};

/// One logical Dockerfile instruction with continuation lines joined.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instruction {
    /// Upper-cased keyword (`FROM`, `RUN`, ...).
    pub keyword: String,
    pub args: String,
    /// 1-based line where the instruction starts.
    pub line: usize,
}

fn is_comment(line: &str) -> bool {
    line.trim_start().starts_with('#')
}

fn continues(line: &str) -> bool {
    line.trim_end().ends_with('\\')
}

/// Splits Dockerfile text into instructions. Comment lines are dropped, also
/// inside continued instructions, as Docker does.
pub fn parse_instructions(text: &str) -> Vec<Instruction> {
    let mut out = Vec::new();
    let mut pending: Option<(usize, String)> = None;
    for (idx, raw) in text.lines().enumerate() {
        if is_comment(raw) || (pending.is_none() && raw.trim().is_empty()) {
            continue;
        }
        let (piece, more) = if continues(raw) {
            let t = raw.trim_end();
            (&t[..t.len() - 1], true)
        } else {
            (raw, false)
        };
        match &mut pending {
            Some((_, acc)) => {
                acc.push(' ');
                acc.push_str(piece.trim());
            }
            None => pending = Some((idx + 1, piece.trim().to_string())),
        }
        if !more {
            if let Some((line, acc)) = pending.take() {
                push_instruction(&mut out, line, &acc);
            }
        }
    }
    if let Some((line, acc)) = pending {
        push_instruction(&mut out, line, &acc);
    }
    out
}

fn push_instruction(out: &mut Vec<Instruction>, line: usize, text: &str) {
    let text = text.trim();
    if text.is_empty() {
        return;
    }
    let (kw, args) = text.split_once(char::is_whitespace).unwrap_or((text, ""));
    out.push(Instruction {
        keyword: kw.to_ascii_uppercase(),
        args: args.trim().to_string(),
        line,
    });
}

/// Image named by the first `FROM`, without `--platform` flags or `AS` alias.
pub fn base_image(text: &str) -> Option<String> {
    parse_instructions(text)
        .into_iter()
        .find(|i| i.keyword == "FROM")
        .and_then(|i| {
            i.args
                .split_whitespace()
                .find(|w| !w.starts_with("--"))
                .map(str::to_string)
        })
}

fn first_directive(text: &str) -> Option<&str> {
    text.lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'))
}

fn is_from_line(line: &str) -> bool {
    let mut words = line.split_whitespace();
    words.next().is_some_and(|w| w.eq_ignore_ascii_case("FROM")) && words.next().is_some()
}

struct Fence<'a> {
    label: String,
    body: &'a str,
}

/// Fenced blocks. The body is the text between the line after the opening
/// fence and the newline before the closing fence.
fn fences(text: &str) -> Vec<Fence<'_>> {
    let mut out = Vec::new();
    let mut offset = 0;
    let mut open: Option<(String, usize)> = None;
    for line in text.split_inclusive('\n') {
        let start = offset;
        offset += line.len();
        let trimmed = line.trim();
        match &open {
            None => {
                if let Some(info) = trimmed.strip_prefix("```") {
                    open = Some((info.trim().to_ascii_lowercase(), offset));
                }
            }
            Some((label, body_start)) => {
                if trimmed == "```" {
                    let end = start.saturating_sub(1).max(*body_start);
                    let body = if start > *body_start {
                        &text[*body_start..end]
                    } else {
                        ""
                    };
                    out.push(Fence {
                        label: label.clone(),
                        body,
                    });
                    open = None;
                }
            }
        }
    }
    out
}

/// Pulls the Dockerfile out of an LLM reply.
///
/// Order of preference: the first fenced block labelled as a Dockerfile, then
/// the longest fenced block whose first directive is `FROM`, then the whole
/// reply if it starts with `FROM`.
pub fn extract_dockerfile(response: &str) -> Result<String> {
    let blocks = fences(response);
    if let Some(b) = blocks
        .iter()
        .find(|b| matches!(b.label.as_str(), "dockerfile" | "docker" | "containerfile"))
    {
        if !b.body.trim().is_empty() {
            return Ok(b.body.to_string());
        }
    }
    if let Some(b) = blocks
        .iter()
        .filter(|b| first_directive(b.body).is_some_and(is_from_line))
        .max_by_key(|b| b.body.len())
    {
        return Ok(b.body.to_string());
    }
    if first_directive(response).is_some_and(is_from_line) && !response.contains("```") {
        return Ok(response.to_string());
    }
    Err(Error::NoDockerfileInResponse)
}

/// Prose around the fenced blocks, for the solution's rationale.
pub(crate) fn prose_outside_fences(response: &str, limit: usize) -> String {
    let mut out = String::new();
    let mut inside = false;
    for line in response.lines() {
        if line.trim_start().starts_with("```") {
            inside = !inside;
            continue;
        }
        if !inside {
            out.push_str(line);
            out.push('\n');
        }
    }
    let out = out.trim();
    match out.char_indices().nth(limit) {
        Some((i, _)) => format!("{}...", &out[..i]),
        None => out.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LintIssue {
    pub severity: Severity,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LintReport {
    pub issues: Vec<LintIssue>,
}

pub const MISSING_BASE_IMAGE: &str = "missing base image";
pub const NO_RUN_INSTRUCTION: &str = "no RUN instruction";
pub const NO_BUILD_INSTRUCTION: &str = "no build instruction";

impl LintReport {
    pub fn is_clean(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn has_errors(&self) -> bool {
        self.issues.iter().any(|i| i.severity == Severity::Error)
    }

    pub fn has_build_instruction(&self) -> bool {
        !self
            .issues
            .iter()
            .any(|i| i.message == NO_BUILD_INSTRUCTION)
    }

    fn push(&mut self, severity: Severity, message: impl Into<String>) {
        self.issues.push(LintIssue {
            severity,
            message: message.into(),
        });
    }

    pub fn render(&self) -> String {
        self.issues
            .iter()
            .map(|i| {
                let sev = match i.severity {
                    Severity::Error => "error",
                    Severity::Warning => "warning",
                };
                format!("- {sev}: {}", i.message)
            })
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// Structural checks on Dockerfile text. Pure.
pub fn lint_dockerfile(text: &str, catalog: &Catalog) -> LintReport {
    let mut report = LintReport::default();
    let instructions = parse_instructions(text);

    let first_real = instructions.iter().find(|i| i.keyword != "ARG");
    if !first_real.is_some_and(|i| i.keyword == "FROM" && !i.args.is_empty()) {
        report.push(Severity::Error, MISSING_BASE_IMAGE);
    }
    let runs: Vec<&Instruction> = instructions.iter().filter(|i| i.keyword == "RUN").collect();
    if runs.is_empty() {
        report.push(Severity::Error, NO_RUN_INSTRUCTION);
    }
    if !runs
        .iter()
        .any(|r| catalog.is_build_command(&run_command(&r.args)))
    {
        report.push(Severity::Warning, NO_BUILD_INSTRUCTION);
    }

    let mut continuing = false;
    for (idx, line) in text.lines().enumerate() {
        if is_comment(line) {
            if continues(line) {
                report.push(
                    Severity::Warning,
                    format!("line {}: comment ends with a line continuation", idx + 1),
                );
            }
            if continuing {
                report.push(
                    Severity::Warning,
                    format!("line {}: comment inside a continued instruction", idx + 1),
                );
            }
            continue;
        }
        continuing = continues(line);
    }
    report
}

/// Shell text of a `RUN` argument; exec-form JSON arrays are joined.
pub fn run_command(args: &str) -> String {
    let trimmed = args.trim();
    if trimmed.starts_with('[') {
        if let Ok(parts) = serde_json::from_str::<Vec<String>>(trimmed) {
            if parts.len() >= 3
                && matches!(parts[0].as_str(), "/bin/sh" | "sh" | "/bin/bash" | "bash")
                && parts[1] == "-c"
            {
                return parts[2..].join(" ");
            }
            return parts.join(" ");
        }
    }
    // Drop BuildKit flags such as --mount=...
    let mut rest = trimmed;
    while rest.starts_with("--") {
        rest = rest
            .split_once(char::is_whitespace)
            .map_or("", |(_, r)| r)
            .trim_start();
    }
    rest.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_fenced_block() {
        let r = "Here you go:\n```dockerfile\nFROM ubuntu:22.04\nRUN make\n```\n";
        assert_eq!(
            extract_dockerfile(r).unwrap(),
            "FROM ubuntu:22.04\nRUN make"
        );
    }

    #[test]
    fn second_block_chosen_by_base_image_rule() {
        let r = "First install deps:\n```bash\napt-get install -y cmake\n```\nThen use:\n```\n# build image\nFROM ubuntu:20.04\nRUN cmake --build .\n```\n";
        assert_eq!(
            extract_dockerfile(r).unwrap(),
            "# build image\nFROM ubuntu:20.04\nRUN cmake --build ."
        );
    }

    #[test]
    fn prose_only_is_rejected() {
        let err = extract_dockerfile("I think you should install libpng.").unwrap_err();
        assert_eq!(err.code(), "no-dockerfile-in-response");
    }

    #[test]
    fn bare_dockerfile_accepted() {
        let r = "FROM alpine:3.19\nRUN make\n";
        assert_eq!(extract_dockerfile(r).unwrap(), r);
    }

    #[test]
    fn instructions_join_continuations_and_drop_comments() {
        let text = "# syntax=docker/dockerfile:1\nFROM ubuntu:22.04 AS build\nRUN apt-get update && \\\n    # inline note\n    apt-get install -y cmake\nWORKDIR /src\n";
        let ins = parse_instructions(text);
        assert_eq!(ins.len(), 3);
        assert_eq!(ins[1].keyword, "RUN");
        assert_eq!(ins[1].args, "apt-get update && apt-get install -y cmake");
        assert_eq!(ins[1].line, 3);
        assert_eq!(base_image(text).as_deref(), Some("ubuntu:22.04"));
        assert_eq!(
            base_image("FROM --platform=linux/amd64 debian:12\n").as_deref(),
            Some("debian:12")
        );
    }

    #[test]
    fn lint_missing_base_image() {
        let r = lint_dockerfile("RUN make\n", &Catalog::builtin());
        assert!(r.issues.contains(&LintIssue {
            severity: Severity::Error,
            message: MISSING_BASE_IMAGE.into()
        }));
    }

    #[test]
    fn lint_no_build_instruction() {
        let r = lint_dockerfile(
            "FROM ubuntu:22.04\nRUN apt-get update && apt-get install -y build-essential make cmake\nCOPY . /src\n",
            &Catalog::builtin(),
        );
        assert_eq!(
            r.issues,
            vec![LintIssue {
                severity: Severity::Warning,
                message: NO_BUILD_INSTRUCTION.into()
            }]
        );
        assert!(!r.has_build_instruction());
        assert!(!r.has_errors());
    }

    #[test]
    fn lint_clean() {
        let r = lint_dockerfile(
            "FROM ubuntu:22.04\nCOPY . /src\nWORKDIR /src\nRUN ./configure && make\n",
            &Catalog::builtin(),
        );
        assert!(r.is_clean(), "{r:?}");
    }

    #[test]
    fn lint_comment_hazards() {
        let r = lint_dockerfile(
            "FROM ubuntu:22.04\n# install \\\nRUN apt-get update && \\\n# oops\n    make\n",
            &Catalog::builtin(),
        );
        let msgs: Vec<_> = r.issues.iter().map(|i| i.message.as_str()).collect();
        assert!(msgs
            .iter()
            .any(|m| m.contains("line 2") && m.contains("continuation")));
        assert!(msgs
            .iter()
            .any(|m| m.contains("line 4") && m.contains("inside")));
    }

    #[test]
    fn exec_form_run() {
        assert_eq!(run_command(r#"["/bin/sh", "-c", "make -j4"]"#), "make -j4");
        assert_eq!(run_command(r#"["make", "all"]"#), "make all");
        assert_eq!(
            run_command("--mount=type=cache,target=/root/.cache make"),
            "make"
        );
    }

    proptest! {
        #[test]
        fn fence_round_trip(
            image in "[a-z]{1,10}:[0-9]{1,2}\\.[0-9]{1,2}",
            body in proptest::collection::vec("[A-Za-z0-9 ./&=_-]{0,40}", 0..8),
            trailing_newline in any::<bool>(),
        ) {
            let mut x = format!("FROM {image}");
            for l in &body {
                x.push('\n');
                x.push_str(l);
            }
            if trailing_newline {
                x.push('\n');
            }
            let wrapped = format!("Some prose.\n```dockerfile\n{x}\n```\nMore prose.");
            prop_assert_eq!(extract_dockerfile(&wrapped).unwrap(), x);
        }

        #[test]
        fn lint_is_pure(text in "[ -~\n]{0,300}") {
            let cat = Catalog::builtin();
            prop_assert_eq!(lint_dockerfile(&text, &cat), lint_dockerfile(&text, &cat));
        }
    }
}
