//! Aggregation over session reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use buildsmith_core::llm::{Cost, TokenUsage};
use buildsmith_core::{Result, RunOutcome, SessionReport};
use serde::{Deserialize, Serialize};
use tracing::warn;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub reports: usize,
    pub successes: usize,
    /// Fraction in `[0, 1]`; zero when there are no reports.
    pub success_rate: f64,
    pub attempts: usize,
    pub usage: TokenUsage,
    pub total_cost: Cost,
    /// Total cost of every run divided by the number of successes.
    pub cost_per_success: Option<Cost>,
    /// Seconds.
    pub mean_duration: f64,
    pub outcomes: BTreeMap<String, usize>,
    pub taxonomy: BTreeMap<String, usize>,
    pub projects: Vec<ProjectRow>,
    pub skipped: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectRow {
    pub project: String,
    pub outcome: RunOutcome,
    pub attempts: usize,
    pub cost: Cost,
    pub duration: f64,
}

fn outcome_key(o: RunOutcome) -> String {
    serde_json::to_value(o)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

pub fn aggregate(reports: &[SessionReport]) -> Aggregate {
    let mut agg = Aggregate {
        reports: reports.len(),
        ..Aggregate::default()
    };
    for r in reports {
        if r.outcome == RunOutcome::Success {
            agg.successes += 1;
        }
        agg.attempts += r.attempts.len();
        agg.usage += r.usage;
        agg.total_cost = agg.total_cost + r.cost;
        agg.mean_duration += r.duration;
        *agg.outcomes.entry(outcome_key(r.outcome)).or_default() += 1;
        for a in &r.attempts {
            if let Some(t) = a.taxonomy {
                *agg.taxonomy.entry(t.to_string()).or_default() += 1;
            }
        }
        agg.projects.push(ProjectRow {
            project: r.project.clone(),
            outcome: r.outcome,
            attempts: r.attempts.len(),
            cost: r.cost,
            duration: r.duration,
        });
    }
    if !reports.is_empty() {
        agg.success_rate = agg.successes as f64 / reports.len() as f64;
        agg.mean_duration /= reports.len() as f64;
    }
    if agg.successes > 0 {
        let per = (agg.total_cost.cents as f64 / agg.successes as f64).round() as u64;
        agg.cost_per_success = Some(Cost::from_cents(per));
    }
    agg
}

/// `report.json` files at `dir`, or one level below it (an artifact dir
/// holding one sub-directory per project).
fn report_files(dir: &Path) -> Vec<PathBuf> {
    let direct = dir.join("report.json");
    if direct.is_file() {
        return vec![direct];
    }
    let mut found: Vec<PathBuf> = std::fs::read_dir(dir)
        .into_iter()
        .flatten()
        .flatten()
        .map(|e| e.path().join("report.json"))
        .filter(|p| p.is_file())
        .collect();
    found.sort();
    found
}

/// Reads every report under `dirs`. Unreadable or corrupt reports are
/// skipped with a warning and listed in the second return value.
pub fn load_reports(dirs: &[PathBuf]) -> (Vec<SessionReport>, Vec<String>) {
    let mut reports = Vec::new();
    let mut skipped = Vec::new();
    for dir in dirs {
        let files = report_files(dir);
        if files.is_empty() {
            warn!(dir = %dir.display(), "no reports found");
            skipped.push(format!("{}: no report.json found", dir.display()));
        }
        for file in files {
            let parsed = std::fs::read_to_string(&file)
                .map_err(|e| e.to_string())
                .and_then(|t| serde_json::from_str::<SessionReport>(&t).map_err(|e| e.to_string()));
            match parsed {
                Ok(r) => reports.push(r),
                Err(e) => {
                    warn!(file = %file.display(), error = %e, "skipping unreadable report");
                    skipped.push(format!("{}: {e}", file.display()));
                }
            }
        }
    }
    (reports, skipped)
}

pub fn render_table(agg: &Aggregate) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<32} {:<24} {:>8} {:>10} {:>10}",
        "project", "outcome", "attempts", "cost", "seconds"
    );
    for p in &agg.projects {
        let _ = writeln!(
            out,
            "{:<32} {:<24} {:>8} {:>10} {:>10.1}",
            p.project,
            outcome_key(p.outcome),
            p.attempts,
            p.cost.to_string(),
            p.duration
        );
    }
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "reports: {}  successes: {}  success rate: {:.2}%",
        agg.reports,
        agg.successes,
        agg.success_rate * 100.0
    );
    let _ = writeln!(
        out,
        "attempts: {}  tokens: {} in / {} out  total cost: {}  cost per success: {}",
        agg.attempts,
        agg.usage.input_tokens,
        agg.usage.output_tokens,
        agg.total_cost,
        agg.cost_per_success
            .map_or("-".to_string(), |c| c.to_string())
    );
    let _ = writeln!(out, "mean duration: {:.1} s", agg.mean_duration);
    if !agg.taxonomy.is_empty() {
        let _ = writeln!(out, "failure taxonomy:");
        for (label, n) in &agg.taxonomy {
            let _ = writeln!(out, "  {label}: {n}");
        }
    }
    out
}

pub fn write_aggregate(agg: &Aggregate, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    let mut json = serde_json::to_string_pretty(agg)?;
    json.push('\n');
    std::fs::write(path, json)?;
    Ok(())
}
