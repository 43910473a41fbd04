use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use buildsmith_core::baseline::{run_defaults, BaselineOutcome};
use buildsmith_core::executor::make_backend;
use buildsmith_core::llm::{ChatTransport, OpenAiTransport, RecordingTransport, ReplayTransport};
use buildsmith_core::parser::SystemProbe;
use buildsmith_core::{run_project, Backend, Catalog, Error, Gateway, Result, RunEnv, TemplateSet};
use tracing::{error, info};

use crate::args::{ReportArgs, RunArgs};
use crate::config::{Options, Settings, API_KEY_ENV};
use crate::report::{aggregate, load_reports, render_table, write_aggregate};
use crate::source::acquire;

pub const EXIT_SUCCESS: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_FATAL: i32 = 2;

fn settings(args: &RunArgs) -> Result<Settings> {
    let file = match &args.config {
        Some(path) => Options::load(path)?,
        None => Options::default(),
    };
    let settings = Settings::resolve(&args.options(), &file)?;
    if settings.sources.is_empty() {
        return Err(Error::Config("at least one --source is required".into()));
    }
    Ok(settings)
}

struct Shared {
    settings: Settings,
    catalog: Catalog,
    templates: TemplateSet,
    backend: Box<dyn Backend>,
}

fn shared(args: &RunArgs) -> Result<Shared> {
    let settings = settings(args)?;
    let catalog = match &settings.catalog {
        Some(p) => Catalog::load(p)?,
        None => Catalog::builtin(),
    };
    let templates = match &settings.templates {
        Some(p) => TemplateSet::with_overrides(p)?,
        None => TemplateSet::builtin(),
    };
    let backend = make_backend(
        settings.agent.backend,
        settings.docker_host.as_deref(),
        settings.agent.keep_images,
    )?;
    Ok(Shared {
        settings,
        catalog,
        templates,
        backend,
    })
}

/// Runs `job` over every source with at most `jobs` workers and returns the
/// worst exit code.
fn fan_out(sources: &[String], jobs: usize, job: impl Fn(&str) -> i32 + Sync) -> i32 {
    let next = AtomicUsize::new(0);
    let worst = Mutex::new(EXIT_SUCCESS);
    std::thread::scope(|scope| {
        for _ in 0..jobs.min(sources.len()).max(1) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(source) = sources.get(i) else { break };
                let code = job(source);
                let mut w = worst.lock().unwrap();
                *w = (*w).max(code);
            });
        }
    });
    worst.into_inner().unwrap()
}

fn transport(settings: &Settings, project: &str) -> Result<Arc<dyn ChatTransport>> {
    if let Some(path) = &settings.replay {
        return Ok(Arc::new(ReplayTransport::open(
            &settings.transcript_for(path, project),
        )?));
    }
    let key = std::env::var(API_KEY_ENV)
        .ok()
        .filter(|k| !k.trim().is_empty())
        .ok_or_else(|| {
            Error::Config(format!(
                "{API_KEY_ENV} is not set; it is required unless --replay is given"
            ))
        })?;
    let live: Arc<dyn ChatTransport> = Arc::new(OpenAiTransport::new(&settings.api_base, key));
    match &settings.transcript {
        Some(path) => {
            let file = settings.transcript_for(path, project);
            if let Some(parent) = file.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)?;
            }
            Ok(Arc::new(RecordingTransport::create(live, file)?))
        }
        None => Ok(live),
    }
}

fn fatal(source: &str, e: &Error) -> i32 {
    error!(source, error = %e, "fatal");
    eprintln!("{source}: {e}");
    EXIT_FATAL
}

pub fn build(args: &RunArgs) -> i32 {
    let shared = match shared(args) {
        Ok(s) => s,
        Err(e) => return fatal("config", &e),
    };
    let s = &shared.settings;
    fan_out(&s.sources, s.jobs, |source| {
        let checkout = match acquire(source, s.commit.as_deref()) {
            Ok(c) => c,
            Err(e) => return fatal(source, &e),
        };
        let gateway = match transport(s, &checkout.project) {
            Ok(t) => Gateway::new(t, s.agent.model.clone()),
            Err(e) => return fatal(source, &e),
        };
        let env = RunEnv {
            catalog: &shared.catalog,
            templates: &shared.templates,
            probe: &SystemProbe,
            backend: shared.backend.as_ref(),
        };
        let report = run_project(&checkout.root, &checkout.project, &s.agent, &gateway, &env);
        println!(
            "{}: {} after {} execution(s), cost {}, report {}",
            report.project,
            serde_json::to_value(report.outcome)
                .ok()
                .and_then(|v| v.as_str().map(str::to_string))
                .unwrap_or_default(),
            report.executions(),
            report.cost,
            s.agent
                .artifact_dir
                .join(&report.project)
                .join("report.json")
                .display()
        );
        if let Some(cause) = &report.fatal_cause {
            eprintln!("{}: {}", report.project, cause.message);
        }
        report.outcome.exit_code()
    })
}

pub fn baseline(args: &RunArgs) -> i32 {
    let shared = match shared(args) {
        Ok(s) => s,
        Err(e) => return fatal("config", &e),
    };
    let s = &shared.settings;
    let timeout = Duration::from_secs_f64(s.agent.wall_clock_limit);
    fan_out(&s.sources, s.jobs, |source| {
        let checkout = match acquire(source, s.commit.as_deref()) {
            Ok(c) => c,
            Err(e) => return fatal(source, &e),
        };
        let dir = s.agent.artifact_dir.join(&checkout.project);
        match run_defaults(
            &checkout.root,
            &checkout.project,
            &shared.catalog,
            shared.backend.as_ref(),
            timeout,
            &dir,
        ) {
            Ok(report) => {
                let tried: Vec<String> = report
                    .attempts
                    .iter()
                    .map(|a| a.system.to_string())
                    .collect();
                let outcome = match report.outcome {
                    BaselineOutcome::Success => "success",
                    BaselineOutcome::Failure => "failure",
                };
                println!("{}: {outcome} (tried {})", report.project, tried.join(", "));
                report.exit_code()
            }
            Err(e) => fatal(source, &e),
        }
    })
}

pub fn report(args: &ReportArgs) -> i32 {
    let (reports, skipped) = load_reports(&args.dirs);
    let mut agg = aggregate(&reports);
    agg.skipped = skipped;
    print!("{}", render_table(&agg));
    match write_aggregate(&agg, &args.out) {
        Ok(()) => {
            info!(path = %args.out.display(), "aggregate written");
            EXIT_SUCCESS
        }
        Err(e) => fatal("report", &e),
    }
}
