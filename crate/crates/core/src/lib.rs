//! Builds C/C++ repositories from source with an LLM in the loop: parse the
//! repository, generate a Dockerfile, run it, judge the result and repair it.

pub mod baseline;
pub mod catalog;
pub mod error;
pub mod executor;
pub mod generator;
pub mod json;
pub mod llm;
pub mod orchestrator;
pub mod parser;
pub mod shell;

pub use catalog::{BuildSystem, Catalog, CatalogEntry};
pub use error::{Error, Result};
pub use executor::{Backend, BackendKind, BuildStatus, LogCapture, Verdict};
pub use generator::{BuildSolution, TemplateSet};
pub use llm::{Cost, Gateway, TokenUsage};
pub use orchestrator::{run_project, AgentConfig, RunEnv, RunOutcome, SessionReport};
pub use parser::ProjectContext;
