//! Settings from flags, a TOML config file and defaults, in that order of
//! precedence.

use std::path::{Path, PathBuf};

use buildsmith_core::llm::Rates;
use buildsmith_core::{AgentConfig, BackendKind, Error, Result};
use serde::{Deserialize, Serialize};

pub const API_KEY_ENV: &str = "BUILDSMITH_API_KEY";
pub const DEFAULT_API_BASE: &str = "https://api.openai.com/v1";

/// Every setting, each optional. Parsed from the config file and also built
/// from command-line flags, so both sources share one key set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Options {
    pub sources: Option<Vec<String>>,
    pub commit: Option<String>,
    pub model: Option<String>,
    pub max_steps: Option<u32>,
    #[serde(alias = "time_limit")]
    pub wall_clock_limit: Option<f64>,
    pub backend: Option<BackendKind>,
    pub artifact_dir: Option<PathBuf>,
    pub transcript: Option<PathBuf>,
    pub replay: Option<PathBuf>,
    pub catalog: Option<PathBuf>,
    pub templates: Option<PathBuf>,
    pub keep_images: Option<bool>,
    pub docker_host: Option<String>,
    pub jobs: Option<usize>,
    pub token_budget: Option<usize>,
    pub api_base: Option<String>,
    pub rates: Option<Rates>,
}

impl Options {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub sources: Vec<String>,
    pub commit: Option<String>,
    pub agent: AgentConfig,
    pub transcript: Option<PathBuf>,
    pub replay: Option<PathBuf>,
    pub catalog: Option<PathBuf>,
    pub templates: Option<PathBuf>,
    pub docker_host: Option<String>,
    pub jobs: usize,
    pub api_base: String,
}

impl Settings {
    /// Field by field: `flags`, else `file`, else the default.
    pub fn resolve(flags: &Options, file: &Options) -> Result<Self> {
        let d = AgentConfig::default();
        macro_rules! pick {
            ($f:ident) => {
                flags.$f.clone().or_else(|| file.$f.clone())
            };
        }
        let settings = Self {
            sources: pick!(sources).unwrap_or_default(),
            commit: pick!(commit),
            agent: AgentConfig {
                max_steps: pick!(max_steps).unwrap_or(d.max_steps),
                wall_clock_limit: pick!(wall_clock_limit).unwrap_or(d.wall_clock_limit),
                model: pick!(model).unwrap_or(d.model),
                backend: pick!(backend).unwrap_or(d.backend),
                token_budget: pick!(token_budget).unwrap_or(d.token_budget),
                artifact_dir: pick!(artifact_dir).unwrap_or(d.artifact_dir),
                keep_images: pick!(keep_images).unwrap_or(d.keep_images),
                rates: pick!(rates).unwrap_or(d.rates),
            },
            transcript: pick!(transcript),
            replay: pick!(replay),
            catalog: pick!(catalog),
            templates: pick!(templates),
            docker_host: pick!(docker_host),
            jobs: pick!(jobs).unwrap_or(1),
            api_base: pick!(api_base).unwrap_or_else(|| DEFAULT_API_BASE.to_string()),
        };
        settings.validate()?;
        Ok(settings)
    }

    fn validate(&self) -> Result<()> {
        self.agent.validate()?;
        if self.jobs == 0 {
            return Err(Error::Config("jobs must be at least 1".into()));
        }
        if self.transcript.is_some() && self.replay.is_some() {
            return Err(Error::Config(
                "transcript recording and replay are mutually exclusive".into(),
            ));
        }
        Ok(())
    }

    /// Transcript file for `project`: the path itself for a single source,
    /// `<path>/<project>.jsonl` when several sources share it.
    pub fn transcript_for(&self, path: &Path, project: &str) -> PathBuf {
        if self.sources.len() > 1 || path.is_dir() {
            path.join(format!("{project}.jsonl"))
        } else {
            path.to_path_buf()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_keys_parse() {
        let opts: Options = toml::from_str(
            r#"
            sources = ["https://example.com/a.git"]
            model = "gpt-4o-mini"
            max_steps = 3
            time_limit = 60.0
            backend = "local-sandbox"
            keep_images = true
            jobs = 2
            [rates]
            input_per_million = 1.0
            output_per_million = 2.0
            "#,
        )
        .unwrap();
        let s = Settings::resolve(&Options::default(), &opts).unwrap();
        assert_eq!(s.agent.max_steps, 3);
        assert_eq!(s.agent.wall_clock_limit, 60.0);
        assert_eq!(s.agent.backend, BackendKind::LocalSandbox);
        assert_eq!(s.agent.rates.output_per_million, 2.0);
        assert_eq!(s.jobs, 2);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<Options>("api_key = \"secret\"").is_err());
    }

    #[test]
    fn invalid_values_are_config_errors() {
        let flags = Options {
            wall_clock_limit: Some(0.0),
            ..Options::default()
        };
        assert!(matches!(
            Settings::resolve(&flags, &Options::default()),
            Err(Error::Config(_))
        ));
        let flags = Options {
            jobs: Some(0),
            ..Options::default()
        };
        assert!(Settings::resolve(&flags, &Options::default()).is_err());
    }
}
