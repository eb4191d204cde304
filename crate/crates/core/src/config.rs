//! Run configuration loaded from a TOML file.
//!
//! ```toml
//! inputs = ["logs/node1.log"]
//! templates = "templates.txt"
//! mode = "llm"
//! seed = 42
//!
//! [llm]
//! base_url = "http://127.0.0.1:8000/v1"
//! model_name = "log-parser"
//! ```
//!
//! Endpoint URL and token can be overridden from the environment; command
//! line flags are applied on top by the caller.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generation::{LlmEndpointConfig, LlmError};
use crate::mining::DEFAULT_WINDOW_SECS;
use crate::signature::DEFAULT_SAMPLES;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Llm,
    #[default]
    Heuristic,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "llm" => Ok(Mode::Llm),
            "heuristic" => Ok(Mode::Heuristic),
            other => Err(format!("unknown mode {other:?} (llm|heuristic)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parsing {path}: {source}")]
    Toml {
        path: PathBuf,
        source: toml::de::Error,
    },
    #[error("input path does not exist: {0}")]
    MissingPath(PathBuf),
    #[error("mode = llm needs an [llm] endpoint section")]
    MissingEndpoint,
    #[error("n_samples must be >= 1")]
    BadSampleSize,
    #[error("window_secs must be >= 1")]
    BadWindow,
    #[error(transparent)]
    Endpoint(#[from] LlmError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub inputs: Vec<PathBuf>,
    pub templates: Option<PathBuf>,
    pub llm: Option<LlmEndpointConfig>,
    pub n_samples: usize,
    pub seed: u64,
    pub window_secs: i64,
    pub out_dir: Option<PathBuf>,
    pub mode: Mode,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            inputs: Vec::new(),
            templates: None,
            llm: None,
            n_samples: DEFAULT_SAMPLES,
            seed: 42,
            window_secs: DEFAULT_WINDOW_SECS,
            out_dir: None,
            mode: Mode::Heuristic,
        }
    }
}

impl RunConfig {
    /// Parses a file and applies environment overrides to the `[llm]` section.
    /// Relative paths in the file are resolved against its directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg: RunConfig = toml::from_str(&text).map_err(|source| ConfigError::Toml {
            path: path.to_path_buf(),
            source,
        })?;
        if let Some(base) = path.parent() {
            let fix = |p: &mut PathBuf| {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            };
            cfg.inputs.iter_mut().for_each(fix);
            cfg.templates.iter_mut().for_each(fix);
            cfg.out_dir.iter_mut().for_each(fix);
        }
        if let Some(llm) = cfg.llm.as_mut() {
            llm.apply_env();
        }
        Ok(cfg)
    }

    /// The endpoint section, created from defaults plus environment if absent.
    pub fn endpoint_or_env(&mut self) -> &mut LlmEndpointConfig {
        self.llm.get_or_insert_with(|| {
            let mut c = LlmEndpointConfig::default();
            c.apply_env();
            c
        })
    }

    /// Checks every path and setting before any stage runs.
    pub fn validate(&self) -> Result<(), ConfigError> {
        for p in self.inputs.iter().chain(&self.templates) {
            if !p.exists() {
                return Err(ConfigError::MissingPath(p.clone()));
            }
        }
        if self.n_samples == 0 {
            return Err(ConfigError::BadSampleSize);
        }
        if self.window_secs < 1 {
            return Err(ConfigError::BadWindow);
        }
        if self.mode == Mode::Llm {
            self.llm.as_ref().ok_or(ConfigError::MissingEndpoint)?.validate()?;
        }
        Ok(())
    }
}
