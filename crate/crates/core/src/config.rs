// SPDX-License-Identifier: Apache-2.0

//! Flat `key = value` configuration file.
//!
//! ```text
//! # comments start with '#'
//! stage = 3
//! external_command = iverilog -o /dev/null {design}
//! sim_timeout_secs = 30
//! history = runs/history.jsonl
//! grpo.group_size = 8
//! grpo.eps = 0.2
//! grpo.beta = 0.04
//! grpo.lr = 0.1
//! grpo.seed = 42
//! ```

use std::path::{Path, PathBuf};

use crate::grpo::GrpoConfig;
use crate::reward::Stage;
use crate::sim::DESIGN_PLACEHOLDER;

pub const CONFIG_ENV: &str = "RTLSEEK_CONFIG";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {0}: {1}")]
    Io(PathBuf, String),
    #[error("config line {line}: {message}")]
    Line { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AppConfig {
    pub stage: Stage,
    pub external_command: Option<String>,
    pub sim_timeout_secs: f64,
    pub history: Option<PathBuf>,
    pub grpo: GrpoConfig,
    pub lr: f64,
    pub seed: u64,
}

impl Default for AppConfig {
    fn default() -> Self {
        AppConfig {
            stage: Stage::Three,
            external_command: None,
            sim_timeout_secs: 30.0,
            history: None,
            grpo: GrpoConfig::default(),
            lr: 0.1,
            seed: 42,
        }
    }
}

impl AppConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = AppConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let err = |message: String| ConfigError::Line { line, message };
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed
                .split_once('=')
                .ok_or_else(|| err("expected `key = value`".into()))?;
            let (key, value) = (key.trim(), value.trim());
            let num = |v: &str| {
                v.parse::<f64>()
                    .map_err(|_| err(format!("`{key}` expects a number, got {v:?}")))
            };
            match key {
                "stage" => cfg.stage = value.parse().map_err(err)?,
                "external_command" => {
                    if !value.contains(DESIGN_PLACEHOLDER) {
                        return Err(err(format!("`external_command` must contain {DESIGN_PLACEHOLDER}")));
                    }
                    cfg.external_command = Some(value.to_string());
                }
                "sim_timeout_secs" => {
                    let v = num(value)?;
                    if !(v > 0.0 && v.is_finite()) {
                        return Err(err("`sim_timeout_secs` must be positive".into()));
                    }
                    cfg.sim_timeout_secs = v;
                }
                "history" => cfg.history = Some(PathBuf::from(value)),
                "grpo.group_size" => {
                    cfg.grpo.group_size = value
                        .parse()
                        .map_err(|_| err(format!("`{key}` expects an integer, got {value:?}")))?
                }
                "grpo.eps" => cfg.grpo.clip_eps = num(value)?,
                "grpo.beta" => cfg.grpo.beta = num(value)?,
                "grpo.lr" => {
                    cfg.lr = num(value)?;
                    if !(cfg.lr > 0.0 && cfg.lr.is_finite()) {
                        return Err(err("`grpo.lr` must be positive".into()));
                    }
                }
                "grpo.seed" => {
                    cfg.seed = value
                        .parse()
                        .map_err(|_| err(format!("`{key}` expects an integer, got {value:?}")))?
                }
                other => return Err(err(format!("unknown key `{other}`"))),
            }
        }
        cfg.grpo.validate().map_err(|e| ConfigError::Line {
            line: 0,
            message: e.to_string(),
        })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(path.to_path_buf(), e.to_string()))?;
        Self::parse(&text)
    }

    /// Loads `explicit`, else the file named by `RTLSEEK_CONFIG`, else defaults.
    pub fn resolve(explicit: Option<&Path>) -> Result<Self, ConfigError> {
        match explicit {
            Some(p) => Self::load(p),
            None => match std::env::var_os(CONFIG_ENV) {
                Some(p) if !p.is_empty() => Self::load(Path::new(&p)),
                _ => Ok(Self::default()),
            },
        }
    }
}
