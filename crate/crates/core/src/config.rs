//! Run configuration shared by the pipeline stages.
//!
//! The file format is one `key = value` pair per line; `#` starts a comment
//! line and blank lines are skipped. Unknown keys are rejected so typos do
//! not silently fall back to defaults. Fractions may be written as decimals
//! or as `numerator/denominator`.
//!
//! ```
//! use sdx_core::config::RunConfig;
//!
//! let cfg = RunConfig::parse("k = 3\ntrain = 120/150\npretrain_val = 0.2\nseed = 7").unwrap_err();
//! assert!(cfg.to_string().contains("sum to 1"));
//!
//! let cfg = RunConfig::parse("k = 3\nseed = 7").unwrap();
//! assert_eq!((cfg.k, cfg.seed, cfg.context_radius), (3, 7, 3));
//! ```

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::corpus::{FilterConfig, SplitConfig, TemplateList};
use crate::retrieval::DEFAULT_K;
use crate::sbt::{EncoderConfig, DEFAULT_CONTEXT_RADIUS};

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("template list {path}: {message}")]
    Template { path: PathBuf, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub context_radius: u32,
    pub k: usize,
    pub seed: u64,
    pub split: SplitConfig,
    pub min_message_tokens: usize,
    pub max_message_tokens: usize,
    pub max_diff_tokens: usize,
    /// Replacement for the built-in machine-template list.
    pub template_path: Option<PathBuf>,
    /// External embedding provider; the hash-bag provider is used when absent.
    pub provider_cmd: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            context_radius: DEFAULT_CONTEXT_RADIUS,
            k: DEFAULT_K,
            seed: DEFAULT_SEED,
            split: SplitConfig::default(),
            min_message_tokens: 5,
            max_message_tokens: 30,
            max_diff_tokens: 170,
            template_path: None,
            provider_cmd: None,
        }
    }
}

fn parse_fraction(value: &str) -> Result<f64, String> {
    let parsed = match value.split_once('/') {
        Some((n, d)) => {
            let n: f64 = n.trim().parse().map_err(|_| format!("bad numerator in {value:?}"))?;
            let d: f64 = d.trim().parse().map_err(|_| format!("bad denominator in {value:?}"))?;
            if d == 0.0 {
                return Err(format!("zero denominator in {value:?}"));
            }
            n / d
        }
        None => value.parse().map_err(|_| format!("not a number: {value:?}"))?,
    };
    if !parsed.is_finite() || parsed < 0.0 {
        return Err(format!("fraction must be a non-negative number, got {value:?}"));
    }
    Ok(parsed)
}

fn parse_int<T: std::str::FromStr>(value: &str) -> Result<T, String> {
    value.parse().map_err(|_| format!("not a non-negative integer: {value:?}"))
}

impl RunConfig {
    /// Parses a config file body on top of the defaults and validates it.
    pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        let mut cfg = RunConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let syntax = |message: String| ConfigError::Syntax { line: i + 1, message };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| syntax("expected `key = value`".into()))?;
            cfg.set(key.trim(), value.trim()).map_err(syntax)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        RunConfig::parse(&text)
    }

    /// Sets one key from its textual value. Does not validate cross-field
    /// constraints; call [`validate`](Self::validate) afterwards.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "context_radius" => self.context_radius = parse_int(value)?,
            "k" => self.k = parse_int(value)?,
            "seed" => self.seed = parse_int(value)?,
            "train" => self.split.train = parse_fraction(value)?,
            "pretrain_val" => self.split.pretrain_val = parse_fraction(value)?,
            "pretrain_test" => self.split.pretrain_test = parse_fraction(value)?,
            "finetune_val" => self.split.finetune_val = parse_fraction(value)?,
            "finetune_test" => self.split.finetune_test = parse_fraction(value)?,
            "cross_project_slack" => self.split.slack = parse_fraction(value)?,
            "min_message_tokens" => self.min_message_tokens = parse_int(value)?,
            "max_message_tokens" => self.max_message_tokens = parse_int(value)?,
            "max_diff_tokens" => self.max_diff_tokens = parse_int(value)?,
            "template_path" => self.template_path = (!value.is_empty()).then(|| PathBuf::from(value)),
            "provider_cmd" => self.provider_cmd = (!value.is_empty()).then(|| value.to_string()),
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        if self.k == 0 {
            return invalid("k must be at least 1".into());
        }
        for (name, v) in [
            ("min_message_tokens", self.min_message_tokens),
            ("max_message_tokens", self.max_message_tokens),
            ("max_diff_tokens", self.max_diff_tokens),
        ] {
            if v == 0 {
                return invalid(format!("{name} must be positive"));
            }
        }
        if self.min_message_tokens > self.max_message_tokens {
            return invalid("min_message_tokens exceeds max_message_tokens".into());
        }
        self.split.validate().map_err(ConfigError::Invalid)
    }

    pub fn encoder(&self) -> EncoderConfig {
        EncoderConfig::with_radius(self.context_radius)
    }

    /// Filter settings, reading the template list from `template_path` when
    /// one is configured.
    pub fn filter_config(&self) -> Result<FilterConfig, ConfigError> {
        let templates = match &self.template_path {
            None => TemplateList::default(),
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.clone(), source })?;
                TemplateList::parse(&text).map_err(|message| ConfigError::Template { path: path.clone(), message })?
            }
        };
        Ok(FilterConfig {
            min_message_tokens: self.min_message_tokens,
            max_message_tokens: self.max_message_tokens,
            max_diff_tokens: self.max_diff_tokens,
            templates,
            encoder: self.encoder(),
        })
    }

    /// Every setting as `key = value` lines in a fixed order. Hashing this
    /// text identifies a configuration independently of file layout.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        let s = &self.split;
        let path = self.template_path.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let _ = writeln!(out, "context_radius = {}", self.context_radius);
        let _ = writeln!(out, "k = {}", self.k);
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "train = {}", s.train);
        let _ = writeln!(out, "pretrain_val = {}", s.pretrain_val);
        let _ = writeln!(out, "pretrain_test = {}", s.pretrain_test);
        let _ = writeln!(out, "finetune_val = {}", s.finetune_val);
        let _ = writeln!(out, "finetune_test = {}", s.finetune_test);
        let _ = writeln!(out, "cross_project_slack = {}", s.slack);
        let _ = writeln!(out, "min_message_tokens = {}", self.min_message_tokens);
        let _ = writeln!(out, "max_message_tokens = {}", self.max_message_tokens);
        let _ = writeln!(out, "max_diff_tokens = {}", self.max_diff_tokens);
        let _ = writeln!(out, "template_path = {path}");
        let _ = writeln!(out, "provider_cmd = {}", self.provider_cmd.as_deref().unwrap_or(""));
        out
    }
}
