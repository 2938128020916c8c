//! Project configuration: one TOML or JSON document.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use csmotive_core::schema::SCHEMA_VERSION;
use serde::{Deserialize, Serialize};

use crate::translation::ClientSpec;

pub const CONFIG_ENV: &str = "CSMOTIVE_CONFIG";
pub const DEFAULT_CONFIG: &str = "csmotive.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectConfig {
    /// Instances JSONL served for annotation.
    pub instances: PathBuf,
    /// Append-only annotation log; created on first write.
    pub annotations: PathBuf,
    #[serde(default = "current_schema")]
    pub schema_version: u32,
    #[serde(default)]
    pub corpus: Option<PathBuf>,
    /// Seed lexicons by language code (`eng`, `spa`, `hin`).
    #[serde(default)]
    pub lexicons: BTreeMap<String, PathBuf>,
    #[serde(default)]
    pub splits: Option<PathBuf>,
    #[serde(default)]
    pub annotators: Vec<String>,
    #[serde(default = "default_port")]
    pub port: u16,
    #[serde(default = "default_client")]
    pub translation_client: String,
    /// Static annotation UI assets, served under `/ui`.
    #[serde(default)]
    pub ui_dir: Option<PathBuf>,
    /// Named instance subsets (e.g. the doubly annotated agreement sample).
    #[serde(default)]
    pub subsets: BTreeMap<String, Vec<String>>,
}

fn current_schema() -> u32 {
    SCHEMA_VERSION
}

fn default_port() -> u16 {
    8080
}

fn default_client() -> String {
    "identity".into()
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("config {path} is not valid: {detail}")]
    Syntax { path: PathBuf, detail: String },
    #[error("config {path} has {} problem(s):\n  {}", problems.len(), problems.join("\n  "))]
    Invalid { path: PathBuf, problems: Vec<String> },
}

/// `--config` if given, else `$CSMOTIVE_CONFIG`, else `./csmotive.toml`.
pub fn config_path(explicit: Option<&Path>) -> PathBuf {
    if let Some(p) = explicit {
        return p.to_path_buf();
    }
    match std::env::var_os(CONFIG_ENV) {
        Some(p) if !p.is_empty() => PathBuf::from(p),
        _ => PathBuf::from(DEFAULT_CONFIG),
    }
}

impl ProjectConfig {
    /// Parses the file (JSON when the extension is `.json`, TOML otherwise),
    /// resolves relative paths against its directory and validates it.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
        let mut config = Self::parse(path, &text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve_paths(base);
        config.validate().map_err(|problems| ConfigError::Invalid { path: path.into(), problems })?;
        Ok(config)
    }

    pub fn parse(path: &Path, text: &str) -> Result<Self, ConfigError> {
        let syntax = |detail: String| ConfigError::Syntax { path: path.into(), detail };
        if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(text).map_err(|e| syntax(e.to_string()))
        } else {
            toml::from_str(text).map_err(|e| syntax(e.to_string()))
        }
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.instances);
        fix(&mut self.annotations);
        self.corpus.as_mut().map(fix);
        self.splits.as_mut().map(fix);
        self.ui_dir.as_mut().map(fix);
        self.lexicons.values_mut().for_each(fix);
    }

    /// Every problem found, not just the first.
    pub fn validate(&self) -> Result<(), Vec<String>> {
        let mut problems = Vec::new();
        let mut need_file = |what: &str, p: &Path| {
            if !p.is_file() {
                problems.push(format!("{what}: {} does not exist", p.display()));
            }
        };
        need_file("instances", &self.instances);
        if let Some(p) = &self.corpus {
            need_file("corpus", p);
        }
        if let Some(p) = &self.splits {
            need_file("splits", p);
        }
        for (lang, p) in &self.lexicons {
            need_file(&format!("lexicons.{lang}"), p);
        }
        if let Some(dir) = self.annotations.parent().filter(|d| !d.as_os_str().is_empty()) {
            if !dir.is_dir() {
                problems.push(format!("annotations: directory {} does not exist", dir.display()));
            }
        }
        if let Some(dir) = &self.ui_dir {
            if !dir.is_dir() {
                problems.push(format!("ui_dir: {} is not a directory", dir.display()));
            }
        }
        if self.schema_version != SCHEMA_VERSION {
            problems.push(format!("schema_version: {} is not supported (current is {SCHEMA_VERSION})", self.schema_version));
        }
        for lang in self.lexicons.keys() {
            if !matches!(lang.as_str(), "eng" | "spa" | "hin") {
                problems.push(format!("lexicons.{lang}: unsupported language"));
            }
        }
        if let Err(e) = self.translation_client.parse::<ClientSpec>() {
            problems.push(format!("translation_client: {e}"));
        }
        let mut seen = std::collections::BTreeSet::new();
        for a in &self.annotators {
            if a.trim().is_empty() {
                problems.push("annotators: empty annotator id".into());
            } else if !seen.insert(a) {
                problems.push(format!("annotators: `{a}` listed twice"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(problems)
        }
    }
}
