//! Shared domain types and configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{AfmError, Result};

/// Speaker role for a dialogue turn. Serialized as lowercase strings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl Role {
    pub fn as_str(&self) -> &'static str {
        match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        }
    }
}

impl std::fmt::Display for Role {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Importance class assigned to a message, at most once (cached).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ImportanceLabel {
    Critical,
    Relevant,
    Trivial,
}

impl ImportanceLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            ImportanceLabel::Critical => "CRITICAL",
            ImportanceLabel::Relevant => "RELEVANT",
            ImportanceLabel::Trivial => "TRIVIAL",
        }
    }
}

impl std::fmt::Display for ImportanceLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Representation fidelity for a packed message.
///
/// Variant order gives the total order PLACEHOLDER < COMPRESSED < FULL.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fidelity {
    Placeholder,
    Compressed,
    Full,
}

impl Fidelity {
    pub fn as_str(&self) -> &'static str {
        match self {
            Fidelity::Full => "full",
            Fidelity::Compressed => "compressed",
            Fidelity::Placeholder => "placeholder",
        }
    }
}

impl std::fmt::Display for Fidelity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One dialogue turn. `embedding`, `importance` and `summary` are lazy,
/// write-once caches and are excluded from serialization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Message {
    pub id: u64,
    pub role: Role,
    pub text: String,
    pub turn_index: u32,
    #[serde(skip)]
    pub embedding: Option<Vec<f64>>,
    #[serde(skip)]
    pub importance: Option<ImportanceLabel>,
    #[serde(skip)]
    pub summary: Option<String>,
}

impl Message {
    pub fn new(id: u64, role: Role, text: impl Into<String>, turn_index: u32) -> Self {
        Message {
            id,
            role,
            text: text.into(),
            turn_index,
            embedding: None,
            importance: None,
            summary: None,
        }
    }
}

/// Tuning knobs for scoring and packing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FocusConfig {
    /// Half-life `h` of the recency decay, in turns.
    pub half_life_turns: f64,
    /// Score threshold at or above which a message is intended FULL.
    pub tau_high: f64,
    /// Score threshold at or above which a message is intended COMPRESSED.
    pub tau_mid: f64,
    /// Target token budget handed to the compressor for mid-tier items.
    pub compressed_target_tokens: usize,
    /// Placeholder template; `{id}` and `{role}` are substituted.
    pub stub_template: String,
}

impl Default for FocusConfig {
    fn default() -> Self {
        FocusConfig {
            half_life_turns: 12.0,
            tau_high: 0.45,
            tau_mid: 0.25,
            compressed_target_tokens: 60,
            stub_template: "[ref msg #{id}: {role}]".to_string(),
        }
    }
}

/// Partial config as read from a file; unknown keys are rejected.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    pub half_life_turns: Option<f64>,
    pub tau_high: Option<f64>,
    pub tau_mid: Option<f64>,
    pub compressed_target_tokens: Option<usize>,
    pub stub_template: Option<String>,
    #[serde(default)]
    pub tokenizer: TokenizerOverrides,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TokenizerOverrides {
    pub vocab_path: Option<PathBuf>,
}

impl FocusConfig {
    /// Defaults with `overrides` applied, validated.
    pub fn with_overrides(overrides: &ConfigOverrides) -> Result<FocusConfig> {
        let mut cfg = FocusConfig::default();
        if let Some(h) = overrides.half_life_turns {
            cfg.half_life_turns = h;
        }
        if let Some(t) = overrides.tau_high {
            cfg.tau_high = t;
        }
        if let Some(t) = overrides.tau_mid {
            cfg.tau_mid = t;
        }
        if let Some(c) = overrides.compressed_target_tokens {
            cfg.compressed_target_tokens = c;
        }
        if let Some(s) = &overrides.stub_template {
            cfg.stub_template = s.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads overrides from a TOML or JSON file (by extension), then applies
    /// `AFM_*` environment overrides on top.
    pub fn from_file(path: &Path) -> Result<FocusConfig> {
        let overrides = load_overrides(path)?;
        let mut cfg = FocusConfig::with_overrides(&overrides)?;
        cfg.apply_env()?;
        Ok(cfg)
    }

    /// Applies environment overrides: AFM_HALF_LIFE_TURNS, AFM_TAU_HIGH,
    /// AFM_TAU_MID, AFM_COMPRESSED_TARGET_TOKENS, AFM_STUB_TEMPLATE.
    pub fn apply_env(&mut self) -> Result<()> {
        fn parsed<T: std::str::FromStr>(key: &str) -> Result<Option<T>> {
            match std::env::var(key) {
                Ok(v) => v
                    .parse::<T>()
                    .map(Some)
                    .map_err(|_| AfmError::InvalidConfig(format!("cannot parse {key}={v:?}"))),
                Err(_) => Ok(None),
            }
        }
        if let Some(h) = parsed::<f64>("AFM_HALF_LIFE_TURNS")? {
            self.half_life_turns = h;
        }
        if let Some(t) = parsed::<f64>("AFM_TAU_HIGH")? {
            self.tau_high = t;
        }
        if let Some(t) = parsed::<f64>("AFM_TAU_MID")? {
            self.tau_mid = t;
        }
        if let Some(c) = parsed::<usize>("AFM_COMPRESSED_TARGET_TOKENS")? {
            self.compressed_target_tokens = c;
        }
        if let Ok(s) = std::env::var("AFM_STUB_TEMPLATE") {
            self.stub_template = s;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.half_life_turns > 0.0) {
            return Err(AfmError::InvalidConfig(format!(
                "half_life_turns must be > 0, got {}",
                self.half_life_turns
            )));
        }
        for (name, v) in [("tau_high", self.tau_high), ("tau_mid", self.tau_mid)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(AfmError::InvalidConfig(format!(
                    "{name} must be in [0,1], got {v}"
                )));
            }
        }
        if self.tau_mid >= self.tau_high {
            return Err(AfmError::InvalidConfig(format!(
                "tau_mid ({}) must be < tau_high ({})",
                self.tau_mid, self.tau_high
            )));
        }
        if self.compressed_target_tokens == 0 {
            return Err(AfmError::InvalidConfig(
                "compressed_target_tokens must be >= 1".to_string(),
            ));
        }
        Ok(())
    }

    /// Renders the placeholder stub for a message.
    pub fn render_stub(&self, id: u64, role: Role) -> String {
        self.stub_template
            .replace("{id}", &id.to_string())
            .replace("{role}", role.as_str())
    }
}

/// Loads the raw override file (TOML by `.toml` extension, JSON otherwise).
pub fn load_overrides(path: &Path) -> Result<ConfigOverrides> {
    let data = std::fs::read_to_string(path).map_err(|e| AfmError::AssetLoad {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    let is_toml = path.extension().map(|e| e == "toml").unwrap_or(false);
    if is_toml {
        toml::from_str(&data).map_err(|e| AfmError::InvalidConfig(e.to_string()))
    } else {
        serde_json::from_str(&data).map_err(|e| AfmError::InvalidConfig(e.to_string()))
    }
}

/// Per-representation counts for one packed prompt. The system preamble is
/// charged to `total_tokens` but excluded from the four counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PackStats {
    pub total_tokens: usize,
    pub full_count: usize,
    pub compressed_count: usize,
    pub stub_count: usize,
    pub dropped_count: usize,
}
