//! Adaptive focus memory: a budget-aware dialogue-context engine.
//!
//! Past messages are assigned fidelity tiers (FULL, COMPRESSED, PLACEHOLDER)
//! from semantic similarity to the current query, recency decay, and an
//! importance class, then packed chronologically under a hard token budget
//! with per-message downgrading on overflow. Baseline strategies, an
//! OpenAI-compatible gateway, and a scripted benchmark harness ship
//! alongside the engine.

pub mod baselines;
pub mod bench;
pub mod compress;
pub mod embed;
pub mod error;
pub mod gateway;
pub mod importance;
pub mod manager;
pub mod model;
pub mod scoring;
pub mod tokenizer;

pub use baselines::Method;
pub use error::{AfmError, Result};
pub use manager::{AblationFlags, FocusManager, PackedEntry, PackedPrompt};
pub use model::{Fidelity, FocusConfig, ImportanceLabel, Message, PackStats, Role};
pub use tokenizer::TokenCounter;
