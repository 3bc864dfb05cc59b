//! Recency weights, piecewise relevance scores and intended fidelity.
//!
//! Scores gate fidelity decisions only; they never reorder the conversation.
//! Scoring always uses the original text's embedding, never a summary's.

use serde::Serialize;

use crate::embed::{cosine, embedding_of, Embedder};
use crate::error::{AfmError, Result};
use crate::importance::{label_of, ImportanceClassifier};
use crate::model::{Fidelity, FocusConfig, ImportanceLabel, Message};

/// Per-message scoring outcome.
#[derive(Debug, Clone, Serialize)]
pub struct ScoredMessage {
    pub message_id: u64,
    pub similarity: f64,
    pub recency_weight: f64,
    pub score: f64,
    pub intended: Fidelity,
    pub turns_since: u32,
    pub label: ImportanceLabel,
}

/// Half-life decay `0.5^(k/h)`; strictly decreasing in `k`.
pub fn recency_weight(turns_since: u32, half_life: f64) -> Result<f64> {
    if !(half_life > 0.0) {
        return Err(AfmError::InvalidArg(format!(
            "half_life must be > 0, got {half_life}"
        )));
    }
    Ok(0.5f64.powf(f64::from(turns_since) / half_life))
}

/// Piecewise score: CRITICAL is force-elevated to 1.0; the other classes use
/// similarity- and recency-weighted scores on different scales.
pub fn score(similarity: f64, recency: f64, label: ImportanceLabel) -> f64 {
    match label {
        ImportanceLabel::Critical => 1.0,
        ImportanceLabel::Relevant => similarity.max(0.0) * (0.4 + 0.4 * recency),
        ImportanceLabel::Trivial => similarity.max(0.0) * (0.25 * recency),
    }
}

/// Threshold comparison is inclusive (`>=`) at both boundaries.
pub fn assign_fidelity(score: f64, config: &FocusConfig) -> Fidelity {
    if score >= config.tau_high {
        Fidelity::Full
    } else if score >= config.tau_mid {
        Fidelity::Compressed
    } else {
        Fidelity::Placeholder
    }
}

/// Scores every history message in chronological order, using cached
/// embeddings and labels where present. `force_trivial` is the
/// no-importance ablation: labels are treated as TRIVIAL for scoring without
/// touching the cache.
pub fn score_history(
    history: &mut [Message],
    query_embedding: &[f64],
    embedder: &dyn Embedder,
    classifier: &dyn ImportanceClassifier,
    config: &FocusConfig,
    current_turn: u32,
    force_trivial: bool,
) -> Result<Vec<ScoredMessage>> {
    let mut scored = Vec::with_capacity(history.len());
    for message in history.iter_mut() {
        let sim = {
            let emb = embedding_of(message, embedder)?;
            cosine(emb, query_embedding)?
        };
        let label = if force_trivial {
            ImportanceLabel::Trivial
        } else {
            label_of(message, classifier)?
        };
        let turns_since = current_turn.saturating_sub(message.turn_index);
        let recency = recency_weight(turns_since, config.half_life_turns)?;
        let s = score(sim, recency, label);
        scored.push(ScoredMessage {
            message_id: message.id,
            similarity: sim,
            recency_weight: recency,
            score: s,
            intended: assign_fidelity(s, config),
            turns_since,
            label,
        });
    }
    Ok(scored)
}
