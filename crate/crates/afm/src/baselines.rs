//! The three comparison history strategies behind the same packing output
//! shape as the focus manager: stateless, naive truncated replay, and
//! recency-based compression.

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::compress::Compressor;
use crate::error::Result;
use crate::manager::{PackedEntry, PackedPrompt};
use crate::model::{Fidelity, Message, PackStats, Role};
use crate::tokenizer::TokenCounter;

/// Strategy selector used by the CLI and benchmark harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Default,
    Naive,
    Recency,
    Afm,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Default => "default",
            Method::Naive => "naive",
            Method::Recency => "recency",
            Method::Afm => "afm",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

fn try_preamble(
    system_preamble: Option<&str>,
    counter: &TokenCounter,
    b_left: &mut usize,
    entries: &mut Vec<PackedEntry>,
    stats: &mut PackStats,
) {
    if let Some(preamble) = system_preamble {
        let cost = counter.message_cost(preamble);
        if cost <= *b_left {
            *b_left -= cost;
            stats.total_tokens += cost;
            entries.push(PackedEntry {
                role: Role::System,
                content: preamble.to_string(),
                fidelity: Fidelity::Full,
                message_id: None,
            });
        }
    }
}

/// Stateless chat: only the preamble is sent; the whole history is dropped.
pub fn stateless_pack(
    history: &[Message],
    counter: &TokenCounter,
    budget_tokens: usize,
    system_preamble: Option<&str>,
) -> PackedPrompt {
    let mut b_left = budget_tokens;
    let mut entries = Vec::new();
    let mut stats = PackStats::default();
    try_preamble(system_preamble, counter, &mut b_left, &mut entries, &mut stats);
    stats.dropped_count = history.len();
    PackedPrompt { entries, stats }
}

/// Naive truncated replay: the maximal suffix of history whose verbatim
/// total (after the preamble) fits the budget, emitted chronologically at
/// FULL fidelity; everything older is dropped.
pub fn naive_replay_pack(
    history: &[Message],
    counter: &TokenCounter,
    budget_tokens: usize,
    system_preamble: Option<&str>,
) -> PackedPrompt {
    let mut b_left = budget_tokens;
    let mut entries = Vec::new();
    let mut stats = PackStats::default();
    try_preamble(system_preamble, counter, &mut b_left, &mut entries, &mut stats);

    // walk from the newest message back to find the longest fitting suffix
    let mut start = history.len();
    let mut suffix_total = 0usize;
    for (i, message) in history.iter().enumerate().rev() {
        let cost = counter.message_cost(&message.text);
        if suffix_total + cost > b_left {
            break;
        }
        suffix_total += cost;
        start = i;
    }

    stats.dropped_count = start;
    for message in &history[start..] {
        let cost = counter.message_cost(&message.text);
        stats.total_tokens += cost;
        stats.full_count += 1;
        entries.push(PackedEntry {
            role: message.role,
            content: message.text.clone(),
            fidelity: Fidelity::Full,
            message_id: Some(message.id),
        });
    }
    PackedPrompt { entries, stats }
}

/// Recency-based compression: the last `keep_recent` messages are attempted
/// verbatim, older ones as a compression to `local_budget` tokens. One
/// representation per message, oldest first, drop on overflow.
pub fn recency_compress_pack(
    history: &[Message],
    counter: &TokenCounter,
    compressor: &dyn Compressor,
    keep_recent: usize,
    local_budget: usize,
    budget_tokens: usize,
    system_preamble: Option<&str>,
) -> Result<PackedPrompt> {
    let mut b_left = budget_tokens;
    let mut entries = Vec::new();
    let mut stats = PackStats::default();
    try_preamble(system_preamble, counter, &mut b_left, &mut entries, &mut stats);

    let verbatim_from = history.len().saturating_sub(keep_recent);
    for (i, message) in history.iter().enumerate() {
        let (content, fidelity) = if i >= verbatim_from {
            (message.text.clone(), Fidelity::Full)
        } else {
            (
                compressor.compress(&message.text, local_budget, None)?,
                Fidelity::Compressed,
            )
        };
        let cost = counter.message_cost(&content);
        if cost <= b_left {
            b_left -= cost;
            stats.total_tokens += cost;
            match fidelity {
                Fidelity::Full => stats.full_count += 1,
                Fidelity::Compressed => stats.compressed_count += 1,
                Fidelity::Placeholder => stats.stub_count += 1,
            }
            entries.push(PackedEntry {
                role: message.role,
                content,
                fidelity,
                message_id: Some(message.id),
            });
        } else {
            stats.dropped_count += 1;
        }
    }
    Ok(PackedPrompt { entries, stats })
}
