//! History ownership, scoring orchestration, and chronological packing under
//! a hard token budget with the FULL -> COMPRESSED -> PLACEHOLDER downgrade
//! chain.

use serde::Serialize;

use crate::compress::{summary_of, Compressor, HeuristicCompressor};
use crate::embed::{Embedder, HashingEmbedder};
use crate::error::Result;
use crate::importance::{DefaultClassifier, ImportanceClassifier};
use crate::model::{Fidelity, FocusConfig, ImportanceLabel, Message, PackStats, Role};
use crate::scoring::{score_history, ScoredMessage};
use crate::tokenizer::TokenCounter;

/// Switches that remove one packing mechanism each.
#[derive(Debug, Clone, Copy, Default)]
pub struct AblationFlags {
    /// Remove the summary rung: FULL intent falls straight to a stub,
    /// COMPRESSED intent goes directly to a stub.
    pub no_compression: bool,
    /// Remove the stub rung: failed fits become DROPPED; COMPRESSED and
    /// PLACEHOLDER intents attempt a summary where compression is permitted.
    pub no_stubs: bool,
    /// Treat every label as TRIVIAL during scoring.
    pub no_importance: bool,
}

/// One packed prompt line. `message_id` is `None` for the system preamble,
/// which is charged to the budget but excluded from the fidelity counts.
#[derive(Debug, Clone, Serialize)]
pub struct PackedEntry {
    pub role: Role,
    pub content: String,
    pub fidelity: Fidelity,
    #[serde(rename = "id")]
    pub message_id: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PackedPrompt {
    pub entries: Vec<PackedEntry>,
    pub stats: PackStats,
}

impl PackedPrompt {
    /// One entry per line: role, content, fidelity, id.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for entry in &self.entries {
            out.push_str(&serde_json::to_string(entry).expect("entry serializes"));
            out.push('\n');
        }
        out
    }
}

/// Per-message decision record produced alongside every packing pass.
#[derive(Debug, Clone, Serialize)]
pub struct PackOutcome {
    pub message_id: u64,
    /// `None` means the message was dropped.
    pub achieved: Option<Fidelity>,
    pub tokens_spent: usize,
}

/// Row of the `explain` decision table.
#[derive(Debug, Clone, Serialize)]
pub struct ExplainRow {
    pub id: u64,
    pub sim: f64,
    pub recency: f64,
    pub label: ImportanceLabel,
    pub score: f64,
    pub intended: Fidelity,
    pub achieved: Option<Fidelity>,
    pub tokens_spent: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Rung {
    FullText,
    Summary,
    Stub,
}

impl Rung {
    fn fidelity(self) -> Fidelity {
        match self {
            Rung::FullText => Fidelity::Full,
            Rung::Summary => Fidelity::Compressed,
            Rung::Stub => Fidelity::Placeholder,
        }
    }
}

fn ladder(intent: Fidelity, ablations: &AblationFlags) -> Vec<Rung> {
    let mut rungs = match intent {
        Fidelity::Full => vec![Rung::FullText, Rung::Summary, Rung::Stub],
        Fidelity::Compressed => vec![Rung::Summary, Rung::Stub],
        Fidelity::Placeholder => vec![Rung::Stub],
    };
    if ablations.no_compression {
        rungs.retain(|r| *r != Rung::Summary);
    }
    if ablations.no_stubs {
        rungs = rungs
            .into_iter()
            .filter_map(|r| match r {
                Rung::Stub if !ablations.no_compression => Some(Rung::Summary),
                Rung::Stub => None,
                other => Some(other),
            })
            .collect();
        rungs.dedup();
    }
    rungs
}

/// Single forward packing pass over `history` with precomputed intents.
///
/// This is the low-level surface behind [`FocusManager::build_context`];
/// callers that make their own fidelity decisions can drive it directly.
/// The preamble, when present, is attempted first under the same accounting
/// and silently dropped if it does not fit.
#[allow(clippy::too_many_arguments)]
pub fn pack_messages(
    history: &mut [Message],
    intents: &[Fidelity],
    query_hint: Option<&str>,
    budget_tokens: usize,
    system_preamble: Option<&str>,
    config: &FocusConfig,
    counter: &TokenCounter,
    compressor: &dyn Compressor,
    ablations: &AblationFlags,
) -> Result<(PackedPrompt, Vec<PackOutcome>)> {
    assert_eq!(history.len(), intents.len(), "one intent per message");
    let mut b_left = budget_tokens;
    let mut entries = Vec::new();
    let mut stats = PackStats::default();

    if let Some(preamble) = system_preamble {
        let cost = counter.message_cost(preamble);
        if cost <= b_left {
            b_left -= cost;
            stats.total_tokens += cost;
            entries.push(PackedEntry {
                role: Role::System,
                content: preamble.to_string(),
                fidelity: Fidelity::Full,
                message_id: None,
            });
        }
    }

    let mut outcomes = Vec::with_capacity(history.len());
    for (message, &intent) in history.iter_mut().zip(intents) {
        let mut achieved = None;
        for rung in ladder(intent, ablations) {
            let content = match rung {
                Rung::FullText => message.text.clone(),
                Rung::Summary => summary_of(
                    message,
                    compressor,
                    config.compressed_target_tokens,
                    query_hint,
                )?,
                Rung::Stub => config.render_stub(message.id, message.role),
            };
            let cost = counter.message_cost(&content);
            if cost <= b_left {
                b_left -= cost;
                stats.total_tokens += cost;
                let fidelity = rung.fidelity();
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
                achieved = Some((fidelity, cost));
                break;
            }
        }
        match achieved {
            Some((fidelity, cost)) => outcomes.push(PackOutcome {
                message_id: message.id,
                achieved: Some(fidelity),
                tokens_spent: cost,
            }),
            None => {
                stats.dropped_count += 1;
                outcomes.push(PackOutcome {
                    message_id: message.id,
                    achieved: None,
                    tokens_spent: 0,
                });
            }
        }
    }

    Ok((PackedPrompt { entries, stats }, outcomes))
}

/// Owns one conversation's history and backends.
///
/// Calls on a single manager are externally serialized; distinct managers
/// may run fully in parallel.
pub struct FocusManager {
    history: Vec<Message>,
    config: FocusConfig,
    embedder: Box<dyn Embedder>,
    classifier: Box<dyn ImportanceClassifier>,
    compressor: Box<dyn Compressor>,
    counter: TokenCounter,
    ablations: AblationFlags,
}

impl FocusManager {
    pub fn new(
        config: FocusConfig,
        embedder: Box<dyn Embedder>,
        classifier: Box<dyn ImportanceClassifier>,
        compressor: Box<dyn Compressor>,
        counter: TokenCounter,
    ) -> Self {
        FocusManager {
            history: Vec::new(),
            config,
            embedder,
            classifier,
            compressor,
            counter,
            ablations: AblationFlags::default(),
        }
    }

    /// Fully local setup: hashing embedder, TRIVIAL-default classifier,
    /// heuristic compressor, whitespace counting.
    pub fn offline(config: FocusConfig) -> Self {
        let counter = TokenCounter::whitespace();
        FocusManager::new(
            config,
            Box::new(HashingEmbedder::default()),
            Box::new(DefaultClassifier),
            Box::new(HeuristicCompressor::new(counter.clone())),
            counter,
        )
    }

    pub fn with_ablations(mut self, ablations: AblationFlags) -> Self {
        self.ablations = ablations;
        self
    }

    pub fn with_classifier(mut self, classifier: Box<dyn ImportanceClassifier>) -> Self {
        self.classifier = classifier;
        self
    }

    pub fn history(&self) -> &[Message] {
        &self.history
    }

    pub fn config(&self) -> &FocusConfig {
        &self.config
    }

    /// Appends a message with the next id and turn index. No scoring and no
    /// backend I/O happen at add time; embeddings and labels are lazy.
    pub fn add_message(&mut self, role: Role, content: impl Into<String>) -> u64 {
        let id = self.history.len() as u64;
        let turn_index = self.history.len() as u32;
        self.history.push(Message::new(id, role, content, turn_index));
        id
    }

    fn score_current(&mut self, current_query: &str) -> Result<Vec<ScoredMessage>> {
        let query_embedding = self.embedder.embed(current_query)?;
        let current_turn = self
            .history
            .last()
            .map(|m| m.turn_index)
            .unwrap_or(0);
        score_history(
            &mut self.history,
            &query_embedding,
            self.embedder.as_ref(),
            self.classifier.as_ref(),
            &self.config,
            current_turn,
            self.ablations.no_importance,
        )
    }

    fn pack(
        &mut self,
        current_query: &str,
        budget_tokens: usize,
        system_preamble: Option<&str>,
    ) -> Result<(PackedPrompt, Vec<ScoredMessage>, Vec<PackOutcome>)> {
        let scored = self.score_current(current_query)?;
        let intents: Vec<Fidelity> = scored.iter().map(|s| s.intended).collect();
        let (prompt, outcomes) = pack_messages(
            &mut self.history,
            &intents,
            Some(current_query),
            budget_tokens,
            system_preamble,
            &self.config,
            &self.counter,
            self.compressor.as_ref(),
            &self.ablations,
        )?;
        Ok((prompt, scored, outcomes))
    }

    /// Scores the full history against the query and packs a chronological
    /// prompt whose total estimated tokens never exceed `budget_tokens`. The
    /// current query itself is not appended; callers add it as the final
    /// user turn.
    pub fn build_context(
        &mut self,
        current_query: &str,
        budget_tokens: usize,
        system_preamble: Option<&str>,
    ) -> Result<PackedPrompt> {
        let (prompt, _, _) = self.pack(current_query, budget_tokens, system_preamble)?;
        Ok(prompt)
    }

    /// Per-message decision table for the packing pass `build_context` would
    /// run. Read-only apart from the lazy caches packing itself would fill.
    pub fn explain(&mut self, current_query: &str, budget_tokens: usize) -> Result<Vec<ExplainRow>> {
        let (_, scored, outcomes) = self.pack(current_query, budget_tokens, None)?;
        Ok(scored
            .into_iter()
            .zip(outcomes)
            .map(|(s, o)| ExplainRow {
                id: s.message_id,
                sim: s.similarity,
                recency: s.recency_weight,
                label: s.label,
                score: s.score,
                intended: s.intended,
                achieved: o.achieved,
                tokens_spent: o.tokens_spent,
            })
            .collect())
    }
}
