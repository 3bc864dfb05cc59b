//! Compressed representations of messages under a target token budget.
//!
//! The heuristic compressor is fully local and extractive: sentences are
//! ranked by lexical overlap with a query hint, a mild over-length penalty,
//! and a positional bonus for the first two sentences, then re-emitted in
//! original order and hard-truncated to the target. It enforces the budget
//! deterministically. The remote compressor trusts the model to follow the
//! budget instruction and does not re-check or truncate the reply.

use std::collections::HashSet;
use std::sync::Arc;

use crate::embed::lex_tokens;
use crate::error::Result;
use crate::gateway::{ChatMessage, ChatRequest, Gateway};
use crate::model::{Message, Role};
use crate::tokenizer::TokenCounter;

/// Abstractive-summary prompt shipped as a versioned asset.
pub const COMPRESSOR_PROMPT: &str = include_str!("../assets/prompts/compressor.txt");

pub trait Compressor {
    fn compress(&self, text: &str, target_tokens: usize, query_hint: Option<&str>)
        -> Result<String>;
}

/// Local extractive compressor.
#[derive(Debug, Clone)]
pub struct HeuristicCompressor {
    counter: TokenCounter,
    /// Penalty per token past `overlength_threshold`.
    pub overlength_penalty: f64,
    /// Bonus for the first two sentences.
    pub lead_bonus: f64,
    pub overlength_threshold: usize,
}

impl HeuristicCompressor {
    pub fn new(counter: TokenCounter) -> Self {
        HeuristicCompressor {
            counter,
            overlength_penalty: 0.05,
            lead_bonus: 0.5,
            overlength_threshold: 25,
        }
    }
}

/// Splits on sentence terminators (. ! ? and newline), keeping the
/// terminator with the sentence; empty fragments are discarded.
fn split_sentences(text: &str) -> Vec<&str> {
    let mut sentences = Vec::new();
    let mut start = 0;
    for (i, ch) in text.char_indices() {
        if matches!(ch, '.' | '!' | '?' | '\n') {
            let end = i + ch.len_utf8();
            let frag = text[start..end].trim();
            if !frag.is_empty() {
                sentences.push(frag);
            }
            start = end;
        }
    }
    let tail = text[start..].trim();
    if !tail.is_empty() {
        sentences.push(tail);
    }
    sentences
}

impl Compressor for HeuristicCompressor {
    fn compress(
        &self,
        text: &str,
        target_tokens: usize,
        query_hint: Option<&str>,
    ) -> Result<String> {
        if text.trim().is_empty() {
            return Ok(String::new());
        }
        let hint_tokens: HashSet<String> = query_hint
            .map(|h| lex_tokens(h).into_iter().collect())
            .unwrap_or_default();

        let sentences = split_sentences(text);
        let mut scored: Vec<(usize, f64, usize)> = sentences
            .iter()
            .enumerate()
            .map(|(idx, sent)| {
                let tokens: HashSet<String> = lex_tokens(sent).into_iter().collect();
                let overlap = tokens.intersection(&hint_tokens).count() as f64;
                let sent_tokens = self.counter.count(sent);
                let over = sent_tokens.saturating_sub(self.overlength_threshold) as f64;
                let lead = if idx < 2 { self.lead_bonus } else { 0.0 };
                let score = overlap - self.overlength_penalty * over + lead;
                (idx, score, sent_tokens)
            })
            .collect();
        // highest score first, ties broken toward the earlier sentence
        scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));

        let mut remaining = target_tokens;
        let mut selected: Vec<usize> = Vec::new();
        for &(idx, _, sent_tokens) in &scored {
            if sent_tokens <= remaining {
                selected.push(idx);
                remaining -= sent_tokens;
            }
        }
        // Under very tight targets nothing whole fits; keep the top-ranked
        // sentence and let the truncation pass below cut it down.
        if selected.is_empty() {
            selected.push(scored[0].0);
        }
        selected.sort_unstable();

        let mut out = selected
            .iter()
            .map(|&i| sentences[i])
            .collect::<Vec<_>>()
            .join(" ");
        while self.counter.count(&out) > target_tokens {
            match out.trim_end().rfind(char::is_whitespace) {
                Some(pos) => out.truncate(pos),
                None => {
                    out.clear();
                }
            }
        }
        Ok(out.trim_end().to_string())
    }
}

/// Remote abstractive compressor; the reply is returned verbatim.
pub struct RemoteCompressor {
    gateway: Arc<dyn Gateway>,
    model: String,
}

impl RemoteCompressor {
    pub fn new(gateway: Arc<dyn Gateway>, model: impl Into<String>) -> Self {
        RemoteCompressor {
            gateway,
            model: model.into(),
        }
    }
}

impl Compressor for RemoteCompressor {
    fn compress(
        &self,
        text: &str,
        target_tokens: usize,
        _query_hint: Option<&str>,
    ) -> Result<String> {
        let prompt = COMPRESSOR_PROMPT
            .replace("{target}", &target_tokens.to_string())
            .replace("{text}", text);
        let reply = self.gateway.chat(&ChatRequest {
            messages: vec![ChatMessage {
                role: Role::User,
                content: prompt,
            }],
            model: self.model.clone(),
            temperature: 0.0,
            seed: None,
        })?;
        Ok(reply.text)
    }
}

/// Returns the cached summary, compressing once on first use. The cache does
/// not key on the target: a changed target reuses the existing summary.
pub fn summary_of(
    message: &mut Message,
    compressor: &dyn Compressor,
    target_tokens: usize,
    query_hint: Option<&str>,
) -> Result<String> {
    if let Some(summary) = &message.summary {
        return Ok(summary.clone());
    }
    let summary = compressor.compress(&message.text, target_tokens, query_hint)?;
    message.summary = Some(summary.clone());
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{messages_digest, StubGateway};
    use proptest::prelude::*;
    use std::cell::Cell;

    fn compressor() -> HeuristicCompressor {
        HeuristicCompressor::new(TokenCounter::whitespace())
    }

    #[test]
    fn short_sentence_with_slack_is_verbatim() {
        let c = compressor();
        assert_eq!(c.compress("Keep this line.", 50, None).unwrap(), "Keep this line.");
    }

    #[test]
    fn empty_text_gives_empty_summary() {
        let c = compressor();
        assert_eq!(c.compress("", 10, None).unwrap(), "");
        assert_eq!(c.compress("   \t ", 10, None).unwrap(), "");
    }

    #[test]
    fn hint_overlap_dominates_selection() {
        let c = compressor();
        let text = "The museum opens at nine. Street vendors sell mango sticky rice near the pier.";
        // budget fits only one sentence; hint shares tokens only with the second
        let out = c
            .compress(text, 12, Some("where can I buy mango sticky rice"))
            .unwrap();
        assert_eq!(out, "Street vendors sell mango sticky rice near the pier.");
    }

    #[test]
    fn tight_target_truncates_top_sentence() {
        let c = compressor();
        let out = c.compress("one two three four five six", 3, None).unwrap();
        assert_eq!(out, "one two three");
    }

    #[test]
    fn selected_sentences_keep_original_order() {
        let c = compressor();
        let text = "Alpha first. Beta second. Gamma third.";
        let out = c.compress(text, 6, Some("gamma alpha")).unwrap();
        let a = out.find("Alpha").unwrap();
        let g = out.find("Gamma").unwrap();
        assert!(a < g);
    }

    #[test]
    fn remote_compressor_passes_reply_through_untouched() {
        let prompt = COMPRESSOR_PROMPT
            .replace("{target}", "3")
            .replace("{text}", "some long text");
        let digest = messages_digest(&[ChatMessage {
            role: Role::User,
            content: prompt,
        }]);
        let long_reply = "this reply is far longer than three tokens and stays as-is";
        let stub = Arc::new(StubGateway::new().respond(digest, long_reply));
        let c = RemoteCompressor::new(stub, "m");
        assert_eq!(c.compress("some long text", 3, None).unwrap(), long_reply);
    }

    #[test]
    fn summary_cache_compresses_once() {
        struct Counting(Cell<usize>);
        impl Compressor for Counting {
            fn compress(&self, _t: &str, _n: usize, _h: Option<&str>) -> Result<String> {
                self.0.set(self.0.get() + 1);
                Ok("S".to_string())
            }
        }
        let c = Counting(Cell::new(0));
        let mut m = Message::new(0, Role::User, "a b c", 0);
        for _ in 0..3 {
            assert_eq!(summary_of(&mut m, &c, 5, None).unwrap(), "S");
        }
        assert_eq!(c.0.get(), 1);
    }

    proptest! {
        #[test]
        fn output_never_exceeds_target(
            text in "[a-f .!?\\n]{0,300}",
            target in 1usize..40,
        ) {
            let c = compressor();
            let counter = TokenCounter::whitespace();
            let out = c.compress(&text, target, Some("a b c")).unwrap();
            prop_assert!(counter.count(&out) <= target);
            // determinism
            prop_assert_eq!(out, c.compress(&text, target, Some("a b c")).unwrap());
        }
    }
}
