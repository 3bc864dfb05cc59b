//! Per-message importance labels.
//!
//! Three backends: the content-blind offline default (everything TRIVIAL),
//! an ordered regex rule table for deterministic live-free runs, and a
//! remote chat-model classifier. Labels are cached on the message, so each
//! backend is consulted at most once per message.

use std::path::Path;
use std::sync::Arc;

use regex::Regex;
use serde::Deserialize;

use crate::error::{AfmError, Result};
use crate::gateway::{ChatMessage, ChatRequest, Gateway};
use crate::model::{ImportanceLabel, Message, Role};

/// Classifier prompt shipped as a versioned asset.
pub const CLASSIFIER_PROMPT: &str = include_str!("../assets/prompts/importance_classifier.txt");

/// Default rule table shipped as a versioned asset.
pub const BUNDLED_RULES: &str = include_str!("../assets/importance_rules.json");

pub trait ImportanceClassifier {
    fn classify(&self, message: &Message) -> Result<ImportanceLabel>;
}

/// Offline default: every message is TRIVIAL, no I/O ever.
#[derive(Debug, Clone, Copy, Default)]
pub struct DefaultClassifier;

impl ImportanceClassifier for DefaultClassifier {
    fn classify(&self, _message: &Message) -> Result<ImportanceLabel> {
        Ok(ImportanceLabel::Trivial)
    }
}

/// Ordered rule table; the first matching pattern wins, unmatched text is
/// TRIVIAL.
#[derive(Debug, Clone)]
pub struct RulesClassifier {
    rules: Vec<(Regex, ImportanceLabel)>,
}

#[derive(Deserialize)]
struct RawRule {
    pattern: String,
    label: ImportanceLabel,
}

impl RulesClassifier {
    pub fn from_json_str(data: &str) -> Result<Self> {
        let raw: Vec<RawRule> =
            serde_json::from_str(data).map_err(|e| AfmError::InvalidConfig(e.to_string()))?;
        let mut rules = Vec::with_capacity(raw.len());
        for r in raw {
            let re = Regex::new(&r.pattern)
                .map_err(|e| AfmError::InvalidConfig(format!("rule {:?}: {e}", r.pattern)))?;
            rules.push((re, r.label));
        }
        Ok(RulesClassifier { rules })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let data = std::fs::read_to_string(path).map_err(|e| AfmError::AssetLoad {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::from_json_str(&data)
    }

    pub fn bundled() -> Self {
        Self::from_json_str(BUNDLED_RULES).expect("bundled rules are valid")
    }
}

impl ImportanceClassifier for RulesClassifier {
    fn classify(&self, message: &Message) -> Result<ImportanceLabel> {
        for (re, label) in &self.rules {
            if re.is_match(&message.text) {
                return Ok(*label);
            }
        }
        Ok(ImportanceLabel::Trivial)
    }
}

/// Remote classifier: one fixed-prompt chat call per message, reply parsed
/// with the first-label-found rule. Parse failures surface to the caller
/// rather than being mapped to TRIVIAL.
pub struct RemoteClassifier {
    gateway: Arc<dyn Gateway>,
    model: String,
}

impl RemoteClassifier {
    pub fn new(gateway: Arc<dyn Gateway>, model: impl Into<String>) -> Self {
        RemoteClassifier {
            gateway,
            model: model.into(),
        }
    }
}

impl ImportanceClassifier for RemoteClassifier {
    fn classify(&self, message: &Message) -> Result<ImportanceLabel> {
        let prompt = CLASSIFIER_PROMPT.replace("{message}", &message.text);
        let reply = self.gateway.chat(&ChatRequest {
            messages: vec![ChatMessage {
                role: Role::User,
                content: prompt,
            }],
            model: self.model.clone(),
            temperature: 0.0,
            seed: None,
        })?;
        parse_label(&reply.text)
    }
}

/// Earliest occurrence of CRITICAL / RELEVANT / TRIVIAL (case-insensitive)
/// wins; a reply with no label at all is an error.
pub fn parse_label(reply: &str) -> Result<ImportanceLabel> {
    let lower = reply.to_lowercase();
    let candidates = [
        ("critical", ImportanceLabel::Critical),
        ("relevant", ImportanceLabel::Relevant),
        ("trivial", ImportanceLabel::Trivial),
    ];
    candidates
        .iter()
        .filter_map(|(needle, label)| lower.find(needle).map(|pos| (pos, *label)))
        .min_by_key(|(pos, _)| *pos)
        .map(|(_, label)| label)
        .ok_or_else(|| AfmError::LabelParse(reply.to_string()))
}

/// Returns the cached label, classifying and storing it on first use.
pub fn label_of(
    message: &mut Message,
    classifier: &dyn ImportanceClassifier,
) -> Result<ImportanceLabel> {
    if let Some(label) = message.importance {
        return Ok(label);
    }
    let label = classifier.classify(message)?;
    message.importance = Some(label);
    Ok(label)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{messages_digest, StubGateway};
    use std::cell::Cell;

    fn msg(text: &str) -> Message {
        Message::new(0, Role::User, text, 0)
    }

    #[test]
    fn default_is_content_blind_trivial() {
        let c = DefaultClassifier;
        assert_eq!(c.classify(&msg("hello")).unwrap(), ImportanceLabel::Trivial);
        assert_eq!(
            c.classify(&msg("I have a peanut allergy")).unwrap(),
            ImportanceLabel::Trivial
        );
    }

    #[test]
    fn parse_label_examples() {
        assert_eq!(parse_label("CRITICAL").unwrap(), ImportanceLabel::Critical);
        assert_eq!(
            parse_label("This is TRIVIAL small talk.").unwrap(),
            ImportanceLabel::Trivial
        );
        assert!(matches!(parse_label("maybe?"), Err(AfmError::LabelParse(_))));
    }

    #[test]
    fn parse_label_first_occurrence_wins() {
        assert_eq!(
            parse_label("relevant, definitely not critical").unwrap(),
            ImportanceLabel::Relevant
        );
    }

    #[test]
    fn rules_first_match_wins() {
        let c = RulesClassifier::from_json_str(
            r#"[
                {"pattern": "(?i)allerg|must not|illegal", "label": "CRITICAL"},
                {"pattern": "(?i)allerg", "label": "TRIVIAL"}
            ]"#,
        )
        .unwrap();
        assert_eq!(
            c.classify(&msg("my peanut ALLERGY")).unwrap(),
            ImportanceLabel::Critical
        );
        assert_eq!(
            c.classify(&msg("nice weather")).unwrap(),
            ImportanceLabel::Trivial
        );
    }

    #[test]
    fn bundled_rules_load_and_flag_safety_text() {
        let c = RulesClassifier::bundled();
        assert_eq!(
            c.classify(&msg("I have a severe peanut allergy")).unwrap(),
            ImportanceLabel::Critical
        );
    }

    #[test]
    fn remote_classifier_parses_stub_reply() {
        let m = msg("I have a severe peanut allergy");
        let prompt = CLASSIFIER_PROMPT.replace("{message}", &m.text);
        let digest = messages_digest(&[ChatMessage {
            role: Role::User,
            content: prompt,
        }]);
        let stub = Arc::new(StubGateway::new().respond(digest, "CRITICAL"));
        let c = RemoteClassifier::new(stub, "m");
        assert_eq!(c.classify(&m).unwrap(), ImportanceLabel::Critical);
    }

    #[test]
    fn label_cache_limits_backend_calls() {
        struct Counting(Cell<usize>);
        impl ImportanceClassifier for Counting {
            fn classify(&self, _m: &Message) -> Result<ImportanceLabel> {
                self.0.set(self.0.get() + 1);
                Ok(ImportanceLabel::Relevant)
            }
        }
        let c = Counting(Cell::new(0));
        let mut m = msg("hi");
        for _ in 0..4 {
            assert_eq!(label_of(&mut m, &c).unwrap(), ImportanceLabel::Relevant);
        }
        assert_eq!(c.0.get(), 1);
    }
}
