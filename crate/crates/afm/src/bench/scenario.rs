//! Scenario schema and validation.

use std::path::Path;

use regex::RegexBuilder;
use serde::{Deserialize, Serialize};

use crate::error::{AfmError, Result};
use crate::model::Role;

pub const BUNDLED_ALLERGY: &str = include_str!("../../assets/scenarios/allergy.json");
pub const BUNDLED_TAX: &str = include_str!("../../assets/scenarios/tax.json");

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptTurn {
    pub role: Role,
    pub text: String,
    #[serde(default)]
    pub is_constraint: bool,
    #[serde(default)]
    pub is_graded: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GradeMode {
    #[default]
    Rules,
    Judge,
}

/// Strict pass semantics: every recall pattern must match the final response
/// and no violation pattern may match.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradeSpec {
    pub recall_patterns: Vec<String>,
    #[serde(default)]
    pub violation_patterns: Vec<String>,
    #[serde(default)]
    pub mode: GradeMode,
}

/// Deterministic stand-in for a live model in offline runs: the response is
/// `grounded_response` when the packed prompt carries a FULL-fidelity entry
/// matching `constraint_probe`, otherwise `ungrounded_response`. This models
/// salience: constraints that survive only in degraded form do not steer the
/// simulated generation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OfflineModel {
    pub constraint_probe: String,
    pub grounded_response: String,
    pub ungrounded_response: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub system_prompt: String,
    pub turns: Vec<ScriptTurn>,
    pub grading: GradeSpec,
    pub offline_model: OfflineModel,
}

fn schema_err(origin: &str, field: &str, reason: impl Into<String>) -> AfmError {
    AfmError::Schema {
        path: format!("{origin}:{field}"),
        reason: reason.into(),
    }
}

pub(crate) fn compile_ci(pattern: &str) -> Result<regex::Regex> {
    RegexBuilder::new(pattern)
        .case_insensitive(true)
        .build()
        .map_err(|e| AfmError::InvalidArg(format!("bad pattern {pattern:?}: {e}")))
}

impl Scenario {
    pub fn from_json_str(data: &str, origin: &str) -> Result<Scenario> {
        let scenario: Scenario = serde_json::from_str(data)
            .map_err(|e| schema_err(origin, "<json>", e.to_string()))?;
        scenario.validate(origin)?;
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<Scenario> {
        let data = std::fs::read_to_string(path).map_err(|e| AfmError::AssetLoad {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Scenario::from_json_str(&data, &path.display().to_string())
    }

    /// Bundled scenarios by name: `allergy` or `tax`.
    pub fn bundled(name: &str) -> Option<Scenario> {
        let data = match name {
            "allergy" => BUNDLED_ALLERGY,
            "tax" => BUNDLED_TAX,
            _ => return None,
        };
        Some(Scenario::from_json_str(data, name).expect("bundled scenario is valid"))
    }

    pub fn validate(&self, origin: &str) -> Result<()> {
        let graded: Vec<usize> = self
            .turns
            .iter()
            .enumerate()
            .filter(|(_, t)| t.is_graded)
            .map(|(i, _)| i)
            .collect();
        if graded.len() != 1 {
            return Err(schema_err(
                origin,
                "turns",
                format!("expected exactly one graded turn, found {}", graded.len()),
            ));
        }
        let graded_idx = graded[0];
        if graded_idx != self.turns.len() - 1 {
            return Err(schema_err(
                origin,
                &format!("turns[{graded_idx}]"),
                "graded turn must be the final turn",
            ));
        }
        if self.turns[graded_idx].role != Role::User {
            return Err(schema_err(
                origin,
                &format!("turns[{graded_idx}].role"),
                "graded turn must be a user turn",
            ));
        }
        if !self.turns[..graded_idx].iter().any(|t| t.is_constraint) {
            return Err(schema_err(
                origin,
                "turns",
                "at least one constraint turn must precede the graded turn",
            ));
        }
        if self.grading.recall_patterns.is_empty() {
            return Err(schema_err(
                origin,
                "grading.recall_patterns",
                "must be nonempty",
            ));
        }
        for p in self
            .grading
            .recall_patterns
            .iter()
            .chain(&self.grading.violation_patterns)
            .chain(std::iter::once(&self.offline_model.constraint_probe))
        {
            compile_ci(p).map_err(|e| schema_err(origin, "patterns", e.to_string()))?;
        }
        Ok(())
    }

    pub fn graded_index(&self) -> usize {
        self.turns
            .iter()
            .position(|t| t.is_graded)
            .expect("validated scenario has a graded turn")
    }

    /// All scripted turns before the graded one.
    pub fn history_turns(&self) -> &[ScriptTurn] {
        &self.turns[..self.graded_index()]
    }

    pub fn graded_turn(&self) -> &ScriptTurn {
        &self.turns[self.graded_index()]
    }
}
