//! Strict pass/fail grading of a final response.

use crate::bench::scenario::{compile_ci, GradeMode, GradeSpec};
use crate::error::{AfmError, Result};
use crate::gateway::{ChatMessage, ChatRequest, Gateway};
use crate::model::Role;

/// Judge prompt shipped as a versioned asset.
pub const JUDGE_PROMPT: &str = include_str!("../../assets/prompts/judge.txt");

/// A response passes only when every recall pattern matches it and no
/// violation pattern does. Patterns are case-insensitive regexes.
pub fn grade_rules(response: &str, spec: &GradeSpec) -> Result<bool> {
    for pattern in &spec.recall_patterns {
        if !compile_ci(pattern)?.is_match(response) {
            return Ok(false);
        }
    }
    for pattern in &spec.violation_patterns {
        if compile_ci(pattern)?.is_match(response) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Model-judged grading: one chat call at temperature 0. Only a reply that is
/// exactly PASS or FAIL (case-insensitive, surrounding whitespace ignored) is
/// accepted; anything else is a parse error, never a silent fail.
pub fn grade_judge(
    response: &str,
    spec: &GradeSpec,
    gateway: &dyn Gateway,
    model: &str,
) -> Result<bool> {
    let patterns = spec.recall_patterns.join("\n");
    let prompt = JUDGE_PROMPT
        .replace("{patterns}", &patterns)
        .replace("{response}", response);
    let reply = gateway.chat(&ChatRequest {
        messages: vec![ChatMessage {
            role: Role::User,
            content: prompt,
        }],
        model: model.to_string(),
        temperature: 0.0,
        seed: None,
    })?;
    match reply.text.trim() {
        v if v.eq_ignore_ascii_case("PASS") => Ok(true),
        v if v.eq_ignore_ascii_case("FAIL") => Ok(false),
        _ => Err(AfmError::JudgeParse(reply.text)),
    }
}

/// Dispatches on the scenario's grading mode. Judge mode requires a gateway.
pub fn grade(
    response: &str,
    spec: &GradeSpec,
    gateway: Option<(&dyn Gateway, &str)>,
) -> Result<bool> {
    match spec.mode {
        GradeMode::Rules => grade_rules(response, spec),
        GradeMode::Judge => match gateway {
            Some((gw, model)) => grade_judge(response, spec, gw, model),
            None => Err(AfmError::InvalidArg(
                "judge grading requires a live gateway".to_string(),
            )),
        },
    }
}
