//! Scripted multi-turn benchmark harness: scenario loading, strict grading,
//! seeded runs, ablations, transcript logging, and summary tables.

mod grade;
mod run;
mod scenario;
mod summary;

pub use grade::{grade, grade_judge, grade_rules, JUDGE_PROMPT};
pub use run::{replay_graded_prompt, run_benchmark, BenchOptions, RunResult, TranscriptEvent};
pub use scenario::{GradeMode, GradeSpec, OfflineModel, Scenario, ScriptTurn};
pub use summary::{summarize, Summary, SummaryRow};
