//! Aggregation of run results into per-(method, scenario) summary rows.

use std::path::Path;

use serde::Serialize;

use crate::baselines::Method;
use crate::bench::run::RunResult;
use crate::error::{AfmError, Result};

/// Floats are rounded to four decimals before serialization so that repeated
/// runs over the same results serialize byte-identically.
fn round4(x: f64) -> f64 {
    (x * 10_000.0).round() / 10_000.0
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population standard deviation.
fn std_dev(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64;
    var.max(0.0).sqrt()
}

/// Aggregate over all seeds of one method on one scenario.
#[derive(Debug, Clone, Serialize)]
pub struct SummaryRow {
    pub method: Method,
    pub scenario: String,
    pub passes: usize,
    pub total: usize,
    pub pass_rate: f64,
    pub mean_graded_turn_tokens: f64,
    pub std_graded_turn_tokens: f64,
    pub mean_latency_seconds: f64,
    pub mean_full: f64,
    pub mean_compressed: f64,
    pub mean_stub: f64,
    pub mean_dropped: f64,
}

impl SummaryRow {
    /// Human-readable pass column, e.g. `25/30 (83.3%)`.
    pub fn pass_display(&self) -> String {
        let pct = 100.0 * self.passes as f64 / self.total as f64;
        format!("{}/{} ({:.1}%)", self.passes, self.total, pct)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
}

impl Summary {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "method,scenario,passes,total,pass_rate,mean_graded_turn_tokens,\
             std_graded_turn_tokens,mean_latency_seconds,mean_full,mean_compressed,\
             mean_stub,mean_dropped\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{}\n",
                r.method,
                r.scenario,
                r.passes,
                r.total,
                r.pass_rate,
                r.mean_graded_turn_tokens,
                r.std_graded_turn_tokens,
                r.mean_latency_seconds,
                r.mean_full,
                r.mean_compressed,
                r.mean_stub,
                r.mean_dropped
            ));
        }
        out
    }

    /// Writes `summary.json` and `summary.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("summary.json"), self.to_json())?;
        std::fs::write(dir.join("summary.csv"), self.to_csv())?;
        Ok(())
    }
}

/// Groups results by (method, scenario) in first-seen order.
pub fn summarize(results: &[RunResult]) -> Result<Summary> {
    if results.is_empty() {
        return Err(AfmError::EmptyResults);
    }
    let mut keys: Vec<(Method, String)> = Vec::new();
    for r in results {
        let key = (r.method, r.scenario.clone());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    let rows = keys
        .into_iter()
        .map(|(method, scenario)| {
            let group: Vec<&RunResult> = results
                .iter()
                .filter(|r| r.method == method && r.scenario == scenario)
                .collect();
            let passes = group.iter().filter(|r| r.passed).count();
            let total = group.len();
            let tokens: Vec<f64> = group
                .iter()
                .map(|r| r.graded_turn_tokens as f64)
                .collect();
            let latency: Vec<f64> = group.iter().map(|r| r.latency_seconds).collect();
            let of = |f: fn(&RunResult) -> usize| -> f64 {
                round4(mean(&group.iter().map(|r| f(r) as f64).collect::<Vec<_>>()))
            };
            SummaryRow {
                method,
                scenario,
                passes,
                total,
                pass_rate: round4(passes as f64 / total as f64),
                mean_graded_turn_tokens: round4(mean(&tokens)),
                std_graded_turn_tokens: round4(std_dev(&tokens)),
                mean_latency_seconds: round4(mean(&latency)),
                mean_full: of(|r| r.stats.full_count),
                mean_compressed: of(|r| r.stats.compressed_count),
                mean_stub: of(|r| r.stats.stub_count),
                mean_dropped: of(|r| r.stats.dropped_count),
            }
        })
        .collect();
    Ok(Summary { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PackStats;

    fn result(method: Method, scenario: &str, seed: u64, passed: bool, tokens: usize) -> RunResult {
        RunResult {
            method,
            scenario: scenario.to_string(),
            seed,
            passed,
            graded_turn_tokens: tokens,
            latency_seconds: 0.0,
            transcript_path: None,
            stats: PackStats {
                total_tokens: tokens,
                full_count: 1,
                ..Default::default()
            },
        }
    }

    #[test]
    fn empty_results_error() {
        assert!(matches!(summarize(&[]), Err(AfmError::EmptyResults)));
    }

    #[test]
    fn groups_by_method_and_scenario_in_order() {
        let results = vec![
            result(Method::Afm, "allergy", 0, true, 150),
            result(Method::Naive, "allergy", 0, false, 280),
            result(Method::Afm, "allergy", 1, true, 150),
        ];
        let s = summarize(&results).unwrap();
        assert_eq!(s.rows.len(), 2);
        assert_eq!(s.rows[0].method, Method::Afm);
        assert_eq!(s.rows[0].passes, 2);
        assert_eq!(s.rows[0].total, 2);
        assert_eq!(s.rows[1].pass_rate, 0.0);
    }

    #[test]
    fn pass_display_format() {
        let mut results = Vec::new();
        for seed in 0..30 {
            results.push(result(Method::Afm, "s", seed, seed < 25, 286));
        }
        let s = summarize(&results).unwrap();
        assert_eq!(s.rows[0].pass_display(), "25/30 (83.3%)");
    }

    #[test]
    fn identical_runs_have_zero_std() {
        let results = vec![
            result(Method::Afm, "s", 0, true, 150),
            result(Method::Afm, "s", 1, true, 150),
        ];
        let s = summarize(&results).unwrap();
        assert_eq!(s.rows[0].std_graded_turn_tokens, 0.0);
        assert_eq!(s.rows[0].mean_graded_turn_tokens, 150.0);
    }

    #[test]
    fn json_and_csv_are_stable_across_calls() {
        let results = vec![result(Method::Recency, "s", 0, true, 99)];
        let s1 = summarize(&results).unwrap();
        let s2 = summarize(&results).unwrap();
        assert_eq!(s1.to_json(), s2.to_json());
        assert_eq!(s1.to_csv(), s2.to_csv());
        assert!(s1.to_csv().starts_with("method,scenario,"));
        assert_eq!(s1.to_csv().lines().count(), 2);
    }
}
