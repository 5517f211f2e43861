//! `filter`: partition a ranking report by a global-score threshold.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use stylerank::similarity::ScoreReport;

use crate::config::{OutputFormat, RunConfig};
use crate::error::{usage, CliResult, Outcome};
use crate::files;

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct FilterOutput {
    threshold: f64,
    kept: Vec<String>,
    discarded: Vec<String>,
    scores: BTreeMap<String, f64>,
}

pub fn run(report_path: &Path, threshold: f64, config: &RunConfig) -> CliResult<Outcome> {
    let text = std::fs::read_to_string(report_path)
        .map_err(|e| usage(format!("cannot read report {}: {e}", report_path.display())))?;
    let report = ScoreReport::from_json(&text)
        .map_err(|e| usage(format!("bad report {}: {e}", report_path.display())))?;

    // Ranking order keeps the partition stable and readable.
    let (kept, discarded): (Vec<String>, Vec<String>) = report
        .ranking
        .iter()
        .cloned()
        .partition(|id| report.per_candidate[id] >= threshold);

    let output = FilterOutput { threshold, kept, discarded, scores: report.per_candidate.clone() };
    let rendered = match config.format {
        OutputFormat::Json => serde_json::to_string_pretty(&output)?,
        OutputFormat::Csv => {
            let mut out = String::from("candidateId,globalScore,kept\n");
            for id in &report.ranking {
                let score = report.per_candidate[id];
                out.push_str(&format!("{id},{score},{}\n", score >= threshold));
            }
            out
        }
    };
    files::write_output(config.out.as_deref(), &rendered)?;
    Ok(Outcome::Clean)
}
