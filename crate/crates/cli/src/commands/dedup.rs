//! `dedup`: near-duplicate detection over a directory of MIDI files.

use std::path::Path;

use serde::Serialize;
use stylerank::corpus::{dedup, PitchSignature};

use crate::config::{OutputFormat, RunConfig};
use crate::error::{usage, CliResult, Outcome};
use crate::files;

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct DedupJson {
    threshold: f64,
    kept: Vec<String>,
    removed: Vec<String>,
    pairs: Vec<serde_json::Value>,
}

pub fn run(dir: &Path, threshold: f64, config: &RunConfig) -> CliResult<Outcome> {
    let loaded = files::load_dir(dir, &config.parse_options)?;
    files::report_failures(&loaded.failures);
    let names: Vec<String> = loaded
        .files
        .iter()
        .map(|f| {
            f.path.file_name().and_then(|s| s.to_str()).unwrap_or(&f.id).to_string()
        })
        .collect();
    let signatures: Vec<PitchSignature> =
        loaded.files.iter().map(|f| PitchSignature::from_notes(&f.notes)).collect();
    let outcome = dedup(&signatures, threshold).map_err(|e| usage(e.to_string()))?;

    let rendered = match config.format {
        OutputFormat::Csv => outcome.to_csv(&names),
        OutputFormat::Json => {
            let kept: Vec<String> = outcome.kept.iter().map(|&i| names[i].clone()).collect();
            let removed: Vec<String> = (0..names.len())
                .filter(|i| !outcome.kept.contains(i))
                .map(|i| names[i].clone())
                .collect();
            let pairs = outcome
                .pairs
                .iter()
                .map(|p| {
                    serde_json::json!({
                        "fileA": names[p.file_a],
                        "fileB": names[p.file_b],
                        "headDist": p.head_dist,
                        "tailDist": p.tail_dist,
                        "removed": p.removed,
                    })
                })
                .collect();
            let doc = DedupJson { threshold, kept, removed, pairs };
            serde_json::to_string_pretty(&doc)?
        }
    };
    files::write_output(config.out.as_deref(), &rendered)?;
    Ok(if loaded.failures.is_empty() { Outcome::Clean } else { Outcome::Partial })
}
