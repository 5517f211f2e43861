//! `experiment2`: how well the ranking matches human judgments. Generated
//! samples are scored against the corpus, then compared pairwise with the
//! human misclassification rates from the counts CSV at each significance
//! level, alongside a random-ranking baseline averaged over ten draws.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::Serialize;
use stylerank::similarity::StyleModel;
use stylerank::stats::{ranking_accuracy, JudgmentCounts, StatsError};

use crate::config::{OutputFormat, RunConfig};
use crate::error::{usage, CliResult, Outcome};
use crate::files;

const RANDOM_TRIALS: usize = 10;

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
struct AccuracyCell {
    alpha: f64,
    accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
struct RandomCell {
    alpha: f64,
    mean: Option<f64>,
    stderr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct Experiment2Output {
    stylerank: Vec<AccuracyCell>,
    random: Vec<RandomCell>,
    scores: BTreeMap<String, f64>,
}

fn accuracy_cell(
    scores: &BTreeMap<String, f64>,
    counts: &JudgmentCounts,
    alpha: f64,
) -> CliResult<AccuracyCell> {
    match ranking_accuracy(scores, counts, alpha) {
        Ok(accuracy) => Ok(AccuracyCell { alpha, accuracy: Some(accuracy), note: None }),
        Err(StatsError::EmptyDenominator) => Ok(AccuracyCell {
            alpha,
            accuracy: None,
            note: Some("no pair passed the significance filter".into()),
        }),
        Err(StatsError::IdMismatch { missing_scores, missing_counts }) => Err(usage(format!(
            "counts ids do not match generated files; without scores: {missing_scores:?}, \
             without counts: {missing_counts:?}"
        ))),
        Err(other) => Err(other.into()),
    }
}

pub fn run(
    corpus_dir: &Path,
    generated_dir: &Path,
    counts_path: &Path,
    config: &RunConfig,
) -> CliResult<Outcome> {
    let counts_text = std::fs::read_to_string(counts_path)
        .map_err(|e| usage(format!("cannot read counts {}: {e}", counts_path.display())))?;
    let counts = JudgmentCounts::from_csv(&counts_text).map_err(|e| usage(e.to_string()))?;

    let corpus = files::load_dir(corpus_dir, &config.parse_options)?;
    let generated = files::load_dir(generated_dir, &config.parse_options)?;
    files::report_failures(&corpus.failures);
    files::report_failures(&generated.failures);
    if corpus.files.is_empty() {
        return Err(usage(format!("no parseable MIDI files in {}", corpus_dir.display())));
    }
    if generated.files.is_empty() {
        return Err(usage(format!("no parseable MIDI files in {}", generated_dir.display())));
    }

    let corpus_dists = files::to_distributions(&corpus.files, &config.features);
    let generated_dists = files::to_distributions(&generated.files, &config.features);
    let model =
        StyleModel::fit(&generated_dists, &corpus_dists, &config.features, &config.forest)?;
    let mut scores = BTreeMap::new();
    for (index, dist) in generated_dists.iter().enumerate() {
        scores.insert(dist.id.clone(), model.style_score(index)?);
    }

    let stylerank_cells = config
        .alpha_levels
        .iter()
        .map(|&alpha| accuracy_cell(&scores, &counts, alpha))
        .collect::<CliResult<Vec<_>>>()?;

    // Random baseline: mean and standard error over ten random rankings.
    let mut random_cells = Vec::new();
    for &alpha in &config.alpha_levels {
        let mut values = Vec::new();
        for trial in 0..RANDOM_TRIALS {
            let mut rng = ChaCha12Rng::seed_from_u64(config.seed.wrapping_add(trial as u64));
            let random_scores: BTreeMap<String, f64> =
                scores.keys().map(|id| (id.clone(), rng.random_range(0.0..1.0))).collect();
            if let Ok(cell) = accuracy_cell(&random_scores, &counts, alpha) {
                if let Some(a) = cell.accuracy {
                    values.push(a);
                }
            }
        }
        if values.is_empty() {
            random_cells.push(RandomCell {
                alpha,
                mean: None,
                stderr: None,
                note: Some("no pair passed the significance filter".into()),
            });
        } else {
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            random_cells.push(RandomCell {
                alpha,
                mean: Some(mean),
                stderr: Some((var / n).sqrt()),
                note: None,
            });
        }
    }

    let output = Experiment2Output { stylerank: stylerank_cells, random: random_cells, scores };
    let rendered = match config.format {
        OutputFormat::Json => serde_json::to_string_pretty(&output)?,
        OutputFormat::Csv => {
            let mut out = String::from("method,alpha,accuracy,stderr\n");
            for cell in &output.stylerank {
                out.push_str(&format!(
                    "stylerank,{},{},\n",
                    cell.alpha,
                    cell.accuracy.map(|a| a.to_string()).unwrap_or_default()
                ));
            }
            for cell in &output.random {
                out.push_str(&format!(
                    "random,{},{},{}\n",
                    cell.alpha,
                    cell.mean.map(|a| a.to_string()).unwrap_or_default(),
                    cell.stderr.map(|a| a.to_string()).unwrap_or_default()
                ));
            }
            out
        }
    };
    files::write_output(config.out.as_deref(), &rendered)?;
    let outcome = if corpus.failures.is_empty() && generated.failures.is_empty() {
        Outcome::Clean
    } else {
        Outcome::Partial
    };
    Ok(outcome)
}
