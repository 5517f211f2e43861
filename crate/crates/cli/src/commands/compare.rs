//! `compare-models`: pool every model's samples as one candidate set, fit
//! the forests once, then compare the per-model score distributions with
//! one-sided Mann-Whitney tests in both directions.

use std::path::{Path, PathBuf};

use serde::Serialize;
use stylerank::similarity::{FileDistributions, StyleModel};
use stylerank::stats::mann_whitney_one_sided;

use crate::config::{OutputFormat, RunConfig};
use crate::error::{usage, CliResult, Outcome};
use crate::files;

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct ModelComparison {
    model_a: String,
    model_b: String,
    mean_a: f64,
    mean_b: f64,
    /// One-sided p-value for the alternative "model A scores higher".
    p_a_greater: f64,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct CompareOutput {
    models: Vec<String>,
    means: Vec<f64>,
    comparisons: Vec<ModelComparison>,
}

pub fn run(corpus_dir: &Path, model_dirs: &[PathBuf], config: &RunConfig) -> CliResult<Outcome> {
    if model_dirs.len() < 2 {
        return Err(usage("compare-models needs at least two --models directories"));
    }
    let corpus = files::load_dir(corpus_dir, &config.parse_options)?;
    files::report_failures(&corpus.failures);
    if corpus.files.is_empty() {
        return Err(usage(format!("no parseable MIDI files in {}", corpus_dir.display())));
    }
    let mut outcome = if corpus.failures.is_empty() { Outcome::Clean } else { Outcome::Partial };

    // Pool all models into one candidate set; ids get a model prefix so
    // equal file names across models stay distinct. A directory may appear
    // more than once (e.g. a model against itself as a null check), so
    // repeated names get an ordinal suffix.
    let raw_names: Vec<String> = model_dirs
        .iter()
        .map(|dir| {
            dir.file_name()
                .and_then(|s| s.to_str())
                .map(str::to_string)
                .unwrap_or_else(|| dir.display().to_string())
        })
        .collect();
    let labels: Vec<String> = raw_names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            if raw_names.iter().filter(|n| *n == name).count() > 1 {
                format!("{name}#{i}")
            } else {
                name.clone()
            }
        })
        .collect();

    let mut model_names = Vec::new();
    let mut pooled: Vec<FileDistributions> = Vec::new();
    let mut spans = Vec::new();
    for (dir, name) in model_dirs.iter().zip(labels) {
        let loaded = files::load_dir(dir, &config.parse_options)?;
        files::report_failures(&loaded.failures);
        if loaded.files.is_empty() {
            return Err(usage(format!("no parseable MIDI files in {}", dir.display())));
        }
        if !loaded.failures.is_empty() {
            outcome = outcome.and(Outcome::Partial);
        }
        let mut dists = files::to_distributions(&loaded.files, &config.features);
        for dist in &mut dists {
            dist.id = format!("{name}/{}", dist.id);
        }
        let start = pooled.len();
        pooled.extend(dists);
        spans.push(start..pooled.len());
        model_names.push(name);
    }

    let corpus_dists = files::to_distributions(&corpus.files, &config.features);
    let model = StyleModel::fit(&pooled, &corpus_dists, &config.features, &config.forest)?;
    let scores: Vec<f64> = (0..pooled.len())
        .map(|i| model.style_score(i))
        .collect::<Result<_, _>>()?;

    let per_model: Vec<Vec<f64>> =
        spans.iter().map(|span| scores[span.clone()].to_vec()).collect();
    let means: Vec<f64> =
        per_model.iter().map(|s| s.iter().sum::<f64>() / s.len() as f64).collect();

    let mut comparisons = Vec::new();
    for a in 0..per_model.len() {
        for b in 0..per_model.len() {
            if a == b {
                continue;
            }
            comparisons.push(ModelComparison {
                model_a: model_names[a].clone(),
                model_b: model_names[b].clone(),
                mean_a: means[a],
                mean_b: means[b],
                p_a_greater: mann_whitney_one_sided(&per_model[a], &per_model[b])?,
            });
        }
    }

    let output = CompareOutput { models: model_names, means, comparisons };
    let rendered = match config.format {
        OutputFormat::Json => serde_json::to_string_pretty(&output)?,
        OutputFormat::Csv => {
            let mut out = String::from("modelA,modelB,meanA,meanB,pAGreater\n");
            for c in &output.comparisons {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    c.model_a, c.model_b, c.mean_a, c.mean_b, c.p_a_greater
                ));
            }
            out
        }
    };
    files::write_output(config.out.as_deref(), &rendered)?;
    Ok(outcome)
}
