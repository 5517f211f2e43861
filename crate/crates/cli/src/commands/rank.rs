//! `rank`: the full pipeline — extract, build vocabularies, fit one forest
//! per feature, score every candidate against the corpus.

use std::path::Path;

use stylerank::similarity::{ScoreReport, StyleModel};

use crate::config::{OutputFormat, RunConfig};
use crate::error::{usage, CliResult, Outcome};
use crate::files;

pub fn build_report(
    corpus_dir: &Path,
    candidate_dir: &Path,
    config: &RunConfig,
) -> CliResult<(ScoreReport, Outcome)> {
    let corpus = files::load_dir(corpus_dir, &config.parse_options)?;
    let candidates = files::load_dir(candidate_dir, &config.parse_options)?;
    files::report_failures(&corpus.failures);
    files::report_failures(&candidates.failures);
    if corpus.files.is_empty() {
        return Err(usage(format!("no parseable MIDI files in {}", corpus_dir.display())));
    }
    if candidates.files.is_empty() {
        return Err(usage(format!("no parseable MIDI files in {}", candidate_dir.display())));
    }

    let corpus_dists = files::to_distributions(&corpus.files, &config.features);
    let candidate_dists = files::to_distributions(&candidates.files, &config.features);
    let model = StyleModel::fit(&candidate_dists, &corpus_dists, &config.features, &config.forest)?;
    let report = model.score_report()?;
    let outcome = if corpus.failures.is_empty() && candidates.failures.is_empty() {
        Outcome::Clean
    } else {
        Outcome::Partial
    };
    Ok((report, outcome))
}

pub fn run(corpus_dir: &Path, candidate_dir: &Path, config: &RunConfig) -> CliResult<Outcome> {
    let (report, outcome) = build_report(corpus_dir, candidate_dir, config)?;
    let rendered = match config.format {
        OutputFormat::Json => report.to_json(),
        OutputFormat::Csv => report.to_csv(),
    };
    files::write_output(config.out.as_deref(), &rendered)?;
    Ok(outcome)
}
