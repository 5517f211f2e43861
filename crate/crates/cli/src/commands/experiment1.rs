//! `experiment1`: repeated discrimination trials between two styles. Each
//! trial carves a corpus and a same-style candidate set out of style A plus
//! an off-style candidate set out of style B, fits fresh forests, and tests
//! whether same-style candidates score higher. Raw cosine, Manhattan and
//! Euclidean distances over the identical vectorized inputs run as
//! baselines. Summaries report the fraction of trials with the means
//! ordered correctly, with p below 0.05, and with p significant after
//! false-discovery-rate and Bonferroni corrections across the batch.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use stylerank::similarity::FileDistributions;
use stylerank::stats::{
    benjamini_yekutieli, bonferroni, run_baseline_trial, run_style_trial, DistanceKind,
    TrialOutcome,
};

use crate::config::{OutputFormat, RunConfig};
use crate::error::{usage, CliError, CliResult, Outcome};
use crate::files;

const METHODS: [&str; 4] = ["stylerank", "cosine", "manhattan", "euclidean"];
const SIGNIFICANCE: f64 = 0.05;

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TrialRow {
    pub trial_index: usize,
    pub mean_x: f64,
    pub mean_y: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MethodSummary {
    pub method: String,
    /// Fraction of trials with the same-style mean above the off-style mean.
    pub mu: f64,
    /// Fraction of trials with p below 0.05.
    pub sig: f64,
    /// Fraction significant after Benjamini-Yekutieli across the batch.
    pub fdr: f64,
    /// Fraction significant after Bonferroni across the batch.
    pub bon: f64,
    pub trials: Vec<TrialRow>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SizeBlock {
    pub size: usize,
    pub methods: Vec<MethodSummary>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Experiment1Output {
    pub trials: usize,
    pub sizes: Vec<SizeBlock>,
}

fn summarize(method: &str, outcomes: Vec<TrialOutcome>) -> MethodSummary {
    let n = outcomes.len() as f64;
    let p_values: Vec<f64> = outcomes.iter().map(|t| t.p_value).collect();
    let fdr_flags = benjamini_yekutieli(&p_values, SIGNIFICANCE);
    let bon_flags = bonferroni(&p_values, SIGNIFICANCE);
    MethodSummary {
        method: method.to_string(),
        mu: outcomes.iter().filter(|t| t.mean_x > t.mean_y).count() as f64 / n,
        sig: p_values.iter().filter(|&&p| p < SIGNIFICANCE).count() as f64 / n,
        fdr: fdr_flags.iter().filter(|&&r| r).count() as f64 / n,
        bon: bon_flags.iter().filter(|&&r| r).count() as f64 / n,
        trials: outcomes
            .into_iter()
            .enumerate()
            .map(|(i, t)| TrialRow {
                trial_index: i,
                mean_x: t.mean_x,
                mean_y: t.mean_y,
                p_value: t.p_value,
            })
            .collect(),
    }
}

/// One batch of trials at one corpus size over pre-extracted distributions.
pub fn run_batch(
    style_a: &[FileDistributions],
    style_b: &[FileDistributions],
    size: usize,
    trials: usize,
    config: &RunConfig,
) -> CliResult<SizeBlock> {
    let per_trial: Vec<[TrialOutcome; 4]> = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<[TrialOutcome; 4], CliError> {
            let trial_seed = config.seed.wrapping_add((size as u64) << 32).wrapping_add(t as u64);
            let (corpus, candidates_a, candidates_b) =
                stylerank::corpus::make_trial_split(style_a, style_b, size, trial_seed)
                    .map_err(|e| usage(e.to_string()))?;
            let forest = config.forest.with_seed(trial_seed);
            let style = run_style_trial(
                &corpus,
                &candidates_a,
                &candidates_b,
                &config.features,
                &forest,
            )?;
            let mut outcomes = [style; 4];
            for (slot, kind) in outcomes.iter_mut().skip(1).zip(DistanceKind::ALL) {
                *slot = run_baseline_trial(
                    &corpus,
                    &candidates_a,
                    &candidates_b,
                    &config.features,
                    kind,
                )?;
            }
            Ok(outcomes)
        })
        .collect::<Result<_, _>>()?;

    let methods = METHODS
        .iter()
        .enumerate()
        .map(|(m, name)| summarize(name, per_trial.iter().map(|t| t[m]).collect()))
        .collect();
    Ok(SizeBlock { size, methods })
}

pub fn render(output: &Experiment1Output, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => serde_json::to_string_pretty(output).expect("serializes"),
        OutputFormat::Csv => {
            let mut out =
                String::from("size,method,row,trialIndex,meanX,meanY,p,mu,sig,fdr,bon\n");
            for block in &output.sizes {
                for method in &block.methods {
                    for trial in &method.trials {
                        out.push_str(&format!(
                            "{},{},trial,{},{},{},{},,,,\n",
                            block.size,
                            method.method,
                            trial.trial_index,
                            trial.mean_x,
                            trial.mean_y,
                            trial.p_value
                        ));
                    }
                    out.push_str(&format!(
                        "{},{},summary,,,,,{},{},{},{}\n",
                        block.size, method.method, method.mu, method.sig, method.fdr, method.bon
                    ));
                }
            }
            out
        }
    }
}

pub fn run(
    style_a_dir: &Path,
    style_b_dir: &Path,
    sizes: &[usize],
    trials: usize,
    config: &RunConfig,
) -> CliResult<Outcome> {
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(usage("--sizes must list positive corpus sizes"));
    }
    if trials == 0 {
        return Err(usage("--trials must be positive"));
    }
    let a = files::load_dir(style_a_dir, &config.parse_options)?;
    let b = files::load_dir(style_b_dir, &config.parse_options)?;
    files::report_failures(&a.failures);
    files::report_failures(&b.failures);
    let largest = *sizes.iter().max().unwrap();
    if a.files.len() < 2 * largest {
        return Err(usage(format!(
            "style A has {} usable files, needs {} for size {largest}",
            a.files.len(),
            2 * largest
        )));
    }
    if b.files.len() < largest {
        return Err(usage(format!(
            "style B has {} usable files, needs {largest} for size {largest}",
            b.files.len()
        )));
    }

    let dists_a = files::to_distributions(&a.files, &config.features);
    let mut dists_b = files::to_distributions(&b.files, &config.features);
    // Trial candidate pools must not collide on id across styles.
    for dist in &mut dists_b {
        dist.id = format!("b/{}", dist.id);
    }

    let mut output = Experiment1Output { trials, sizes: Vec::new() };
    for &size in sizes {
        output.sizes.push(run_batch(&dists_a, &dists_b, size, trials, config)?);
    }
    files::write_output(config.out.as_deref(), &render(&output, config.format))?;
    let outcome = if a.failures.is_empty() && b.failures.is_empty() {
        Outcome::Clean
    } else {
        Outcome::Partial
    };
    Ok(outcome)
}
