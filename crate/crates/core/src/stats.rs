//! The evaluation statistics: one-sided Mann-Whitney with an exact
//! small-sample path, Bonferroni and Benjamini-Yekutieli corrections,
//! Yates-corrected 2x2 chi-square, the pairwise ranking-accuracy metric,
//! raw-distance baseline scores, and the corpus-vs-two-candidate-sets trial
//! that drives batch experiments.

use std::collections::BTreeMap;

use itertools::Itertools;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use thiserror::Error;

use crate::features::{Feature, FeatureMatrix, CATEGORY_CAP};
use crate::forest::ForestConfig;
use crate::similarity::{FileDistributions, SimilarityError, StyleModel};

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("empty sample")]
    EmptySample,
    #[error("zero row sum in contingency table")]
    ZeroRowSum,
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("empty denominator: no pair passed the significance filter")]
    EmptyDenominator,
    #[error("sample ids mismatch; without scores {missing_scores:?}, without counts {missing_counts:?}")]
    IdMismatch { missing_scores: Vec<String>, missing_counts: Vec<String> },
    #[error("judgment counts line {line}: {reason}")]
    BadCountsCsv { line: usize, reason: String },
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
}

/// Midranks of the pooled sample, in pooled order.
fn midranks(pooled: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&a, &b| pooled[a].total_cmp(&pooled[b]));
    let mut ranks = vec![0.0; pooled.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && pooled[order[j]] == pooled[order[i]] {
            j += 1;
        }
        let rank = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            ranks[idx] = rank;
        }
        i = j;
    }
    ranks
}

/// Both sides at most this size use the exact permutation distribution;
/// larger samples use the tie-corrected normal approximation.
const EXACT_LIMIT: usize = 8;

/// One-sided Mann-Whitney p-value for the alternative that `x` is
/// stochastically larger than `y`.
pub fn mann_whitney_one_sided(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    if x.is_empty() || y.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let n1 = x.len();
    let n2 = y.len();
    let pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    let ranks = midranks(&pooled);
    let r1: f64 = ranks[..n1].iter().sum();
    let u = r1 - (n1 * (n1 + 1)) as f64 / 2.0;

    if n1 <= EXACT_LIMIT && n2 <= EXACT_LIMIT {
        // Exact permutation distribution of U over all ways to assign n1 of
        // the pooled values to x.
        let n = n1 + n2;
        let offset = (n1 * (n1 + 1)) as f64 / 2.0;
        let mut at_least = 0u64;
        let mut total = 0u64;
        for combo in (0..n).combinations(n1) {
            let sum: f64 = combo.iter().map(|&i| ranks[i]).sum();
            if sum - offset >= u - 1e-9 {
                at_least += 1;
            }
            total += 1;
        }
        return Ok(at_least as f64 / total as f64);
    }

    let n = (n1 + n2) as f64;
    let mean = (n1 * n2) as f64 / 2.0;
    // Tie correction over pooled tie groups.
    let mut sorted = pooled.clone();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }
    let variance = (n1 * n2) as f64 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if variance <= 0.0 {
        return Ok(1.0); // every pooled value is tied
    }
    let z = (u - mean - 0.5) / variance.sqrt();
    Ok(0.5 * erfc(z / std::f64::consts::SQRT_2))
}

/// Reject hypothesis `i` iff `p_i <= alpha / m`.
pub fn bonferroni(p_values: &[f64], alpha: f64) -> Vec<bool> {
    let m = p_values.len() as f64;
    p_values.iter().map(|&p| p <= alpha / m).collect()
}

/// Benjamini-Yekutieli step-up at level `alpha`: with ascending p-values,
/// find the largest k with `P_k <= k * alpha / (m * c(m))` where
/// `c(m)` is the m-th harmonic number, and reject the k smallest.
pub fn benjamini_yekutieli(p_values: &[f64], alpha: f64) -> Vec<bool> {
    let m = p_values.len();
    if m == 0 {
        return Vec::new();
    }
    let c: f64 = (1..=m).map(|i| 1.0 / i as f64).sum();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]));
    let mut k_best = 0;
    for (pos, &idx) in order.iter().enumerate() {
        let k = pos + 1;
        if p_values[idx] <= k as f64 * alpha / (m as f64 * c) {
            k_best = k;
        }
    }
    let mut reject = vec![false; m];
    for &idx in &order[..k_best] {
        reject[idx] = true;
    }
    reject
}

/// Pearson chi-square p-value for the 2x2 table `[[a.0, a.1], [b.0, b.1]]`
/// with Yates continuity correction and one degree of freedom.
pub fn chi_square_2x2(a: (u64, u64), b: (u64, u64)) -> Result<f64, StatsError> {
    chi_square_2x2_with(a, b, true).map(|(_, p)| p)
}

/// As [`chi_square_2x2`] with the continuity correction switchable;
/// returns (statistic, p-value).
pub fn chi_square_2x2_with(
    a: (u64, u64),
    b: (u64, u64),
    yates: bool,
) -> Result<(f64, f64), StatsError> {
    let (aa, ab) = (a.0 as f64, a.1 as f64);
    let (ba, bb) = (b.0 as f64, b.1 as f64);
    if aa + ab == 0.0 || ba + bb == 0.0 {
        return Err(StatsError::ZeroRowSum);
    }
    let n = aa + ab + ba + bb;
    let col0 = aa + ba;
    let col1 = ab + bb;
    if col0 == 0.0 || col1 == 0.0 {
        return Ok((0.0, 1.0)); // a constant column carries no information
    }
    let mut diff = (aa * bb - ab * ba).abs();
    if yates {
        diff = (diff - n / 2.0).max(0.0);
    }
    let statistic = n * diff * diff / ((aa + ab) * (ba + bb) * col0 * col1);
    let p = erfc((statistic / 2.0).sqrt());
    Ok((statistic, p))
}

/// Human misclassification counts per sample: how often it was mistaken for
/// corpus material (`n_miss`) vs correctly identified (`n_corr`).
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgmentCounts {
    pub per_sample: BTreeMap<String, (u64, u64)>,
}

impl JudgmentCounts {
    /// Parse `sampleId,nMiss,nCorr` CSV (header required).
    pub fn from_csv(text: &str) -> Result<Self, StatsError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, header)) if header.trim() == "sampleId,nMiss,nCorr" => {}
            _ => {
                return Err(StatsError::BadCountsCsv {
                    line: 1,
                    reason: "expected header `sampleId,nMiss,nCorr`".into(),
                })
            }
        }
        let mut per_sample = BTreeMap::new();
        for (index, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            let err = |reason: &str| StatsError::BadCountsCsv {
                line: index + 1,
                reason: reason.into(),
            };
            if fields.len() != 3 {
                return Err(err("expected 3 fields"));
            }
            let miss: u64 = fields[1].trim().parse().map_err(|_| err("nMiss not a count"))?;
            let corr: u64 = fields[2].trim().parse().map_err(|_| err("nCorr not a count"))?;
            if miss + corr == 0 {
                return Err(err("nMiss + nCorr must be positive"));
            }
            if per_sample.insert(fields[0].trim().to_string(), (miss, corr)).is_some() {
                return Err(err("duplicate sample id"));
            }
        }
        Ok(Self { per_sample })
    }

    /// Relative misclassification frequency of one sample.
    pub fn rate(&self, id: &str) -> Option<f64> {
        self.per_sample.get(id).map(|&(miss, corr)| miss as f64 / (miss + corr) as f64)
    }
}

/// Fraction of sample pairs whose score ordering matches the human
/// misclassification-rate ordering, among pairs whose chi-square p-value is
/// below `alpha`. A tied pair counts as agreement only when both orderings
/// are tied. Alphas above 1 disable the significance filter.
pub fn ranking_accuracy(
    scores: &BTreeMap<String, f64>,
    counts: &JudgmentCounts,
    alpha: f64,
) -> Result<f64, StatsError> {
    let missing_scores: Vec<String> =
        counts.per_sample.keys().filter(|id| !scores.contains_key(*id)).cloned().collect();
    let missing_counts: Vec<String> =
        scores.keys().filter(|id| !counts.per_sample.contains_key(*id)).cloned().collect();
    if !missing_scores.is_empty() || !missing_counts.is_empty() {
        return Err(StatsError::IdMismatch { missing_scores, missing_counts });
    }
    let ids: Vec<&String> = scores.keys().collect();
    if ids.len() < 2 {
        return Err(StatsError::TooFewSamples(ids.len()));
    }
    let mut agreed = 0u64;
    let mut considered = 0u64;
    for (i, id_i) in ids.iter().enumerate() {
        for id_j in &ids[i + 1..] {
            let counts_i = counts.per_sample[*id_i];
            let counts_j = counts.per_sample[*id_j];
            let p = chi_square_2x2(counts_i, counts_j)?;
            if p >= alpha {
                continue;
            }
            considered += 1;
            let (s_i, s_j) = (scores[*id_i], scores[*id_j]);
            let (t_i, t_j) = (counts.rate(id_i).unwrap(), counts.rate(id_j).unwrap());
            let agree = if s_i == s_j || t_i == t_j {
                s_i == s_j && t_i == t_j
            } else {
                (s_i < s_j) == (t_i < t_j)
            };
            agreed += agree as u64;
        }
    }
    if considered == 0 {
        return Err(StatsError::EmptyDenominator);
    }
    Ok(agreed as f64 / considered as f64)
}

/// Outcome of one corpus-vs-two-candidate-sets comparison.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TrialOutcome {
    pub mean_x: f64,
    pub mean_y: f64,
    pub p_value: f64,
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Fit forests on the pooled candidates against the corpus, score both
/// candidate sets, and test whether the first scores higher.
pub fn run_style_trial(
    corpus: &[FileDistributions],
    candidates_a: &[FileDistributions],
    candidates_b: &[FileDistributions],
    features: &[Feature],
    config: &ForestConfig,
) -> Result<TrialOutcome, StatsError> {
    let pooled: Vec<FileDistributions> =
        candidates_a.iter().chain(candidates_b).cloned().collect();
    let model = StyleModel::fit(&pooled, corpus, features, config)?;
    let mut x = Vec::with_capacity(candidates_a.len());
    let mut y = Vec::with_capacity(candidates_b.len());
    for index in 0..pooled.len() {
        let score = model.style_score(index).map_err(StatsError::Similarity)?;
        if index < candidates_a.len() {
            x.push(score);
        } else {
            y.push(score);
        }
    }
    Ok(TrialOutcome { mean_x: mean(&x), mean_y: mean(&y), p_value: mann_whitney_one_sided(&x, &y)? })
}

/// Raw distance over vectorized capped distributions, for the baseline
/// comparison methods.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceKind {
    Cosine,
    Manhattan,
    Euclidean,
}

impl DistanceKind {
    pub const ALL: [DistanceKind; 3] =
        [DistanceKind::Cosine, DistanceKind::Manhattan, DistanceKind::Euclidean];

    pub fn name(self) -> &'static str {
        match self {
            DistanceKind::Cosine => "cosine",
            DistanceKind::Manhattan => "manhattan",
            DistanceKind::Euclidean => "euclidean",
        }
    }

    fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            DistanceKind::Cosine => 1.0 - crate::similarity::cosine(a, b).unwrap_or(0.0),
            DistanceKind::Manhattan => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
            DistanceKind::Euclidean => {
                a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
            }
        }
    }
}

/// Mean `1 - distance` of each candidate against the corpus over the same
/// vectorized inputs the forests consume.
pub fn baseline_scores(
    candidates: &[FileDistributions],
    corpus: &[FileDistributions],
    features: &[Feature],
    kind: DistanceKind,
) -> Result<Vec<f64>, StatsError> {
    if corpus.is_empty() {
        return Err(StatsError::Similarity(SimilarityError::EmptyCorpus));
    }
    if candidates.is_empty() {
        return Err(StatsError::Similarity(SimilarityError::EmptyCandidates));
    }
    if features.is_empty() {
        return Err(StatsError::Similarity(SimilarityError::EmptyFeatures));
    }
    let mut sums = vec![0.0f64; candidates.len()];
    for &feature in features {
        let candidate_dists: Vec<_> = candidates.iter().map(|f| f.distribution(feature)).collect();
        let corpus_dists: Vec<_> = corpus.iter().map(|f| f.distribution(feature)).collect();
        let matrix = FeatureMatrix::build(
            feature,
            &candidate_dists.iter().collect::<Vec<_>>(),
            &corpus_dists.iter().collect::<Vec<_>>(),
            CATEGORY_CAP,
        );
        let (candidate_rows, corpus_rows) = matrix.rows.split_at(candidates.len());
        for (sum, row) in sums.iter_mut().zip(candidate_rows) {
            for corpus_row in corpus_rows {
                *sum += 1.0 - kind.distance(row, corpus_row);
            }
        }
    }
    let scale = (corpus.len() * features.len()) as f64;
    Ok(sums.into_iter().map(|s| s / scale).collect())
}

/// As [`run_style_trial`] but scoring with a raw distance instead of the
/// forest embedding.
pub fn run_baseline_trial(
    corpus: &[FileDistributions],
    candidates_a: &[FileDistributions],
    candidates_b: &[FileDistributions],
    features: &[Feature],
    kind: DistanceKind,
) -> Result<TrialOutcome, StatsError> {
    let pooled: Vec<FileDistributions> =
        candidates_a.iter().chain(candidates_b).cloned().collect();
    let scores = baseline_scores(&pooled, corpus, features, kind)?;
    let (x, y) = scores.split_at(candidates_a.len());
    Ok(TrialOutcome { mean_x: mean(x), mean_y: mean(y), p_value: mann_whitney_one_sided(x, y)? })
}
