//! Corpus-relative style scores: one forest per feature is trained to
//! separate candidates from the corpus, every file becomes its vector of
//! terminal-node assignments, and a candidate's score is the mean cosine
//! similarity between its embeddings and every corpus file's embeddings,
//! averaged over features. Scores land on `[0, 1]`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{CategoricalDistribution, Feature, FeatureMatrix, CATEGORY_CAP};
use crate::forest::{fit_forest, ForestConfig, ForestEmbedding, ForestError, RandomForest};

#[derive(Debug, Error, PartialEq)]
pub enum SimilarityError {
    #[error("dimension mismatch: {a} vs {b}")]
    DimensionMismatch { a: usize, b: usize },
    #[error("cosine of a zero vector is undefined")]
    ZeroVector,
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("empty candidate set")]
    EmptyCandidates,
    #[error("empty feature set")]
    EmptyFeatures,
    #[error("duplicate file id `{0}`")]
    DuplicateId(String),
    #[error("unknown candidate index {0}")]
    UnknownCandidate(usize),
    #[error(transparent)]
    Forest(#[from] ForestError),
}

/// Cosine similarity of two dense vectors.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64, SimilarityError> {
    if a.len() != b.len() {
        return Err(SimilarityError::DimensionMismatch { a: a.len(), b: b.len() });
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let norm_a: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let norm_b: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm_a == 0.0 || norm_b == 0.0 {
        return Err(SimilarityError::ZeroVector);
    }
    Ok(dot / (norm_a * norm_b))
}

/// Cosine of two one-hot forest embeddings from the same forest: exactly the
/// fraction of trees whose leaves match.
pub fn embedding_similarity(
    a: &ForestEmbedding,
    b: &ForestEmbedding,
) -> Result<f64, SimilarityError> {
    if a.len() != b.len() {
        return Err(SimilarityError::DimensionMismatch { a: a.len(), b: b.len() });
    }
    if a.is_empty() {
        return Err(SimilarityError::ZeroVector);
    }
    let matches = a.leaves.iter().zip(&b.leaves).filter(|(x, y)| x == y).count();
    Ok(matches as f64 / a.len() as f64)
}

/// One file's categorical distributions, keyed by feature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileDistributions {
    pub id: String,
    pub features: BTreeMap<Feature, CategoricalDistribution>,
}

impl FileDistributions {
    pub fn distribution(&self, feature: Feature) -> CategoricalDistribution {
        self.features.get(&feature).cloned().unwrap_or_default()
    }
}

#[derive(Debug)]
struct FeatureModel {
    forest: RandomForest,
    candidate_embeddings: Vec<ForestEmbedding>,
    corpus_embeddings: Vec<ForestEmbedding>,
}

/// Per-feature forests plus the embeddings of every candidate and corpus
/// file, fitted once per (candidate set, corpus, feature set, seed).
#[derive(Debug)]
pub struct StyleModel {
    features: Vec<Feature>,
    candidate_ids: Vec<String>,
    corpus_ids: Vec<String>,
    per_feature: BTreeMap<Feature, FeatureModel>,
    /// (file id, feature name) pairs whose distribution had zero mass and
    /// therefore vectorized to the all-zero row.
    zero_mass: Vec<(String, String)>,
}

impl StyleModel {
    pub fn fit(
        candidates: &[FileDistributions],
        corpus: &[FileDistributions],
        features: &[Feature],
        config: &ForestConfig,
    ) -> Result<Self, SimilarityError> {
        if corpus.is_empty() {
            return Err(SimilarityError::EmptyCorpus);
        }
        if candidates.is_empty() {
            return Err(SimilarityError::EmptyCandidates);
        }
        if features.is_empty() {
            return Err(SimilarityError::EmptyFeatures);
        }
        let mut seen = std::collections::BTreeSet::new();
        for file in candidates.iter().chain(corpus) {
            if !seen.insert(&file.id) {
                return Err(SimilarityError::DuplicateId(file.id.clone()));
            }
        }

        let mut zero_mass = Vec::new();
        let mut per_feature = BTreeMap::new();
        for &feature in features {
            let candidate_dists: Vec<CategoricalDistribution> =
                candidates.iter().map(|f| f.distribution(feature)).collect();
            let corpus_dists: Vec<CategoricalDistribution> =
                corpus.iter().map(|f| f.distribution(feature)).collect();
            for (file, dist) in
                candidates.iter().chain(corpus).zip(candidate_dists.iter().chain(&corpus_dists))
            {
                if dist.total() <= 0.0 {
                    zero_mass.push((file.id.clone(), feature.name().to_string()));
                }
            }
            let matrix = FeatureMatrix::build(
                feature,
                &candidate_dists.iter().collect::<Vec<_>>(),
                &corpus_dists.iter().collect::<Vec<_>>(),
                CATEGORY_CAP,
            );
            let forest = fit_forest(&matrix, config)?;
            let mut embeddings = matrix.rows.iter().map(|row| forest.embed(row));
            let mut candidate_embeddings = Vec::with_capacity(candidates.len());
            for _ in 0..candidates.len() {
                candidate_embeddings.push(embeddings.next().expect("row per candidate")?);
            }
            let corpus_embeddings = embeddings.collect::<Result<Vec<_>, _>>()?;
            per_feature.insert(
                feature,
                FeatureModel { forest, candidate_embeddings, corpus_embeddings },
            );
        }
        zero_mass.sort();
        Ok(Self {
            features: features.to_vec(),
            candidate_ids: candidates.iter().map(|f| f.id.clone()).collect(),
            corpus_ids: corpus.iter().map(|f| f.id.clone()).collect(),
            per_feature,
            zero_mass,
        })
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn candidate_ids(&self) -> &[String] {
        &self.candidate_ids
    }

    pub fn corpus_ids(&self) -> &[String] {
        &self.corpus_ids
    }

    pub fn forest(&self, feature: Feature) -> Option<&RandomForest> {
        self.per_feature.get(&feature).map(|m| &m.forest)
    }

    pub fn candidate_embedding(
        &self,
        feature: Feature,
        candidate: usize,
    ) -> Option<&ForestEmbedding> {
        self.per_feature.get(&feature)?.candidate_embeddings.get(candidate)
    }

    /// Mean leaf-match similarity of one candidate against the corpus for
    /// one feature.
    pub fn feature_score(
        &self,
        candidate: usize,
        feature: Feature,
    ) -> Result<f64, SimilarityError> {
        let model = self
            .per_feature
            .get(&feature)
            .ok_or(SimilarityError::EmptyFeatures)?;
        let embedding = model
            .candidate_embeddings
            .get(candidate)
            .ok_or(SimilarityError::UnknownCandidate(candidate))?;
        let mut sum = 0.0;
        for corpus_embedding in &model.corpus_embeddings {
            sum += embedding_similarity(embedding, corpus_embedding)?;
        }
        Ok(sum / model.corpus_embeddings.len() as f64)
    }

    /// Mean over corpus files and features of the embedding cosine.
    pub fn style_score(&self, candidate: usize) -> Result<f64, SimilarityError> {
        let mut sum = 0.0;
        for &feature in &self.features {
            sum += self.feature_score(candidate, feature)?;
        }
        Ok(sum / self.features.len() as f64)
    }

    /// Scores for every candidate, globally and per feature, ranked by
    /// global score descending (ties by id ascending).
    pub fn score_report(&self) -> Result<ScoreReport, SimilarityError> {
        let mut per_candidate = BTreeMap::new();
        let mut per_feature = BTreeMap::new();
        for (index, id) in self.candidate_ids.iter().enumerate() {
            let mut feature_scores = BTreeMap::new();
            let mut sum = 0.0;
            for &feature in &self.features {
                let score = self.feature_score(index, feature)?;
                sum += score;
                feature_scores.insert(feature.name().to_string(), score);
            }
            per_candidate.insert(id.clone(), sum / self.features.len() as f64);
            per_feature.insert(id.clone(), feature_scores);
        }
        let mut ranking: Vec<String> = self.candidate_ids.clone();
        ranking.sort_by(|a, b| {
            per_candidate[b].total_cmp(&per_candidate[a]).then_with(|| a.cmp(b))
        });
        Ok(ScoreReport {
            features: self.features.iter().map(|f| f.name().to_string()).collect(),
            per_candidate,
            per_feature,
            ranking,
            zero_mass_distributions: self.zero_mass.clone(),
        })
    }
}

/// Per-candidate global and per-feature style scores.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScoreReport {
    /// Feature column order for tabular output.
    pub features: Vec<String>,
    pub per_candidate: BTreeMap<String, f64>,
    /// candidateId -> featureName -> score.
    pub per_feature: BTreeMap<String, BTreeMap<String, f64>>,
    /// Candidate ids sorted by global score descending, ties by id.
    pub ranking: Vec<String>,
    /// (file id, feature name) pairs that produced no feature mass.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub zero_mass_distributions: Vec<(String, String)>,
}

impl ScoreReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(json: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(json)
    }

    /// CSV with one row per candidate in ranking order: id, global score,
    /// then one column per feature.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("candidateId,globalScore");
        for feature in &self.features {
            out.push(',');
            out.push_str(feature);
        }
        out.push('\n');
        for id in &self.ranking {
            out.push_str(id);
            out.push_str(&format!(",{}", self.per_candidate[id]));
            for feature in &self.features {
                out.push_str(&format!(",{}", self.per_feature[id][feature]));
            }
            out.push('\n');
        }
        out
    }
}
