//! Random forests trained to discriminate candidate files from corpus
//! files, used not as classifiers but as embeddings: a file is represented
//! by the terminal node it reaches in each tree, and two files are similar
//! when they land in the same leaves.
//!
//! Trees are grown on bootstrap resamples with entropy splits over
//! `ceil(sqrt(d))` candidate dimensions per node, midpoint thresholds, and
//! balanced class weights. Every tree draws from its own RNG stream derived
//! from the seed, so parallel and serial builds are identical.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::FeatureMatrix;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ForestError {
    #[error("degenerate labels: training data must contain both classes")]
    DegenerateLabels,
    #[error("empty training matrix")]
    EmptyMatrix,
    #[error("dimension mismatch: forest expects {expected}, input has {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unsupported forest document version {0}")]
    UnsupportedVersion(u32),
    #[error("malformed forest document: {0}")]
    Malformed(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub tree_count: usize,
    pub max_depth: usize,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self { tree_count: 500, max_depth: 5, seed: 0 }
    }
}

impl ForestConfig {
    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Split { feature: u32, threshold: f64, left: u32, right: u32 },
    Leaf { id: u32, corpus_share: f64 },
}

/// A binary decision tree with dense leaf ids `0..leaf_count`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<TreeNode>,
    leaf_count: u32,
}

impl DecisionTree {
    pub fn leaf_count(&self) -> u32 {
        self.leaf_count
    }

    /// The leaf an input reaches.
    pub fn route(&self, input: &[f64]) -> u32 {
        let mut at = 0usize;
        loop {
            match self.nodes[at] {
                TreeNode::Leaf { id, .. } => return id,
                TreeNode::Split { feature, threshold, left, right } => {
                    at = if input[feature as usize] <= threshold { left } else { right } as usize;
                }
            }
        }
    }

    fn leaf_score(&self, input: &[f64]) -> f64 {
        let mut at = 0usize;
        loop {
            match self.nodes[at] {
                TreeNode::Leaf { corpus_share, .. } => return corpus_share,
                TreeNode::Split { feature, threshold, left, right } => {
                    at = if input[feature as usize] <= threshold { left } else { right } as usize;
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], at: usize) -> usize {
            match nodes[at] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => {
                    1 + walk(nodes, left as usize).max(walk(nodes, right as usize))
                }
            }
        }
        walk(&self.nodes, 0)
    }
}

/// Per-tree terminal-node assignment of one input: the sparse form of the
/// one-hot vector with exactly `tree_count` set bits.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestEmbedding {
    pub leaves: Vec<u32>,
}

impl ForestEmbedding {
    pub fn len(&self) -> usize {
        self.leaves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leaves.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    config: ForestConfig,
    dimension: usize,
    trees: Vec<DecisionTree>,
}

const FOREST_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ForestDocument {
    version: u32,
    forest: RandomForest,
}

impl RandomForest {
    pub fn config(&self) -> &ForestConfig {
        &self.config
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    /// Route the input through every tree and record the leaf it reaches.
    pub fn embed(&self, input: &[f64]) -> Result<ForestEmbedding, ForestError> {
        if input.len() != self.dimension {
            return Err(ForestError::DimensionMismatch {
                expected: self.dimension,
                got: input.len(),
            });
        }
        Ok(ForestEmbedding { leaves: self.trees.iter().map(|t| t.route(input)).collect() })
    }

    /// Mean corpus share over trees, thresholded at one half.
    pub fn predict(&self, input: &[f64]) -> Result<u8, ForestError> {
        if input.len() != self.dimension {
            return Err(ForestError::DimensionMismatch {
                expected: self.dimension,
                got: input.len(),
            });
        }
        let mean: f64 = self.trees.iter().map(|t| t.leaf_score(input)).sum::<f64>()
            / self.trees.len() as f64;
        Ok((mean >= 0.5) as u8)
    }

    /// The explicit one-hot embedding vector, one block per tree.
    pub fn one_hot(&self, embedding: &ForestEmbedding) -> Vec<f64> {
        let total: u32 = self.trees.iter().map(|t| t.leaf_count).sum();
        let mut out = vec![0.0; total as usize];
        let mut offset = 0u32;
        for (tree, &leaf) in self.trees.iter().zip(&embedding.leaves) {
            out[(offset + leaf) as usize] = 1.0;
            offset += tree.leaf_count;
        }
        out
    }

    /// Versioned JSON document for caching between invocations.
    pub fn to_json(&self) -> String {
        let doc = ForestDocument { version: FOREST_FORMAT_VERSION, forest: self.clone() };
        serde_json::to_string(&doc).expect("forest serializes")
    }

    pub fn from_json(json: &str) -> Result<Self, ForestError> {
        let doc: ForestDocument =
            serde_json::from_str(json).map_err(|e| ForestError::Malformed(e.to_string()))?;
        if doc.version != FOREST_FORMAT_VERSION {
            return Err(ForestError::UnsupportedVersion(doc.version));
        }
        Ok(doc.forest)
    }
}

/// Per-class sample weight `total / (2 * class_count)`, so both classes
/// carry equal total mass regardless of size imbalance.
pub fn balanced_class_weights(labels: &[u8]) -> [f64; 2] {
    let total = labels.len() as f64;
    let ones = labels.iter().filter(|&&l| l == 1).count() as f64;
    let zeros = total - ones;
    [total / (2.0 * zeros), total / (2.0 * ones)]
}

/// Grow `tree_count` trees on bootstrap resamples of the matrix.
pub fn fit_forest(matrix: &FeatureMatrix, config: &ForestConfig) -> Result<RandomForest, ForestError> {
    if matrix.rows.is_empty() {
        return Err(ForestError::EmptyMatrix);
    }
    let labels = &matrix.labels;
    if !labels.contains(&0) || !labels.contains(&1) {
        return Err(ForestError::DegenerateLabels);
    }
    let dimension = matrix.dimension();
    let features_per_split = (dimension as f64).sqrt().ceil() as usize;
    let class_weights = balanced_class_weights(labels);
    let grower = TreeGrower {
        rows: &matrix.rows,
        labels,
        class_weights,
        max_depth: config.max_depth,
        features_per_split,
        dimension,
        seed: config.seed,
    };

    #[cfg(feature = "parallel")]
    let trees: Vec<DecisionTree> =
        (0..config.tree_count).into_par_iter().map(|t| grower.grow(t as u64)).collect();
    #[cfg(not(feature = "parallel"))]
    let trees: Vec<DecisionTree> =
        (0..config.tree_count).map(|t| grower.grow(t as u64)).collect();

    Ok(RandomForest { config: *config, dimension, trees })
}

struct TreeGrower<'a> {
    rows: &'a [Vec<f64>],
    labels: &'a [u8],
    class_weights: [f64; 2],
    max_depth: usize,
    features_per_split: usize,
    dimension: usize,
    seed: u64,
}

impl TreeGrower<'_> {
    fn grow(&self, tree_index: u64) -> DecisionTree {
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        rng.set_stream(tree_index);
        let n = self.rows.len();
        let bootstrap: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let mut nodes = Vec::new();
        let mut leaf_count = 0u32;
        self.split(bootstrap, 0, &mut rng, &mut nodes, &mut leaf_count);
        DecisionTree { nodes, leaf_count }
    }

    fn weight(&self, sample: usize) -> f64 {
        self.class_weights[self.labels[sample] as usize]
    }

    fn make_leaf(&self, samples: &[usize], nodes: &mut Vec<TreeNode>, leaf_count: &mut u32) -> u32 {
        let mut mass = [0.0f64; 2];
        for &s in samples {
            mass[self.labels[s] as usize] += self.weight(s);
        }
        let corpus_share = mass[1] / (mass[0] + mass[1]);
        let index = nodes.len() as u32;
        nodes.push(TreeNode::Leaf { id: *leaf_count, corpus_share });
        *leaf_count += 1;
        index
    }

    fn split(
        &self,
        samples: Vec<usize>,
        depth: usize,
        rng: &mut ChaCha12Rng,
        nodes: &mut Vec<TreeNode>,
        leaf_count: &mut u32,
    ) -> u32 {
        let pure = samples.windows(2).all(|w| self.labels[w[0]] == self.labels[w[1]]);
        if depth >= self.max_depth || samples.len() < 2 || pure {
            return self.make_leaf(&samples, nodes, leaf_count);
        }
        let candidates =
            rand::seq::index::sample(rng, self.dimension, self.features_per_split.min(self.dimension));
        let best = self.best_split(&samples, candidates.iter());
        let Some((dim, threshold)) = best else {
            return self.make_leaf(&samples, nodes, leaf_count);
        };
        let (left, right): (Vec<usize>, Vec<usize>) =
            samples.into_iter().partition(|&s| self.rows[s][dim] <= threshold);
        debug_assert!(!left.is_empty() && !right.is_empty());

        let index = nodes.len();
        nodes.push(TreeNode::Leaf { id: 0, corpus_share: 0.0 }); // patched below
        let left_index = self.split(left, depth + 1, rng, nodes, leaf_count);
        let right_index = self.split(right, depth + 1, rng, nodes, leaf_count);
        nodes[index] = TreeNode::Split {
            feature: dim as u32,
            threshold,
            left: left_index,
            right: right_index,
        };
        index as u32
    }

    /// Best (dimension, midpoint threshold) by class-weighted information
    /// gain; ties broken toward the lower dimension, then lower threshold.
    fn best_split(
        &self,
        samples: &[usize],
        candidates: impl Iterator<Item = usize>,
    ) -> Option<(usize, f64)> {
        let mut total = [0.0f64; 2];
        for &s in samples {
            total[self.labels[s] as usize] += self.weight(s);
        }
        let parent = entropy(total[0], total[1]);
        let total_mass = total[0] + total[1];

        let mut best: Option<(f64, usize, f64)> = None;
        let mut column: Vec<(f64, f64, u8)> = Vec::with_capacity(samples.len());
        for dim in candidates {
            column.clear();
            column.extend(samples.iter().map(|&s| (self.rows[s][dim], self.weight(s), self.labels[s])));
            column.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            let mut left = [0.0f64; 2];
            for i in 0..column.len() - 1 {
                left[column[i].2 as usize] += column[i].1;
                if column[i].0 == column[i + 1].0 {
                    continue;
                }
                let threshold = column[i].0 + (column[i + 1].0 - column[i].0) / 2.0;
                let right = [total[0] - left[0], total[1] - left[1]];
                let left_mass = left[0] + left[1];
                let right_mass = right[0] + right[1];
                let gain = parent
                    - (left_mass * entropy(left[0], left[1])
                        + right_mass * entropy(right[0], right[1]))
                        / total_mass;
                let better = match best {
                    None => true,
                    Some((g, d, t)) => {
                        gain > g || (gain == g && (dim < d || (dim == d && threshold < t)))
                    }
                };
                if better {
                    best = Some((gain, dim, threshold));
                }
            }
        }
        best.map(|(_, dim, threshold)| (dim, threshold))
    }
}

fn entropy(w0: f64, w1: f64) -> f64 {
    let total = w0 + w1;
    if total <= 0.0 {
        return 0.0;
    }
    let mut h = 0.0;
    for w in [w0, w1] {
        if w > 0.0 {
            let q = w / total;
            h -= q * q.ln();
        }
    }
    h
}
