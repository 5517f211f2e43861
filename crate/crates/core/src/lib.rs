//! Rank MIDI files by their stylistic similarity to an arbitrary corpus.
//!
//! The pipeline: parse Standard MIDI Files into notes ([`midi`]), slice the
//! notes into chords, compute a catalog of bit-packed categorical features
//! per file ([`features`] on top of the pitch-class algebra in [`pitch`]),
//! train one random forest per feature to discriminate candidates from the
//! corpus ([`forest`]), embed every file as its vector of terminal-node
//! assignments, and score each candidate as the mean cosine similarity of
//! its embeddings against the corpus ([`similarity`]). [`stats`] and
//! [`corpus`] carry the evaluation machinery: one-sided Mann-Whitney,
//! multiple-comparison corrections, chi-square ranking accuracy, duplicate
//! removal, and trial splits. [`synth`] generates small synthetic fixtures.

pub mod corpus;
pub mod features;
pub mod forest;
pub mod midi;
pub mod pitch;
pub mod similarity;
pub mod stats;
pub mod synth;

pub use features::{CategoricalDistribution, CategoryVocabulary, Feature, FeatureMatrix};
pub use forest::{ForestConfig, ForestEmbedding, RandomForest};
pub use midi::{ChordEvent, MelodyLine, Note};
pub use similarity::{FileDistributions, ScoreReport, StyleModel};
