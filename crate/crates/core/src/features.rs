//! The feature catalog: every feature maps one file to a categorical
//! distribution over unsigned 64-bit categories. Chord features consume one
//! chord, chord-transition features two or three consecutive chords, melody
//! features a window of the skyline melody, and interval features emit one
//! category per distinct interval in a chord. Starred features weight each
//! observation by the chord's duration; the rest count occurrences.
//!
//! Distributions become comparable across files through a capped category
//! vocabulary (the categories most widely shared across files) and
//! frequency normalization.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::midi::{ChordEvent, MelodyLine};
use crate::pitch::{
    dissonance, pc, pcc, popcount, reduce, scale_signature, tonnetz_length, voice_motion,
    PitchClassSet,
};

/// Categories kept per feature when building a vocabulary.
pub const CATEGORY_CAP: usize = 1000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FeatureError {
    #[error("unknown feature name `{0}`")]
    UnknownFeature(String),
}

macro_rules! feature_catalog {
    ($(($variant:ident, $name:literal, $arity:expr, $weighted:literal, $set:literal)),+ $(,)?) => {
        /// One of the 31 catalog features.
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash,
                 Serialize, Deserialize)]
        pub enum Feature {
            $($variant),+
        }

        impl Feature {
            pub const ALL: &'static [Feature] = &[$(Feature::$variant),+];

            pub fn name(self) -> &'static str {
                match self {
                    $(Feature::$variant => $name),+
                }
            }

            pub fn from_name(name: &str) -> Result<Feature, FeatureError> {
                match name {
                    $($name => Ok(Feature::$variant),)+
                    _ => Err(FeatureError::UnknownFeature(name.to_string())),
                }
            }

            pub fn spec(self) -> FeatureSpec {
                match self {
                    $(Feature::$variant => FeatureSpec {
                        feature: Feature::$variant,
                        name: $name,
                        arity: $arity,
                        duration_weighted: $weighted,
                        emits_set: $set,
                    }),+
                }
            }
        }
    };
}

/// Chords (or melody pitches) consumed per evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Arity {
    Chords(usize),
    MelodyWindow(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FeatureSpec {
    pub feature: Feature,
    pub name: &'static str,
    pub arity: Arity,
    pub duration_weighted: bool,
    pub emits_set: bool,
}

feature_catalog![
    (ChordDissonance, "ChordDissonance", Arity::Chords(1), true, false),
    (ChordDistinctDurationRatio, "ChordDistinctDurationRatio", Arity::Chords(1), false, false),
    (ChordDuration, "ChordDuration", Arity::Chords(2), false, false),
    (ChordLowestInterval, "ChordLowestInterval", Arity::Chords(1), false, false),
    (ChordOnset, "ChordOnset", Arity::Chords(1), false, false),
    (ChordOnsetPCD, "ChordOnsetPCD", Arity::Chords(1), true, false),
    (ChordOnsetRatio, "ChordOnsetRatio", Arity::Chords(1), false, false),
    (ChordOnsetShape, "ChordOnsetShape", Arity::Chords(1), true, false),
    (ChordOnsetTiePCD, "ChordOnsetTiePCD", Arity::Chords(1), true, false),
    (ChordOnsetTieReduced, "ChordOnsetTieReduced", Arity::Chords(1), true, false),
    (ChordPCD, "ChordPCD", Arity::Chords(1), true, false),
    (ChordPCDWBass, "ChordPCDWBass", Arity::Chords(1), true, false),
    (ChordPCSizeRatio, "ChordPCSizeRatio", Arity::Chords(1), false, false),
    (ChordRange, "ChordRange", Arity::Chords(1), false, false),
    (ChordShape, "ChordShape", Arity::Chords(1), true, false),
    (ChordSize, "ChordSize", Arity::Chords(1), false, false),
    (ChordTonnetz, "ChordTonnetz", Arity::Chords(1), true, false),
    (ChordSizeNgram, "ChordSizeNgram", Arity::Chords(3), false, false),
    (ChordTranBassInterval, "ChordTranBassInterval", Arity::Chords(2), false, false),
    (ChordTranDissonance, "ChordTranDissonance", Arity::Chords(2), false, false),
    (ChordTranDistance, "ChordTranDistance", Arity::Chords(2), false, false),
    (ChordTranOuter, "ChordTranOuter", Arity::Chords(2), false, false),
    (ChordTranPCD, "ChordTranPCD", Arity::Chords(2), false, false),
    (ChordTranRepeat, "ChordTranRepeat", Arity::Chords(2), false, false),
    (ChordTranScaleDistance, "ChordTranScaleDistance", Arity::Chords(2), false, false),
    (ChordTranScaleUnion, "ChordTranScaleUnion", Arity::Chords(2), false, false),
    (ChordTranVoiceMotion, "ChordTranVoiceMotion", Arity::Chords(2), false, false),
    (MelodyNgram, "MelodyNgram", Arity::MelodyWindow(4), false, false),
    (MelodyPCD, "MelodyPCD", Arity::MelodyWindow(5), false, false),
    (IntervalClassDist, "IntervalClassDist", Arity::Chords(1), false, true),
    (IntervalDist, "IntervalDist", Arity::Chords(1), false, true),
];

/// Parse a comma/space separated feature list; `all` selects the catalog.
pub fn parse_feature_list(names: &[String]) -> Result<Vec<Feature>, FeatureError> {
    let mut out = Vec::new();
    for name in names {
        for part in name.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            if part.eq_ignore_ascii_case("all") {
                out.extend_from_slice(Feature::ALL);
            } else {
                out.push(Feature::from_name(part)?);
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Weighted counts over 64-bit categories; absent categories have weight 0
/// and stored weights are strictly positive.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CategoricalDistribution {
    weights: BTreeMap<u64, f64>,
}

impl CategoricalDistribution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, category: u64, weight: f64) {
        if weight > 0.0 {
            *self.weights.entry(category).or_insert(0.0) += weight;
        }
    }

    pub fn weight(&self, category: u64) -> f64 {
        self.weights.get(&category).copied().unwrap_or(0.0)
    }

    pub fn contains(&self, category: u64) -> bool {
        self.weights.contains_key(&category)
    }

    pub fn total(&self) -> f64 {
        self.weights.values().sum()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.weights.iter().map(|(&c, &w)| (c, w))
    }

    pub fn categories(&self) -> impl Iterator<Item = u64> + '_ {
        self.weights.keys().copied()
    }
}

/// Evaluate one feature over a whole file.
pub fn extract_feature(
    feature: Feature,
    chords: &[ChordEvent],
    melody: &MelodyLine,
) -> CategoricalDistribution {
    let mut dist = CategoricalDistribution::new();
    let spec = feature.spec();
    match spec.arity {
        Arity::Chords(arity) => {
            if chords.len() < arity {
                return dist;
            }
            for t in 0..=chords.len() - arity {
                let window = &chords[t..t + arity];
                let weight =
                    if spec.duration_weighted { window[0].duration_ticks as f64 } else { 1.0 };
                if spec.emits_set {
                    for category in interval_set(feature, &window[0]) {
                        dist.add(category, weight);
                    }
                } else if let Some(category) = chord_category(feature, window) {
                    dist.add(category, weight);
                }
            }
        }
        Arity::MelodyWindow(window) => {
            if melody.len() < window {
                return dist;
            }
            for t in 0..=melody.len() - window {
                let category = melody_category(feature, &melody.pitches[t..t + window]);
                dist.add(category, 1.0);
            }
        }
    }
    dist
}

/// Evaluate several features at once.
pub fn extract_features(
    features: &[Feature],
    chords: &[ChordEvent],
    melody: &MelodyLine,
) -> BTreeMap<Feature, CategoricalDistribution> {
    features.iter().map(|&f| (f, extract_feature(f, chords, melody))).collect()
}

/// Bit positions above 63 cannot be packed into a 64-bit category; chords
/// that would overflow a shift-packed feature are skipped for that feature.
const MAX_SHIFT: u64 = 63;

fn chord_category(feature: Feature, window: &[ChordEvent]) -> Option<u64> {
    let chord = &window[0];
    match feature {
        Feature::ChordDissonance => {
            let onsets = chord.onset_pitches();
            Some(dissonance(&onsets, &onsets).expect("chords always have onset notes") as u64)
        }
        Feature::ChordDistinctDurationRatio => {
            let distinct = chord.distinct_duration_count() as u64;
            let size = chord.len() as u64;
            (distinct.max(size) <= MAX_SHIFT).then(|| (1 << distinct) | (1 << size))
        }
        Feature::ChordDuration => {
            let this = chord.distinct_onsets().into_iter().max()?;
            let next = window[1].distinct_onsets().into_iter().max()?;
            Some(next - this)
        }
        Feature::ChordLowestInterval => {
            let pitches = chord.pitches();
            (pitches.len() >= 2).then(|| (pitches[1] - pitches[0]) as u64)
        }
        Feature::ChordOnset => {
            let size = chord.len() as u64;
            if size > MAX_SHIFT {
                return None;
            }
            let mut bits = 1u64 << size;
            for (i, note) in chord.notes.iter().enumerate() {
                bits |= (chord.note_is_onset(note) as u64) << i;
            }
            Some(bits)
        }
        Feature::ChordOnsetPCD => Some(chord.onset_pitch_classes().pcd().bits() as u64),
        Feature::ChordOnsetRatio => {
            let size = chord.len() as u64;
            let onsets = chord.onset_count() as u64;
            (size <= MAX_SHIFT).then(|| (1 << onsets) | (1 << size))
        }
        Feature::ChordOnsetShape => {
            let low = chord.notes.first()?.pitch as u64;
            let high = chord.notes.last()?.pitch as u64;
            if high - low > MAX_SHIFT {
                return None;
            }
            let mut bits = 0u64;
            for note in &chord.notes {
                bits += (chord.note_is_onset(note) as u64) << (note.pitch as u64 - low);
            }
            Some(bits)
        }
        Feature::ChordOnsetTiePCD => {
            let onsets = chord.onset_pitch_classes().pcd().bits() as u64;
            let ties = chord.tie_pitch_classes().pcd().bits() as u64;
            Some(onsets + (ties << 12))
        }
        Feature::ChordOnsetTieReduced => {
            let onsets = chord.onset_pitch_classes().bits() as u64;
            let ties = chord.tie_pitch_classes().bits() as u64;
            Some(reduce(onsets + (ties << 12), 24).expect("24-bit value"))
        }
        Feature::ChordPCD => Some(chord.pitch_classes().pcd().bits() as u64),
        Feature::ChordPCDWBass => {
            let pcd = chord.pitch_classes().pcd().bits() as u64;
            let bass = pc(*chord.pitches().first()?) as u64;
            Some(pcd + (1 << (12 + bass)))
        }
        Feature::ChordPCSizeRatio => {
            let pitches = chord.pitches();
            let classes = PitchClassSet::from_pitches(pitches.iter().copied()).len() as u64;
            let size = pitches.len() as u64;
            (size <= MAX_SHIFT).then(|| (1 << classes) | (1 << size))
        }
        Feature::ChordRange => {
            let pitches = chord.pitches();
            Some((pitches.last()? - pitches.first()?) as u64)
        }
        Feature::ChordShape => {
            let pitches = chord.pitches();
            let low = *pitches.first()?;
            if (*pitches.last()? - low) as u64 > MAX_SHIFT {
                return None;
            }
            Some(pitches.iter().map(|&p| 1u64 << (p - low) as u64).sum())
        }
        Feature::ChordSize => Some(chord.len() as u64),
        Feature::ChordTonnetz => {
            Some(tonnetz_length(chord.pitch_classes()).expect("chord is non-empty") as u64)
        }
        Feature::ChordSizeNgram => {
            let s = |c: &ChordEvent| (c.len() as u64).min(255);
            Some(s(&window[0]) + (s(&window[1]) << 8) + (s(&window[2]) << 16))
        }
        Feature::ChordTranBassInterval => {
            let this = *chord.pitches().first()?;
            let next = *window[1].pitches().first()?;
            Some(pc(next - this) as u64)
        }
        Feature::ChordTranDissonance => {
            let this = chord.pitches();
            let next = window[1].pitches();
            Some(dissonance(&this, &next).expect("chords are non-empty") as u64)
        }
        Feature::ChordTranDistance => {
            let this = chord.pitches();
            let next = window[1].pitches();
            let low = (next.first()? - this.first()?).abs();
            let high = (next.last()? - this.last()?).abs();
            Some((low + high) as u64)
        }
        Feature::ChordTranOuter => {
            let this = chord.pitches();
            let next = window[1].pitches();
            let range_this = pc(this.last()? - this.first()?) as u64;
            let range_next = pc(next.last()? - next.first()?) as u64;
            let bass = pc(this.first()? - next.first()?) as u64;
            Some(range_this + (range_next << 8) + (bass << 16))
        }
        Feature::ChordTranPCD => {
            let this = chord.pitch_classes().bits() as u64;
            let next = window[1].pitch_classes().bits() as u64;
            Some(reduce(this + (next << 12), 24).expect("24-bit value"))
        }
        Feature::ChordTranRepeat => {
            let all_onsets = chord.notes.iter().all(|n| chord.note_is_onset(n));
            let repeated = chord.pitches() == window[1].pitches();
            Some((all_onsets && repeated) as u64)
        }
        Feature::ChordTranScaleDistance => {
            let this = scale_signature(chord.pitch_classes()).bits() as u64;
            let next = scale_signature(window[1].pitch_classes()).bits() as u64;
            Some(popcount(this ^ next) as u64)
        }
        Feature::ChordTranScaleUnion => {
            let this = scale_signature(chord.pitch_classes()).bits() as u64;
            let next = scale_signature(window[1].pitch_classes()).bits() as u64;
            Some(popcount(this | next) as u64)
        }
        Feature::ChordTranVoiceMotion => {
            let this = chord.pitches();
            let next = window[1].pitches();
            Some(voice_motion(&this, &next).expect("chords are non-empty") as u64)
        }
        Feature::MelodyNgram
        | Feature::MelodyPCD
        | Feature::IntervalClassDist
        | Feature::IntervalDist => unreachable!("dispatched elsewhere"),
    }
}

fn melody_category(feature: Feature, window: &[u8]) -> u64 {
    match feature {
        Feature::MelodyNgram => {
            // Three intervals packed into 8-bit fields.
            (0..3)
                .map(|i| {
                    let interval = pc(window[i + 1] as i64 - window[i] as i64) as u64;
                    interval << (8 * i)
                })
                .sum()
        }
        Feature::MelodyPCD => {
            PitchClassSet::from_pitches(window.iter().map(|&p| p as i64)).pcd().bits() as u64
        }
        _ => unreachable!("not a melody feature"),
    }
}

/// Distinct intervals (or interval classes) over all pitch pairs of a chord.
fn interval_set(feature: Feature, chord: &ChordEvent) -> Vec<u64> {
    let pitches = chord.pitches();
    let mut out: Vec<u64> = Vec::new();
    for (i, &hi) in pitches.iter().enumerate() {
        for &lo in &pitches[..i] {
            let value = match feature {
                Feature::IntervalDist => pc(hi - lo) as u64,
                Feature::IntervalClassDist => pcc(hi - lo) as u64,
                _ => unreachable!("not an interval feature"),
            };
            out.push(value);
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// The categories kept for one feature across a file collection, ranked by
/// how many files contain them.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CategoryVocabulary {
    pub feature: Feature,
    /// At most [`CATEGORY_CAP`] categories, ordered by (document frequency
    /// descending, category ascending).
    pub kept: Vec<u64>,
    pub document_frequency: BTreeMap<u64, u32>,
}

/// Rank categories by the number of files containing them and keep the top
/// `cap`, breaking ties toward smaller category values.
pub fn build_vocabulary(
    feature: Feature,
    per_file: &[&CategoricalDistribution],
    cap: usize,
) -> CategoryVocabulary {
    let mut document_frequency: BTreeMap<u64, u32> = BTreeMap::new();
    for dist in per_file {
        for category in dist.categories() {
            *document_frequency.entry(category).or_insert(0) += 1;
        }
    }
    let mut kept: Vec<u64> = document_frequency.keys().copied().collect();
    kept.sort_by_key(|c| (std::cmp::Reverse(document_frequency[c]), *c));
    kept.truncate(cap);
    CategoryVocabulary { feature, kept, document_frequency }
}

/// Frequency vector of a distribution over the kept categories. Each entry
/// is the category's share of the distribution's *entire* mass, so mass on
/// dropped categories is omitted rather than renormalized. A zero-total
/// distribution yields the all-zero vector.
pub fn vectorize(dist: &CategoricalDistribution, vocab: &CategoryVocabulary) -> Vec<f64> {
    let total = dist.total();
    if total <= 0.0 {
        return vec![0.0; vocab.kept.len()];
    }
    vocab.kept.iter().map(|&c| dist.weight(c) / total).collect()
}

/// Per-file frequency vectors over a shared vocabulary, with class labels:
/// 0 for candidates, 1 for corpus files.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub vocabulary: CategoryVocabulary,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
}

pub const LABEL_CANDIDATE: u8 = 0;
pub const LABEL_CORPUS: u8 = 1;

impl FeatureMatrix {
    /// Build the matrix for one feature: vocabulary from candidates and
    /// corpus jointly, candidate rows first (label 0), corpus rows after
    /// (label 1).
    pub fn build(
        feature: Feature,
        candidates: &[&CategoricalDistribution],
        corpus: &[&CategoricalDistribution],
        cap: usize,
    ) -> Self {
        let all: Vec<&CategoricalDistribution> =
            candidates.iter().chain(corpus.iter()).copied().collect();
        let vocabulary = build_vocabulary(feature, &all, cap);
        let mut rows = Vec::with_capacity(all.len());
        let mut labels = Vec::with_capacity(all.len());
        for dist in candidates {
            rows.push(vectorize(dist, &vocabulary));
            labels.push(LABEL_CANDIDATE);
        }
        for dist in corpus {
            rows.push(vectorize(dist, &vocabulary));
            labels.push(LABEL_CORPUS);
        }
        FeatureMatrix { vocabulary, rows, labels }
    }

    pub fn dimension(&self) -> usize {
        self.vocabulary.kept.len()
    }

    /// CSV with a `label` column and one column per kept category value.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label");
        for c in &self.vocabulary.kept {
            out.push(',');
            out.push_str(&c.to_string());
        }
        out.push('\n');
        for (row, label) in self.rows.iter().zip(&self.labels) {
            out.push_str(&label.to_string());
            for v in row {
                out.push(',');
                out.push_str(&format!("{v}"));
            }
            out.push('\n');
        }
        out
    }
}

/// JSON dump of one file's distributions: feature name to a map from
/// decimal category to weight.
pub fn distributions_to_json(dists: &BTreeMap<Feature, CategoricalDistribution>) -> String {
    let named: BTreeMap<&str, &CategoricalDistribution> =
        dists.iter().map(|(f, d)| (f.name(), d)).collect();
    serde_json::to_string_pretty(&named).expect("distributions serialize")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::midi::{extract_melody, segment_chords, Note};

    fn note(onset: u64, duration: u64, pitch: u8) -> Note {
        Note { onset, duration, pitch, channel: 0, track: 0 }
    }

    fn chord_notes(onset: u64, duration: u64, pitches: &[u8]) -> Vec<Note> {
        pitches.iter().map(|&p| note(onset, duration, p)).collect()
    }

    fn extract(feature: Feature, notes: &[Note]) -> CategoricalDistribution {
        let chords = segment_chords(notes).unwrap();
        let melody = extract_melody(&chords);
        extract_feature(feature, &chords, &melody)
    }

    #[test]
    fn catalog_has_31_features_with_unique_names() {
        assert_eq!(Feature::ALL.len(), 31);
        let names: std::collections::HashSet<&str> =
            Feature::ALL.iter().map(|f| f.name()).collect();
        assert_eq!(names.len(), 31);
        for &f in Feature::ALL {
            assert_eq!(Feature::from_name(f.name()), Ok(f));
        }
        assert!(Feature::from_name("NotAFeature").is_err());
    }

    #[test]
    fn chord_size_categories_on_four_voice_texture() {
        // Four voices with staggered movement: sizes stay within 1..=4.
        let mut notes = chord_notes(0, 4, &[48, 60, 64, 67]);
        notes.extend(chord_notes(4, 2, &[50, 59, 62, 67]));
        notes.extend([note(6, 2, 57), note(6, 2, 60)]);
        let dist = extract(Feature::ChordSize, &notes);
        assert!(dist.categories().all(|c| (1..=4).contains(&c)));
        assert!(dist.total() > 0.0);
    }

    #[test]
    fn chord_pcd_weighted_by_duration() {
        // One C-major triad, all onsets, duration 7.
        let dist = extract(Feature::ChordPCD, &chord_notes(0, 7, &[60, 64, 67]));
        assert_eq!(dist.iter().collect::<Vec<_>>(), vec![(145, 7.0)]);
    }

    #[test]
    fn chord_tran_repeat_on_reattacked_chord() {
        let mut notes = chord_notes(0, 4, &[60, 64, 67]);
        notes.extend(chord_notes(4, 4, &[60, 64, 67]));
        let dist = extract(Feature::ChordTranRepeat, &notes);
        assert_eq!(dist.iter().collect::<Vec<_>>(), vec![(1, 1.0)]);
    }

    #[test]
    fn melody_ngram_packs_three_intervals() {
        let notes = vec![note(0, 1, 60), note(1, 1, 62), note(2, 1, 64), note(3, 1, 65)];
        let dist = extract(Feature::MelodyNgram, &notes);
        let expected = 2u64 + (2 << 8) + (1 << 16);
        assert_eq!(dist.iter().collect::<Vec<_>>(), vec![(expected, 1.0)]);
    }

    #[test]
    fn melody_pcd_uses_five_note_windows() {
        let notes: Vec<Note> =
            [60u8, 62, 64, 65, 67, 69].iter().enumerate().map(|(i, &p)| note(i as u64, 1, p)).collect();
        let dist = extract(Feature::MelodyPCD, &notes);
        // Windows {60..67} and {62..69}; both are five-note diatonic runs.
        assert_eq!(dist.total(), 2.0);
        let w0 = PitchClassSet::from_pitches([60i64, 62, 64, 65, 67]).pcd().bits() as u64;
        assert!(dist.contains(w0));
    }

    #[test]
    fn interval_dist_uses_set_semantics_per_chord() {
        // {60, 64, 67, 76}: pairs yield pc intervals {4,7,3,9,0(16),4(64-60? no)}.
        // 76-60=16→4, 76-64=12→0, 76-67=9, 67-60=7, 67-64=3, 64-60=4: set {0,3,4,7,9}.
        let dist = extract(Feature::IntervalDist, &chord_notes(0, 2, &[60, 64, 67, 76]));
        let got: Vec<u64> = dist.categories().collect();
        assert_eq!(got, vec![0, 3, 4, 7, 9]);
        assert!(dist.iter().all(|(_, w)| w == 1.0));

        let dist = extract(Feature::IntervalClassDist, &chord_notes(0, 2, &[60, 61, 67]));
        // Intervals 1, 7, 6 → classes |1-6|=5, |7-6|=1, |6-6|=0.
        let got: Vec<u64> = dist.categories().collect();
        assert_eq!(got, vec![0, 1, 5]);
    }

    #[test]
    fn chord_onset_bitmask_and_sentinel() {
        // n1 sustains under n2: chord 1 has notes [60 (tie), 64 (onset)].
        let notes = vec![note(0, 2, 60), note(1, 1, 64)];
        let dist = extract(Feature::ChordOnset, &notes);
        // Chord 0: single onset note → 0b1 | 0b10 = 3.
        // Chord 1: notes sorted by pitch → bits 0b10 (onset at index 1) | 0b100 = 6.
        let got: Vec<(u64, f64)> = dist.iter().collect();
        assert_eq!(got, vec![(3, 1.0), (6, 1.0)]);
    }

    #[test]
    fn chord_onset_tie_packings_agree_with_reduce() {
        let notes = vec![
            note(0, 4, 60),
            note(0, 4, 64),
            note(2, 2, 67),
            note(2, 2, 71),
        ];
        let chords = segment_chords(&notes).unwrap();
        let second = &chords[1];
        let onsets = second.onset_pitch_classes();
        let ties = second.tie_pitch_classes();
        assert_eq!(onsets.bits(), (1 << 7) | (1 << 11));
        assert_eq!(ties.bits(), 1 | (1 << 4));

        let melody = extract_melody(&chords);
        let tie_pcd = extract_feature(Feature::ChordOnsetTiePCD, &chords, &melody);
        let expected =
            onsets.pcd().bits() as u64 + ((ties.pcd().bits() as u64) << 12);
        assert!(tie_pcd.contains(expected));

        // Every ChordOnsetTieReduced category is a fixed point of reduce(·, 24).
        let reduced = extract_feature(Feature::ChordOnsetTieReduced, &chords, &melody);
        for (category, _) in reduced.iter() {
            assert_eq!(reduce(category, 24).unwrap(), category);
        }
    }

    #[test]
    fn duration_weighted_features_respect_time_scale() {
        let base = vec![note(0, 2, 60), note(2, 2, 64), note(4, 4, 67)];
        let doubled: Vec<Note> =
            base.iter().map(|n| Note { onset: n.onset * 2, duration: n.duration * 2, ..*n }).collect();
        for &f in Feature::ALL {
            let a = extract(f, &base);
            let b = extract(f, &doubled);
            if f == Feature::ChordDuration {
                continue; // categories themselves are durations
            }
            let factor = if f.spec().duration_weighted { 2.0 } else { 1.0 };
            assert_eq!(a.len(), b.len(), "{}", f.name());
            for ((ca, wa), (cb, wb)) in a.iter().zip(b.iter()) {
                assert_eq!(ca, cb, "{}", f.name());
                assert_eq!(wa * factor, wb, "{}", f.name());
            }
        }
    }

    #[test]
    fn transposition_invariant_features() {
        let notes = vec![
            note(0, 4, 48),
            note(0, 4, 60),
            note(0, 2, 64),
            note(2, 2, 65),
            note(4, 4, 67),
            note(4, 4, 71),
            note(8, 2, 72),
            note(10, 2, 74),
            note(12, 4, 76),
        ];
        let transposed: Vec<Note> =
            notes.iter().map(|n| Note { pitch: n.pitch + 3, ..*n }).collect();
        // ChordTranPCD is *not* in this list: 24-bit rotations of the
        // concatenated pair mix the two halves, so its reduction is not
        // stable under transposition (e.g. chords {11},{0} reduce to 3 but
        // their +1 transposition {0},{1} reduces to 2049).
        for f in [
            Feature::ChordPCD,
            Feature::ChordOnsetPCD,
            Feature::MelodyNgram,
            Feature::MelodyPCD,
            Feature::IntervalDist,
            Feature::IntervalClassDist,
            Feature::ChordShape,
            Feature::ChordSize,
        ] {
            assert_eq!(extract(f, &notes), extract(f, &transposed), "{}", f.name());
        }
        let pair = |a: u16, b: u16| reduce(a as u64 + ((b as u64) << 12), 24).unwrap();
        assert_eq!(pair(1 << 11, 1), 3);
        assert_eq!(pair(1, 1 << 1), 2049);
    }

    #[test]
    fn every_feature_produces_mass_on_a_rich_fixture() {
        let mut notes = Vec::new();
        for (i, root) in [60u8, 62, 64, 65, 67, 69, 71, 72].iter().enumerate() {
            notes.extend(chord_notes(i as u64 * 4, 4, &[root - 12, *root, root + 4, root + 7]));
        }
        // A couple of suspensions so tie features fire.
        notes.push(note(2, 6, 79));
        for &f in Feature::ALL {
            let dist = extract(f, &notes);
            assert!(dist.total() > 0.0, "{} produced no mass", f.name());
        }
    }

    #[test]
    fn pc_set_construction_matches_indicator_route() {
        use crate::midi::{indicator, pred_is_onset, pred_is_tie, pred_pitch_class};
        let notes = vec![note(0, 4, 60), note(0, 4, 67), note(2, 2, 64), note(2, 2, 72)];
        let chords = segment_chords(&notes).unwrap();
        for chord in &chords {
            let mut all = 0u16;
            let mut onsets = 0u16;
            let mut ties = 0u16;
            for i in 0..12u8 {
                let pc_i = pred_pitch_class(i);
                all |= (indicator(chord, &[&pc_i]).unwrap() as u16) << i;
                onsets |= (indicator(chord, &[&pred_is_onset, &pc_i]).unwrap() as u16) << i;
                ties |= (indicator(chord, &[&pred_is_tie, &pc_i]).unwrap() as u16) << i;
            }
            assert_eq!(all, chord.pitch_classes().bits());
            assert_eq!(onsets, chord.onset_pitch_classes().bits());
            assert_eq!(ties, chord.tie_pitch_classes().bits());
        }
    }

    #[test]
    fn vocabulary_cap_and_tie_breaks() {
        let shared: Vec<CategoricalDistribution> = (0..3)
            .map(|_| {
                let mut d = CategoricalDistribution::new();
                d.add(1, 1.0);
                d.add(2, 1.0);
                d
            })
            .collect();
        let refs: Vec<&CategoricalDistribution> = shared.iter().collect();
        let vocab = build_vocabulary(Feature::ChordSize, &refs, CATEGORY_CAP);
        assert_eq!(vocab.kept, vec![1, 2]);

        // 1500 singleton categories: keep the 1000 numerically smallest.
        let singles: Vec<CategoricalDistribution> = (0..1500u64)
            .map(|c| {
                let mut d = CategoricalDistribution::new();
                d.add(c, 1.0);
                d
            })
            .collect();
        let refs: Vec<&CategoricalDistribution> = singles.iter().collect();
        let vocab = build_vocabulary(Feature::ChordSize, &refs, CATEGORY_CAP);
        assert_eq!(vocab.kept.len(), 1000);
        let mut sorted = vocab.kept.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..1000).collect::<Vec<u64>>());

        // Higher document frequency wins over smaller value.
        let mut a = CategoricalDistribution::new();
        a.add(9, 1.0);
        let mut b = CategoricalDistribution::new();
        b.add(9, 2.0);
        b.add(3, 1.0);
        let vocab = build_vocabulary(Feature::ChordSize, &[&a, &b], 1);
        assert_eq!(vocab.kept, vec![9]);
    }

    #[test]
    fn vectorize_examples() {
        let mut dist = CategoricalDistribution::new();
        dist.add(5, 3.0);
        dist.add(9, 1.0);
        let vocab = CategoryVocabulary {
            feature: Feature::ChordSize,
            kept: vec![5, 9],
            document_frequency: BTreeMap::new(),
        };
        assert_eq!(vectorize(&dist, &vocab), vec![0.75, 0.25]);

        let vocab_dropped = CategoryVocabulary {
            feature: Feature::ChordSize,
            kept: vec![5],
            document_frequency: BTreeMap::new(),
        };
        assert_eq!(vectorize(&dist, &vocab_dropped), vec![0.75]);

        let empty = CategoricalDistribution::new();
        assert_eq!(vectorize(&empty, &vocab), vec![0.0, 0.0]);
    }

    #[test]
    fn matrix_rows_sum_to_at_most_one() {
        let mut a = CategoricalDistribution::new();
        a.add(1, 2.0);
        a.add(2, 2.0);
        let mut b = CategoricalDistribution::new();
        b.add(2, 1.0);
        b.add(3, 3.0);
        let matrix = FeatureMatrix::build(Feature::ChordSize, &[&a], &[&b], 2);
        assert_eq!(matrix.labels, vec![LABEL_CANDIDATE, LABEL_CORPUS]);
        for row in &matrix.rows {
            let sum: f64 = row.iter().sum();
            assert!(sum <= 1.0 + 1e-12);
            assert!(row.iter().all(|&v| v >= 0.0));
        }
        // Full cap keeps everything: rows sum to exactly 1.
        let matrix = FeatureMatrix::build(Feature::ChordSize, &[&a], &[&b], CATEGORY_CAP);
        for row in &matrix.rows {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let csv = matrix.to_csv();
        assert!(csv.starts_with("label,"));
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn feature_dump_uses_decimal_string_categories() {
        let notes = chord_notes(0, 7, &[60, 64, 67]);
        let chords = segment_chords(&notes).unwrap();
        let melody = extract_melody(&chords);
        let dists = extract_features(&[Feature::ChordPCD], &chords, &melody);
        let json = distributions_to_json(&dists);
        assert!(json.contains("\"ChordPCD\""));
        assert!(json.contains("\"145\""));
    }

    #[test]
    fn parse_feature_list_accepts_names_and_all() {
        let parsed = parse_feature_list(&["ChordPCD,ChordSize".into()]).unwrap();
        assert_eq!(parsed, vec![Feature::ChordPCD, Feature::ChordSize]);
        let all = parse_feature_list(&["all".into()]).unwrap();
        assert_eq!(all.len(), 31);
        assert!(parse_feature_list(&["Nope".into()]).is_err());
    }
}
