//! Dataset hygiene and trial construction: near-duplicate detection via
//! normalized Levenshtein distance over head/tail pitch signatures, and the
//! shuffled corpus/candidate splits batch experiments are built from.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::midi::Note;

#[derive(Debug, Error, PartialEq)]
pub enum CorpusError {
    #[error("style A needs at least {needed} files, found {found}")]
    InsufficientStyleA { needed: usize, found: usize },
    #[error("style B needs at least {needed} files, found {found}")]
    InsufficientStyleB { needed: usize, found: usize },
    #[error("threshold {0} outside [0, 1]")]
    BadThreshold(f64),
}

/// How many leading/trailing pitches a signature keeps.
pub const SIGNATURE_LENGTH: usize = 100;

/// The first and last pitches of a piece, read off notes sorted
/// lexicographically by (onset, pitch).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PitchSignature {
    pub head: Vec<u8>,
    pub tail: Vec<u8>,
}

impl PitchSignature {
    pub fn from_notes(notes: &[Note]) -> Self {
        let mut sorted: Vec<&Note> = notes.iter().collect();
        sorted.sort_by_key(|n| (n.onset, n.pitch));
        let pitches: Vec<u8> = sorted.iter().map(|n| n.pitch).collect();
        let head = pitches.iter().take(SIGNATURE_LENGTH).copied().collect();
        let tail =
            pitches[pitches.len().saturating_sub(SIGNATURE_LENGTH)..].to_vec();
        Self { head, tail }
    }
}

/// Unit-cost edit distance.
pub fn levenshtein<T: Eq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    let mut previous: Vec<usize> = (0..=a.len()).collect();
    let mut current = vec![0usize; a.len() + 1];
    for (j, bj) in b.iter().enumerate() {
        current[0] = j + 1;
        for (i, ai) in a.iter().enumerate() {
            let substitution = previous[i] + (ai != bj) as usize;
            current[i + 1] = substitution.min(previous[i + 1] + 1).min(current[i] + 1);
        }
        std::mem::swap(&mut previous, &mut current);
    }
    previous[a.len()]
}

/// Edit distance normalized to `[0, 1]` by the longer length; two empty
/// sequences are at distance 0.
pub fn levenshtein_norm<T: Eq>(a: &[T], b: &[T]) -> f64 {
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 0.0;
    }
    levenshtein(a, b) as f64 / longest as f64
}

/// A pair flagged as near-duplicates. `removed` records whether file
/// `file_b` was dropped because of this pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DedupPair {
    pub file_a: usize,
    pub file_b: usize,
    pub head_dist: f64,
    pub tail_dist: f64,
    pub removed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DedupOutcome {
    /// Indices of the files kept, in input order.
    pub kept: Vec<usize>,
    /// Every flagged duplicate pair, in (file_a, file_b) order.
    pub pairs: Vec<DedupPair>,
}

/// Flag a pair as duplicate when either its head distance or its tail
/// distance falls below the threshold, then resolve greedily in input
/// order, keeping the earlier file of each surviving pair.
pub fn dedup(signatures: &[PitchSignature], threshold: f64) -> Result<DedupOutcome, CorpusError> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(CorpusError::BadThreshold(threshold));
    }
    let n = signatures.len();
    let index_pairs: Vec<(usize, usize)> =
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();

    let distance = |&(i, j): &(usize, usize)| {
        let head = levenshtein_norm(&signatures[i].head, &signatures[j].head);
        let tail = levenshtein_norm(&signatures[i].tail, &signatures[j].tail);
        (i, j, head, tail)
    };
    #[cfg(feature = "parallel")]
    let distances: Vec<(usize, usize, f64, f64)> = index_pairs.par_iter().map(distance).collect();
    #[cfg(not(feature = "parallel"))]
    let distances: Vec<(usize, usize, f64, f64)> = index_pairs.iter().map(distance).collect();

    let mut alive = vec![true; n];
    let mut pairs = Vec::new();
    for (i, j, head_dist, tail_dist) in distances {
        if head_dist >= threshold && tail_dist >= threshold {
            continue;
        }
        let removed = alive[i] && alive[j];
        if removed {
            alive[j] = false;
        }
        pairs.push(DedupPair { file_a: i, file_b: j, head_dist, tail_dist, removed });
    }
    let kept = (0..n).filter(|&i| alive[i]).collect();
    Ok(DedupOutcome { kept, pairs })
}

impl DedupOutcome {
    /// CSV report, one row per flagged pair.
    pub fn to_csv(&self, names: &[String]) -> String {
        let mut out = String::from("fileA,fileB,headDist,tailDist,removed\n");
        for pair in &self.pairs {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                names[pair.file_a], names[pair.file_b], pair.head_dist, pair.tail_dist, pair.removed
            ));
        }
        out
    }
}

/// (corpus, same-style candidates, off-style candidates).
pub type TrialSplit<T> = (Vec<T>, Vec<T>, Vec<T>);

/// Shuffle both styles with the seed and carve out a corpus of size `n`
/// from style A, a same-style candidate set from the next `n` files of A,
/// and an off-style candidate set of `n` files from B. The corpus and the
/// candidate sets are disjoint by construction.
pub fn make_trial_split<T: Clone>(
    style_a: &[T],
    style_b: &[T],
    n: usize,
    seed: u64,
) -> Result<TrialSplit<T>, CorpusError> {
    if style_a.len() < 2 * n {
        return Err(CorpusError::InsufficientStyleA { needed: 2 * n, found: style_a.len() });
    }
    if style_b.len() < n {
        return Err(CorpusError::InsufficientStyleB { needed: n, found: style_b.len() });
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut a: Vec<T> = style_a.to_vec();
    a.shuffle(&mut rng);
    let mut b: Vec<T> = style_b.to_vec();
    b.shuffle(&mut rng);
    let corpus = a[..n].to_vec();
    let candidates_a = a[n..2 * n].to_vec();
    let candidates_b = b[..n].to_vec();
    Ok((corpus, candidates_a, candidates_b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn levenshtein_classic_example() {
        let kitten: Vec<u8> = b"kitten".to_vec();
        let sitting: Vec<u8> = b"sitting".to_vec();
        assert_eq!(levenshtein(&kitten, &sitting), 3);
        assert!((levenshtein_norm(&kitten, &sitting) - 3.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn levenshtein_norm_bounds() {
        assert_eq!(levenshtein_norm::<u8>(&[], &[]), 0.0);
        assert_eq!(levenshtein_norm(&[1, 2, 3], &[1, 2, 3]), 0.0);
        assert_eq!(levenshtein_norm(&[1, 2, 3], &[4, 5, 6]), 1.0);
    }

    /// Full-matrix reference implementation.
    #[allow(clippy::needless_range_loop)]
    pub(crate) fn levenshtein_reference<T: Eq>(a: &[T], b: &[T]) -> usize {
        let mut table = vec![vec![0usize; b.len() + 1]; a.len() + 1];
        for (i, row) in table.iter_mut().enumerate() {
            row[0] = i;
        }
        for j in 0..=b.len() {
            table[0][j] = j;
        }
        for i in 1..=a.len() {
            for j in 1..=b.len() {
                let cost = (a[i - 1] != b[j - 1]) as usize;
                table[i][j] = (table[i - 1][j] + 1)
                    .min(table[i][j - 1] + 1)
                    .min(table[i - 1][j - 1] + cost);
            }
        }
        table[a.len()][b.len()]
    }

    #[test]
    fn signature_takes_head_and_tail() {
        let notes: Vec<Note> = (0..250u64)
            .map(|i| Note {
                onset: i,
                duration: 1,
                pitch: (i % 128) as u8,
                channel: 0,
                track: 0,
            })
            .collect();
        let sig = PitchSignature::from_notes(&notes);
        assert_eq!(sig.head.len(), 100);
        assert_eq!(sig.tail.len(), 100);
        assert_eq!(sig.head[0], 0);
        assert_eq!(*sig.tail.last().unwrap(), (249 % 128) as u8);
        // Short file keeps everything.
        let sig = PitchSignature::from_notes(&notes[..5]);
        assert_eq!(sig.head.len(), 5);
        assert_eq!(sig.tail.len(), 5);
    }

    fn signature(head: &[u8], tail: &[u8]) -> PitchSignature {
        PitchSignature { head: head.to_vec(), tail: tail.to_vec() }
    }

    #[test]
    fn dedup_removes_exact_copy() {
        let a = signature(&[60, 62, 64], &[65, 67, 69]);
        let outcome = dedup(&[a.clone(), a.clone()], 0.75).unwrap();
        assert_eq!(outcome.kept, vec![0]);
        assert_eq!(outcome.pairs.len(), 1);
        assert!(outcome.pairs[0].removed);
    }

    #[test]
    fn dedup_flags_shared_head_with_unrelated_tail() {
        let head: Vec<u8> = (0..100).map(|i| 40 + (i % 30) as u8).collect();
        let tail_a: Vec<u8> = (0..100).map(|i| 40 + (i % 7) as u8).collect();
        let tail_b: Vec<u8> = (0..100).map(|i| 90 + (i % 5) as u8).collect();
        assert!(levenshtein_norm(&tail_a, &tail_b) >= 0.75);
        let outcome =
            dedup(&[signature(&head, &tail_a), signature(&head, &tail_b)], 0.75).unwrap();
        assert_eq!(outcome.kept, vec![0]);
        assert_eq!(outcome.pairs[0].head_dist, 0.0);
    }

    #[test]
    fn dedup_keeps_distant_files_and_is_idempotent() {
        let sigs: Vec<PitchSignature> = (0..4u32)
            .map(|k| {
                let head: Vec<u8> = (0..100u32).map(|i| ((k * 31 + i * (k + 2)) % 128) as u8).collect();
                let tail: Vec<u8> = (0..100u32).map(|i| ((k * 17 + i * (k + 3)) % 128) as u8).collect();
                signature(&head, &tail)
            })
            .collect();
        let outcome = dedup(&sigs, 0.75).unwrap();
        let kept_sigs: Vec<PitchSignature> =
            outcome.kept.iter().map(|&i| sigs[i].clone()).collect();
        let again = dedup(&kept_sigs, 0.75).unwrap();
        assert_eq!(again.kept.len(), kept_sigs.len());
        assert!(again.pairs.iter().all(|p| !p.removed));
        assert!(dedup(&sigs, 1.5).is_err());
    }

    #[test]
    fn dedup_csv_report_shape() {
        let a = signature(&[1, 2, 3], &[4, 5, 6]);
        let outcome = dedup(&[a.clone(), a], 0.75).unwrap();
        let csv = outcome.to_csv(&["x.mid".into(), "y.mid".into()]);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("fileA,fileB,headDist,tailDist,removed"));
        assert_eq!(lines.next(), Some("x.mid,y.mid,0,0,true"));
    }

    #[test]
    fn trial_split_sizes_disjointness_determinism() {
        let a: Vec<u32> = (0..20).collect();
        let b: Vec<u32> = (100..110).collect();
        let (corpus, ga, gb) = make_trial_split(&a, &b, 10, 99).unwrap();
        assert_eq!((corpus.len(), ga.len(), gb.len()), (10, 10, 10));
        assert!(corpus.iter().all(|x| !ga.contains(x)));
        assert!(gb.iter().all(|x| *x >= 100));
        let again = make_trial_split(&a, &b, 10, 99).unwrap();
        assert_eq!((corpus, ga, gb), again);
        let different = make_trial_split(&a, &b, 10, 100).unwrap();
        assert_ne!(different.0, again.0);

        assert_eq!(
            make_trial_split(&a, &b, 11, 0),
            Err(CorpusError::InsufficientStyleA { needed: 22, found: 20 })
        );
        assert_eq!(
            make_trial_split(&a[..6], &b[..2], 3, 0),
            Err(CorpusError::InsufficientStyleB { needed: 3, found: 2 })
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn levenshtein_is_a_metric(
            a in proptest::collection::vec(0u8..6, 0..14),
            b in proptest::collection::vec(0u8..6, 0..14),
            c in proptest::collection::vec(0u8..6, 0..14),
        ) {
            let ab = levenshtein(&a, &b);
            prop_assert_eq!(ab, levenshtein(&b, &a));
            prop_assert_eq!(ab == 0, a == b);
            prop_assert!(ab <= levenshtein(&a, &c) + levenshtein(&c, &b));
            prop_assert_eq!(ab, levenshtein_reference(&a, &b));
        }
    }
}
