//! Bitwise pitch-class-set algebra and the musical helper functions the
//! feature formulas call: rotation/reduction of bit sets, scale membership
//! signatures, periodicity-based dissonance, Tonnetz path lengths, and
//! voice-motion classification.

use std::sync::OnceLock;

use num_integer::Integer;
use num_rational::Ratio;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PitchError {
    #[error("value {value} does not fit in {width} bits")]
    OutOfRange { value: u64, width: u32 },
    #[error("rotation amount {amount} out of range for width {width}")]
    BadRotation { amount: u32, width: u32 },
    #[error("bit width {0} unsupported (must be 1..=63)")]
    BadWidth(u32),
    #[error("empty pitch set")]
    EmptySet,
}

/// A set of pitch classes as a 12-bit integer, bit `i` set iff class `i`
/// is present (C = 0, C# = 1, ..., B = 11).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PitchClassSet(u16);

impl PitchClassSet {
    pub const MASK: u16 = 0x0fff;

    pub fn new(bits: u16) -> Result<Self, PitchError> {
        if bits > Self::MASK {
            return Err(PitchError::OutOfRange { value: bits as u64, width: 12 });
        }
        Ok(Self(bits))
    }

    pub fn empty() -> Self {
        Self(0)
    }

    pub fn chromatic() -> Self {
        Self(Self::MASK)
    }

    pub fn from_classes<I: IntoIterator<Item = u8>>(classes: I) -> Self {
        let mut bits = 0u16;
        for c in classes {
            debug_assert!(c < 12);
            bits |= 1 << (c % 12);
        }
        Self(bits)
    }

    /// Collapse arbitrary pitches to their pitch classes.
    pub fn from_pitches<I: IntoIterator<Item = i64>>(pitches: I) -> Self {
        Self::from_classes(pitches.into_iter().map(pc))
    }

    pub fn bits(self) -> u16 {
        self.0
    }

    pub fn len(self) -> u32 {
        self.0.count_ones()
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, class: u8) -> bool {
        class < 12 && self.0 & (1 << class) != 0
    }

    pub fn is_subset_of(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn union(self, other: Self) -> Self {
        Self(self.0 | other.0)
    }

    pub fn classes(self) -> impl Iterator<Item = u8> {
        (0u8..12).filter(move |&c| self.contains(c))
    }

    /// Transpose every class up by `i` semitones (mod 12).
    pub fn transpose(self, i: u32) -> Self {
        Self((rot(self.0 as u64, 12, i % 12).expect("12-bit value") & Self::MASK as u64) as u16)
    }

    /// Canonical representative under transposition: the minimum integer
    /// over all 12 rotations.
    pub fn pcd(self) -> Self {
        Self(pcd_table()[self.0 as usize])
    }
}

/// Circular left rotation of the low `width` bits of `x`.
pub fn rot(x: u64, width: u32, amount: u32) -> Result<u64, PitchError> {
    if width == 0 || width > 63 {
        return Err(PitchError::BadWidth(width));
    }
    let mask = (1u64 << width) - 1;
    if x > mask {
        return Err(PitchError::OutOfRange { value: x, width });
    }
    if amount >= width {
        return Err(PitchError::BadRotation { amount, width });
    }
    Ok(((x << amount) | (x >> (width - amount))) & mask)
}

/// Minimum of `x` over all `width` rotations: the canonical representative
/// of the rotation equivalence class.
pub fn reduce(x: u64, width: u32) -> Result<u64, PitchError> {
    let mut best = rot(x, width, 0)?;
    for i in 1..width {
        let r = rot(x, width, i)?;
        if r < best {
            best = r;
        }
    }
    Ok(best)
}

/// `reduce` specialised to 12-bit pitch-class sets, via a precomputed table.
pub fn pcd(x: u16) -> Result<u16, PitchError> {
    if x > PitchClassSet::MASK {
        return Err(PitchError::OutOfRange { value: x as u64, width: 12 });
    }
    Ok(pcd_table()[x as usize])
}

fn pcd_table() -> &'static [u16; 4096] {
    static TABLE: OnceLock<[u16; 4096]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = [0u16; 4096];
        for (x, slot) in table.iter_mut().enumerate() {
            *slot = reduce(x as u64, 12).expect("12-bit value") as u16;
        }
        table
    })
}

/// Which transposed scales contain a pitch-class set: bit `1 + i` is set iff
/// the set lies inside the major scale transposed by `i`, bit `13 + i` iff it
/// lies inside the harmonic minor scale transposed by `i`, for `i` in 1..=12.
/// Bit 0 is always clear.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct ScaleSignature(u32);

impl ScaleSignature {
    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn popcount(self) -> u32 {
        self.0.count_ones()
    }
}

const MAJOR_SCALE: [u8; 7] = [0, 2, 4, 5, 7, 9, 11];
const HARMONIC_MINOR_SCALE: [u8; 7] = [0, 2, 3, 5, 7, 8, 11];

fn transposed_scales() -> &'static [[PitchClassSet; 12]; 2] {
    static SCALES: OnceLock<[[PitchClassSet; 12]; 2]> = OnceLock::new();
    SCALES.get_or_init(|| {
        let mut out = [[PitchClassSet::empty(); 12]; 2];
        for (kind, base) in [MAJOR_SCALE, HARMONIC_MINOR_SCALE].iter().enumerate() {
            for i in 0..12u32 {
                out[kind][i as usize] = PitchClassSet::from_classes(base.iter().copied()).transpose(i);
            }
        }
        out
    })
}

pub fn scale_signature(pcs: PitchClassSet) -> ScaleSignature {
    let scales = transposed_scales();
    let mut bits = 0u32;
    for i in 1..=12u32 {
        if pcs.is_subset_of(scales[0][(i % 12) as usize]) {
            bits |= 1 << i;
        }
        if pcs.is_subset_of(scales[1][(i % 12) as usize]) {
            bits |= 1 << (12 + i);
        }
    }
    ScaleSignature(bits)
}

/// Pitch class of `x`, with mathematical modulo into `[0, 12)`.
pub fn pc(x: i64) -> u8 {
    x.rem_euclid(12) as u8
}

/// Interval class of `x`: `|(x mod 12) - 6|`, in `[0, 6]`.
pub fn pcc(x: i64) -> u8 {
    (pc(x) as i8 - 6).unsigned_abs()
}

pub fn popcount(x: u64) -> u32 {
    x.count_ones()
}

/// Just-intonation approximations of the 12 equal-tempered intervals,
/// each within 1.1% of equal temperament (tritone 17/12, minor seventh 16/9).
const JUST_RATIOS: [(i128, i128); 12] = [
    (1, 1),
    (16, 15),
    (9, 8),
    (6, 5),
    (5, 4),
    (4, 3),
    (17, 12),
    (3, 2),
    (8, 5),
    (5, 3),
    (16, 9),
    (15, 8),
];

/// Relative periodicity of a set of relative pitches (semitones): each pitch
/// maps to its just-intonation ratio scaled by its octave, and the result is
/// the least common multiple of the reduced denominators.
pub fn stol_periodicity(relative_pitches: &[i64]) -> Result<u64, PitchError> {
    if relative_pitches.is_empty() {
        return Err(PitchError::EmptySet);
    }
    let mut out: u128 = 1;
    for &s in relative_pitches {
        let (num, den) = JUST_RATIOS[pc(s) as usize];
        let octave = s.div_euclid(12);
        let ratio = if octave >= 0 {
            Ratio::new(num << octave.min(100), den)
        } else {
            Ratio::new(num, den << (-octave).min(100))
        };
        out = out.lcm(&(*ratio.denom() as u128));
    }
    Ok(u64::try_from(out).unwrap_or(u64::MAX))
}

/// Mean relative periodicity of pitch set `p` against every transposition
/// reference in `t`.
pub fn dissonance(p: &[i64], t: &[i64]) -> Result<f64, PitchError> {
    if p.is_empty() || t.is_empty() {
        return Err(PitchError::EmptySet);
    }
    let mut sum = 0.0;
    for &x in t {
        let relative: Vec<i64> = p.iter().map(|&q| q - x).collect();
        sum += stol_periodicity(&relative)? as f64;
    }
    Ok(sum / t.len() as f64)
}

/// Tonnetz adjacency: two pitch classes are connected iff their difference
/// mod 12 is a minor third, major third, or perfect fourth/fifth.
const TONNETZ_INTERVALS: [u8; 6] = [3, 4, 5, 7, 8, 9];

fn tonnetz_distances() -> &'static [[u8; 12]; 12] {
    static DIST: OnceLock<[[u8; 12]; 12]> = OnceLock::new();
    DIST.get_or_init(|| {
        let mut dist = [[u8::MAX; 12]; 12];
        for start in 0..12usize {
            // BFS over the 12-vertex graph.
            dist[start][start] = 0;
            let mut queue = std::collections::VecDeque::from([start]);
            while let Some(v) = queue.pop_front() {
                for &step in &TONNETZ_INTERVALS {
                    let w = (v + step as usize) % 12;
                    if dist[start][w] == u8::MAX {
                        dist[start][w] = dist[start][v] + 1;
                        queue.push_back(w);
                    }
                }
            }
        }
        dist
    })
}

/// Minimum number of Tonnetz edges in a walk visiting every pitch class of
/// `pcs` at least once: a minimum-cost open Hamiltonian path over the
/// pairwise shortest-path closure, solved by a subset dynamic program.
pub fn tonnetz_length(pcs: PitchClassSet) -> Result<u32, PitchError> {
    if pcs.is_empty() {
        return Err(PitchError::EmptySet);
    }
    let nodes: Vec<u8> = pcs.classes().collect();
    let k = nodes.len();
    if k == 1 {
        return Ok(0);
    }
    let dist = tonnetz_distances();
    let full = (1usize << k) - 1;
    let mut dp = vec![[u32::MAX; 12]; full + 1];
    for (i, _) in nodes.iter().enumerate() {
        dp[1 << i][i] = 0;
    }
    for mask in 1..=full {
        for last in 0..k {
            let cost = dp[mask][last];
            if cost == u32::MAX || mask & (1 << last) == 0 {
                continue;
            }
            for next in 0..k {
                if mask & (1 << next) != 0 {
                    continue;
                }
                let step = dist[nodes[last] as usize][nodes[next] as usize] as u32;
                let slot = &mut dp[mask | (1 << next)][next];
                if cost + step < *slot {
                    *slot = cost + step;
                }
            }
        }
    }
    Ok((0..k).map(|last| dp[full][last]).min().expect("non-empty"))
}

/// Outer-voice motion between two pitch sets:
/// 0 static, 1 oblique, 2 contrary, 3 similar, 4 parallel.
pub fn voice_motion(p1: &[i64], p2: &[i64]) -> Result<u8, PitchError> {
    if p1.is_empty() || p2.is_empty() {
        return Err(PitchError::EmptySet);
    }
    let (lo1, hi1) = (*p1.iter().min().unwrap(), *p1.iter().max().unwrap());
    let (lo2, hi2) = (*p2.iter().min().unwrap(), *p2.iter().max().unwrap());
    let d_low = lo2 - lo1;
    let d_high = hi2 - hi1;
    Ok(match (d_low.signum(), d_high.signum()) {
        (0, 0) => 0,
        (0, _) | (_, 0) => 1,
        (a, b) if a != b => 2,
        _ if d_low.abs() == d_high.abs() => 4,
        _ => 3,
    })
}
