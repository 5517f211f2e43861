//! Standard MIDI File ingestion: parse format 0/1 files into note lists,
//! normalize time to a canonical resolution, and slice the notes into the
//! chord sequence every feature consumes.
//!
//! A chord exists at each distinct onset tick and contains every note
//! sounding at that tick. Within a chord, a note is an *onset* if it starts
//! exactly at the chord's onset time and a *tie* if it is sustained from
//! earlier.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pitch::PitchClassSet;

/// Ticks per quarter note that all parsed files are rescaled to.
pub const CANONICAL_RESOLUTION: u32 = 480;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MidiError {
    #[error("bad header at byte {offset}: {reason}")]
    BadHeader { offset: usize, reason: String },
    #[error("truncated data at byte {offset}")]
    Truncated { offset: usize },
    #[error("invalid variable-length quantity at byte {offset}")]
    BadVlq { offset: usize },
    #[error("data byte {byte:#04x} at byte {offset} with no running status")]
    OrphanData { offset: usize, byte: u8 },
    #[error("no notes")]
    NoNotes,
    #[error("note not in chord {index}")]
    NoteNotInChord { index: usize },
    #[error("empty predicate set")]
    EmptyPredicates,
}

/// A note with onset and duration in canonical-resolution ticks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Note {
    pub onset: u64,
    pub duration: u64,
    pub pitch: u8,
    pub channel: u8,
    pub track: u32,
}

impl Note {
    pub fn end(&self) -> u64 {
        self.onset + self.duration
    }
}

/// The set of notes sounding at one distinct onset time, ordered ascending
/// by (pitch, onset).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChordEvent {
    pub index: usize,
    pub notes: Vec<Note>,
    pub onset_time: u64,
    pub duration_ticks: u64,
}

impl ChordEvent {
    pub fn len(&self) -> usize {
        self.notes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.notes.is_empty()
    }

    /// A note is an onset iff it starts at the chord's onset time, which is
    /// always the maximum onset among the chord's notes.
    pub fn note_is_onset(&self, note: &Note) -> bool {
        note.onset == self.onset_time
    }

    pub fn onset_count(&self) -> usize {
        self.notes.iter().filter(|n| self.note_is_onset(n)).count()
    }

    /// Distinct pitches, ascending.
    pub fn pitches(&self) -> Vec<i64> {
        let mut out: Vec<i64> = self.notes.iter().map(|n| n.pitch as i64).collect();
        out.dedup();
        out
    }

    /// Distinct pitches of onset notes, ascending.
    pub fn onset_pitches(&self) -> Vec<i64> {
        let mut out: Vec<i64> = self
            .notes
            .iter()
            .filter(|n| self.note_is_onset(n))
            .map(|n| n.pitch as i64)
            .collect();
        out.dedup();
        out
    }

    /// Distinct note onsets within the chord.
    pub fn distinct_onsets(&self) -> Vec<u64> {
        let mut out: Vec<u64> = self.notes.iter().map(|n| n.onset).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn pitch_classes(&self) -> PitchClassSet {
        PitchClassSet::from_pitches(self.notes.iter().map(|n| n.pitch as i64))
    }

    pub fn onset_pitch_classes(&self) -> PitchClassSet {
        PitchClassSet::from_pitches(
            self.notes.iter().filter(|n| self.note_is_onset(n)).map(|n| n.pitch as i64),
        )
    }

    pub fn tie_pitch_classes(&self) -> PitchClassSet {
        PitchClassSet::from_pitches(
            self.notes.iter().filter(|n| !self.note_is_onset(n)).map(|n| n.pitch as i64),
        )
    }

    pub fn distinct_duration_count(&self) -> usize {
        let mut durs: Vec<u64> = self.notes.iter().map(|n| n.duration).collect();
        durs.sort_unstable();
        durs.dedup();
        durs.len()
    }
}

/// One pitch per chord that contains at least one onset note: the highest
/// pitch among that chord's onset notes (the skyline).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MelodyLine {
    pub pitches: Vec<u8>,
}

impl MelodyLine {
    pub fn len(&self) -> usize {
        self.pitches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pitches.is_empty()
    }
}

/// Returns 1 iff the note is an onset of the chord, 0 if it is a tie.
pub fn is_onset(chord: &ChordEvent, note: &Note) -> Result<u8, MidiError> {
    if !chord.notes.contains(note) {
        return Err(MidiError::NoteNotInChord { index: chord.index });
    }
    Ok(chord.note_is_onset(note) as u8)
}

/// Complement of [`is_onset`].
pub fn is_tie(chord: &ChordEvent, note: &Note) -> Result<u8, MidiError> {
    Ok(1 - is_onset(chord, note)?)
}

pub type NotePredicate<'a> = &'a dyn Fn(&ChordEvent, &Note) -> bool;

/// Returns 1 iff some note of the chord satisfies every predicate at once.
pub fn indicator(chord: &ChordEvent, predicates: &[NotePredicate]) -> Result<u8, MidiError> {
    if predicates.is_empty() {
        return Err(MidiError::EmptyPredicates);
    }
    let hit = chord.notes.iter().any(|n| predicates.iter().all(|p| p(chord, n)));
    Ok(hit as u8)
}

pub fn pred_is_onset(chord: &ChordEvent, note: &Note) -> bool {
    chord.note_is_onset(note)
}

pub fn pred_is_tie(chord: &ChordEvent, note: &Note) -> bool {
    !chord.note_is_onset(note)
}

pub fn pred_pitch_class(class: u8) -> impl Fn(&ChordEvent, &Note) -> bool {
    move |_, n| n.pitch % 12 == class
}

/// Slice notes into chords: one chord per distinct onset, containing every
/// note sounding there. A chord lasts until the next distinct onset; the
/// final chord lasts until its latest note end.
pub fn segment_chords(notes: &[Note]) -> Result<Vec<ChordEvent>, MidiError> {
    if notes.is_empty() {
        return Err(MidiError::NoNotes);
    }
    let mut sorted: Vec<&Note> = notes.iter().collect();
    sorted.sort_unstable_by_key(|n| (n.onset, n.pitch, n.channel, n.track));
    let mut onsets: Vec<u64> = sorted.iter().map(|n| n.onset).collect();
    onsets.dedup();

    let mut chords = Vec::with_capacity(onsets.len());
    let mut active: Vec<&Note> = Vec::new();
    let mut next = 0usize;
    for (index, &onset_time) in onsets.iter().enumerate() {
        while next < sorted.len() && sorted[next].onset == onset_time {
            active.push(sorted[next]);
            next += 1;
        }
        active.retain(|n| n.end() > onset_time);
        let mut members: Vec<Note> = active.iter().map(|&&n| n).collect();
        members.sort_unstable_by_key(|n| (n.pitch, n.onset, n.channel, n.track));
        debug_assert!(!members.is_empty());
        let duration_ticks = match onsets.get(index + 1) {
            Some(&next_onset) => next_onset - onset_time,
            None => members.iter().map(Note::end).max().unwrap() - onset_time,
        };
        chords.push(ChordEvent { index, notes: members, onset_time, duration_ticks });
    }
    Ok(chords)
}

/// Skyline melody: the highest onset pitch of each chord, skipping chords
/// without onset notes.
pub fn extract_melody(chords: &[ChordEvent]) -> MelodyLine {
    let pitches = chords
        .iter()
        .filter_map(|c| {
            c.notes.iter().filter(|n| c.note_is_onset(n)).map(|n| n.pitch).max()
        })
        .collect();
    MelodyLine { pitches }
}

#[derive(Clone, Copy, Debug)]
pub struct ParseOptions {
    /// Ticks per quarter that onsets/durations are rescaled to.
    pub resolution: u32,
    /// Keep notes on MIDI channel 10 (the percussion channel).
    pub include_percussion: bool,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self { resolution: CANONICAL_RESOLUTION, include_percussion: true }
    }
}

/// Parse an SMF format 0 or 1 file into notes at the canonical resolution.
pub fn parse_midi(bytes: &[u8]) -> Result<Vec<Note>, MidiError> {
    parse_midi_with(bytes, &ParseOptions::default())
}

pub fn parse_midi_with(bytes: &[u8], options: &ParseOptions) -> Result<Vec<Note>, MidiError> {
    let mut reader = Reader { data: bytes, pos: 0 };
    let header_start = reader.pos;
    let magic = reader.take(4)?;
    if magic != b"MThd" {
        return Err(MidiError::BadHeader {
            offset: header_start,
            reason: "missing MThd chunk".into(),
        });
    }
    let header_len = reader.u32()?;
    if header_len < 6 {
        return Err(MidiError::BadHeader {
            offset: header_start + 4,
            reason: format!("header length {header_len} < 6"),
        });
    }
    let format = reader.u16()?;
    if format > 1 {
        return Err(MidiError::BadHeader {
            offset: reader.pos - 2,
            reason: format!("unsupported SMF format {format}"),
        });
    }
    let track_count = reader.u16()?;
    let division = reader.u16()?;
    if division & 0x8000 != 0 {
        return Err(MidiError::BadHeader {
            offset: reader.pos - 2,
            reason: "SMPTE time division unsupported".into(),
        });
    }
    if division == 0 {
        return Err(MidiError::BadHeader {
            offset: reader.pos - 2,
            reason: "zero ticks per quarter".into(),
        });
    }
    reader.skip((header_len - 6) as usize)?;

    let mut raw_notes: Vec<Note> = Vec::new();
    for track in 0..track_count as u32 {
        parse_track(&mut reader, track, &mut raw_notes)?;
    }

    let ppq = division as u64;
    let res = options.resolution as u64;
    let mut notes: Vec<Note> = raw_notes
        .into_iter()
        .filter(|n| options.include_percussion || n.channel != 9)
        .filter_map(|n| {
            let onset = rescale(n.onset, res, ppq);
            let duration = rescale(n.duration, res, ppq);
            (duration >= 1).then_some(Note { onset, duration, ..n })
        })
        .collect();

    merge_equal_pitch_overlaps(&mut notes);
    notes.sort_unstable_by_key(|n| (n.onset, n.pitch, n.channel, n.track));
    Ok(notes)
}

fn rescale(ticks: u64, resolution: u64, ppq: u64) -> u64 {
    ((ticks as u128 * resolution as u128 + ppq as u128 / 2) / ppq as u128) as u64
}

/// Notes with equal pitch whose intervals strictly overlap are merged into
/// one note spanning their union, so a pitch appears at most once per chord.
fn merge_equal_pitch_overlaps(notes: &mut Vec<Note>) {
    notes.sort_unstable_by_key(|n| (n.pitch, n.onset, n.end()));
    let mut merged: Vec<Note> = Vec::with_capacity(notes.len());
    for note in notes.drain(..) {
        match merged.last_mut() {
            Some(last) if last.pitch == note.pitch && note.onset < last.end() => {
                let end = last.end().max(note.end());
                last.duration = end - last.onset;
            }
            _ => merged.push(note),
        }
    }
    *notes = merged;
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], MidiError> {
        if self.pos + n > self.data.len() {
            return Err(MidiError::Truncated { offset: self.pos });
        }
        let out = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn skip(&mut self, n: usize) -> Result<(), MidiError> {
        self.take(n).map(|_| ())
    }

    fn byte(&mut self) -> Result<u8, MidiError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, MidiError> {
        let b = self.take(2)?;
        Ok(u16::from_be_bytes([b[0], b[1]]))
    }

    fn u32(&mut self) -> Result<u32, MidiError> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn vlq(&mut self) -> Result<u64, MidiError> {
        let start = self.pos;
        let mut value: u64 = 0;
        for _ in 0..4 {
            let b = self.byte().map_err(|_| MidiError::BadVlq { offset: start })?;
            value = (value << 7) | (b & 0x7f) as u64;
            if b & 0x80 == 0 {
                return Ok(value);
            }
        }
        Err(MidiError::BadVlq { offset: start })
    }
}

fn parse_track(reader: &mut Reader, track: u32, notes: &mut Vec<Note>) -> Result<(), MidiError> {
    let chunk_start = reader.pos;
    let magic = reader.take(4)?;
    if magic != b"MTrk" {
        return Err(MidiError::BadHeader {
            offset: chunk_start,
            reason: "missing MTrk chunk".into(),
        });
    }
    let length = reader.u32()? as usize;
    let track_end = reader.pos + length;
    if track_end > reader.data.len() {
        return Err(MidiError::Truncated { offset: reader.pos });
    }

    // Open note-ons per (channel, pitch), closed first-in-first-out.
    let mut open: std::collections::HashMap<(u8, u8), std::collections::VecDeque<u64>> =
        std::collections::HashMap::new();
    let mut tick: u64 = 0;
    let mut running_status: Option<u8> = None;

    while reader.pos < track_end {
        tick += reader.vlq()?;
        let event_offset = reader.pos;
        let first = reader.byte()?;
        let status = if first & 0x80 != 0 {
            first
        } else {
            reader.pos -= 1;
            running_status
                .ok_or(MidiError::OrphanData { offset: event_offset, byte: first })?
        };
        match status {
            0xff => {
                running_status = None;
                let meta_type = reader.byte()?;
                let len = reader.vlq()? as usize;
                reader.skip(len)?;
                if meta_type == 0x2f {
                    break;
                }
            }
            0xf0 | 0xf7 => {
                running_status = None;
                let len = reader.vlq()? as usize;
                reader.skip(len)?;
            }
            _ if status >= 0xf0 => {
                return Err(MidiError::BadHeader {
                    offset: event_offset,
                    reason: format!("unexpected system message {status:#04x}"),
                });
            }
            _ => {
                running_status = Some(status);
                let channel = status & 0x0f;
                match status & 0xf0 {
                    0x80 | 0x90 => {
                        let pitch = reader.byte()? & 0x7f;
                        let velocity = reader.byte()? & 0x7f;
                        if status & 0xf0 == 0x90 && velocity > 0 {
                            open.entry((channel, pitch)).or_default().push_back(tick);
                        } else if let Some(starts) = open.get_mut(&(channel, pitch)) {
                            if let Some(start) = starts.pop_front() {
                                notes.push(Note {
                                    onset: start,
                                    duration: tick.saturating_sub(start),
                                    pitch,
                                    channel,
                                    track,
                                });
                            }
                        }
                    }
                    0xa0 | 0xb0 | 0xe0 => reader.skip(2)?,
                    0xc0 | 0xd0 => reader.skip(1)?,
                    _ => unreachable!("status byte is >= 0x80"),
                }
            }
        }
    }
    // Unmatched note-ons are closed at end of track.
    for ((channel, pitch), starts) in open {
        for start in starts {
            notes.push(Note {
                onset: start,
                duration: tick.saturating_sub(start),
                pitch,
                channel,
                track,
            });
        }
    }
    reader.pos = track_end;
    Ok(())
}

/// Serialize a note list as JSON records for fixture tests.
pub fn notes_to_json(notes: &[Note]) -> String {
    serde_json::to_string_pretty(notes).expect("notes serialize")
}

pub fn notes_from_json(json: &str) -> Result<Vec<Note>, serde_json::Error> {
    serde_json::from_str(json)
}
