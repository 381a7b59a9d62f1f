//! Note-level view of Standard MIDI Files.
//!
//! Everything downstream works on [`NoteList`]: absolute-millisecond notes
//! sorted by onset then pitch. Channels, controllers and meta information are
//! discarded on the way in.

mod roll;
mod smf;

pub use roll::{to_piano_roll, PianoRoll, PITCHES};
pub use smf::{parse_smf, write_smf, WRITER_TICKS_PER_QUARTER, WRITER_TEMPO_US};

use crate::error::{arg_err, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NoteEvent {
    pub pitch: u8,
    pub velocity: u8,
    pub onset_ms: u64,
    pub offset_ms: u64,
}

impl NoteEvent {
    pub fn new(pitch: u8, velocity: u8, onset_ms: u64, offset_ms: u64) -> Result<Self> {
        if pitch > 127 {
            return arg_err(format!("pitch {pitch} outside 0..=127"));
        }
        if !(1..=127).contains(&velocity) {
            return arg_err(format!("velocity {velocity} outside 1..=127"));
        }
        if offset_ms <= onset_ms {
            return arg_err(format!(
                "note offset {offset_ms} ms must be after onset {onset_ms} ms"
            ));
        }
        Ok(Self {
            pitch,
            velocity,
            onset_ms,
            offset_ms,
        })
    }

    pub fn duration_ms(&self) -> u64 {
        self.offset_ms - self.onset_ms
    }
}

/// Canonical, sorted list of notes.
///
/// Construction resolves overlapping notes of the same pitch the way a MIDI
/// note-on on a sounding key does: the earlier note is cut at the later
/// onset, and dropped if that leaves it empty. After normalization no two
/// notes of one pitch overlap, which is what makes SMF round trips exact.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoteList {
    notes: Vec<NoteEvent>,
    total_ms: u64,
}

impl NoteList {
    pub fn new(mut notes: Vec<NoteEvent>) -> Self {
        notes.sort_by_key(|n| (n.pitch, n.onset_ms, n.offset_ms, n.velocity));
        let mut kept: Vec<NoteEvent> = Vec::with_capacity(notes.len());
        for note in notes {
            if let Some(prev) = kept.last_mut() {
                if prev.pitch == note.pitch && note.onset_ms < prev.offset_ms {
                    if note.onset_ms > prev.onset_ms {
                        prev.offset_ms = note.onset_ms;
                    } else {
                        kept.pop();
                    }
                }
            }
            kept.push(note);
        }
        kept.sort_by_key(|n| (n.onset_ms, n.pitch));
        let total_ms = kept.iter().map(|n| n.offset_ms).max().unwrap_or(0);
        Self {
            notes: kept,
            total_ms,
        }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn notes(&self) -> &[NoteEvent] {
        &self.notes
    }

    pub fn total_ms(&self) -> u64 {
        self.total_ms
    }

    pub fn len(&self) -> usize {
        self.notes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.notes.is_empty()
    }

    pub fn into_notes(self) -> Vec<NoteEvent> {
        self.notes
    }

    /// Notes whose onset falls before `end_ms`, cut at `end_ms`.
    pub fn truncated(&self, end_ms: u64) -> NoteList {
        let notes = self
            .notes
            .iter()
            .filter(|n| n.onset_ms < end_ms)
            .map(|n| NoteEvent {
                offset_ms: n.offset_ms.min(end_ms),
                ..*n
            })
            .collect();
        NoteList::new(notes)
    }
}

impl FromIterator<NoteEvent> for NoteList {
    fn from_iter<I: IntoIterator<Item = NoteEvent>>(iter: I) -> Self {
        NoteList::new(iter.into_iter().collect())
    }
}
