//! Window-based triad labeling by pitch-class template matching.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{arg_err, Error, Result};
use crate::midi::NoteList;

pub const ROOT_NAMES: [&str; 12] = ["C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B"];

/// Weight of a template's root when it is also the lowest sounding class.
pub const BASS_ROOT_WEIGHT: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Chord {
    Major(u8),
    Minor(u8),
    NoChord,
}

impl Chord {
    pub fn root(self) -> Option<u8> {
        match self {
            Chord::Major(r) | Chord::Minor(r) => Some(r),
            Chord::NoChord => None,
        }
    }

    fn tones(self) -> Option<[u8; 3]> {
        match self {
            Chord::Major(r) => Some([r, (r + 4) % 12, (r + 7) % 12]),
            Chord::Minor(r) => Some([r, (r + 3) % 12, (r + 7) % 12]),
            Chord::NoChord => None,
        }
    }

    pub fn transposed(self, semitones: i32) -> Chord {
        let shift = |r: u8| (i32::from(r) + semitones).rem_euclid(12) as u8;
        match self {
            Chord::Major(r) => Chord::Major(shift(r)),
            Chord::Minor(r) => Chord::Minor(shift(r)),
            Chord::NoChord => Chord::NoChord,
        }
    }

    /// All 24 triads in tie-break order: by root, major before minor.
    pub fn templates() -> impl Iterator<Item = Chord> {
        (0..12u8).flat_map(|r| [Chord::Major(r), Chord::Minor(r)])
    }
}

impl fmt::Display for Chord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Chord::Major(r) => write!(f, "{}:maj", ROOT_NAMES[*r as usize]),
            Chord::Minor(r) => write!(f, "{}:min", ROOT_NAMES[*r as usize]),
            Chord::NoChord => write!(f, "N"),
        }
    }
}

impl FromStr for Chord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Chord> {
        if s == "N" {
            return Ok(Chord::NoChord);
        }
        let (root, quality) = s
            .split_once(':')
            .ok_or_else(|| Error::Argument(format!("bad chord symbol {s:?}")))?;
        let r = ROOT_NAMES
            .iter()
            .position(|&n| n == root)
            .ok_or_else(|| Error::Argument(format!("bad chord root {root:?}")))? as u8;
        match quality {
            "maj" => Ok(Chord::Major(r)),
            "min" => Ok(Chord::Minor(r)),
            _ => Err(Error::Argument(format!("bad chord quality {quality:?}"))),
        }
    }
}

impl Serialize for Chord {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Chord {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChordSequence {
    pub chords: Vec<Chord>,
    pub window_ms: u64,
}

impl ChordSequence {
    pub fn new(chords: Vec<Chord>, window_ms: u64) -> Self {
        Self { chords, window_ms }
    }

    pub fn len(&self) -> usize {
        self.chords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chords.is_empty()
    }
}

/// Best-matching triad for a weighted pitch-class profile and bass class.
pub fn match_template(profile: &[f64; 12], bass: Option<u8>) -> Chord {
    if profile.iter().all(|&v| v <= 0.0) {
        return Chord::NoChord;
    }
    let mut best = Chord::NoChord;
    let mut best_score = f64::NEG_INFINITY;
    for chord in Chord::templates() {
        let tones = chord.tones().unwrap();
        let score: f64 = tones
            .iter()
            .enumerate()
            .map(|(i, &pc)| {
                let w = if i == 0 && bass == Some(pc) {
                    BASS_ROOT_WEIGHT
                } else {
                    1.0
                };
                w * profile[pc as usize]
            })
            .sum();
        if score > best_score {
            best_score = score;
            best = chord;
        }
    }
    best
}

/// One chord per window; windows with no sounding note are `N`.
pub fn label_chords(notes: &NoteList, window_ms: u64) -> Result<ChordSequence> {
    if window_ms != 500 && window_ms != 1000 {
        return arg_err(format!("chord window must be 500 or 1000 ms, got {window_ms}"));
    }
    let windows = notes.total_ms().div_ceil(window_ms) as usize;
    let mut profiles = vec![[0.0f64; 12]; windows];
    let mut bass: Vec<Option<u8>> = vec![None; windows];
    for n in notes.notes() {
        let first = n.onset_ms / window_ms;
        let last = (n.offset_ms - 1) / window_ms;
        for w in first..=last {
            let lo = n.onset_ms.max(w * window_ms);
            let hi = n.offset_ms.min((w + 1) * window_ms);
            let w = w as usize;
            profiles[w][usize::from(n.pitch % 12)] += (hi - lo) as f64 * f64::from(n.velocity);
            if bass[w].is_none_or(|b| n.pitch < b) {
                bass[w] = Some(n.pitch);
            }
        }
    }
    let chords = profiles
        .iter()
        .zip(&bass)
        .map(|(p, b)| match_template(p, b.map(|pitch| pitch % 12)))
        .collect();
    Ok(ChordSequence::new(chords, window_ms))
}
