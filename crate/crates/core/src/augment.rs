//! Pitch transposition and time stretching of note lists.

use serde::{Deserialize, Serialize};

use crate::error::{arg_err, Error, Result};
use crate::midi::{NoteEvent, NoteList};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OverflowPolicy {
    /// Skip notes pushed outside 0..=127.
    #[default]
    Drop,
    /// Pin them to the nearest valid pitch.
    Clamp,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transposed {
    pub notes: NoteList,
    pub dropped: usize,
}

pub fn transpose(notes: &NoteList, semitones: i32, policy: OverflowPolicy) -> Result<Transposed> {
    let mut out = Vec::with_capacity(notes.len());
    let mut dropped = 0;
    for n in notes.notes() {
        let p = i32::from(n.pitch) + semitones;
        let pitch = if (0..=127).contains(&p) {
            p as u8
        } else {
            match policy {
                OverflowPolicy::Drop => {
                    dropped += 1;
                    continue;
                }
                OverflowPolicy::Clamp => p.clamp(0, 127) as u8,
                OverflowPolicy::Error => {
                    return Err(Error::Argument(format!(
                        "transposing pitch {} by {semitones} leaves the MIDI range",
                        n.pitch
                    )))
                }
            }
        };
        out.push(NoteEvent { pitch, ..*n });
    }
    if dropped > 0 {
        log::warn!("transpose by {semitones}: dropped {dropped} out-of-range notes");
    }
    Ok(Transposed {
        notes: NoteList::new(out),
        dropped,
    })
}

/// Scale all times by `factor`, rounding to the nearest millisecond. Notes
/// keep at least one millisecond of duration.
pub fn stretch(notes: &NoteList, factor: f64) -> Result<NoteList> {
    if !(factor > 0.0 && factor.is_finite()) {
        return arg_err(format!("stretch factor must be positive, got {factor}"));
    }
    let scale = |t: u64| (t as f64 * factor).round() as u64;
    let out = notes
        .notes()
        .iter()
        .map(|n| {
            let onset_ms = scale(n.onset_ms);
            NoteEvent {
                onset_ms,
                offset_ms: scale(n.offset_ms).max(onset_ms + 1),
                ..*n
            }
        })
        .collect();
    Ok(NoteList::new(out))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentSpec {
    pub transpositions: Vec<i32>,
    pub stretches: Vec<f64>,
    #[serde(default)]
    pub overflow: OverflowPolicy,
}

impl Default for AugmentSpec {
    /// Seven transpositions of up to three semitones and five stretches of
    /// up to 5 %, evenly spaced.
    fn default() -> Self {
        Self {
            transpositions: (-3..=3).collect(),
            stretches: vec![0.95, 0.975, 1.0, 1.025, 1.05],
            overflow: OverflowPolicy::Drop,
        }
    }
}

impl AugmentSpec {
    pub fn variant_count(&self) -> usize {
        self.transpositions.len() * self.stretches.len()
    }

    /// Every (transposition, stretch) variant of `notes` with an id suffix
    /// such as `_t+2_s1.025`.
    pub fn variants(&self, notes: &NoteList) -> Result<Vec<(String, NoteList)>> {
        let mut out = Vec::with_capacity(self.variant_count());
        for &s in &self.transpositions {
            let shifted = transpose(notes, s, self.overflow)?.notes;
            for &f in &self.stretches {
                out.push((format!("_t{s:+}_s{f}"), stretch(&shifted, f)?));
            }
        }
        Ok(out)
    }
}
