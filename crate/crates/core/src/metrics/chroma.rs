use crate::error::{arg_err, Result};
use crate::midi::NoteList;

/// Pitch-class energy per frame, rows L2-normalized (silent rows stay zero).
#[derive(Debug, Clone, PartialEq)]
pub struct ChromaSequence {
    pub frames: Vec<[f64; 12]>,
    pub frame_ms: u64,
}

impl ChromaSequence {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Rotate every row by `semitones` (class c moves to c + semitones).
    pub fn rotated(&self, semitones: i32) -> ChromaSequence {
        let shift = semitones.rem_euclid(12) as usize;
        let frames = self
            .frames
            .iter()
            .map(|row| {
                let mut out = [0.0; 12];
                for (c, v) in row.iter().enumerate() {
                    out[(c + shift) % 12] = *v;
                }
                out
            })
            .collect();
        ChromaSequence {
            frames,
            frame_ms: self.frame_ms,
        }
    }
}

/// Overlap-duration × velocity weighted pitch-class histogram per frame.
pub fn chroma(notes: &NoteList, frame_ms: u64) -> Result<ChromaSequence> {
    if frame_ms == 0 {
        return arg_err("chroma frame_ms must be at least 1");
    }
    let n_frames = notes.total_ms().div_ceil(frame_ms) as usize;
    let mut frames = vec![[0.0f64; 12]; n_frames];
    for n in notes.notes() {
        let first = n.onset_ms / frame_ms;
        let last = (n.offset_ms - 1) / frame_ms;
        let pc = usize::from(n.pitch % 12);
        for t in first..=last {
            let lo = n.onset_ms.max(t * frame_ms);
            let hi = n.offset_ms.min((t + 1) * frame_ms);
            frames[t as usize][pc] += (hi - lo) as f64 * f64::from(n.velocity);
        }
    }
    for row in &mut frames {
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            row.iter_mut().for_each(|v| *v /= norm);
        }
    }
    Ok(ChromaSequence { frames, frame_ms })
}
