use super::NoteList;
use crate::error::{arg_err, Result};

pub const PITCHES: usize = 128;

/// Binary pitch × frame activity matrix, stored pitch-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PianoRoll {
    frames: usize,
    frame_ms: u64,
    grid: Vec<u8>,
}

impl PianoRoll {
    pub fn from_grid(grid: Vec<u8>, frames: usize, frame_ms: u64) -> Result<Self> {
        if grid.len() != PITCHES * frames {
            return arg_err(format!(
                "grid has {} cells, expected {PITCHES}x{frames}",
                grid.len()
            ));
        }
        Ok(Self {
            frames,
            frame_ms,
            grid,
        })
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn frame_ms(&self) -> u64 {
        self.frame_ms
    }

    pub fn get(&self, pitch: usize, frame: usize) -> u8 {
        self.grid[pitch * self.frames + frame]
    }

    pub fn column_sum(&self, frame: usize) -> usize {
        (0..PITCHES).map(|p| usize::from(self.get(p, frame))).sum()
    }

    pub fn column_active(&self, frame: usize) -> bool {
        (0..PITCHES).any(|p| self.get(p, frame) != 0)
    }

    pub fn nonzero_cells(&self) -> usize {
        self.grid.iter().filter(|&&c| c != 0).count()
    }
}

pub fn to_piano_roll(notes: &NoteList, frame_ms: u64) -> Result<PianoRoll> {
    if frame_ms == 0 {
        return arg_err("frame_ms must be at least 1");
    }
    let frames = notes.total_ms().div_ceil(frame_ms) as usize;
    let mut grid = vec![0u8; PITCHES * frames];
    for n in notes.notes() {
        // Frames t with [t*f, (t+1)*f) intersecting [onset, offset).
        let first = (n.onset_ms / frame_ms) as usize;
        let last = ((n.offset_ms - 1) / frame_ms) as usize;
        let row = usize::from(n.pitch) * frames;
        for t in first..=last.min(frames - 1) {
            grid[row + t] = 1;
        }
    }
    Ok(PianoRoll {
        frames,
        frame_ms,
        grid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::midi::NoteEvent;

    #[test]
    fn single_note_five_frames() {
        let notes = NoteList::new(vec![NoteEvent::new(60, 64, 0, 500).unwrap()]);
        let roll = to_piano_roll(&notes, 100).unwrap();
        assert_eq!(roll.frames(), 5);
        let sums: Vec<_> = (0..5).map(|t| roll.column_sum(t)).collect();
        assert_eq!(sums, vec![1; 5]);
    }

    #[test]
    fn empty_roll() {
        let roll = to_piano_roll(&NoteList::empty(), 50).unwrap();
        assert_eq!(roll.frames(), 0);
        assert_eq!(roll.nonzero_cells(), 0);
    }

    #[test]
    fn simultaneous_notes_share_a_column() {
        let notes = NoteList::new(vec![
            NoteEvent::new(60, 64, 0, 100).unwrap(),
            NoteEvent::new(67, 64, 0, 100).unwrap(),
        ]);
        let roll = to_piano_roll(&notes, 100).unwrap();
        assert_eq!(roll.frames(), 1);
        assert_eq!(roll.column_sum(0), 2);
        assert_eq!(roll.get(60, 0), 1);
        assert_eq!(roll.get(67, 0), 1);
    }

    #[test]
    fn zero_frame_is_an_error() {
        assert!(to_piano_roll(&NoteList::empty(), 0).is_err());
    }

    #[test]
    fn partial_overlap_marks_frame() {
        let notes = NoteList::new(vec![
            NoteEvent::new(60, 64, 150, 160).unwrap(),
            NoteEvent::new(61, 64, 0, 400).unwrap(),
        ]);
        let roll = to_piano_roll(&notes, 100).unwrap();
        assert_eq!((0..4).map(|t| roll.get(60, t)).collect::<Vec<_>>(), vec![0, 1, 0, 0]);
    }
}
