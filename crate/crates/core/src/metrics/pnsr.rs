use crate::error::{arg_err, Result};
use crate::midi::PianoRoll;

/// Fraction of piano-roll frames in which at least one note sounds.
pub fn pnsr(roll: &PianoRoll) -> Result<f64> {
    if roll.frames() == 0 {
        return arg_err("PNSR of an empty piano roll is undefined");
    }
    let active = (0..roll.frames()).filter(|&t| roll.column_active(t)).count();
    Ok(active as f64 / roll.frames() as f64)
}

/// Reporting ranges: s < 0.25, 0.25 ≤ s < 0.5, 0.5 ≤ s < 0.75, 0.75 ≤ s.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PnsrBand {
    Below25,
    From25To50,
    From50To75,
    From75,
}

impl PnsrBand {
    pub const ALL: [PnsrBand; 4] = [
        PnsrBand::Below25,
        PnsrBand::From25To50,
        PnsrBand::From50To75,
        PnsrBand::From75,
    ];

    pub fn of(s: f64) -> PnsrBand {
        if s < 0.25 {
            PnsrBand::Below25
        } else if s < 0.5 {
            PnsrBand::From25To50
        } else if s < 0.75 {
            PnsrBand::From50To75
        } else {
            PnsrBand::From75
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            PnsrBand::Below25 => "s<0.25",
            PnsrBand::From25To50 => "0.25<=s<0.5",
            PnsrBand::From50To75 => "0.5<=s<0.75",
            PnsrBand::From75 => "0.75<=s",
        }
    }
}

pub fn band_histogram(values: impl IntoIterator<Item = f64>) -> [usize; 4] {
    let mut hist = [0; 4];
    for v in values {
        hist[PnsrBand::of(v) as usize] += 1;
    }
    hist
}
