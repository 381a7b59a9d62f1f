//! Event vocabulary: note events over a 32 velocity-bin × 128 pitch grid
//! (bin 0 is note-off), 100 time shifts of 10–1000 ms, and three specials.
//!
//! | ids          | meaning                                    |
//! |--------------|--------------------------------------------|
//! | 0, 1, 2      | PAD, BOS, EOS                              |
//! | 3 ..= 4098   | note: `3 + 128 * velocity_bin + pitch`     |
//! | 4099 ..= 4198| shift of 1..=100 steps of 10 ms            |

use serde::{Deserialize, Serialize};

use crate::error::{arg_err, Error, Result};
use crate::midi::{NoteEvent, NoteList};

pub const PAD_ID: u32 = 0;
pub const BOS_ID: u32 = 1;
pub const EOS_ID: u32 = 2;
pub const SPECIAL_COUNT: u32 = 3;
pub const VELOCITY_BINS: u32 = 32;
pub const PITCH_COUNT: u32 = 128;
pub const MAX_SHIFT_STEPS: u32 = 100;
pub const SHIFT_STEP_MS: u64 = 10;
pub const NOTE_BASE: u32 = SPECIAL_COUNT;
pub const SHIFT_BASE: u32 = NOTE_BASE + VELOCITY_BINS * PITCH_COUNT;
pub const EVENT_COUNT: u32 = VELOCITY_BINS * PITCH_COUNT + MAX_SHIFT_STEPS;
pub const VOCAB_SIZE: usize = (SPECIAL_COUNT + EVENT_COUNT) as usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Token {
    Pad,
    Bos,
    Eos,
    NoteOn { velocity_bin: u8, pitch: u8 },
    NoteOff { pitch: u8 },
    /// Clock advance of `steps * 10` ms, `steps` in 1..=100.
    Shift(u8),
}

impl Token {
    pub fn id(self) -> u32 {
        match self {
            Token::Pad => PAD_ID,
            Token::Bos => BOS_ID,
            Token::Eos => EOS_ID,
            Token::NoteOn {
                velocity_bin,
                pitch,
            } => NOTE_BASE + PITCH_COUNT * u32::from(velocity_bin) + u32::from(pitch),
            Token::NoteOff { pitch } => NOTE_BASE + u32::from(pitch),
            Token::Shift(steps) => SHIFT_BASE + u32::from(steps) - 1,
        }
    }

    pub fn from_id(id: u32) -> Result<Token> {
        Ok(match id {
            PAD_ID => Token::Pad,
            BOS_ID => Token::Bos,
            EOS_ID => Token::Eos,
            id if id < SHIFT_BASE => {
                let rel = id - NOTE_BASE;
                let bin = (rel / PITCH_COUNT) as u8;
                let pitch = (rel % PITCH_COUNT) as u8;
                if bin == 0 {
                    Token::NoteOff { pitch }
                } else {
                    Token::NoteOn {
                        velocity_bin: bin,
                        pitch,
                    }
                }
            }
            id if (id as usize) < VOCAB_SIZE => Token::Shift((id - SHIFT_BASE + 1) as u8),
            id => return arg_err(format!("token id {id} outside vocabulary of {VOCAB_SIZE}")),
        })
    }

    pub fn is_special(self) -> bool {
        matches!(self, Token::Pad | Token::Bos | Token::Eos)
    }

    pub fn pitch(self) -> Option<u8> {
        match self {
            Token::NoteOn { pitch, .. } | Token::NoteOff { pitch } => Some(pitch),
            _ => None,
        }
    }
}

impl std::fmt::Display for Token {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Token::Pad => write!(f, "<PAD>"),
            Token::Bos => write!(f, "<BOS>"),
            Token::Eos => write!(f, "<EOS>"),
            Token::NoteOn {
                velocity_bin,
                pitch,
            } => write!(f, "<v{}:{}>", u32::from(*velocity_bin) * 4, pitch),
            Token::NoteOff { pitch } => write!(f, "<v0:{pitch}>"),
            Token::Shift(s) => write!(f, "<wait:{s}>"),
        }
    }
}

/// Token ids over the event vocabulary.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenSequence(Vec<u32>);

impl TokenSequence {
    pub fn new(ids: Vec<u32>) -> Result<Self> {
        if let Some(bad) = ids.iter().find(|&&id| id as usize >= VOCAB_SIZE) {
            return arg_err(format!("token id {bad} outside vocabulary of {VOCAB_SIZE}"));
        }
        Ok(Self(ids))
    }

    pub fn from_tokens(tokens: impl IntoIterator<Item = Token>) -> Self {
        Self(tokens.into_iter().map(Token::id).collect())
    }

    pub fn ids(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn tokens(&self) -> impl Iterator<Item = Token> + '_ {
        self.0
            .iter()
            .map(|&id| Token::from_id(id).expect("ids validated at construction"))
    }

    pub fn into_ids(self) -> Vec<u32> {
        self.0
    }

    pub fn prefix(&self, len: usize) -> TokenSequence {
        TokenSequence(self.0[..len.min(self.0.len())].to_vec())
    }

    /// Total clock advance of all shift tokens.
    pub fn duration_ms(&self) -> u64 {
        self.tokens()
            .map(|t| match t {
                Token::Shift(s) => u64::from(s) * SHIFT_STEP_MS,
                _ => 0,
            })
            .sum()
    }
}

/// Note-on velocity bin in 1..=31; velocities 1..=3 share bin 1 so that bin 0
/// stays reserved for note-off.
pub fn quantize_velocity(velocity: u8) -> Result<u8> {
    if velocity == 0 {
        return arg_err("velocity 0 is a note-off, not a velocity bin");
    }
    if velocity > 127 {
        return arg_err(format!("velocity {velocity} outside 1..=127"));
    }
    Ok((velocity / 4).max(1))
}

pub fn dequantize_velocity(bin: u8) -> u8 {
    4 * bin + 2
}

/// Shift tokens covering `steps` 10 ms units, greedily in 1000 ms chunks.
pub fn shift_tokens(mut steps: u64) -> Vec<Token> {
    let mut out = Vec::new();
    while steps > 0 {
        let s = steps.min(u64::from(MAX_SHIFT_STEPS));
        out.push(Token::Shift(s as u8));
        steps -= s;
    }
    out
}

fn to_steps(ms: u64) -> u64 {
    (ms + SHIFT_STEP_MS / 2) / SHIFT_STEP_MS
}

pub fn encode(notes: &NoteList) -> TokenSequence {
    // (step, is_on, pitch, bin); offs before ons, then ascending pitch.
    let mut events: Vec<(u64, bool, u8, u8)> = Vec::with_capacity(notes.len() * 2);
    for n in notes.notes() {
        let on = to_steps(n.onset_ms);
        // Notes shorter than one step still occupy one step.
        let off = to_steps(n.offset_ms).max(on + 1);
        let bin = quantize_velocity(n.velocity).expect("NoteEvent velocity is 1..=127");
        events.push((on, true, n.pitch, bin));
        events.push((off, false, n.pitch, 0));
    }
    events.sort_by_key(|&(step, is_on, pitch, _)| (step, is_on, pitch));

    let mut out = vec![Token::Bos];
    let mut clock = 0u64;
    for (step, is_on, pitch, bin) in events {
        out.extend(shift_tokens(step - clock));
        clock = step;
        out.push(if is_on {
            Token::NoteOn {
                velocity_bin: bin,
                pitch,
            }
        } else {
            Token::NoteOff { pitch }
        });
    }
    out.push(Token::Eos);
    TokenSequence::from_tokens(out)
}

/// Rebuild notes from a possibly partial token stream. Decoding stops at the
/// first EOS; dangling note-ons close at the final clock.
pub fn decode(tokens: &TokenSequence) -> NoteList {
    decode_ids(tokens.ids()).expect("ids validated at construction")
}

pub fn decode_ids(ids: &[u32]) -> Result<NoteList> {
    let mut clock = 0u64;
    let mut sounding: [Option<(u64, u8)>; 128] = [None; 128];
    let mut notes = Vec::new();
    let close = |pitch: u8, start: u64, vel: u8, end: u64, notes: &mut Vec<NoteEvent>| {
        if end > start {
            notes.push(NoteEvent {
                pitch,
                velocity: vel,
                onset_ms: start,
                offset_ms: end,
            });
        }
    };
    for &id in ids {
        match Token::from_id(id).map_err(|_| Error::Argument(format!("bad token id {id}")))? {
            Token::Eos => break,
            Token::Pad | Token::Bos => {}
            Token::Shift(s) => clock += u64::from(s) * SHIFT_STEP_MS,
            Token::NoteOn {
                velocity_bin,
                pitch,
            } => {
                let vel = dequantize_velocity(velocity_bin);
                if let Some((start, v)) = sounding[pitch as usize].replace((clock, vel)) {
                    close(pitch, start, v, clock, &mut notes);
                }
            }
            Token::NoteOff { pitch } => {
                if let Some((start, v)) = sounding[pitch as usize].take() {
                    close(pitch, start, v, clock, &mut notes);
                }
            }
        }
    }
    for (pitch, slot) in sounding.iter().enumerate() {
        if let Some((start, v)) = *slot {
            close(pitch as u8, start, v, clock, &mut notes);
        }
    }
    Ok(NoteList::new(notes))
}
