//! Rule-based structural label streams aligned 1:1 with a token sequence.
//!
//! Each stream is produced by a [`StructuralLabeler`] looked up by name. All
//! four labelers read the same [`LabelContext`] (clock position, planned
//! duration and the most recent shift) so batch labeling and token-by-token
//! labeling during generation share one code path.

use serde::{Deserialize, Serialize};

use crate::error::{arg_err, Result};
use crate::tokenizer::{Token, TokenSequence, SHIFT_STEP_MS};

pub const PART_CLASSES: usize = 129;
pub const TYPE_CLASSES: usize = 4;
pub const TIME_CLASSES: usize = 101;
pub const PC_CLASSES: usize = 13;
pub const PART_COUNT: u64 = 128;

/// Default generation horizon for part labels: one minute.
pub const DEFAULT_HORIZON_MS: u64 = 60_000;

/// What a labeler may look at when labeling one token.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabelContext {
    /// Clock position of the token, i.e. the sum of all preceding shifts.
    pub clock_ms: u64,
    /// Duration the part classes are spread over.
    pub total_ms: u64,
    /// Steps of the closest preceding shift token, 0 if none yet.
    pub last_shift: u8,
}

pub trait StructuralLabeler: Send + Sync {
    fn name(&self) -> &'static str;
    /// Number of classes, i.e. rows of the matching embedding table.
    fn classes(&self) -> usize;
    fn label(&self, token: Token, ctx: &LabelContext) -> u8;
}

/// Which of 128 equal slices of the piece a token sits in; 0 for specials.
pub struct PartLabeler;

impl StructuralLabeler for PartLabeler {
    fn name(&self) -> &'static str {
        "part"
    }

    fn classes(&self) -> usize {
        PART_CLASSES
    }

    fn label(&self, token: Token, ctx: &LabelContext) -> u8 {
        if token.is_special() {
            return 0;
        }
        if ctx.total_ms == 0 {
            return 1;
        }
        let slice = (u128::from(ctx.clock_ms) * u128::from(PART_COUNT)) / u128::from(ctx.total_ms);
        (1 + slice).min(u128::from(PART_COUNT)) as u8
    }
}

/// note-on 0, note-off 1, shift 2, anything else 3.
pub struct TypeLabeler;

impl StructuralLabeler for TypeLabeler {
    fn name(&self) -> &'static str {
        "type"
    }

    fn classes(&self) -> usize {
        TYPE_CLASSES
    }

    fn label(&self, token: Token, _ctx: &LabelContext) -> u8 {
        match token {
            Token::NoteOn { .. } => 0,
            Token::NoteOff { .. } => 1,
            Token::Shift(_) => 2,
            Token::Pad | Token::Bos | Token::Eos => 3,
        }
    }
}

/// Steps of the closest preceding shift, carried onto note tokens.
pub struct TimeLabeler;

impl StructuralLabeler for TimeLabeler {
    fn name(&self) -> &'static str {
        "time"
    }

    fn classes(&self) -> usize {
        TIME_CLASSES
    }

    fn label(&self, token: Token, ctx: &LabelContext) -> u8 {
        match token {
            Token::NoteOn { .. } | Token::NoteOff { .. } => ctx.last_shift,
            _ => 0,
        }
    }
}

/// Pitch class shifted to 1..=12 (C = 1); 0 for non-note tokens.
pub struct PitchClassLabeler;

impl StructuralLabeler for PitchClassLabeler {
    fn name(&self) -> &'static str {
        "pc"
    }

    fn classes(&self) -> usize {
        PC_CLASSES
    }

    fn label(&self, token: Token, _ctx: &LabelContext) -> u8 {
        token.pitch().map_or(0, |p| 1 + p % 12)
    }
}

static PART: PartLabeler = PartLabeler;
static TYPE: TypeLabeler = TypeLabeler;
static TIME: TimeLabeler = TimeLabeler;
static PC: PitchClassLabeler = PitchClassLabeler;

/// The four labelers in stream order: part, type, time, pc.
pub fn standard_labelers() -> [&'static dyn StructuralLabeler; 4] {
    [&PART, &TYPE, &TIME, &PC]
}

pub fn labeler(name: &str) -> Option<&'static dyn StructuralLabeler> {
    standard_labelers().into_iter().find(|l| l.name() == name)
}

/// Labels of one token, in stream order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TokenLabels {
    pub part: u8,
    pub kind: u8,
    pub time: u8,
    pub pc: u8,
}

impl TokenLabels {
    pub fn as_array(&self) -> [u8; 4] {
        [self.part, self.kind, self.time, self.pc]
    }
}

fn label_token(token: Token, ctx: &LabelContext) -> TokenLabels {
    let [part, kind, time, pc] = standard_labelers().map(|l| l.label(token, ctx));
    TokenLabels {
        part,
        kind,
        time,
        pc,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuralLabels {
    pub part: Vec<u8>,
    #[serde(rename = "type")]
    pub kind: Vec<u8>,
    pub time: Vec<u8>,
    pub pc: Vec<u8>,
}

impl StructuralLabels {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            part: Vec::with_capacity(n),
            kind: Vec::with_capacity(n),
            time: Vec::with_capacity(n),
            pc: Vec::with_capacity(n),
        }
    }

    pub fn len(&self) -> usize {
        self.part.len()
    }

    pub fn is_empty(&self) -> bool {
        self.part.is_empty()
    }

    pub fn push(&mut self, l: TokenLabels) {
        self.part.push(l.part);
        self.kind.push(l.kind);
        self.time.push(l.time);
        self.pc.push(l.pc);
    }

    pub fn get(&self, i: usize) -> TokenLabels {
        TokenLabels {
            part: self.part[i],
            kind: self.kind[i],
            time: self.time[i],
            pc: self.pc[i],
        }
    }

    pub fn to_rows(&self) -> Vec<TokenLabels> {
        (0..self.len()).map(|i| self.get(i)).collect()
    }

    /// Streams in labeler order, for table lookups.
    pub fn streams(&self) -> [&[u8]; 4] {
        [&self.part, &self.kind, &self.time, &self.pc]
    }

    pub fn is_consistent(&self) -> bool {
        let n = self.part.len();
        self.kind.len() == n && self.time.len() == n && self.pc.len() == n
    }
}

/// Label a complete piece; part slices are spread over the piece's own
/// duration (the sum of its shifts).
pub fn label_sequence(tokens: &TokenSequence) -> StructuralLabels {
    label_with_horizon(tokens, tokens.duration_ms())
}

/// Label against an explicit part horizon.
pub fn label_with_horizon(tokens: &TokenSequence, total_ms: u64) -> StructuralLabels {
    let mut state = LabelerState {
        clock_ms: 0,
        total_ms,
        last_shift: 0,
    };
    let mut out = StructuralLabels::with_capacity(tokens.len());
    for token in tokens.tokens() {
        out.push(state.step_token(token));
    }
    out
}

/// Incremental labeler for generation: one state per stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelerState {
    clock_ms: u64,
    total_ms: u64,
    last_shift: u8,
}

impl LabelerState {
    pub fn new(total_ms: u64) -> Result<Self> {
        if total_ms == 0 {
            return arg_err("labeling horizon must be positive");
        }
        Ok(Self {
            clock_ms: 0,
            total_ms,
            last_shift: 0,
        })
    }

    pub fn clock_ms(&self) -> u64 {
        self.clock_ms
    }

    pub fn total_ms(&self) -> u64 {
        self.total_ms
    }

    pub fn last_shift(&self) -> u8 {
        self.last_shift
    }

    /// Width of one part slice in milliseconds.
    pub fn part_width_ms(&self) -> f64 {
        self.total_ms as f64 / PART_COUNT as f64
    }

    pub fn context(&self) -> LabelContext {
        LabelContext {
            clock_ms: self.clock_ms,
            total_ms: self.total_ms,
            last_shift: self.last_shift,
        }
    }

    /// Labels of `id` at the current position, then advance past it.
    pub fn step(&mut self, id: u32) -> Result<TokenLabels> {
        Ok(self.step_token(Token::from_id(id)?))
    }

    pub fn step_token(&mut self, token: Token) -> TokenLabels {
        let labels = label_token(token, &self.context());
        if let Token::Shift(s) = token {
            self.clock_ms += u64::from(s) * SHIFT_STEP_MS;
            self.last_shift = s;
        }
        labels
    }
}

pub fn init_incremental(total_ms: u64) -> Result<LabelerState> {
    LabelerState::new(total_ms)
}
