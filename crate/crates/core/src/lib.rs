//! Annotation-free symbolic music toolkit: MIDI ingestion, event
//! tokenization, rule-based structural labels, corpus augmentation and the
//! objective metric suite.

pub mod augment;
pub mod corpus;
pub mod error;
pub mod labels;
pub mod metrics;
pub mod midi;
pub mod tokenizer;

pub use error::{Error, Result};
pub use labels::{label_sequence, LabelerState, StructuralLabels};
pub use midi::{parse_smf, to_piano_roll, write_smf, NoteEvent, NoteList, PianoRoll};
pub use tokenizer::{decode, encode, Token, TokenSequence, VOCAB_SIZE};
