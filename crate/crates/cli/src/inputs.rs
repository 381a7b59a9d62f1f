//! Locating and loading input pieces, in a fixed order.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;

use rawmuse_core::corpus::{read_jsonl, TokenRecord};
use rawmuse_core::{decode, encode, parse_smf, NoteList, TokenSequence};

/// One input piece, from a MIDI file or a JSONL record.
#[derive(Debug, Clone)]
pub struct Piece {
    pub id: String,
    pub notes: NoteList,
    pub tokens: TokenSequence,
    pub prompt_len: Option<usize>,
}

/// Files that failed to load; reported, never fatal.
#[derive(Debug, Default)]
pub struct Skipped(pub Vec<(String, String)>);

impl Skipped {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn push(&mut self, id: String, err: impl std::fmt::Display) {
        log::warn!("skipping {id}: {err}");
        self.0.push((id, err.to_string()));
    }
}

fn is_midi(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("mid") || e.eq_ignore_ascii_case("midi"))
}

/// MIDI files under `dir`, recursively, in lexicographic path order.
pub fn midi_files(dir: &Path) -> Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        bail!("{} is not a readable directory", dir.display());
    }
    let mut files = Vec::new();
    for entry in walkdir::WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.with_context(|| format!("walking {}", dir.display()))?;
        if entry.file_type().is_file() && is_midi(entry.path()) {
            files.push(entry.into_path());
        }
    }
    files.sort();
    Ok(files)
}

/// Path relative to `root`, without extension, with `/` separators.
pub fn piece_id(root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path).with_extension("");
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

/// Id usable as a flat file name.
pub fn file_stem(id: &str) -> String {
    id.replace(['/', '\\'], "__")
}

pub fn load_midi_dir(dir: &Path) -> Result<(Vec<(String, NoteList)>, Skipped)> {
    let files = midi_files(dir)?;
    let loaded: Vec<(String, Result<NoteList>)> = files
        .par_iter()
        .map(|path| {
            let id = piece_id(dir, path);
            let notes = std::fs::read(path)
                .map_err(anyhow::Error::from)
                .and_then(|bytes| Ok(parse_smf(&bytes)?));
            (id, notes)
        })
        .collect();
    let mut ok = Vec::new();
    let mut skipped = Skipped::default();
    for (id, notes) in loaded {
        match notes {
            Ok(n) => ok.push((id, n)),
            Err(e) => skipped.push(id, e),
        }
    }
    Ok((ok, skipped))
}

pub fn read_corpus(path: &Path) -> Result<Vec<TokenRecord>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_jsonl(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

/// A directory of MIDI files or a JSONL token corpus.
pub fn load_pieces(path: &Path) -> Result<(Vec<Piece>, Skipped)> {
    if path.is_dir() {
        let (loaded, skipped) = load_midi_dir(path)?;
        let pieces = loaded
            .into_par_iter()
            .map(|(id, notes)| Piece {
                tokens: encode(&notes),
                id,
                notes,
                prompt_len: None,
            })
            .collect();
        return Ok((pieces, skipped));
    }
    let pieces = read_corpus(path)?
        .into_par_iter()
        .map(|r| Piece {
            notes: decode(&r.tokens),
            id: r.id,
            tokens: r.tokens,
            prompt_len: r.prompt_len,
        })
        .collect();
    Ok((pieces, Skipped::default()))
}
