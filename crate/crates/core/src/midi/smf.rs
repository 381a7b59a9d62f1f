use std::collections::HashMap;

use super::{NoteEvent, NoteList};
use crate::error::{Error, Result};

/// Writer resolution: 500 ticks per quarter at 500,000 µs per quarter, so one
/// tick is exactly one millisecond.
pub const WRITER_TICKS_PER_QUARTER: u16 = 500;
pub const WRITER_TEMPO_US: u32 = 500_000;

const DEFAULT_TEMPO_US: u32 = 500_000;

#[derive(Debug, Clone, Copy)]
enum Timing {
    /// Ticks per quarter note; tempo map applies.
    Metrical(u16),
    /// Frames per second and ticks per frame; tempo is irrelevant.
    Timecode { fps: f64, ticks_per_frame: u8 },
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(data: &'a [u8]) -> Self {
        Self { data, pos: 0 }
    }

    fn remaining(&self) -> usize {
        self.data.len() - self.pos
    }

    fn truncated(&self, what: &str) -> Error {
        Error::Format {
            offset: self.pos,
            reason: format!("truncated {what}"),
        }
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        let b = *self.data.get(self.pos).ok_or_else(|| self.truncated(what))?;
        self.pos += 1;
        Ok(b)
    }

    fn bytes(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(self.truncated(what));
        }
        let out = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        let b = self.bytes(2, what)?;
        Ok(u16::from_be_bytes([b[0], b[1]]))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.bytes(4, what)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn vlq(&mut self, what: &str) -> Result<u32> {
        let start = self.pos;
        let mut value: u32 = 0;
        for _ in 0..4 {
            let b = self.u8(what)?;
            value = (value << 7) | u32::from(b & 0x7f);
            if b & 0x80 == 0 {
                return Ok(value);
            }
        }
        Err(Error::Format {
            offset: start,
            reason: format!("{what}: variable-length quantity longer than 4 bytes"),
        })
    }
}

#[derive(Debug, Clone, Copy)]
enum RawKind {
    On { key: (u8, u8), velocity: u8 },
    Off { key: (u8, u8) },
}

#[derive(Debug, Default)]
struct RawTrack {
    notes: Vec<(u64, RawKind)>,
    tempos: Vec<(u64, u32)>,
    end_tick: u64,
}

/// Decode a format 0 or 1 Standard MIDI File into absolute-millisecond notes.
pub fn parse_smf(bytes: &[u8]) -> Result<NoteList> {
    let mut r = Reader::new(bytes);
    let magic = r.bytes(4, "header chunk id")?;
    if magic != b"MThd" {
        return Err(Error::Format {
            offset: 0,
            reason: "missing MThd header chunk".into(),
        });
    }
    let header_len = r.u32("header length")? as usize;
    if header_len < 6 {
        return Err(Error::Format {
            offset: 4,
            reason: format!("header length {header_len} < 6"),
        });
    }
    let header_start = r.pos;
    let format = r.u16("format")?;
    let _declared_tracks = r.u16("track count")?;
    let division = r.u16("division")?;
    r.bytes(header_len - (r.pos - header_start), "header padding")?;

    match format {
        0 | 1 => {}
        2 => return Err(Error::Unsupported("SMF format 2 (independent sequences)".into())),
        other => {
            return Err(Error::Format {
                offset: header_start,
                reason: format!("unknown SMF format {other}"),
            })
        }
    }

    let timing = if division & 0x8000 != 0 {
        let fps_code = -((division >> 8) as u8 as i8) as u8;
        let fps = match fps_code {
            24 => 24.0,
            25 => 25.0,
            29 => 29.97,
            30 => 30.0,
            other => {
                return Err(Error::Format {
                    offset: header_start + 4,
                    reason: format!("invalid SMPTE frame rate {other}"),
                })
            }
        };
        let ticks_per_frame = (division & 0xff) as u8;
        if ticks_per_frame == 0 {
            return Err(Error::Format {
                offset: header_start + 4,
                reason: "zero ticks per frame".into(),
            });
        }
        Timing::Timecode {
            fps,
            ticks_per_frame,
        }
    } else {
        if division == 0 {
            return Err(Error::Format {
                offset: header_start + 4,
                reason: "zero ticks per quarter note".into(),
            });
        }
        Timing::Metrical(division)
    };

    let mut tracks = Vec::new();
    while r.remaining() > 0 {
        let chunk_start = r.pos;
        let id = r.bytes(4, "chunk id")?;
        let len = r.u32("chunk length")? as usize;
        if r.remaining() < len {
            return Err(Error::Format {
                offset: chunk_start,
                reason: format!(
                    "chunk declares {len} bytes but only {} remain",
                    r.remaining()
                ),
            });
        }
        let body_start = r.pos;
        let body = r.bytes(len, "chunk body")?;
        if id == b"MTrk" {
            tracks.push(parse_track(body, body_start)?);
        }
    }

    let mut tempos: Vec<(u64, u32)> = tracks.iter().flat_map(|t| t.tempos.iter().copied()).collect();
    tempos.sort_by_key(|&(tick, _)| tick);
    let clock = TickClock::new(timing, &tempos);

    let mut notes = Vec::new();
    for track in &tracks {
        pair_notes(track, &clock, &mut notes);
    }
    Ok(NoteList::new(notes))
}

fn parse_track(body: &[u8], base: usize) -> Result<RawTrack> {
    let mut r = Reader::new(body);
    let mut track = RawTrack::default();
    let mut tick: u64 = 0;
    let mut running: Option<u8> = None;

    // Offsets reported relative to the whole file.
    let rebase = |e: Error| match e {
        Error::Format { offset, reason } => Error::Format {
            offset: offset + base,
            reason,
        },
        other => other,
    };

    while r.remaining() > 0 {
        tick += u64::from(r.vlq("delta time").map_err(rebase)?);
        let first = r.u8("event status").map_err(rebase)?;
        match first {
            0xff => {
                let kind = r.u8("meta type").map_err(rebase)?;
                let len = r.vlq("meta length").map_err(rebase)? as usize;
                let data = r.bytes(len, "meta data").map_err(rebase)?;
                match kind {
                    0x51 if len == 3 => {
                        let us = u32::from_be_bytes([0, data[0], data[1], data[2]]);
                        if us > 0 {
                            track.tempos.push((tick, us));
                        }
                    }
                    0x2f => break,
                    _ => {}
                }
            }
            0xf0 | 0xf7 => {
                let len = r.vlq("sysex length").map_err(rebase)? as usize;
                r.bytes(len, "sysex data").map_err(rebase)?;
                running = None;
            }
            0xf1..=0xfe => {
                return Err(Error::Format {
                    offset: base + r.pos - 1,
                    reason: format!("system message 0x{first:02x} inside a track"),
                })
            }
            _ => {
                let (status, data1) = if first & 0x80 != 0 {
                    running = Some(first);
                    (first, r.u8("channel data").map_err(rebase)?)
                } else {
                    let status = running.ok_or_else(|| Error::Format {
                        offset: base + r.pos - 1,
                        reason: "data byte without running status".into(),
                    })?;
                    (status, first)
                };
                let channel = status & 0x0f;
                match status & 0xf0 {
                    0x80 => {
                        r.u8("note-off velocity").map_err(rebase)?;
                        track.notes.push((tick, RawKind::Off { key: (channel, data1) }));
                    }
                    0x90 => {
                        let velocity = r.u8("note-on velocity").map_err(rebase)?;
                        let key = (channel, data1 & 0x7f);
                        let kind = if velocity == 0 {
                            RawKind::Off { key }
                        } else {
                            RawKind::On {
                                key,
                                velocity: velocity & 0x7f,
                            }
                        };
                        track.notes.push((tick, kind));
                    }
                    0xc0 | 0xd0 => {}
                    _ => {
                        r.u8("channel data").map_err(rebase)?;
                    }
                }
            }
        }
    }
    track.end_tick = tick;
    Ok(track)
}

fn pair_notes(track: &RawTrack, clock: &TickClock, out: &mut Vec<NoteEvent>) {
    let mut sounding: HashMap<(u8, u8), (u64, u8)> = HashMap::new();
    let close = |key: (u8, u8), start: u64, velocity: u8, end: u64, out: &mut Vec<NoteEvent>| {
        let (on, off) = (clock.ms(start), clock.ms(end));
        if let Ok(note) = NoteEvent::new(key.1, velocity, on, off) {
            out.push(note);
        }
    };
    for &(tick, kind) in &track.notes {
        match kind {
            RawKind::On { key, velocity } => {
                if let Some((start, vel)) = sounding.insert(key, (tick, velocity)) {
                    close(key, start, vel, tick, out);
                }
            }
            RawKind::Off { key } => {
                if let Some((start, vel)) = sounding.remove(&key) {
                    close(key, start, vel, tick, out);
                }
            }
        }
    }
    let mut rest: Vec<_> = sounding.into_iter().collect();
    rest.sort();
    for (key, (start, vel)) in rest {
        close(key, start, vel, track.end_tick, out);
    }
}

/// Piecewise tick-to-millisecond conversion over a tempo map.
struct TickClock {
    timing: Timing,
    /// (segment start tick, µs per quarter, accumulated tick·µs before the segment)
    segments: Vec<(u64, u32, u128)>,
}

impl TickClock {
    fn new(timing: Timing, tempos: &[(u64, u32)]) -> Self {
        let mut segments: Vec<(u64, u32, u128)> = vec![(0, DEFAULT_TEMPO_US, 0)];
        for &(tick, tempo) in tempos {
            let (start, prev_tempo, acc) = *segments.last().unwrap();
            if tick == start {
                segments.last_mut().unwrap().1 = tempo;
            } else {
                let acc = acc + u128::from(tick - start) * u128::from(prev_tempo);
                segments.push((tick, tempo, acc));
            }
        }
        Self { timing, segments }
    }

    fn ms(&self, tick: u64) -> u64 {
        match self.timing {
            Timing::Metrical(tpq) => {
                let idx = self.segments.partition_point(|s| s.0 <= tick) - 1;
                let (start, tempo, acc) = self.segments[idx];
                let numer = acc + u128::from(tick - start) * u128::from(tempo);
                let denom = u128::from(tpq) * 1000;
                ((numer + denom / 2) / denom) as u64
            }
            Timing::Timecode {
                fps,
                ticks_per_frame,
            } => (tick as f64 * 1000.0 / (fps * f64::from(ticks_per_frame))).round() as u64,
        }
    }
}

fn push_vlq(out: &mut Vec<u8>, mut value: u32) {
    let mut buf = [0u8; 5];
    let mut i = buf.len() - 1;
    buf[i] = (value & 0x7f) as u8;
    value >>= 7;
    while value > 0 {
        i -= 1;
        buf[i] = 0x80 | (value & 0x7f) as u8;
        value >>= 7;
    }
    out.extend_from_slice(&buf[i..]);
}

/// Encode notes as a format 0 file with one millisecond per tick.
pub fn write_smf(notes: &NoteList) -> Vec<u8> {
    // (tick, is_on, pitch, velocity); offs sort before ons at the same tick.
    let mut events: Vec<(u64, bool, u8, u8)> = Vec::with_capacity(notes.len() * 2);
    for n in notes.notes() {
        events.push((n.onset_ms, true, n.pitch, n.velocity));
        events.push((n.offset_ms, false, n.pitch, 0));
    }
    events.sort_by_key(|&(tick, is_on, pitch, _)| (tick, is_on, pitch));

    let mut track = Vec::with_capacity(events.len() * 4 + 16);
    push_vlq(&mut track, 0);
    track.extend_from_slice(&[0xff, 0x51, 0x03]);
    track.extend_from_slice(&WRITER_TEMPO_US.to_be_bytes()[1..]);

    let mut last = 0u64;
    for (tick, is_on, pitch, velocity) in events {
        push_vlq(&mut track, delta(tick, last));
        last = tick;
        if is_on {
            track.extend_from_slice(&[0x90, pitch, velocity]);
        } else {
            track.extend_from_slice(&[0x80, pitch, 0x40]);
        }
    }
    push_vlq(&mut track, delta(notes.total_ms(), last));
    track.extend_from_slice(&[0xff, 0x2f, 0x00]);

    let mut out = Vec::with_capacity(track.len() + 22);
    out.extend_from_slice(b"MThd");
    out.extend_from_slice(&6u32.to_be_bytes());
    out.extend_from_slice(&0u16.to_be_bytes());
    out.extend_from_slice(&1u16.to_be_bytes());
    out.extend_from_slice(&WRITER_TICKS_PER_QUARTER.to_be_bytes());
    out.extend_from_slice(b"MTrk");
    out.extend_from_slice(&(track.len() as u32).to_be_bytes());
    out.extend_from_slice(&track);
    out
}

fn delta(tick: u64, last: u64) -> u32 {
    // VLQ deltas top out at 2^28 - 1 ticks (about 74 hours at 1 ms per tick).
    u32::try_from(tick - last).expect("note time exceeds SMF delta range")
}
