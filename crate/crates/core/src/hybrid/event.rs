//! Interposer transfer events and their newline-delimited JSON form.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Pipeline to CPU (outbound double buffer).
    ToCpu,
    /// CPU to pipeline (inbound double buffer).
    FromCpu,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Irq,
    DmaStart,
    DmaDone,
    CacheFlush,
    CacheInvalidate,
}

/// One interposer event.
///
/// Functional logs (from `split_execute`) are untimed; the timing layer
/// fills in `cycle` and the sample-clock `timestamp`. An `Irq` without a
/// direction is the final "accelerator finished" interrupt.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransferEvent {
    pub seq: u64,
    pub kind: EventKind,
    pub direction: Option<Direction>,
    pub slot: Option<u8>,
    pub size_words: usize,
    pub size_items: usize,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub last: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycle: Option<u64>,
    /// End of the CPU phase a cache operation belongs to.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycle_end: Option<u64>,
    /// Sample-clock ticks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
}

impl TransferEvent {
    pub fn new(kind: EventKind, direction: Option<Direction>, slot: Option<u8>, words: usize, items: usize) -> Self {
        Self {
            seq: 0,
            kind,
            direction,
            slot,
            size_words: words,
            size_items: items,
            last: false,
            cycle: None,
            cycle_end: None,
            timestamp: None,
        }
    }

    pub fn with_last(mut self, last: bool) -> Self {
        self.last = last;
        self
    }

    pub fn at(mut self, cycle: u64) -> Self {
        self.cycle = Some(cycle);
        self
    }
}

pub fn write_ndjson<W: Write>(events: &[TransferEvent], mut out: W) -> io::Result<()> {
    for e in events {
        serde_json::to_writer(&mut out, e)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn to_ndjson(events: &[TransferEvent]) -> String {
    let mut buf = Vec::new();
    write_ndjson(events, &mut buf).expect("in-memory write");
    String::from_utf8(buf).expect("json is utf-8")
}

pub fn read_ndjson<R: BufRead>(input: R) -> io::Result<Vec<TransferEvent>> {
    let mut events = Vec::new();
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        events.push(serde_json::from_str(&line).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?);
    }
    Ok(events)
}

/// Checks that no buffer slot is owned by the CPU and the pipeline at once.
///
/// Per slot, outbound events must cycle through
/// `dma_start, dma_done, irq, cache_invalidate` and inbound ones through
/// `cache_flush, dma_start, dma_done, irq`. On timed logs a slot may only be
/// refilled after the CPU phase that released it has ended.
pub fn check_ownership(events: &[TransferEvent]) -> Result<(), String> {
    use EventKind::*;
    const OUT: [EventKind; 4] = [DmaStart, DmaDone, Irq, CacheInvalidate];
    const IN: [EventKind; 4] = [CacheFlush, DmaStart, DmaDone, Irq];
    let mut pos = [[0usize; 2]; 2];
    let mut last_cycle = [[0u64; 2]; 2];
    let mut released = [[0u64; 2]; 2];
    for e in events {
        let (Some(dir), Some(slot)) = (e.direction, e.slot) else {
            continue;
        };
        let (d, s) = (dir as usize, usize::from(slot));
        if s > 1 {
            return Err(format!("event {}: slot {slot} out of range", e.seq));
        }
        let pattern = if dir == Direction::ToCpu { &OUT } else { &IN };
        let expect = pattern[pos[d][s]];
        if e.kind != expect {
            return Err(format!(
                "event {}: {:?} on {:?} slot {slot}, expected {:?}",
                e.seq, e.kind, dir, expect
            ));
        }
        if let Some(c) = e.cycle {
            if c < last_cycle[d][s] {
                return Err(format!("event {}: time runs backwards on {:?} slot {slot}", e.seq, dir));
            }
            if pos[d][s] == 0 && c < released[d][s] {
                return Err(format!(
                    "event {}: {:?} slot {slot} reused at {c} before release at {}",
                    e.seq, dir, released[d][s]
                ));
            }
            last_cycle[d][s] = c;
            if e.kind == CacheInvalidate {
                released[d][s] = e.cycle_end.unwrap_or(c);
            }
            if dir == Direction::FromCpu && e.kind == Irq {
                released[d][s] = c;
            }
        }
        pos[d][s] = (pos[d][s] + 1) % 4;
    }
    for (d, dir) in [Direction::ToCpu, Direction::FromCpu].iter().enumerate() {
        for s in 0..2 {
            if pos[d][s] != 0 {
                return Err(format!("{dir:?} slot {s} left mid-transfer"));
            }
        }
    }
    Ok(())
}
