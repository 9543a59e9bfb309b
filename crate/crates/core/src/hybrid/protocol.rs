//! CPU-side interposer protocol as an explicit state machine.

use std::collections::VecDeque;

use thiserror::Error;

use super::event::{Direction, EventKind, TransferEvent};
use crate::stream::{items_per_word, words_for};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProtocolViolation {
    #[error("read offered while the CPU still holds data to write")]
    ReadWithPendingWrite,
    #[error("no outbound buffer is ready to read")]
    NothingToRead,
    #[error("previous read has not been processed")]
    UnprocessedRead,
    #[error("process requested without an accepted read")]
    NothingToProcess,
    #[error("write requested with no pending data")]
    NothingToWrite,
    #[error("no inbound buffer is free")]
    InboundBusy,
    #[error("finish requested before the last read was handled")]
    FinishBeforeLast,
    #[error("interposer is disabled")]
    Disabled,
    #[error("action after end of run")]
    AfterEnd,
    #[error("protocol did not reach the end within {0} steps")]
    StepLimit(usize),
}

/// One outbound transfer the pipeline will hand to the CPU.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReadSpec {
    pub words: usize,
    pub items: usize,
    pub last: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PendingIrq {
    None,
    ReadReady,
    WriteReady,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum OutSlot {
    Pipeline,
    Cpu(ReadSpec),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum InSlot {
    Cpu,
    Pipeline { words: usize, items: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CpuAction {
    Poll,
    AcceptRead,
    /// Software output produced from the accepted read, in items.
    Process { output_items: usize },
    AcceptWrite,
    Finish,
}

/// Splits a write of `items` items into chunks of at most `buffer_words`
/// bus words. Returns `(words, items)` per chunk.
pub fn chunk_items(items: usize, item_bits: u32, buffer_words: usize) -> Vec<(usize, usize)> {
    let per_word = items_per_word(item_bits);
    let per_chunk = buffer_words * per_word;
    let mut out = Vec::with_capacity(items.div_ceil(per_chunk.max(1)));
    let mut left = items;
    while left > 0 {
        let n = left.min(per_chunk);
        out.push((words_for(n, item_bits), n));
        left -= n;
    }
    out
}

/// Interposer double buffers plus the CPU's view of the transfer.
#[derive(Clone, Debug)]
pub struct InterposerState {
    enabled: bool,
    buffer_words: usize,
    out_item_bits: u32,
    upstream: VecDeque<ReadSpec>,
    out_slots: [OutSlot; 2],
    fill_slot: usize,
    read_slot: usize,
    in_slots: [InSlot; 2],
    write_slot: usize,
    pending_writes: VecDeque<(usize, usize)>,
    unprocessed: Option<ReadSpec>,
    pub pending_irq: PendingIrq,
    pub last_flag: bool,
    ended: bool,
}

impl InterposerState {
    /// `reads` is the sequence of outbound transfers the pipeline will
    /// produce; the final one should carry `last`.
    pub fn new(buffer_words: usize, reads: Vec<ReadSpec>, out_item_bits: u32) -> Self {
        Self {
            enabled: true,
            buffer_words,
            out_item_bits,
            upstream: reads.into(),
            out_slots: [OutSlot::Pipeline; 2],
            fill_slot: 0,
            read_slot: 0,
            in_slots: [InSlot::Cpu; 2],
            write_slot: 0,
            pending_writes: VecDeque::new(),
            unprocessed: None,
            pending_irq: PendingIrq::None,
            last_flag: false,
            ended: false,
        }
    }

    /// A bypassed interposer: a plain wire with no buffers in play.
    pub fn disabled() -> Self {
        let mut s = Self::new(1, Vec::new(), 32);
        s.enabled = false;
        s
    }

    pub fn is_enabled(&self) -> bool {
        self.enabled
    }

    pub fn is_ended(&self) -> bool {
        self.ended
    }

    pub fn has_pending_write(&self) -> bool {
        !self.pending_writes.is_empty()
    }

    pub fn has_unprocessed_read(&self) -> bool {
        self.unprocessed.is_some()
    }

    pub fn read_ready(&self) -> bool {
        matches!(self.out_slots[self.read_slot], OutSlot::Cpu(_))
    }

    pub fn write_slot_free(&self) -> bool {
        self.in_slots[self.write_slot] == InSlot::Cpu
    }

    /// Number of buffers currently held by the CPU, per direction.
    pub fn cpu_owned(&self) -> (usize, usize) {
        (
            self.out_slots.iter().filter(|s| matches!(s, OutSlot::Cpu(_))).count(),
            self.in_slots.iter().filter(|s| **s == InSlot::Cpu).count(),
        )
    }

    /// Lets the pipeline run until it needs the CPU: drains written inbound
    /// buffers and fills free outbound ones, raising an interrupt for each.
    fn advance_pipeline(&mut self, events: &mut Vec<TransferEvent>) {
        for (i, slot) in self.in_slots.iter_mut().enumerate() {
            if let InSlot::Pipeline { words, items } = *slot {
                *slot = InSlot::Cpu;
                events.push(TransferEvent::new(EventKind::Irq, Some(Direction::FromCpu), Some(i as u8), words, items));
            }
        }
        while self.out_slots[self.fill_slot] == OutSlot::Pipeline {
            let Some(r) = self.upstream.pop_front() else { break };
            let slot = Some(self.fill_slot as u8);
            for kind in [EventKind::DmaStart, EventKind::DmaDone, EventKind::Irq] {
                events.push(TransferEvent::new(kind, Some(Direction::ToCpu), slot, r.words, r.items).with_last(r.last));
            }
            self.out_slots[self.fill_slot] = OutSlot::Cpu(r);
            self.fill_slot ^= 1;
        }
        self.pending_irq = if self.has_pending_write() && self.write_slot_free() {
            PendingIrq::WriteReady
        } else if !self.has_pending_write() && self.unprocessed.is_none() && self.read_ready() {
            PendingIrq::ReadReady
        } else {
            PendingIrq::None
        };
    }
}

/// Applies one CPU action, returning the new state and emitted events.
pub fn protocol_step(
    state: &InterposerState,
    action: CpuAction,
) -> Result<(InterposerState, Vec<TransferEvent>), ProtocolViolation> {
    if !state.enabled {
        return match action {
            CpuAction::Poll => Ok((state.clone(), Vec::new())),
            _ => Err(ProtocolViolation::Disabled),
        };
    }
    if state.ended {
        return Err(ProtocolViolation::AfterEnd);
    }
    let mut s = state.clone();
    let mut events = Vec::new();
    match action {
        CpuAction::Poll => s.advance_pipeline(&mut events),
        CpuAction::AcceptRead => {
            if s.has_pending_write() {
                return Err(ProtocolViolation::ReadWithPendingWrite);
            }
            if s.unprocessed.is_some() {
                return Err(ProtocolViolation::UnprocessedRead);
            }
            let OutSlot::Cpu(r) = s.out_slots[s.read_slot] else {
                return Err(ProtocolViolation::NothingToRead);
            };
            events.push(
                TransferEvent::new(
                    EventKind::CacheInvalidate,
                    Some(Direction::ToCpu),
                    Some(s.read_slot as u8),
                    r.words,
                    r.items,
                )
                .with_last(r.last),
            );
            s.out_slots[s.read_slot] = OutSlot::Pipeline;
            s.read_slot ^= 1;
            s.unprocessed = Some(r);
            s.last_flag |= r.last;
            s.pending_irq = PendingIrq::None;
        }
        CpuAction::Process { output_items } => {
            if s.unprocessed.take().is_none() {
                return Err(ProtocolViolation::NothingToProcess);
            }
            s.pending_writes
                .extend(chunk_items(output_items, s.out_item_bits, s.buffer_words));
        }
        CpuAction::AcceptWrite => {
            let Some(&(words, items)) = s.pending_writes.front() else {
                return Err(ProtocolViolation::NothingToWrite);
            };
            if !s.write_slot_free() {
                return Err(ProtocolViolation::InboundBusy);
            }
            s.pending_writes.pop_front();
            let slot = Some(s.write_slot as u8);
            for kind in [EventKind::CacheFlush, EventKind::DmaStart, EventKind::DmaDone] {
                events.push(TransferEvent::new(kind, Some(Direction::FromCpu), slot, words, items));
            }
            s.in_slots[s.write_slot] = InSlot::Pipeline { words, items };
            s.write_slot ^= 1;
            s.pending_irq = PendingIrq::None;
        }
        CpuAction::Finish => {
            if !s.last_flag || s.unprocessed.is_some() || s.has_pending_write() {
                return Err(ProtocolViolation::FinishBeforeLast);
            }
            s.advance_pipeline(&mut events);
            events.push(TransferEvent::new(EventKind::Irq, None, None, 0, 0).with_last(true));
            s.ended = true;
            s.pending_irq = PendingIrq::None;
        }
    }
    Ok((s, events))
}

/// Runs the protocol to completion with a software stage that turns each
/// read into `process(read)` output items. Fails if the machine has not
/// ended within `max_steps` actions.
pub fn drive(
    mut state: InterposerState,
    mut process: impl FnMut(&ReadSpec) -> usize,
    max_steps: usize,
) -> Result<(InterposerState, Vec<TransferEvent>, usize), ProtocolViolation> {
    let mut log = Vec::new();
    let mut steps = 0;
    let mut current: Option<ReadSpec> = None;
    while !state.ended {
        if steps >= max_steps {
            return Err(ProtocolViolation::StepLimit(max_steps));
        }
        steps += 1;
        let action = if let Some(r) = current.take() {
            CpuAction::Process {
                output_items: process(&r),
            }
        } else if state.has_pending_write() && state.write_slot_free() {
            CpuAction::AcceptWrite
        } else if !state.has_pending_write() && state.read_ready() {
            CpuAction::AcceptRead
        } else if state.last_flag && !state.has_pending_write() {
            CpuAction::Finish
        } else {
            CpuAction::Poll
        };
        if action == CpuAction::AcceptRead {
            if let OutSlot::Cpu(r) = state.out_slots[state.read_slot] {
                current = Some(r);
            }
        }
        let (next, events) = protocol_step(&state, action)?;
        state = next;
        log.extend(events);
    }
    for (i, e) in log.iter_mut().enumerate() {
        e.seq = i as u64;
    }
    Ok((state, log, steps))
}
