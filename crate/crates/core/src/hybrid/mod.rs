//! Hybrid execution: a contiguous run of blocks moved into software behind
//! a pair of interposers.
//!
//! Interposer buffers are sized in 32-bit bus words. Narrow symbols are
//! packed into words (32 chips, 16 clock symbols, 8 nibbles or 4 bytes per
//! word) and one IQ sample occupies one word, so a buffer of `B` words moves
//! the same number of bits at every boundary.

pub mod event;
pub mod protocol;
pub mod ring;
pub mod software;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use event::{check_ownership, read_ndjson, to_ndjson, write_ndjson, Direction, EventKind, TransferEvent};
pub use protocol::{chunk_items, drive, protocol_step, CpuAction, InterposerState, PendingIrq, ProtocolViolation, ReadSpec};
pub use ring::{ring_buffer_feed, RingTrace};
pub use software::{soft_block, BlockWork, SoftBlock, SoftSegment};

use crate::phy::{byte_stream, BlockError, BlockKind};
use crate::pipeline::{run_pipeline, PipelineConfig, PipelineError, STAGE_COUNT};
use crate::stream::{items_per_word, words_for, Stream};

#[derive(Debug, Error)]
pub enum HybridError {
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("software stage {stage}: {source}")]
    Software {
        stage: String,
        #[source]
        source: BlockError,
    },
    #[error("interposer buffer must hold at least one word")]
    ZeroBuffer,
    #[error("IRQ threshold {threshold} must lie in 1..={buffer}")]
    BadThreshold { threshold: usize, buffer: usize },
    #[error("software segment {first}..{last} is reversed")]
    SegmentOrder { first: usize, last: usize },
    #[error("stage index {0} outside the nine-stage pipeline")]
    StageOutOfRange(usize),
    #[error("segment endpoint {0} is not an enabled stage")]
    DisabledStage(BlockKind),
    #[error("interposer protocol: {0}")]
    Protocol(#[from] ProtocolViolation),
}

/// Which stages run in software and how large the interposer buffers are.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    /// Zero-based unified indices of the first and last software stage.
    pub segment: Option<(usize, usize)>,
    /// Capacity of each interposer buffer, in bus words.
    pub buffer_words: usize,
    /// Words in the outbound buffer that raise a read interrupt; defaults to
    /// a full buffer.
    pub irq_threshold: Option<usize>,
}

impl SplitPlan {
    pub fn hardware() -> Self {
        Self {
            segment: None,
            buffer_words: 1,
            irq_threshold: None,
        }
    }

    pub fn software(first: usize, last: usize, buffer_words: usize) -> Self {
        Self {
            segment: Some((first, last)),
            buffer_words,
            irq_threshold: None,
        }
    }

    pub fn with_irq_threshold(mut self, words: usize) -> Self {
        self.irq_threshold = Some(words);
        self
    }

    pub fn with_buffer(mut self, buffer_words: usize) -> Self {
        self.buffer_words = buffer_words;
        self
    }

    pub fn sw_first(&self) -> Option<usize> {
        self.segment.map(|s| s.0)
    }

    pub fn sw_last(&self) -> Option<usize> {
        self.segment.map(|s| s.1)
    }

    pub fn read_words(&self) -> usize {
        self.irq_threshold.unwrap_or(self.buffer_words)
    }

    pub fn validate(&self, cfg: &PipelineConfig) -> Result<(), HybridError> {
        if self.buffer_words == 0 {
            return Err(HybridError::ZeroBuffer);
        }
        if let Some(t) = self.irq_threshold {
            if t == 0 || t > self.buffer_words {
                return Err(HybridError::BadThreshold {
                    threshold: t,
                    buffer: self.buffer_words,
                });
            }
        }
        let Some((first, last)) = self.segment else {
            return Ok(());
        };
        for i in [first, last] {
            let kind = BlockKind::from_index(i).ok_or(HybridError::StageOutOfRange(i))?;
            if !cfg.is_enabled(kind) {
                return Err(HybridError::DisabledStage(kind));
            }
        }
        if first > last {
            return Err(HybridError::SegmentOrder { first, last });
        }
        Ok(())
    }
}

/// Every contiguous segment whose endpoints are enabled stages.
pub fn enabled_segments(cfg: &PipelineConfig) -> Vec<(usize, usize)> {
    let idx: Vec<usize> = cfg.enabled_kinds().into_iter().map(BlockKind::index).collect();
    let mut out = Vec::new();
    for (a, &i) in idx.iter().enumerate() {
        for &j in &idx[a..] {
            out.push((i, j));
        }
    }
    out
}

/// One outbound transfer and what the CPU did with it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReadRecord {
    pub words: usize,
    pub items: usize,
    pub last: bool,
    /// Items entering each software block while processing this read
    /// (including the end-of-stream flush on the last read).
    pub work: Vec<BlockWork>,
    /// Inbound chunks written back, `(words, items)`.
    pub chunks: Vec<(usize, usize)>,
}

/// Functional record of a hybrid run, consumed by the timing layer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitTrace {
    pub first: usize,
    pub last: usize,
    pub buffer_words: usize,
    pub in_item_bits: u32,
    pub out_item_bits: u32,
    pub reads: Vec<ReadRecord>,
    /// Items leaving the software segment.
    pub out_items: usize,
    pub protocol_steps: usize,
}

impl SplitTrace {
    pub fn out_words(&self) -> usize {
        self.reads.iter().flat_map(|r| &r.chunks).map(|c| c.0).sum()
    }

    pub fn chunk_count(&self) -> usize {
        self.reads.iter().map(|r| r.chunks.len()).sum()
    }
}

#[derive(Clone, Debug)]
pub struct SplitRun {
    pub output: Stream,
    pub events: Vec<TransferEvent>,
    pub trace: Option<SplitTrace>,
}

/// Runs `packet` through `cfg` with the plan's segment in software.
///
/// Upstream hardware fills outbound buffers of `read_words` words; the CPU
/// processes each read eagerly and writes the result back in chunks of at
/// most `buffer_words` words; downstream hardware consumes the chunks.
pub fn split_execute(cfg: &PipelineConfig, plan: &SplitPlan, packet: &[u8]) -> Result<SplitRun, HybridError> {
    if packet.is_empty() {
        return Err(PipelineError::EmptyPacket.into());
    }
    plan.validate(cfg)?;
    let Some((first, last)) = plan.segment else {
        return Ok(SplitRun {
            output: run_pipeline(cfg, packet)?,
            events: Vec::new(),
            trace: None,
        });
    };

    let mut upstream = byte_stream(packet);
    if first > 0 {
        upstream = cfg.run_range(0..=first - 1, upstream)?;
    }
    let bits = cfg.boundary_bits();
    let (in_bits, out_bits) = (bits[first], bits[last + 1]);
    let read_items = plan.read_words() * items_per_word(in_bits);
    let mut reads = Vec::new();
    let mut at = 0;
    while at < upstream.len() {
        let n = read_items.min(upstream.len() - at);
        reads.push(ReadSpec {
            words: words_for(n, in_bits),
            items: n,
            last: at + n == upstream.len(),
        });
        at += n;
    }

    let mut segment = SoftSegment::new(cfg.stages().iter().filter(|b| (first..=last).contains(&b.kind().index())))
        .map_err(|e| software_error(first, last, e))?;
    let mut sw_out: Option<Stream> = None;
    let mut records: Vec<ReadRecord> = Vec::with_capacity(reads.len());
    let mut failure: Option<BlockError> = None;
    let mut offset = 0;
    let process = |r: &ReadSpec| -> usize {
        let chunk = upstream.slice(offset, offset + r.items);
        offset += r.items;
        let run = || -> Result<(Stream, Vec<BlockWork>), BlockError> {
            let (mut out, mut work) = segment.push(chunk)?;
            if r.last {
                if let Some((tail, tail_work)) = segment.finish()? {
                    out.extend(tail);
                    for w in tail_work {
                        match work.iter_mut().find(|x| x.kind == w.kind) {
                            Some(x) => x.items += w.items,
                            None => work.push(w),
                        }
                    }
                }
            }
            Ok((out, work))
        };
        match run() {
            Ok((out, work)) => {
                let n = out.len();
                records.push(ReadRecord {
                    words: r.words,
                    items: r.items,
                    last: r.last,
                    work,
                    chunks: chunk_items(n, out_bits, plan.buffer_words),
                });
                match &mut sw_out {
                    Some(s) => s.extend(out),
                    None => sw_out = Some(out),
                }
                n
            }
            Err(e) => {
                failure.get_or_insert(e);
                0
            }
        }
    };
    let state = InterposerState::new(plan.buffer_words, reads.clone(), out_bits);
    let (_, events, steps) = drive(state, process, usize::MAX)?;
    if let Some(e) = failure {
        return Err(software_error(first, last, e));
    }
    let chunks: usize = records.iter().map(|r| r.chunks.len()).sum();
    let bound = 4 * (reads.len() + chunks) + 4;
    if steps > bound {
        return Err(ProtocolViolation::StepLimit(bound).into());
    }

    let sw_out = sw_out.expect("at least one read");
    let out_items = sw_out.len();
    let output = if last + 1 < STAGE_COUNT {
        cfg.run_range(last + 1..=STAGE_COUNT - 1, sw_out)?
    } else {
        sw_out
    };
    Ok(SplitRun {
        output,
        events,
        trace: Some(SplitTrace {
            first,
            last,
            buffer_words: plan.buffer_words,
            in_item_bits: in_bits,
            out_item_bits: out_bits,
            reads: records,
            out_items,
            protocol_steps: steps,
        }),
    })
}

fn software_error(first: usize, last: usize, source: BlockError) -> HybridError {
    HybridError::Software {
        stage: format!("{}..{}", BlockKind::ALL[first], BlockKind::ALL[last]),
        source,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::build_preset;

    const PACKET: &[u8] = b"\x07hybrid\x00\xff";

    #[test]
    fn hardware_plan_has_no_events() {
        let cfg = build_preset(1).unwrap();
        let run = split_execute(&cfg, &SplitPlan::hardware(), PACKET).unwrap();
        assert!(run.events.is_empty());
        assert!(run.output.bit_identical(&run_pipeline(&cfg, PACKET).unwrap()));
    }

    #[test]
    fn software_fir_matches_hardware() {
        let cfg = build_preset(1).unwrap();
        let run = split_execute(&cfg, &SplitPlan::software(6, 6, 256), PACKET).unwrap();
        assert!(run.output.bit_identical(&run_pipeline(&cfg, PACKET).unwrap()));
        check_ownership(&run.events).unwrap();
        let t = run.trace.unwrap();
        assert_eq!(t.reads.iter().map(|r| r.items).sum::<usize>(), PACKET.len() * 2 * 16);
        assert!(t.reads.iter().flat_map(|r| &r.chunks).all(|c| c.0 <= 256));
    }

    #[test]
    fn last_flag_and_finish_logged() {
        let cfg = build_preset(4).unwrap();
        let run = split_execute(&cfg, &SplitPlan::software(3, 5, 16), PACKET).unwrap();
        let last_reads = run
            .events
            .iter()
            .filter(|e| e.kind == EventKind::CacheInvalidate && e.last)
            .count();
        assert_eq!(last_reads, 1);
        let end = run.events.last().unwrap();
        assert_eq!((end.kind, end.direction), (EventKind::Irq, None));
    }

    #[test]
    fn plan_errors() {
        let cfg = build_preset(1).unwrap();
        let err = |p: SplitPlan| split_execute(&cfg, &p, PACKET).unwrap_err();
        assert!(matches!(err(SplitPlan::software(6, 6, 0)), HybridError::ZeroBuffer));
        assert!(matches!(err(SplitPlan::software(1, 6, 8)), HybridError::DisabledStage(BlockKind::Pn9)));
        assert!(matches!(err(SplitPlan::software(7, 6, 8)), HybridError::SegmentOrder { .. }));
        assert!(matches!(err(SplitPlan::software(6, 9, 8)), HybridError::StageOutOfRange(9)));
        assert!(matches!(
            err(SplitPlan::software(6, 6, 8).with_irq_threshold(9)),
            HybridError::BadThreshold { .. }
        ));
    }

    #[test]
    fn threshold_shrinks_reads() {
        let cfg = build_preset(1).unwrap();
        let full = split_execute(&cfg, &SplitPlan::software(6, 6, 64), PACKET).unwrap();
        let half = split_execute(&cfg, &SplitPlan::software(6, 6, 64).with_irq_threshold(32), PACKET).unwrap();
        assert!(half.trace.unwrap().reads.len() > full.trace.unwrap().reads.len());
        assert!(half.output.bit_identical(&full.output));
    }

    #[test]
    fn segments_enumerated() {
        let cfg = build_preset(6).unwrap();
        assert_eq!(
            enabled_segments(&cfg),
            vec![(0, 0), (0, 1), (0, 2), (0, 5), (1, 1), (1, 2), (1, 5), (2, 2), (2, 5), (5, 5)]
        );
    }
}
