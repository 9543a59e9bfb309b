//! Discrete-event replay of a hybrid run against a real-time DAC.
//!
//! Time is counted in CPU cycles. Hardware blocks are treated as
//! infinitely fast; what limits the stream is the CPU working through
//! interposer transfers and the DAC draining its ring at the sample rate.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::{CostModel, SimError};
use crate::hybrid::{split_execute, Direction, EventKind, SplitPlan, SplitTrace, TransferEvent};
use crate::phy::BlockKind;
use crate::pipeline::{rate_profile, StandardPreset};
use crate::stream::iq_digest;

/// Default DAC ring capacity in samples.
pub const DEFAULT_DAC_RING: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Init,
    Loop,
    Irq,
    Read,
    Dsp,
    Write,
    End,
}

impl Phase {
    pub const ALL: [Phase; 7] = [
        Phase::Init,
        Phase::Loop,
        Phase::Irq,
        Phase::Read,
        Phase::Dsp,
        Phase::Write,
        Phase::End,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Phase::Init => "Init",
            Phase::Loop => "Loop",
            Phase::Irq => "IRQ",
            Phase::Read => "Read",
            Phase::Dsp => "DSP",
            Phase::Write => "Write",
            Phase::End => "End",
        }
    }
}

/// Busy cycles per phase plus clock-gated (sleeping) cycles.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseAccount {
    pub init: u64,
    #[serde(rename = "loop")]
    pub loop_: u64,
    pub irq: u64,
    pub read: u64,
    pub dsp: u64,
    pub write: u64,
    pub end: u64,
    pub gated: u64,
    pub dsp_by_kind: BTreeMap<BlockKind, u64>,
}

impl PhaseAccount {
    pub fn get(&self, p: Phase) -> u64 {
        match p {
            Phase::Init => self.init,
            Phase::Loop => self.loop_,
            Phase::Irq => self.irq,
            Phase::Read => self.read,
            Phase::Dsp => self.dsp,
            Phase::Write => self.write,
            Phase::End => self.end,
        }
    }

    fn add(&mut self, p: Phase, cycles: u64) {
        let slot = match p {
            Phase::Init => &mut self.init,
            Phase::Loop => &mut self.loop_,
            Phase::Irq => &mut self.irq,
            Phase::Read => &mut self.read,
            Phase::Dsp => &mut self.dsp,
            Phase::Write => &mut self.write,
            Phase::End => &mut self.end,
        };
        *slot += cycles;
    }

    pub fn busy(&self) -> u64 {
        Phase::ALL.iter().map(|p| self.get(*p)).sum()
    }

    pub fn total(&self) -> u64 {
        self.busy() + self.gated
    }
}

/// Rate at one pipeline boundary, as floats for reporting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub boundary: usize,
    /// Stage fed by this boundary, or "dac" after the last stage.
    pub feeds: String,
    pub item_bits: u32,
    pub items_per_sec: f64,
    pub bits_per_sec: f64,
    pub words_per_sec: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub preset_id: Option<u8>,
    pub sw_first: Option<usize>,
    pub sw_last: Option<usize>,
    pub buffer_words: usize,
    pub dac_ring: usize,
    pub cpu_hz: u64,
    pub sample_rate: u64,
    pub underrun: bool,
    pub first_underrun_cycle: Option<u64>,
    pub first_underrun_sample: Option<usize>,
    pub underrun_count: usize,
    pub total_cycles: u64,
    pub gated_fraction: f64,
    /// Gated share of the cycles after initialisation.
    pub gated_fraction_after_init: f64,
    pub phases: PhaseAccount,
    pub rates: Vec<RateRow>,
    /// Bus words per second crossing the two interposers of the segment.
    pub boundary_rate: Option<f64>,
    pub reads: usize,
    pub chunks: usize,
    pub interrupts: usize,
    pub output_samples: usize,
    pub output_digest: String,
    #[serde(skip)]
    pub events: Vec<TransferEvent>,
}

/// DAC ring model: computes when each sample enters the ring and when the
/// DAC consumes it.
struct Dac {
    cap: usize,
    n: usize,
    cpu_hz: u128,
    sample_rate: u128,
    delivered: Vec<u64>,
    consumed: Vec<u64>,
    base: u64,
    base_k: usize,
    started: bool,
    first_underrun: Option<(u64, usize)>,
    underruns: usize,
}

impl Dac {
    fn new(cap: usize, n: usize, cpu_hz: u64, sample_rate: u64) -> Self {
        Self {
            cap,
            n,
            cpu_hz: u128::from(cpu_hz),
            sample_rate: u128::from(sample_rate),
            delivered: Vec::with_capacity(n),
            consumed: Vec::with_capacity(n),
            base: 0,
            base_k: 0,
            started: false,
            first_underrun: None,
            underruns: 0,
        }
    }

    fn scheduled(&self, k: usize) -> u64 {
        self.base + ((k - self.base_k) as u128 * self.cpu_hz / self.sample_rate) as u64
    }

    fn consume(&mut self, k: usize) {
        let due = self.scheduled(k);
        let d = self.delivered[k];
        let t = if d > due {
            self.underruns += 1;
            self.first_underrun.get_or_insert((due, k));
            self.base = d;
            self.base_k = k;
            d
        } else {
            due
        };
        self.consumed.push(t);
    }

    /// Makes samples up to `count` available to the ring at `at`.
    fn deliver_upto(&mut self, count: usize, at: u64) {
        for k in self.delivered.len()..count.min(self.n) {
            let mut d = at;
            if let Some(&prev) = self.delivered.last() {
                d = d.max(prev);
            }
            if k >= self.cap {
                d = d.max(self.consumed[k - self.cap]);
            }
            self.delivered.push(d);
            if self.started {
                self.consume(k);
            } else if k + 1 == self.cap || k + 1 == self.n {
                self.started = true;
                self.base = d;
                self.base_k = 0;
                for j in 0..=k {
                    self.consume(j);
                }
            }
        }
    }

    fn last_delivery(&self) -> Option<u64> {
        self.delivered.last().copied()
    }

    fn finish_time(&self) -> u64 {
        self.consumed.last().copied().unwrap_or(0)
    }
}

struct Log {
    events: Vec<TransferEvent>,
}

impl Log {
    fn push(&mut self, mut e: TransferEvent) {
        e.seq = self.events.len() as u64;
        self.events.push(e);
    }

    fn finish(mut self, cpu_hz: u64, sample_rate: u64) -> Vec<TransferEvent> {
        self.events.sort_by_key(|e| (e.cycle, e.seq));
        for (i, e) in self.events.iter_mut().enumerate() {
            e.seq = i as u64;
            e.timestamp = e
                .cycle
                .map(|c| (u128::from(c) * u128::from(sample_rate) / u128::from(cpu_hz)) as u64);
        }
        self.events
    }
}

/// Simulates `packet` through `preset`'s pipeline under `plan`.
pub fn simulate(
    preset: &StandardPreset,
    plan: &SplitPlan,
    packet: &[u8],
    cost: &CostModel,
    dac_ring: usize,
) -> Result<RunReport, SimError> {
    cost.validate()?;
    if dac_ring == 0 {
        return Err(SimError::ZeroRing);
    }
    let cfg = &preset.pipeline;
    let run = split_execute(cfg, plan, packet)?;
    let output = run.output.into_iq().ok_or(SimError::NotIq)?;
    let n = output.len();

    let mut ph = PhaseAccount::default();
    let mut log = Log { events: Vec::new() };
    let mut dac = Dac::new(dac_ring, n, cost.cpu_hz, preset.sample_rate);
    let mut interrupts = 0;

    let mut t = cost.init_cycles;
    ph.add(Phase::Init, t);
    let accel_start = t;

    let (reads, chunks) = match &run.trace {
        None => {
            dac.deliver_upto(n, accel_start);
            let done = dac.finish_time().max(t);
            ph.gated += done - t;
            t = done;
            (0, 0)
        }
        Some(trace) => {
            t = cpu_loop(trace, cost, &mut dac, &mut ph, &mut log, &mut interrupts, t, n);
            let done = dac.finish_time();
            if done > t {
                ph.gated += done - t;
                t = done;
            }
            log.push(TransferEvent::new(EventKind::Irq, None, None, 0, 0).with_last(true).at(done));
            ph.add(Phase::End, cost.end_cycles);
            t += cost.end_cycles;
            (trace.reads.len(), trace.chunk_count())
        }
    };
    debug_assert_eq!(ph.total(), t);
    if ph.total() != t {
        return Err(SimError::Accounting { phases: ph.total(), total: t });
    }

    let profile = rate_profile(cfg, preset)?;
    let rates = rate_rows(&profile);
    let boundary_rate = plan.segment.map(|(f, l)| ratio_f64(profile.segment_traffic(f, l)));

    let after_init = t - ph.init;
    Ok(RunReport {
        preset_id: cfg.preset_id,
        sw_first: plan.sw_first(),
        sw_last: plan.sw_last(),
        buffer_words: plan.buffer_words,
        dac_ring,
        cpu_hz: cost.cpu_hz,
        sample_rate: preset.sample_rate,
        underrun: dac.first_underrun.is_some(),
        first_underrun_cycle: dac.first_underrun.map(|u| u.0),
        first_underrun_sample: dac.first_underrun.map(|u| u.1),
        underrun_count: dac.underruns,
        total_cycles: t,
        gated_fraction: ph.gated as f64 / t as f64,
        gated_fraction_after_init: if after_init == 0 {
            1.0
        } else {
            ph.gated as f64 / after_init as f64
        },
        phases: ph,
        rates,
        boundary_rate,
        reads,
        chunks,
        interrupts,
        output_samples: n,
        output_digest: iq_digest(&output),
        events: log.finish(cost.cpu_hz, preset.sample_rate),
    })
}

fn ratio_f64(r: num_rational::Ratio<u64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Per-boundary rates of a profile, in reporting form.
pub fn rate_rows(profile: &crate::pipeline::RateProfile) -> Vec<RateRow> {
    profile
        .boundaries
        .iter()
        .enumerate()
        .map(|(i, b)| RateRow {
            boundary: i,
            feeds: BlockKind::from_index(i).map_or("dac".to_string(), |k| k.name().to_string()),
            item_bits: b.item_bits,
            items_per_sec: ratio_f64(b.items_per_sec),
            bits_per_sec: ratio_f64(b.bits_per_sec()),
            words_per_sec: ratio_f64(b.words_per_sec()),
        })
        .collect()
}

/// Samples available downstream once `words` inbound words have arrived.
fn available(words: usize, total_words: usize, samples: usize) -> usize {
    if words >= total_words {
        samples
    } else {
        (words as u128 * samples as u128 / total_words as u128) as usize
    }
}

#[allow(clippy::too_many_arguments)]
fn cpu_loop(
    trace: &SplitTrace,
    cost: &CostModel,
    dac: &mut Dac,
    ph: &mut PhaseAccount,
    log: &mut Log,
    interrupts: &mut usize,
    start: u64,
    n: usize,
) -> u64 {
    let mut t = start;
    let total_words = trace.out_words();
    let mut release_out: Vec<u64> = Vec::with_capacity(trace.reads.len());
    let mut release_in: Vec<u64> = Vec::with_capacity(trace.chunk_count());
    let mut pending: VecDeque<(usize, usize)> = VecDeque::new();
    let mut words_in = 0;
    let mut r = 0;
    let mut sleep = |t: &mut u64, until: u64, ph: &mut PhaseAccount| {
        ph.gated += until - *t;
        *t = until + cost.irq_latency_cycles;
        ph.add(Phase::Irq, cost.irq_latency_cycles);
        *interrupts += 1;
    };

    if total_words == 0 {
        dac.deliver_upto(n, t);
    }
    let mut announced = 0;
    loop {
        if r == trace.reads.len() && pending.is_empty() {
            break;
        }
        ph.add(Phase::Loop, cost.loop_cycles);
        t += cost.loop_cycles;

        // Outbound DMA for every read whose slot has been released.
        while announced < trace.reads.len() && (announced < 2 || release_out.len() > announced - 2) {
            let rd = &trace.reads[announced];
            let slot = Some((announced % 2) as u8);
            let from = if announced >= 2 { release_out[announced - 2] } else { start };
            let done = from + cost.dma_time(rd.words);
            let ev = |k| TransferEvent::new(k, Some(Direction::ToCpu), slot, rd.words, rd.items).with_last(rd.last);
            log.push(ev(EventKind::DmaStart).at(from));
            log.push(ev(EventKind::DmaDone).at(done));
            log.push(ev(EventKind::Irq).at(done));
            announced += 1;
        }

        if let Some(&(words, items)) = pending.front() {
            let c = release_in.len();
            let free_at = if c >= 2 { release_in[c - 2] } else { 0 };
            if free_at > t {
                sleep(&mut t, free_at, ph);
                continue;
            }
            let slot = Some((c % 2) as u8);
            let cycles = cost.write_cycles(words);
            let mut flush = TransferEvent::new(EventKind::CacheFlush, Some(Direction::FromCpu), slot, words, items).at(t);
            t += cycles;
            flush.cycle_end = Some(t);
            ph.add(Phase::Write, cycles);
            let done = t + cost.dma_time(words);
            log.push(flush);
            log.push(TransferEvent::new(EventKind::DmaStart, Some(Direction::FromCpu), slot, words, items).at(t));
            log.push(TransferEvent::new(EventKind::DmaDone, Some(Direction::FromCpu), slot, words, items).at(done));
            let before = dac.delivered.len();
            words_in += words;
            dac.deliver_upto(available(words_in, total_words, n), done);
            let freed = if dac.delivered.len() > before {
                dac.last_delivery().unwrap_or(done)
            } else {
                done
            };
            log.push(TransferEvent::new(EventKind::Irq, Some(Direction::FromCpu), slot, words, items).at(freed));
            release_in.push(freed);
            pending.pop_front();
        } else {
            let rd = &trace.reads[r];
            let ready = if r >= 2 { release_out[r - 2] } else { start } + cost.dma_time(rd.words);
            if ready > t {
                sleep(&mut t, ready, ph);
                continue;
            }
            let cycles = cost.read_cycles(rd.words);
            let mut inv = TransferEvent::new(
                EventKind::CacheInvalidate,
                Some(Direction::ToCpu),
                Some((r % 2) as u8),
                rd.words,
                rd.items,
            )
            .with_last(rd.last)
            .at(t);
            t += cycles;
            inv.cycle_end = Some(t);
            log.push(inv);
            ph.add(Phase::Read, cycles);
            release_out.push(t);
            for w in &rd.work {
                let c = w.items as u64 * cost.dsp(w.kind);
                *ph.dsp_by_kind.entry(w.kind).or_default() += c;
                ph.add(Phase::Dsp, c);
                t += c;
            }
            pending.extend(rd.chunks.iter().copied());
            r += 1;
        }
    }
    t
}
