use hybridphy::hybrid::*;
use hybridphy::pipeline::{run_pipeline, standard_presets, StandardPreset};
use hybridphy::stream::words_for;
use hybridphy::timing::{phase_report, simulate, CostModel, DEFAULT_DAC_RING};
use proptest::prelude::*;

fn preset_and_segment() -> impl Strategy<Value = (StandardPreset, (usize, usize))> {
    let all: Vec<_> = standard_presets()
        .into_iter()
        .flat_map(|p| enabled_segments(&p.pipeline).into_iter().map(move |s| (p.clone(), s)))
        .collect();
    prop::sample::select(all)
}

fn scaled(cost: &CostModel, k: u64) -> CostModel {
    let mut c = cost.clone();
    c.cpu_hz *= k;
    for v in [
        &mut c.irq_latency_cycles,
        &mut c.cache_op_cycles,
        &mut c.cache_line_cycles,
        &mut c.copy_cycles_per_word,
        &mut c.dma_setup_cycles,
        &mut c.dma_cycles_per_word,
        &mut c.loop_cycles,
        &mut c.init_cycles,
        &mut c.end_cycles,
    ] {
        *v *= k;
    }
    for v in c.dsp_cycles_per_item.values_mut() {
        *v *= k;
    }
    c
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn chunks_conserve_items(items in 0usize..5000, bits in prop::sample::select(vec![1u32, 2, 4, 8, 32]), buf in 1usize..300) {
        let chunks = chunk_items(items, bits, buf);
        prop_assert_eq!(chunks.iter().map(|c| c.1).sum::<usize>(), items);
        for (k, &(w, n)) in chunks.iter().enumerate() {
            prop_assert!(w >= 1 && w <= buf);
            prop_assert_eq!(w, words_for(n, bits));
            if k + 1 < chunks.len() {
                prop_assert_eq!(w, buf);
            }
        }
    }

    #[test]
    fn driven_protocol_keeps_ownership(
        reads in prop::collection::vec(1usize..50, 1..30),
        outs in prop::collection::vec(0usize..400, 30),
        buf in 1usize..64,
    ) {
        let specs: Vec<ReadSpec> = reads
            .iter()
            .enumerate()
            .map(|(i, &w)| ReadSpec { words: w, items: w, last: i + 1 == reads.len() })
            .collect();
        let mut k = 0;
        let mut produced = 0;
        let state = InterposerState::new(buf, specs, 32);
        let (end, log, steps) = drive(state, |_| { let n = outs[k]; k += 1; produced += n; n }, 100_000).unwrap();
        prop_assert!(end.is_ended());
        check_ownership(&log).map_err(TestCaseError::fail)?;
        let chunks = log.iter().filter(|e| e.kind == EventKind::CacheFlush).count();
        prop_assert!(steps <= 4 * (reads.len() + chunks) + 4);
        let moved = |d| log.iter().filter(|e| e.kind == EventKind::DmaDone && e.direction == Some(d)).map(|e| e.size_items).sum::<usize>();
        prop_assert_eq!(moved(Direction::ToCpu), reads.iter().sum::<usize>());
        prop_assert_eq!(moved(Direction::FromCpu), produced);
        prop_assert!(log.last().is_some_and(|e| e.last && e.direction.is_none()));
    }

    #[test]
    fn ring_conserves_samples(n in 0usize..200, cap in 1usize..40, offers in prop::collection::vec(0usize..20, 1..400)) {
        let samples: Vec<_> = (0..n).map(|k| hybridphy::stream::Sample::new(k as f64, 0.0)).collect();
        let t = ring_buffer_feed(&samples, cap, &offers);
        prop_assert!(t.consumed.len() <= n);
        prop_assert_eq!(&samples[..t.consumed.len()], &t.consumed[..]);
        if t.underrun_tick.is_none() && offers.iter().sum::<usize>() >= n {
            prop_assert_eq!(t.consumed.len(), n);
        }
        prop_assert!(t.occupancy.iter().all(|&o| o <= cap));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn split_matches_hardware(
        (p, seg) in preset_and_segment(),
        buf in 1usize..2048,
        packet in prop::collection::vec(any::<u8>(), 1..24),
    ) {
        let hw = run_pipeline(&p.pipeline, &packet).unwrap();
        let run = split_execute(&p.pipeline, &SplitPlan::software(seg.0, seg.1, buf), &packet).unwrap();
        prop_assert!(run.output.bit_identical(&hw));
        check_ownership(&run.events).map_err(TestCaseError::fail)?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn accounting_closes(
        (p, seg) in preset_and_segment(),
        buf in 1usize..1024,
        ring in 1usize..1024,
        packet in prop::collection::vec(any::<u8>(), 1..12),
    ) {
        let r = simulate(&p, &SplitPlan::software(seg.0, seg.1, buf), &packet, &CostModel::default(), ring).unwrap();
        prop_assert_eq!(r.phases.total(), r.total_cycles);
        let b = phase_report(&r);
        prop_assert_eq!(b.phases.iter().map(|s| s.cycles).sum::<u64>(), r.total_cycles);
        prop_assert!((b.phases.iter().map(|s| s.fraction).sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!((0.0..=1.0).contains(&r.gated_fraction));
        check_ownership(&r.events).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn larger_buffers_never_underrun_more(
        (p, seg) in preset_and_segment(),
        small in 1usize..64,
        extra in 1usize..256,
        packet in prop::collection::vec(any::<u8>(), 1..8),
    ) {
        let cost = CostModel::default();
        let run = |b| simulate(&p, &SplitPlan::software(seg.0, seg.1, b), &packet, &cost, DEFAULT_DAC_RING).unwrap();
        let (a, b) = (run(small), run(small + extra));
        prop_assert!(a.underrun || !b.underrun, "no underrun at {} but underrun at {}", small, small + extra);
    }

    #[test]
    fn clock_scaling_preserves_behaviour(
        (p, seg) in preset_and_segment(),
        buf in 1usize..512,
        k in 2u64..5,
        packet in prop::collection::vec(any::<u8>(), 1..8),
    ) {
        let base = CostModel::default();
        let plan = SplitPlan::software(seg.0, seg.1, buf);
        let a = simulate(&p, &plan, &packet, &base, DEFAULT_DAC_RING).unwrap();
        let b = simulate(&p, &plan, &packet, &scaled(&base, k), DEFAULT_DAC_RING).unwrap();
        prop_assert_eq!(a.underrun, b.underrun);
        prop_assert!((a.gated_fraction - b.gated_fraction).abs() < 1e-3, "{} vs {}", a.gated_fraction, b.gated_fraction);
        let ratio = b.total_cycles as f64 / (a.total_cycles * k) as f64;
        prop_assert!((ratio - 1.0).abs() < 1e-3, "cycle ratio {}", ratio);
        prop_assert_eq!(a.output_digest, b.output_digest);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn faster_clock_never_hurts(
        (p, seg) in preset_and_segment(),
        buf in 1usize..512,
        packet in prop::collection::vec(any::<u8>(), 1..8),
    ) {
        let slow = CostModel::default();
        let mut fast = slow.clone();
        fast.cpu_hz *= 2;
        let plan = SplitPlan::software(seg.0, seg.1, buf);
        let a = simulate(&p, &plan, &packet, &slow, DEFAULT_DAC_RING).unwrap();
        let b = simulate(&p, &plan, &packet, &fast, DEFAULT_DAC_RING).unwrap();
        prop_assert!(a.underrun || !b.underrun);
        let secs = |r: &hybridphy::timing::RunReport| r.total_cycles as f64 / r.cpu_hz as f64;
        prop_assert!(secs(&b) <= secs(&a) * (1.0 + 1e-9), "{} s > {} s", secs(&b), secs(&a));
        prop_assert_eq!(a.output_digest, b.output_digest);
    }
}

#[test]
fn hardware_runs_are_fully_gated_after_init() {
    for p in standard_presets() {
        let r = simulate(&p, &SplitPlan::hardware(), &[0x5a, 0x0f], &CostModel::default(), DEFAULT_DAC_RING).unwrap();
        assert!(!r.underrun);
        assert_eq!(r.gated_fraction_after_init, 1.0);
        assert!(r.events.is_empty());
    }
}
