use hybridphy::experiments::power_law_fit;
use hybridphy::phy::*;
use hybridphy::pipeline::{boundary_lengths, rate_profile, standard_presets, STAGE_COUNT};
use hybridphy::stream::{Sample, SymbolStream};
use proptest::prelude::*;

fn bits(v: Vec<bool>) -> SymbolStream {
    SymbolStream::bits(v.into_iter().map(u8::from).collect()).unwrap()
}

fn iq(v: &[(f64, f64)]) -> Vec<Sample> {
    v.iter().map(|&(i, q)| Sample::new(i, q)).collect()
}

fn sample() -> impl Strategy<Value = (f64, f64)> {
    (-1.0f64..1.0, -1.0f64..1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn pn9_is_an_involution(v in prop::collection::vec(any::<bool>(), 0..600), seed in 1u16..=0x1ff) {
        let s = bits(v);
        let twice = pn9(&pn9(&s, seed).unwrap(), seed).unwrap();
        prop_assert_eq!(twice, s);
    }
}

#[test]
fn diffenc_round_trips_exhaustively() {
    for n in 0..=12u32 {
        for word in 0u32..(1 << n) {
            let s = SymbolStream::bits((0..n).map(|i| ((word >> i) & 1) as u8).collect()).unwrap();
            assert_eq!(diffdec(&diffenc(&s).unwrap()).unwrap(), s);
            assert_eq!(diffenc(&diffdec(&s).unwrap()).unwrap(), s);
        }
    }
}

#[test]
fn oqpsk_chips_are_cyclic_shifts() {
    let t = ChipTable::oqpsk();
    let base = t.row(0).unwrap();
    for k in 1..8u8 {
        let mut rotated = base.to_vec();
        rotated.rotate_right(4 * usize::from(k));
        assert_eq!(t.row(k).unwrap(), &rotated[..], "symbol {k}");
    }
    for k in 0..8u8 {
        let odd_inverted: Vec<u8> = t
            .row(k)
            .unwrap()
            .iter()
            .enumerate()
            .map(|(i, &c)| if i % 2 == 1 { c ^ 1 } else { c })
            .collect();
        assert_eq!(t.row(k + 8).unwrap(), &odd_inverted[..], "symbol {}", k + 8);
    }
    let b = ChipTable::bpsk();
    let inv: Vec<u8> = b.row(0).unwrap().iter().map(|c| c ^ 1).collect();
    assert_eq!(b.row(1).unwrap(), &inv[..]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn chip_output_is_concatenated_rows(syms in prop::collection::vec(0u8..16, 0..40)) {
        let t = ChipTable::oqpsk();
        let out = chip_map(&SymbolStream::new(syms.clone(), 4).unwrap(), &t).unwrap();
        prop_assert_eq!(out.len(), syms.len() * 32);
        for (k, s) in syms.iter().enumerate() {
            prop_assert_eq!(&out.items()[k * 32..(k + 1) * 32], t.row(*s).unwrap());
        }
    }

    #[test]
    fn fir_impulse_reproduces_taps(pos in 0usize..60, amp in -1.0f64..1.0, rc in any::<bool>()) {
        let taps = if rc { Taps::raised_cosine() } else { Taps::half_sine() };
        let mut x = vec![Sample::new(0.0, 0.0); 120];
        x[pos] = Sample::new(amp, -amp);
        let y = fir41(&x, &taps, false);
        for (n, v) in y.iter().enumerate() {
            let expect = n.checked_sub(pos).filter(|k| *k < FIR_TAPS).map_or(0.0, |k| taps.coeffs()[k] * amp);
            prop_assert_eq!(v.re, expect);
            prop_assert_eq!(v.im, -expect);
        }
    }

    #[test]
    fn fir_dc_gain(level in -1.0f64..1.0, n in 41usize..200) {
        let taps = Taps::half_sine();
        let y = fir41(&vec![Sample::new(level, level); n], &taps, false);
        for v in &y[FIR_TAPS - 1..] {
            prop_assert!((v.re - level * taps.dc_gain()).abs() < 1e-12);
        }
        prop_assert!((taps.dc_gain() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fir_is_linear(a in prop::collection::vec(sample(), 1..80), b_seed in any::<u64>()) {
        let b: Vec<(f64, f64)> = a.iter().enumerate().map(|(k, _)| {
            let t = ((b_seed.wrapping_mul(k as u64 + 1) % 2001) as f64 - 1000.0) / 1000.0;
            (t, -t)
        }).collect();
        let taps = Taps::raised_cosine();
        let sum: Vec<(f64, f64)> = a.iter().zip(&b).map(|(x, y)| (x.0 + y.0, x.1 + y.1)).collect();
        let (ya, yb, ys) = (fir41(&iq(&a), &taps, true), fir41(&iq(&b), &taps, true), fir41(&iq(&sum), &taps, true));
        prop_assert_eq!(ys.len(), a.len() + FIR_TAPS - 1);
        for k in 0..ys.len() {
            prop_assert!((ys[k] - ya[k] - yb[k]).norm() < 1e-12);
        }
    }

    #[test]
    fn zpad_length(n in 0usize..300, zeros in 0usize..6, every in 1usize..6) {
        let x = iq(&vec![(0.5, -0.5); n]);
        let y = zpad(&x, zeros, every).unwrap();
        prop_assert_eq!(y.len(), n + (n / every) * zeros);
        let kept: Vec<Sample> = y.iter().copied().filter(|s| s.re != 0.0).collect();
        prop_assert_eq!(kept.len(), n);
    }

    #[test]
    fn offset_length_and_rails(x in prop::collection::vec(sample(), 0..100), d in 0usize..8) {
        let y = offset_q(&iq(&x), d);
        prop_assert_eq!(y.len(), x.len() + d);
        for (k, s) in x.iter().enumerate() {
            prop_assert_eq!(y[k].re, s.0);
            prop_assert_eq!(y[k + d].im, s.1);
        }
    }

    #[test]
    fn boundary_lengths_follow_rate_multipliers(len in 1usize..200) {
        for p in standard_presets() {
            let lens = boundary_lengths(&p.pipeline, len).unwrap();
            for k in 0..STAGE_COUNT {
                let Some(b) = p.pipeline.stage(BlockKind::ALL[k]) else {
                    prop_assert_eq!(lens[k + 1], lens[k]);
                    continue;
                };
                let tail = match b.params() {
                    BlockParams::Offset { delay } if b.is_enabled() => *delay,
                    _ => 0,
                };
                let r = b.rate();
                prop_assert_eq!(lens[k] as u64 * r.numer() % r.denom(), 0);
                prop_assert_eq!(lens[k + 1] as u64, lens[k] as u64 * r.numer() / r.denom() + tail as u64);
            }
        }
    }

    #[test]
    fn fit_is_scale_consistent(
        m in 0.1f64..1.5,
        k in 1e-4f64..10.0,
        c in 0.01f64..100.0,
        noise in prop::collection::vec(-0.2f64..0.2, 8),
    ) {
        let pts: Vec<(f64, f64)> = noise
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let r = 10f64.powf(3.0 + i as f64 * 0.5);
                (r, k * r.powf(m) * e.exp())
            })
            .collect();
        let f = power_law_fit(&pts).unwrap();
        let sized: Vec<_> = pts.iter().map(|&(r, s)| (r, s * c)).collect();
        let fs = power_law_fit(&sized).unwrap();
        prop_assert!((fs.m - f.m).abs() < 1e-9);
        prop_assert!((fs.k / (f.k * c) - 1.0).abs() < 1e-9);
        prop_assert!((fs.r2 - f.r2).abs() < 1e-9);
        let rated: Vec<_> = pts.iter().map(|&(r, s)| (r * c, s)).collect();
        let fr = power_law_fit(&rated).unwrap();
        prop_assert!((fr.m - f.m).abs() < 1e-9);
        prop_assert!((fr.k / (f.k * c.powf(-f.m)) - 1.0).abs() < 1e-8);
    }
}

#[test]
fn endpoint_rates_match_presets() {
    for p in standard_presets() {
        let r = rate_profile(&p.pipeline, &p).unwrap();
        assert_eq!(*r.first().items_per_sec.numer(), p.data_rate);
        assert_eq!(*r.first().items_per_sec.denom(), 1);
        assert_eq!(r.last().items_per_sec, num_rational::Ratio::from_integer(p.sample_rate));
    }
}
