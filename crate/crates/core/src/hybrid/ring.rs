//! Sample ring between the last block and the DAC.

use std::collections::VecDeque;

use crate::stream::Sample;

#[derive(Clone, Debug, PartialEq)]
pub struct RingTrace {
    /// Occupancy after each producer step and after each consumer step,
    /// interleaved.
    pub occupancy: Vec<usize>,
    /// Samples in the order the DAC consumed them.
    pub consumed: Vec<Sample>,
    /// First tick at which the started DAC found the ring empty while
    /// samples were still outstanding.
    pub underrun_tick: Option<usize>,
}

/// Tick-level ring model. On tick `t` the producer offers up to `offers[t]`
/// samples (ticks past the end of `offers` offer nothing); the DAC then
/// consumes one sample per tick once the ring has first filled, or once the
/// producer has delivered everything.
pub fn ring_buffer_feed(samples: &[Sample], capacity: usize, offers: &[usize]) -> RingTrace {
    assert!(capacity >= 1, "ring capacity must be at least 1");
    let mut ring = VecDeque::with_capacity(capacity);
    let mut next = 0;
    let mut started = false;
    let mut trace = RingTrace {
        occupancy: Vec::new(),
        consumed: Vec::with_capacity(samples.len()),
        underrun_tick: None,
    };
    let mut tick = 0;
    let idle_limit = offers.len() + samples.len() + capacity + 1;
    while trace.consumed.len() < samples.len() && tick < idle_limit {
        let offer = offers.get(tick).copied().unwrap_or(0);
        for _ in 0..offer {
            if ring.len() == capacity || next == samples.len() {
                break;
            }
            ring.push_back(samples[next]);
            next += 1;
        }
        trace.occupancy.push(ring.len());
        started |= ring.len() == capacity || next == samples.len();
        if started {
            match ring.pop_front() {
                Some(s) => trace.consumed.push(s),
                None => {
                    trace.underrun_tick.get_or_insert(tick);
                }
            }
        }
        trace.occupancy.push(ring.len());
        tick += 1;
    }
    trace
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(n: usize) -> Vec<Sample> {
        (0..n).map(|i| Sample::new(i as f64, 0.0)).collect()
    }

    #[test]
    fn producer_ahead_never_empties() {
        let x = ramp(100);
        let t = ring_buffer_feed(&x, 8, &[2; 100]);
        assert_eq!(t.consumed, x);
        assert_eq!(t.underrun_tick, None);
        let warm = t.occupancy.iter().position(|&o| o == 8).unwrap();
        let before_tail = t.occupancy.len() - 2 * 8;
        assert!(t.occupancy[warm..before_tail].iter().all(|&o| o > 0));
    }

    #[test]
    fn stalled_producer_drains() {
        let x = ramp(100);
        let mut offers = vec![1; 10];
        offers.extend([0; 50]);
        let t = ring_buffer_feed(&x, 4, &offers);
        assert!(t.occupancy.contains(&0));
        assert!(t.underrun_tick.is_some());
        assert!(t.consumed.len() < x.len());
    }

    #[test]
    fn unit_ring_alternates() {
        let x = ramp(5);
        let t = ring_buffer_feed(&x, 1, &[1; 5]);
        assert_eq!(t.occupancy, vec![1, 0, 1, 0, 1, 0, 1, 0, 1, 0]);
        assert_eq!(t.consumed, x);
    }
}
