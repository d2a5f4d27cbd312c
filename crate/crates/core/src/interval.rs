//! Restriction intervals on `[0, 1]` and the measures built on them.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Lane-fraction `[lo, hi] ⊆ [0, 1]` of one movement blocked by another's queue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RestrictionInterval {
    lo: f64,
    hi: f64,
}

impl RestrictionInterval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
            return Err(Error::invalid(format!(
                "restriction interval [{lo}, {hi}] must satisfy 0 <= y <= z <= 1"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub const FULL: RestrictionInterval = RestrictionInterval { lo: 0.0, hi: 1.0 };

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_degenerate(&self) -> bool {
        self.hi <= self.lo
    }
}

/// Lebesgue measure of a union of intervals.
pub fn union_measure(intervals: &[RestrictionInterval]) -> f64 {
    let mut live: Vec<RestrictionInterval> = intervals.iter().copied().filter(|iv| !iv.is_degenerate()).collect();
    if live.is_empty() {
        return 0.0;
    }
    live.sort_by(|a, b| a.lo.total_cmp(&b.lo));

    let mut total = 0.0;
    let (mut start, mut end) = (live[0].lo, live[0].hi);
    for iv in &live[1..] {
        if iv.lo > end {
            total += end - start;
            start = iv.lo;
            end = iv.hi;
        } else if iv.hi > end {
            end = iv.hi;
        }
    }
    total += end - start;
    total.min(1.0)
}

/// Area of `⋃ η_k × [a_k, 1]`.
pub fn rectangle_union_area(rects: &[(RestrictionInterval, f64)]) -> f64 {
    let mut live: Vec<(RestrictionInterval, f64)> = rects
        .iter()
        .copied()
        .filter(|(iv, a)| !iv.is_degenerate() && *a < 1.0)
        .map(|(iv, a)| (iv, a.max(0.0)))
        .collect();
    if live.is_empty() {
        return 0.0;
    }
    live.sort_by(|x, y| x.1.total_cmp(&y.1));

    let mut area = 0.0;
    let mut active = Vec::with_capacity(live.len());
    let mut k = 0;
    while k < live.len() {
        let level = live[k].1;
        while k < live.len() && live[k].1 <= level {
            active.push(live[k].0);
            k += 1;
        }
        let next = live.get(k).map_or(1.0, |r| r.1);
        area += (next - level) * union_measure(&active);
    }
    area.min(1.0)
}

/// Restriction intervals `η^i_{j',j}` keyed by `(input, blocker, blocked)`.
///
/// Absent entries mean the blocker's queue does not reach the blocked
/// movement's lanes. A movement's own output filling always stops it,
/// so self-entries are not stored.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RestrictionMap {
    entries: BTreeMap<(usize, usize, usize), RestrictionInterval>,
}

impl RestrictionMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Full FIFO: every queue blocks every other movement of its input.
    pub fn full_fifo(inputs: usize, outputs: usize) -> Self {
        let mut map = Self::new();
        for i in 0..inputs {
            for blocker in 0..outputs {
                for blocked in 0..outputs {
                    if blocker != blocked {
                        map.entries.insert((i, blocker, blocked), RestrictionInterval::FULL);
                    }
                }
            }
        }
        map
    }

    pub fn insert(
        &mut self,
        input: usize,
        blocker: usize,
        blocked: usize,
        interval: RestrictionInterval,
    ) -> Result<()> {
        if blocker == blocked {
            return Err(Error::invalid(format!(
                "self-restriction for input {input}, output {blocker} is not allowed"
            )));
        }
        if interval.is_degenerate() {
            self.entries.remove(&(input, blocker, blocked));
        } else {
            self.entries.insert((input, blocker, blocked), interval);
        }
        Ok(())
    }

    pub fn get(&self, input: usize, blocker: usize, blocked: usize) -> Option<RestrictionInterval> {
        self.entries.get(&(input, blocker, blocked)).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize, usize), RestrictionInterval)> + '_ {
        self.entries.iter().map(|(k, v)| (*k, *v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn check_dimensions(&self, inputs: usize, outputs: usize) -> Result<()> {
        for &(i, a, b) in self.entries.keys() {
            if i >= inputs || a >= outputs || b >= outputs {
                return Err(Error::Dimension(format!(
                    "restriction ({i}, {a}, {b}) outside {inputs} inputs x {outputs} outputs"
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn iv(lo: f64, hi: f64) -> RestrictionInterval {
        RestrictionInterval::new(lo, hi).unwrap()
    }

    #[test]
    fn union_examples() {
        assert_eq!(union_measure(&[]), 0.0);
        assert!((union_measure(&[iv(0.0, 0.2), iv(0.6, 1.0)]) - 0.6).abs() < 1e-15);
        let m = union_measure(&[iv(0.0, 0.5), iv(0.3, 0.8), iv(0.9, 1.0)]);
        assert!((m - 0.9).abs() < 1e-15);
    }

    #[test]
    fn rectangle_examples() {
        assert_eq!(rectangle_union_area(&[]), 0.0);
        assert_eq!(rectangle_union_area(&[(RestrictionInterval::FULL, 0.5)]), 0.5);
        let a = rectangle_union_area(&[(iv(0.0, 0.2), 0.0), (iv(0.6, 1.0), 0.25)]);
        assert!((a - 0.5).abs() < 1e-15);
    }

    #[test]
    fn interval_validation() {
        assert!(RestrictionInterval::new(0.6, 0.5).is_err());
        assert!(RestrictionInterval::new(-0.1, 0.5).is_err());
        assert!(RestrictionInterval::new(0.2, 1.1).is_err());
        let mut map = RestrictionMap::new();
        assert!(map.insert(0, 1, 1, RestrictionInterval::FULL).is_err());
        map.insert(0, 1, 2, iv(0.3, 0.3)).unwrap();
        assert!(map.is_empty());
    }

    /// Brute-force measure on a fine grid of midpoints.
    fn grid_measure(ivs: &[RestrictionInterval]) -> f64 {
        let n = 20_000;
        (0..n)
            .filter(|k| {
                let x = (*k as f64 + 0.5) / n as f64;
                ivs.iter().any(|iv| iv.lo < x && x < iv.hi)
            })
            .count() as f64
            / n as f64
    }

    fn arb_interval() -> impl Strategy<Value = RestrictionInterval> {
        (0.0..=1.0f64, 0.0..=1.0f64).prop_map(|(a, b)| iv(a.min(b), a.max(b)))
    }

    proptest! {
        #[test]
        fn union_is_order_invariant_and_monotone(
            mut ivs in prop::collection::vec(arb_interval(), 0..8),
            extra in arb_interval(),
        ) {
            let m = union_measure(&ivs);
            prop_assert!((m - grid_measure(&ivs)).abs() < 2e-3);
            ivs.reverse();
            prop_assert!((union_measure(&ivs) - m).abs() < 1e-12);
            ivs.push(extra);
            prop_assert!(union_measure(&ivs) >= m - 1e-12);
        }

        #[test]
        fn splitting_an_interval_preserves_measure(
            ivs in prop::collection::vec(arb_interval(), 1..6),
            frac in 0.0..=1.0f64,
        ) {
            let m = union_measure(&ivs);
            let first = ivs[0];
            let cut = first.lo + frac * first.length();
            let mut split = ivs[1..].to_vec();
            split.push(iv(first.lo, cut));
            split.push(iv(cut, first.hi));
            prop_assert!((union_measure(&split) - m).abs() < 1e-12);
        }

        #[test]
        fn rectangle_area_bounds(
            rects in prop::collection::vec((arb_interval(), 0.0..=1.0f64), 0..6),
        ) {
            let area = rectangle_union_area(&rects);
            let sum: f64 = rects.iter().map(|(iv, a)| iv.length() * (1.0 - a)).sum();
            prop_assert!(area <= sum.min(1.0) + 1e-12);
            let flat: Vec<_> = rects.iter().map(|(iv, _)| (*iv, 0.0)).collect();
            let ivs: Vec<_> = rects.iter().map(|(iv, _)| *iv).collect();
            prop_assert!((rectangle_union_area(&flat) - union_measure(&ivs)).abs() < 1e-12);
        }
    }
}
