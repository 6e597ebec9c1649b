use rand::Rng;

use crate::belief::block_of;
use crate::error::{Error, Result};
use crate::payoff::EntryLayout;
use crate::rank_belief::PayoffDistribution;
use crate::rng::StreamRng;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConfidenceInterval {
    pub lower: f64,
    pub upper: f64,
}

impl ConfidenceInterval {
    pub fn overlaps(&self, other: &ConfidenceInterval) -> bool {
        self.lower <= other.upper && other.lower <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
}

/// `mean ± √(log(2/δ)·w/(2n))` with `w` the payoff range width.
pub fn hoeffding_interval(mean: f64, n: u64, delta: f64, range_width: f64) -> Result<ConfidenceInterval> {
    if n == 0 {
        return Err(Error::invalid("Hoeffding interval needs n ≥ 1"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("δ must lie in (0, 1), got {delta}")));
    }
    if !(range_width > 0.0 && range_width.is_finite()) {
        return Err(Error::invalid("payoff range must have positive width"));
    }
    let half = ((2.0 / delta).ln() * range_width / (2.0 * n as f64)).sqrt();
    Ok(ConfidenceInterval {
        lower: mean - half,
        upper: mean + half,
    })
}

/// Per-entry sufficient statistics and confidence intervals.
#[derive(Clone, Debug, PartialEq)]
pub struct RgUcb {
    layout: EntryLayout,
    delta: f64,
    bounds: (f64, f64),
    n: Vec<u64>,
    sum: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Selection {
    Entry(usize),
    Done,
}

impl RgUcb {
    pub fn new(size: usize, delta: f64, bounds: (f64, f64)) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::invalid(format!("δ must lie in (0, 1), got {delta}")));
        }
        if !(bounds.0 < bounds.1) || !bounds.0.is_finite() || !bounds.1.is_finite() {
            return Err(Error::invalid("payoff bounds must satisfy lo < hi"));
        }
        let layout = EntryLayout::new(size);
        let n = layout.entry_count();
        Ok(RgUcb {
            layout,
            delta,
            bounds,
            n: vec![0; n],
            sum: vec![0.0; n],
        })
    }

    pub fn add(&mut self, entry: usize, value: f64) {
        self.n[entry] += 1;
        self.sum[entry] += value;
    }

    pub fn samples(&self) -> &[u64] {
        &self.n
    }

    /// Empirical mean, or the middle of the payoff range when unsampled.
    pub fn mean(&self, entry: usize) -> f64 {
        if self.n[entry] == 0 {
            0.5 * (self.bounds.0 + self.bounds.1)
        } else {
            self.sum[entry] / self.n[entry] as f64
        }
    }

    /// Hoeffding interval intersected with the payoff bounds.
    pub fn interval(&self, entry: usize) -> ConfidenceInterval {
        let (lo, hi) = self.bounds;
        if self.n[entry] == 0 {
            return ConfidenceInterval { lower: lo, upper: hi };
        }
        let ci = hoeffding_interval(self.mean(entry), self.n[entry], self.delta, hi - lo).expect("validated parameters");
        ConfidenceInterval {
            lower: ci.lower.clamp(lo, hi),
            upper: ci.upper.clamp(lo, hi),
        }
    }

    pub fn intervals(&self) -> Vec<ConfidenceInterval> {
        (0..self.layout.entry_count()).map(|e| self.interval(e)).collect()
    }

    /// Off-diagonal pairs `(M(σ,τ), M(τ,σ))` whose intervals still overlap.
    pub fn unresolved_pairs(&self) -> Vec<(usize, usize)> {
        let s = (self.layout.entry_count() as f64).sqrt() as usize;
        let mut out = Vec::new();
        for i in 0..s {
            for j in i + 1..s {
                let a = self.layout.index(i, j);
                let b = self.layout.index(j, i);
                if self.interval(a).overlaps(&self.interval(b)) {
                    out.push((a, b));
                }
            }
        }
        out
    }

    /// Least-sampled entry among unresolved pairs (ties to the lowest index).
    pub fn step(&self) -> Selection {
        let mut best: Option<usize> = None;
        for (a, b) in self.unresolved_pairs() {
            for e in [a, b] {
                if best.is_none_or(|x| self.n[e] < self.n[x] || (self.n[e] == self.n[x] && e < x)) {
                    best = Some(e);
                }
            }
        }
        best.map_or(Selection::Done, Selection::Entry)
    }

    pub fn interval_belief(&self) -> IntervalBelief {
        IntervalBelief {
            size: (self.layout.entry_count() as f64).sqrt() as usize,
            intervals: self.intervals(),
        }
    }

    /// Point estimate used for mean-payoff regret.
    pub fn mean_values(&self) -> Vec<f64> {
        (0..self.layout.entry_count()).map(|e| self.mean(e)).collect()
    }
}

/// Independent uniform distributions over each entry's interval.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalBelief {
    size: usize,
    intervals: Vec<ConfidenceInterval>,
}

impl IntervalBelief {
    pub fn new(size: usize, intervals: Vec<ConfidenceInterval>) -> Result<Self> {
        if intervals.len() != size * size {
            return Err(Error::shape(size * size, intervals.len()));
        }
        if intervals.iter().any(|c| !(c.lower <= c.upper)) {
            return Err(Error::invalid("interval with lower > upper"));
        }
        Ok(IntervalBelief { size, intervals })
    }

    pub fn intervals(&self) -> &[ConfidenceInterval] {
        &self.intervals
    }
}

impl PayoffDistribution for IntervalBelief {
    fn size(&self) -> usize {
        self.size
    }

    fn draw(&self, rng: &mut StreamRng, out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&self.intervals) {
            let u: f64 = rng.gen();
            *o = (c.lower + c.width() * u).min(c.upper);
        }
    }
}

/// Pseudo-observations implied by a binary outcome `p` at `entry` in a
/// good/bad game: `1 − p` at the transpose and `p` at every other entry of
/// the same block, except inside the good-vs-good block.
pub fn inject_pseudo_samples(layout: EntryLayout, n_good: usize, entry: usize, p: f64) -> Result<Vec<(usize, f64)>> {
    if p != 0.0 && p != 1.0 {
        return Err(Error::invalid(format!("pseudo-samples need a binary payoff, got {p}")));
    }
    if entry >= layout.entry_count() {
        return Err(Error::invalid(format!("entry {entry} out of range")));
    }
    let (row, col) = layout.coords(entry);
    let mut out = vec![(layout.transpose(entry), 1.0 - p)];
    let block = block_of(row, col, n_good);
    if block != 1 {
        for e in 0..layout.entry_count() {
            let (r, c) = layout.coords(e);
            if e != entry && block_of(r, c, n_good) == block {
                out.push((e, p));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use approx::assert_relative_eq;

    #[test]
    fn hoeffding_half_width() {
        let ci = hoeffding_interval(0.5, 100, 0.4, 1.0).unwrap();
        assert_relative_eq!(ci.upper - 0.5, (5f64.ln() / 200.0).sqrt(), epsilon = 1e-15);
        assert_relative_eq!((ci.upper - 0.5) * 1e0, 0.0897, epsilon = 1e-4);
        let quarter = hoeffding_interval(0.5, 400, 0.4, 1.0).unwrap();
        assert_relative_eq!(quarter.width() * 2.0, ci.width(), epsilon = 1e-15);
        assert!(hoeffding_interval(0.5, 100, 0.1, 1.0).unwrap().width() > ci.width());
        assert!(hoeffding_interval(0.5, 0, 0.1, 1.0).is_err());
        assert!(hoeffding_interval(0.5, 1, 1.0, 1.0).is_err());
    }

    #[test]
    fn overlap_rule() {
        let a = ConfidenceInterval { lower: 0.2, upper: 0.4 };
        let b = ConfidenceInterval { lower: 0.5, upper: 0.7 };
        let c = ConfidenceInterval { lower: 0.2, upper: 0.6 };
        assert!(!a.overlaps(&b));
        assert!(c.overlaps(&b));
    }

    #[test]
    fn step_skips_resolved_and_diagonal() {
        let mut r = RgUcb::new(2, 0.1, (0.0, 1.0)).unwrap();
        assert_eq!(r.step(), Selection::Entry(1));
        r.add(1, 1.0);
        assert_eq!(r.step(), Selection::Entry(2));
        for _ in 0..200 {
            r.add(1, 1.0);
            r.add(2, 0.0);
        }
        assert_eq!(r.step(), Selection::Done);
    }

    #[test]
    fn interval_belief_support() {
        let ci = vec![
            ConfidenceInterval { lower: 0.2, upper: 0.4 },
            ConfidenceInterval { lower: 0.3, upper: 0.3 },
            ConfidenceInterval { lower: 0.0, upper: 1.0 },
            ConfidenceInterval { lower: -1.0, upper: 2.0 },
        ];
        let b = IntervalBelief::new(2, ci.clone()).unwrap();
        let mut rng = substream(2, &[]);
        let mut out = [0.0; 4];
        let mut sum = 0.0;
        for _ in 0..10_000 {
            b.draw(&mut rng, &mut out);
            for (o, c) in out.iter().zip(&ci) {
                assert!(*o >= c.lower && *o <= c.upper);
            }
            assert_eq!(out[1], 0.3);
            sum += out[0];
        }
        // sd of U(0.2,0.4) is 0.0577
        assert!((sum / 10_000.0 - 0.3).abs() < 4.0 * 0.0577 / 100.0);
    }

    #[test]
    fn pseudo_samples_follow_blocks() {
        let layout = EntryLayout::new(8);
        // (1,5) one-based is (0,4): good vs bad
        let out = inject_pseudo_samples(layout, 3, layout.index(0, 4), 1.0).unwrap();
        assert_eq!(out[0], (layout.index(4, 0), 0.0));
        assert_eq!(out.len(), 1 + 3 * 5 - 1);
        for &(e, v) in &out[1..] {
            let (r, c) = layout.coords(e);
            assert!(r < 3 && c >= 3);
            assert_eq!(v, 1.0);
        }
        let top = inject_pseudo_samples(layout, 3, layout.index(0, 1), 1.0).unwrap();
        assert_eq!(top, vec![(layout.index(1, 0), 0.0)]);
        assert!(inject_pseudo_samples(layout, 3, 0, 0.5).is_err());
    }
}
