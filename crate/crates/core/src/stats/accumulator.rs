//! Mergeable per-quantity sample store.
//!
//! Each entry keeps Neumaier-compensated moment sums and the samples keyed by
//! their global sequence number, so that merging partial accumulators from
//! any partition of the work reproduces the pooled, ordered series.

use std::collections::BTreeMap;

/// Neumaier compensated sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.comp += other.comp;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub sum: CompensatedSum,
    pub sum_sq: CompensatedSum,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum.add(x);
        self.sum_sq.add(x * x);
    }

    pub fn merge(&mut self, other: &Moments) {
        self.count += other.count;
        self.sum.merge(&other.sum);
        self.sum_sq.merge(&other.sum_sq);
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum.value() / self.count as f64
        }
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        let m = self.mean();
        ((self.sum_sq.value() - n * m * m) / (n - 1.0)).max(0.0)
    }
}

/// Sequence numbers are `member << MEMBER_SHIFT | snapshot index`.
pub const MEMBER_SHIFT: u32 = 40;

pub fn sequence(member: usize, index: u64) -> u64 {
    ((member as u64) << MEMBER_SHIFT) | index
}

/// Key of an estimated scalar: quantity tag and grid index (e.g. ell index).
pub type Key = (&'static str, usize);

#[derive(Debug, Clone, Default, PartialEq)]
struct Entry {
    moments: Moments,
    samples: BTreeMap<u64, f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StatAccumulator {
    entries: BTreeMap<Key, Entry>,
}

impl StatAccumulator {
    pub fn new() -> StatAccumulator {
        StatAccumulator::default()
    }

    /// Record the value of `key` for sample number `seq`. Each (key, seq) may
    /// be recorded once.
    pub fn push(&mut self, key: Key, seq: u64, x: f64) {
        let e = self.entries.entry(key).or_default();
        let prev = e.samples.insert(seq, x);
        assert!(prev.is_none(), "sample {seq} of {key:?} recorded twice");
        e.moments.push(x);
    }

    pub fn merge(&mut self, other: &StatAccumulator) {
        for (k, e) in &other.entries {
            let mine = self.entries.entry(*k).or_default();
            mine.moments.merge(&e.moments);
            for (s, v) in &e.samples {
                let prev = mine.samples.insert(*s, *v);
                assert!(prev.is_none(), "sample {s} of {k:?} present in both accumulators");
            }
        }
    }

    pub fn moments(&self, key: Key) -> Option<&Moments> {
        self.entries.get(&key).map(|e| &e.moments)
    }

    /// Samples of `key` in sequence order.
    pub fn series(&self, key: Key) -> Vec<f64> {
        self.entries.get(&key).map(|e| e.samples.values().copied().collect()).unwrap_or_default()
    }

    /// Samples of `key` split by ensemble member, each in sequence order.
    pub fn series_by_member(&self, key: Key) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = Vec::new();
        let mut last = None;
        if let Some(e) = self.entries.get(&key) {
            for (s, v) in &e.samples {
                let m = s >> MEMBER_SHIFT;
                if last != Some(m) {
                    out.push(Vec::new());
                    last = Some(m);
                }
                out.last_mut().unwrap().push(*v);
            }
        }
        out
    }

    pub fn count(&self, key: Key) -> u64 {
        self.moments(key).map_or(0, |m| m.count)
    }

    pub fn keys(&self) -> impl Iterator<Item = &Key> {
        self.entries.keys()
    }
}
