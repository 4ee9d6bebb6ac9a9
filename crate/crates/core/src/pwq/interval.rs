use serde::{Deserialize, Serialize};

/// Gaps narrower than this between neighbouring intervals are closed.
pub const MERGE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn closed(lo: f64, hi: f64) -> Self {
        Self { lo, hi, lo_closed: lo.is_finite(), hi_closed: hi.is_finite() }
    }

    pub fn open(lo: f64, hi: f64) -> Self {
        Self { lo, hi, lo_closed: false, hi_closed: false }
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_closed { x >= self.lo } else { x > self.lo };
        let below = if self.hi_closed { x <= self.hi } else { x < self.hi };
        above && below
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Finite union of disjoint, sorted intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalSet {
    intervals: Vec<Interval>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        Self { intervals: Vec::new() }
    }

    pub fn real_line() -> Self {
        Self { intervals: vec![Interval::open(f64::NEG_INFINITY, f64::INFINITY)] }
    }

    pub fn positive_half_line() -> Self {
        Self { intervals: vec![Interval::open(0.0, f64::INFINITY)] }
    }

    /// Union of closed intervals `[lo, hi]` (infinite ends stay open).
    pub fn from_closed(raw: impl IntoIterator<Item = (f64, f64)>) -> Self {
        Self::from_intervals(raw.into_iter().map(|(lo, hi)| Interval::closed(lo, hi)))
    }

    pub fn from_intervals(raw: impl IntoIterator<Item = Interval>) -> Self {
        let mut v: Vec<Interval> = raw
            .into_iter()
            .filter(|i| i.lo < i.hi && !i.lo.is_nan() && !i.hi.is_nan())
            .collect();
        v.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        let mut out: Vec<Interval> = Vec::with_capacity(v.len());
        for i in v {
            if let Some(last) = out.last_mut() {
                if i.lo <= last.hi + MERGE_TOL {
                    if i.hi > last.hi {
                        last.hi = i.hi;
                        last.hi_closed = i.hi_closed;
                    } else if i.hi == last.hi {
                        last.hi_closed |= i.hi_closed;
                    }
                    continue;
                }
            }
            out.push(i);
        }
        Self { intervals: out }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains(&self, x: f64) -> bool {
        let idx = self.intervals.partition_point(|i| i.hi < x);
        self.intervals[idx..].iter().take(2).any(|i| i.contains(x))
    }

    /// Distance from `x` to the nearest finite endpoint (infinite if none).
    pub fn distance_to_boundary(&self, x: f64) -> f64 {
        self.intervals
            .iter()
            .flat_map(|i| [i.lo, i.hi])
            .filter(|e| e.is_finite())
            .map(|e| (e - x).abs())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn intersect(&self, other: &IntervalSet) -> IntervalSet {
        let mut out = Vec::new();
        let (mut i, mut j) = (0usize, 0usize);
        while i < self.intervals.len() && j < other.intervals.len() {
            let (a, b) = (&self.intervals[i], &other.intervals[j]);
            let (lo, lo_closed) = if a.lo > b.lo {
                (a.lo, a.lo_closed)
            } else if b.lo > a.lo {
                (b.lo, b.lo_closed)
            } else {
                (a.lo, a.lo_closed && b.lo_closed)
            };
            let (hi, hi_closed) = if a.hi < b.hi {
                (a.hi, a.hi_closed)
            } else if b.hi < a.hi {
                (b.hi, b.hi_closed)
            } else {
                (a.hi, a.hi_closed && b.hi_closed)
            };
            if lo < hi {
                out.push(Interval { lo, hi, lo_closed, hi_closed });
            }
            if a.hi < b.hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        IntervalSet { intervals: out }
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        IntervalSet::from_intervals(self.intervals.iter().chain(other.intervals.iter()).copied())
    }

    /// `self ∩ (0, ∞)`.
    pub fn positive_part(&self) -> IntervalSet {
        self.intersect(&IntervalSet::positive_half_line())
    }

    pub fn infimum(&self) -> Option<f64> {
        self.intervals.first().map(|i| i.lo)
    }

    pub fn supremum(&self) -> Option<f64> {
        self.intervals.last().map(|i| i.hi)
    }
}

#[derive(Serialize, Deserialize)]
struct IntervalSetJson {
    intervals: Vec<[Option<f64>; 2]>,
}

impl IntervalSet {
    /// `[[lo, hi], …]` with `null` standing in for an infinite end.
    pub fn to_pairs(&self) -> Vec<[Option<f64>; 2]> {
        self.intervals
            .iter()
            .map(|i| [i.lo.is_finite().then_some(i.lo), i.hi.is_finite().then_some(i.hi)])
            .collect()
    }

    pub fn from_pairs(pairs: &[[Option<f64>; 2]]) -> IntervalSet {
        IntervalSet::from_closed(pairs.iter().map(|[lo, hi]| {
            (lo.unwrap_or(f64::NEG_INFINITY), hi.unwrap_or(f64::INFINITY))
        }))
    }
}

impl Serialize for IntervalSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        IntervalSetJson { intervals: self.to_pairs() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for IntervalSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = IntervalSetJson::deserialize(d)?;
        Ok(IntervalSet::from_pairs(&raw.intervals))
    }
}
