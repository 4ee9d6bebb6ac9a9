use serde::{Deserialize, Serialize};

use super::quad::{interior_point, Quad1};
use crate::error::{Error, Result};

/// Pieces narrower than this, relative to the size of their endpoints, are
/// absorbed into a neighbour.
pub const MIN_PIECE_REL: f64 = 1e-12;

fn is_sliver(lo: f64, hi: f64) -> bool {
    lo.is_finite() && hi.is_finite() && hi - lo <= MIN_PIECE_REL * lo.abs().max(hi.abs())
}

/// Coefficients closer than this (relative) are considered identical.
const MERGE_REL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub q: Quad1,
}

/// Which operand attains a pointwise minimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    First,
    Second,
}

/// A continuous-or-not piecewise quadratic over `[lo, hi)` with sorted,
/// contiguous pieces `[l_i, u_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseQuadratic {
    pieces: Vec<Piece>,
}

/// Lower envelope of several functions, with the index of the attaining input
/// recorded for every output piece.
#[derive(Debug, Clone)]
pub struct Envelope {
    pub function: PiecewiseQuadratic,
    pub labels: Vec<usize>,
}

impl PiecewiseQuadratic {
    /// A single quadratic over the whole real line.
    pub fn quadratic(q: Quad1) -> Self {
        Self::on(f64::NEG_INFINITY, f64::INFINITY, q)
    }

    pub fn constant(c: f64) -> Self {
        Self::quadratic(Quad1::constant(c))
    }

    pub fn on(lo: f64, hi: f64, q: Quad1) -> Self {
        assert!(lo < hi, "empty domain [{lo}, {hi})");
        Self { pieces: vec![Piece { lo, hi, q }] }
    }

    /// Builds from breakpoints `b_0 < b_1 < … < b_n` and `n` quadratics.
    pub fn from_breaks(breaks: &[f64], quads: &[Quad1]) -> Result<Self> {
        if breaks.len() != quads.len() + 1 || quads.is_empty() {
            return Err(Error::invalid("need exactly one more breakpoint than pieces"));
        }
        if breaks.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("breakpoints must be strictly increasing"));
        }
        if quads.iter().any(|q| !q.is_finite()) {
            return Err(Error::invalid("non-finite coefficient"));
        }
        let pieces = quads
            .iter()
            .enumerate()
            .map(|(i, &q)| Piece { lo: breaks[i], hi: breaks[i + 1], q })
            .collect();
        Ok(Self { pieces }.normalized())
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.pieces[0].lo, self.pieces[self.pieces.len() - 1].hi)
    }

    /// Internal breakpoints in ascending order.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.pieces[1..].iter().map(|p| p.lo).collect()
    }

    fn piece_index(&self, x: f64) -> usize {
        // first piece whose hi is > x
        let idx = self.pieces.partition_point(|p| p.hi <= x);
        idx.min(self.pieces.len() - 1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.pieces[self.piece_index(x)].q.eval(x)
    }

    pub fn piece_at(&self, x: f64) -> &Piece {
        &self.pieces[self.piece_index(x)]
    }

    fn check_domain(&self, other: &Self) -> Result<()> {
        let (a, b) = self.domain();
        let (c, d) = other.domain();
        if a != c || b != d {
            return Err(Error::DomainMismatch(a, b, c, d));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_domain(other)?;
        let pieces = refine(self, other)
            .map(|(lo, hi, p, q)| Piece { lo, hi, q: p.add(&q) })
            .collect();
        Ok(Self { pieces }.normalized())
    }

    /// Adds a quadratic to every piece.
    pub fn add_quad(&self, q: &Quad1) -> Self {
        let pieces = self
            .pieces
            .iter()
            .map(|p| Piece { q: p.q.add(q), ..*p })
            .collect();
        Self { pieces }
    }

    pub fn add_constant(&self, c: f64) -> Self {
        self.add_quad(&Quad1::constant(c))
    }

    /// Exact lower envelope; labels say which operand attains each piece
    /// (ties go to the first operand).
    pub fn pointwise_min(&self, other: &Self) -> Result<(Self, Vec<Side>)> {
        self.check_domain(other)?;
        let l1 = vec![0usize; self.len()];
        let l2 = vec![1usize; other.len()];
        let (f, labels) = min_labeled(self, &l1, other, &l2);
        let sides = labels
            .into_iter()
            .map(|l| if l == 0 { Side::First } else { Side::Second })
            .collect();
        Ok((f, sides))
    }

    /// Lower envelope of `fns`, reduced pairwise as a balanced tree.
    pub fn lower_envelope(fns: &[Self]) -> Result<Envelope> {
        if fns.is_empty() {
            return Err(Error::invalid("lower envelope of an empty collection"));
        }
        for f in &fns[1..] {
            fns[0].check_domain(f)?;
        }
        let mut level: Vec<(Self, Vec<usize>)> = fns
            .iter()
            .enumerate()
            .map(|(i, f)| (f.clone(), vec![i; f.len()]))
            .collect();
        while level.len() > 1 {
            let mut next = Vec::with_capacity(level.len().div_ceil(2));
            let mut it = level.into_iter();
            while let Some((f, lf)) = it.next() {
                match it.next() {
                    Some((g, lg)) => next.push(min_labeled(&f, &lf, &g, &lg)),
                    None => next.push((f, lf)),
                }
            }
            level = next;
        }
        let (function, labels) = level.pop().unwrap();
        Ok(Envelope { function, labels })
    }

    /// Set of points where `self <= other`, ties included.
    pub fn below_set(&self, other: &Self) -> Result<super::IntervalSet> {
        self.check_domain(other)?;
        let mut out = Vec::new();
        for (lo, hi, p, q) in refine(self, other) {
            let d = p.sub_clean(&q);
            for (a, b) in split_at_roots(&d, lo, hi) {
                let x = interior_point(a, b);
                if d.is_zero() || d.eval(x) <= 0.0 {
                    out.push((a, b));
                }
            }
        }
        Ok(super::IntervalSet::from_closed(out))
    }

    /// Merges mergeable neighbours and drops slivers.
    pub(crate) fn normalized(self) -> Self {
        let n = self.pieces.len();
        let labels = vec![0usize; n];
        normalize_labeled(self.pieces, labels).0
    }

    /// Largest jump across internal breakpoints, relative to `1 + |value|`.
    pub fn max_discontinuity(&self) -> f64 {
        self.pieces
            .windows(2)
            .map(|w| {
                let x = w[1].lo;
                let (l, r) = (w[0].q.eval(x), w[1].q.eval(x));
                (l - r).abs() / (1.0 + l.abs().max(r.abs()))
            })
            .fold(0.0, f64::max)
    }
}

/// Common refinement of two functions: yields `(lo, hi, p_piece, q_piece)`.
fn refine<'a>(
    p: &'a PiecewiseQuadratic,
    q: &'a PiecewiseQuadratic,
) -> impl Iterator<Item = (f64, f64, Quad1, Quad1)> + 'a {
    let (mut i, mut j) = (0usize, 0usize);
    let mut lo = p.pieces[0].lo;
    std::iter::from_fn(move || {
        if i >= p.pieces.len() || j >= q.pieces.len() {
            return None;
        }
        let (pp, qq) = (&p.pieces[i], &q.pieces[j]);
        let hi = pp.hi.min(qq.hi);
        let item = (lo, hi, pp.q, qq.q);
        if pp.hi <= hi {
            i += 1;
        }
        if qq.hi <= hi {
            j += 1;
        }
        lo = hi;
        Some(item)
    })
}

/// Splits `[lo, hi)` at the roots of `d` that fall strictly inside.
fn split_at_roots(d: &Quad1, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let mut cuts = vec![lo];
    for r in d.roots() {
        if r > lo && r < hi && !is_sliver(lo, r) && !is_sliver(r, hi) {
            cuts.push(r);
        }
    }
    cuts.push(hi);
    cuts.windows(2).map(|w| (w[0], w[1])).collect()
}

fn min_labeled(
    p: &PiecewiseQuadratic,
    pl: &[usize],
    q: &PiecewiseQuadratic,
    ql: &[usize],
) -> (PiecewiseQuadratic, Vec<usize>) {
    let mut pieces = Vec::with_capacity(p.len() + q.len());
    let mut labels = Vec::with_capacity(p.len() + q.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut lo = p.pieces[0].lo;
    while i < p.pieces.len() && j < q.pieces.len() {
        let (pp, qq) = (&p.pieces[i], &q.pieces[j]);
        let hi = pp.hi.min(qq.hi);
        let d = pp.q.sub_clean(&qq.q);
        if d.is_zero() {
            pieces.push(Piece { lo, hi, q: pp.q });
            labels.push(pl[i]);
        } else {
            for (a, b) in split_at_roots(&d, lo, hi) {
                let x = interior_point(a, b);
                if d.eval(x) <= 0.0 {
                    pieces.push(Piece { lo: a, hi: b, q: pp.q });
                    labels.push(pl[i]);
                } else {
                    pieces.push(Piece { lo: a, hi: b, q: qq.q });
                    labels.push(ql[j]);
                }
            }
        }
        if pp.hi <= hi {
            i += 1;
        }
        if qq.hi <= hi {
            j += 1;
        }
        lo = hi;
    }
    normalize_labeled(pieces, labels)
}

fn normalize_labeled(pieces: Vec<Piece>, labels: Vec<usize>) -> (PiecewiseQuadratic, Vec<usize>) {
    let mut out: Vec<Piece> = Vec::with_capacity(pieces.len());
    let mut out_labels: Vec<usize> = Vec::with_capacity(pieces.len());
    for (piece, label) in pieces.into_iter().zip(labels) {
        if let Some(last) = out.last_mut() {
            let same = *out_labels.last().unwrap() == label && last.q.approx_eq(&piece.q, MERGE_REL);
            if same {
                last.hi = piece.hi;
                continue;
            }
            if is_sliver(piece.lo, piece.hi) {
                // sliver: extend the previous piece over it
                last.hi = piece.hi;
                continue;
            }
            if is_sliver(last.lo, last.hi) {
                // previous piece was a leading sliver
                let lo = last.lo;
                *last = Piece { lo, ..piece };
                *out_labels.last_mut().unwrap() = label;
                continue;
            }
        }
        out.push(piece);
        out_labels.push(label);
    }
    (PiecewiseQuadratic { pieces: out }, out_labels)
}

#[derive(Serialize, Deserialize)]
struct PieceJson {
    lo: Option<f64>,
    hi: Option<f64>,
    a: f64,
    b: f64,
    c: f64,
}

#[derive(Serialize, Deserialize)]
struct PwqJson {
    pieces: Vec<PieceJson>,
}

impl Serialize for PiecewiseQuadratic {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pieces = self
            .pieces
            .iter()
            .map(|p| PieceJson {
                lo: p.lo.is_finite().then_some(p.lo),
                hi: p.hi.is_finite().then_some(p.hi),
                a: p.q.a,
                b: p.q.b,
                c: p.q.c,
            })
            .collect();
        PwqJson { pieces }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PiecewiseQuadratic {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = PwqJson::deserialize(d)?;
        let pieces: Vec<Piece> = raw
            .pieces
            .into_iter()
            .map(|p| Piece {
                lo: p.lo.unwrap_or(f64::NEG_INFINITY),
                hi: p.hi.unwrap_or(f64::INFINITY),
                q: Quad1::new(p.a, p.b, p.c),
            })
            .collect();
        if pieces.is_empty() || pieces.windows(2).any(|w| w[0].hi != w[1].lo) {
            return Err(serde::de::Error::custom("pieces must be non-empty and contiguous"));
        }
        Ok(PiecewiseQuadratic { pieces })
    }
}
