//! Equal-value partitioning of a holding by its owner's valuation.
//!
//! A holding `s` is cut into `m` pieces of equal owner value by sweeping
//! left to right and cutting at the value quantiles `k · v(s) / m`. Spans of
//! zero owner density inside `s` join the piece on their left; a leading
//! zero span joins piece 0 and a trailing one joins the last piece.
//!
//! The allocators need, for a second valuation, the value of every piece.
//! Most pieces fall inside one stretch where both densities are constant and
//! therefore share one value, so [`PieceProfile`] stores the values
//! run-length encoded. Its size is bounded by the number of breakpoints, not
//! by `m`.

use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::interval::IntervalSet;
use crate::rat::{self, Rat};
use crate::valuation::PiecewiseConstant;

/// A maximal stretch of `s` on which both densities are constant.
#[derive(Clone, Debug)]
struct Atom {
    start: Rat,
    end: Rat,
    own: Rat,
    other: Rat,
}

fn atoms(own: &PiecewiseConstant, other: Option<&PiecewiseConstant>, s: &IntervalSet) -> Vec<Atom> {
    let mut out = Vec::new();
    let own_segs = own.segments();
    for (a, b) in s.pieces() {
        let mut i = own.segment_at(a);
        let mut j = other.map(|o| o.segment_at(a)).unwrap_or(0);
        let mut x = a.clone();
        while x < *b {
            let mut end = if own_segs[i].end < *b { &own_segs[i].end } else { b };
            let other_density = match other {
                Some(o) => {
                    let seg = &o.segments()[j];
                    if seg.end < *end {
                        end = &seg.end;
                    }
                    seg.density.clone()
                }
                None => Rat::zero(),
            };
            let end = end.clone();
            out.push(Atom {
                start: x,
                end: end.clone(),
                own: own_segs[i].density.clone(),
                other: other_density,
            });
            if own_segs[i].end == end {
                i += 1;
            }
            if let Some(o) = other {
                if o.segments()[j].end == end {
                    j += 1;
                }
            }
            x = end;
        }
    }
    out
}

fn to_index(n: &rat::Int) -> usize {
    n.to_usize().expect("piece index fits in usize")
}

/// Piece receiving a zero-density span that starts at cumulative owner
/// value `c`.
fn zero_span_piece(c: &Rat, q: &Rat, m: usize) -> usize {
    if c.is_zero() {
        0
    } else {
        to_index(&rat::ceil_int(&(c / q))).saturating_sub(1).min(m - 1)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Run {
    pub start: usize,
    pub len: usize,
    pub value: Rat,
}

/// Values, under a second valuation, of the `m` equal-owner-value pieces of a
/// holding.
#[derive(Clone, Debug)]
pub struct PieceProfile {
    owner_value: Rat,
    count: usize,
    runs: Vec<Run>,
}

impl PieceProfile {
    pub fn build(
        own: &PiecewiseConstant,
        s: &IntervalSet,
        m: usize,
        other: &PiecewiseConstant,
    ) -> Result<Self> {
        assert!(m > 0, "partition into zero pieces");
        let atoms = atoms(own, Some(other), s);
        let total = atoms
            .iter()
            .fold(Rat::zero(), |acc, a| acc + &a.own * (&a.end - &a.start));
        if total.is_zero() {
            return Err(Error::ZeroValue);
        }
        let q = &total / rat::int(m as i64);
        let mut runs: Vec<Run> = Vec::new();
        let mut extras: Vec<(usize, Rat)> = Vec::new();
        let push = |runs: &mut Vec<Run>, start: usize, len: usize, value: Rat| {
            if len == 0 {
                return;
            }
            if let Some(last) = runs.last_mut() {
                if last.value == value && last.start + last.len == start {
                    last.len += len;
                    return;
                }
            }
            runs.push(Run { start, len, value });
        };

        let mut k = 0usize;
        let mut acc = Rat::zero();
        let mut c = Rat::zero();
        for atom in &atoms {
            let width = &atom.end - &atom.start;
            if atom.own.is_zero() {
                if !atom.other.is_zero() {
                    extras.push((zero_span_piece(&c, &q, m), &atom.other * width));
                }
                continue;
            }
            let rate = &atom.other / &atom.own;
            let c1 = &c + &atom.own * width;
            loop {
                let end = &q * rat::int((k + 1) as i64);
                if k >= m || end > c1 {
                    acc += &rate * (&c1 - &c);
                    c = c1;
                    break;
                }
                acc += &rate * (&end - &c);
                push(&mut runs, k, 1, std::mem::take(&mut acc));
                k += 1;
                c = end;
                let full = to_index(&rat::floor_int(&((&c1 - &c) / &q))).min(m - k);
                if full > 0 {
                    push(&mut runs, k, full, &rate * &q);
                    k += full;
                    c = &q * rat::int(k as i64);
                }
            }
        }
        debug_assert_eq!(k, m, "sweep must close every piece");
        if k < m {
            push(&mut runs, k, 1, acc);
            k += 1;
            push(&mut runs, k, m - k, Rat::zero());
        }

        if !extras.is_empty() {
            runs = apply_extras(runs, extras);
        }
        Ok(Self {
            owner_value: total,
            count: m,
            runs,
        })
    }

    /// Owner's value of the whole holding.
    pub fn owner_value(&self) -> &Rat {
        &self.owner_value
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn runs(&self) -> &[Run] {
        &self.runs
    }

    pub fn value_of(&self, k: usize) -> &Rat {
        let i = self.runs.partition_point(|r| r.start + r.len <= k);
        &self.runs[i].value
    }

    /// Most valuable piece, lowest index among ties.
    pub fn best_piece(&self) -> (usize, &Rat) {
        let mut best = &self.runs[0];
        for r in &self.runs[1..] {
            if r.value > best.value {
                best = r;
            }
        }
        (best.start, &best.value)
    }

    /// The `k` most valuable pieces ranked by (value descending, index
    /// ascending): their total value and their index ranges in order.
    pub fn top(&self, k: usize) -> (Rat, Vec<(usize, usize)>) {
        let mut order: Vec<&Run> = self.runs.iter().collect();
        order.sort_by(|a, b| b.value.cmp(&a.value).then(a.start.cmp(&b.start)));
        let mut left = k.min(self.count);
        let mut sum = Rat::zero();
        let mut ranges = Vec::new();
        for run in order {
            if left == 0 {
                break;
            }
            let take = run.len.min(left);
            sum += &run.value * rat::int(take as i64);
            ranges.push((run.start, run.start + take));
            left -= take;
        }
        ranges.sort_unstable();
        (sum, ranges)
    }
}

fn apply_extras(runs: Vec<Run>, mut extras: Vec<(usize, Rat)>) -> Vec<Run> {
    extras.sort_by_key(|e| e.0);
    let mut merged: Vec<(usize, Rat)> = Vec::with_capacity(extras.len());
    for (idx, v) in extras {
        match merged.last_mut() {
            Some(last) if last.0 == idx => last.1 += v,
            _ => merged.push((idx, v)),
        }
    }
    let mut out: Vec<Run> = Vec::with_capacity(runs.len() + 2 * merged.len());
    let mut e = 0;
    for run in runs {
        let end = run.start + run.len;
        let mut cursor = run.start;
        while e < merged.len() && merged[e].0 < end {
            let (idx, ref extra) = merged[e];
            if idx > cursor {
                out.push(Run {
                    start: cursor,
                    len: idx - cursor,
                    value: run.value.clone(),
                });
            }
            out.push(Run {
                start: idx,
                len: 1,
                value: &run.value + extra,
            });
            cursor = idx + 1;
            e += 1;
        }
        if cursor < end {
            out.push(Run {
                start: cursor,
                len: end - cursor,
                value: run.value,
            });
        }
    }
    out
}

/// Walks the `m`-piece partition of `s`, reporting each stretch of the
/// resource together with the piece range it belongs to. Positive-density
/// stretches are cut exactly at the value quantiles.
fn sweep(
    own: &PiecewiseConstant,
    s: &IntervalSet,
    m: usize,
    mut emit: impl FnMut(usize, Rat, Rat),
) -> Result<()> {
    assert!(m > 0, "partition into zero pieces");
    let atoms = atoms(own, None, s);
    let total = atoms
        .iter()
        .fold(Rat::zero(), |acc, a| acc + &a.own * (&a.end - &a.start));
    if total.is_zero() {
        return Err(Error::ZeroValue);
    }
    let q = &total / rat::int(m as i64);
    let mut c = Rat::zero();
    for atom in atoms {
        if atom.own.is_zero() {
            emit(zero_span_piece(&c, &q, m), atom.start, atom.end);
            continue;
        }
        let c1 = &c + &atom.own * (&atom.end - &atom.start);
        let mut k = to_index(&rat::floor_int(&(&c / &q))).min(m - 1);
        let mut x = atom.start.clone();
        loop {
            let cut = &q * rat::int((k + 1) as i64);
            if k + 1 >= m || cut >= c1 {
                emit(k, x, atom.end.clone());
                break;
            }
            let xc = &atom.start + (&cut - &c) / &atom.own;
            emit(k, x, xc.clone());
            x = xc;
            k += 1;
        }
        c = c1;
    }
    Ok(())
}

/// Cuts `s` into `m` pieces of exactly equal value under `own`.
pub fn equal_partition(own: &PiecewiseConstant, s: &IntervalSet, m: usize) -> Result<Vec<IntervalSet>> {
    let mut pieces: Vec<Vec<(Rat, Rat)>> = vec![Vec::new(); m];
    sweep(own, s, m, |k, a, b| pieces[k].push((a, b)))?;
    Ok(pieces
        .into_iter()
        .map(IntervalSet::from_ordered_disjoint)
        .collect())
}

/// Union of the pieces whose indices fall in `ranges` (sorted, disjoint,
/// half-open index ranges). Works atom by atom, computing only the cut
/// points at range boundaries.
pub fn collect_pieces(
    own: &PiecewiseConstant,
    s: &IntervalSet,
    m: usize,
    ranges: &[(usize, usize)],
) -> Result<IntervalSet> {
    assert!(m > 0, "partition into zero pieces");
    let atoms = atoms(own, None, s);
    let total = atoms
        .iter()
        .fold(Rat::zero(), |acc, a| acc + &a.own * (&a.end - &a.start));
    if total.is_zero() {
        return Err(Error::ZeroValue);
    }
    let q = &total / rat::int(m as i64);
    let selected = |k: usize| {
        let r = ranges.partition_point(|&(_, hi)| hi <= k);
        r < ranges.len() && ranges[r].0 <= k
    };
    let mut out: Vec<(Rat, Rat)> = Vec::new();
    let mut c = Rat::zero();
    for atom in atoms {
        if atom.own.is_zero() {
            if selected(zero_span_piece(&c, &q, m)) {
                out.push((atom.start, atom.end));
            }
            continue;
        }
        let c1 = &c + &atom.own * (&atom.end - &atom.start);
        let first = to_index(&rat::floor_int(&(&c / &q))).min(m - 1);
        let last = to_index(&rat::ceil_int(&(&c1 / &q)))
            .saturating_sub(1)
            .clamp(first, m - 1);
        // start of piece k inside this atom, for first < k <= last
        let cut = |k: usize| &atom.start + (&q * rat::int(k as i64) - &c) / &atom.own;
        let r0 = ranges.partition_point(|&(_, hi)| hi <= first);
        for &(lo, hi) in &ranges[r0..] {
            if lo > last {
                break;
            }
            let lo = lo.max(first);
            let hi = (hi - 1).min(last);
            let a = if lo == first { atom.start.clone() } else { cut(lo) };
            let b = if hi == last { atom.end.clone() } else { cut(hi + 1) };
            out.push((a, b));
        }
        c = c1;
    }
    Ok(IntervalSet::from_ordered_disjoint(out))
}
