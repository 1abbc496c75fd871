//! Piecewise representation of `n ↦ ln‖Tⁿx‖` over a horizon.

use crate::scalar::Real;
use crate::seqspace::{LogReal, NormMode};

/// One stretch `[start, end)` of an orbit trace.
#[derive(Clone, Debug, PartialEq)]
pub enum Piece<R: Real = f64> {
    /// The orbit is exactly zero.
    Zero { start: u64, end: u64 },
    /// `ln‖Tⁿx‖ = mode.combine(a_j + b_j (n - start))`: a log-sum-exp (or max)
    /// of affine functions, hence convex in `n`.
    Convex {
        start: u64,
        end: u64,
        mode: NormMode<R>,
        terms: Vec<(R, R)>,
    },
    /// Values listed one by one.
    Explicit { start: u64, ln: Vec<R> },
}

impl<R: Real> Piece<R> {
    pub fn start(&self) -> u64 {
        match self {
            Piece::Zero { start, .. } | Piece::Convex { start, .. } | Piece::Explicit { start, .. } => *start,
        }
    }

    /// Exclusive end.
    pub fn end(&self) -> u64 {
        match self {
            Piece::Zero { end, .. } | Piece::Convex { end, .. } => *end,
            Piece::Explicit { start, ln } => start + ln.len() as u64,
        }
    }

    pub fn ln_at(&self, n: u64) -> R {
        debug_assert!(n >= self.start() && n < self.end());
        match self {
            Piece::Zero { .. } => R::neg_infinity(),
            Piece::Convex {
                start, mode, terms, ..
            } => {
                let dn = R::from_u64(n - start).unwrap();
                mode.combine(terms.iter().map(move |&(a, b)| if b == R::zero() { a } else { a + b * dn }))
            }
            Piece::Explicit { start, ln } => ln[(n - start) as usize],
        }
    }
}

/// Threshold predicate on `ln‖Tⁿx‖`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Cmp<R: Real = f64> {
    /// `f < t` (strict) or `f ≤ t`.
    Below { t: R, strict: bool },
    /// `f > t` (strict) or `f ≥ t`.
    Above { t: R, strict: bool },
}

impl<R: Real> Cmp<R> {
    pub fn below(t: R) -> Self {
        Cmp::Below { t, strict: true }
    }

    pub fn above(t: R) -> Self {
        Cmp::Above { t, strict: true }
    }

    pub fn at_least(t: R) -> Self {
        Cmp::Above { t, strict: false }
    }

    pub fn holds(&self, f: R) -> bool {
        match *self {
            Cmp::Below { t, strict: true } => f < t,
            Cmp::Below { t, strict: false } => f <= t,
            Cmp::Above { t, strict: true } => f > t,
            Cmp::Above { t, strict: false } => f >= t,
        }
    }

    pub fn negate(&self) -> Self {
        match *self {
            Cmp::Below { t, strict } => Cmp::Above { t, strict: !strict },
            Cmp::Above { t, strict } => Cmp::Below { t, strict: !strict },
        }
    }
}

/// `ln‖Tⁿx‖` for `n = 0..=horizon`, stored as contiguous pieces.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace<R: Real = f64> {
    horizon: u64,
    pieces: Vec<Piece<R>>,
}

/// Smallest `n` in `[lo, hi]` with `pred(n)`, given `pred` is monotone
/// false → true; `None` if `pred(hi)` is false.
fn first_true(lo: u64, hi: u64, pred: impl Fn(u64) -> bool) -> Option<u64> {
    if !pred(hi) {
        return None;
    }
    let (mut lo, mut hi) = (lo, hi);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Some(lo)
}

fn push_merged(out: &mut Vec<(u64, u64)>, run: (u64, u64)) {
    if let Some(last) = out.last_mut() {
        if last.1 + 1 >= run.0 {
            last.1 = last.1.max(run.1);
            return;
        }
    }
    out.push(run);
}

impl<R: Real> Trace<R> {
    /// Pieces must tile `[0, horizon]` in order.
    pub fn new(horizon: u64, pieces: Vec<Piece<R>>) -> Self {
        let mut at = 0;
        for p in &pieces {
            assert_eq!(p.start(), at, "trace pieces must be contiguous");
            assert!(p.end() > p.start(), "empty trace piece");
            at = p.end();
        }
        assert_eq!(at, horizon + 1, "trace pieces must cover the horizon");
        Trace { horizon, pieces }
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn pieces(&self) -> &[Piece<R>] {
        &self.pieces
    }

    fn piece_index(&self, n: u64) -> usize {
        self.pieces.partition_point(|p| p.end() <= n)
    }

    pub fn ln_at(&self, n: u64) -> R {
        assert!(n <= self.horizon, "index {n} beyond horizon {}", self.horizon);
        self.pieces[self.piece_index(n)].ln_at(n)
    }

    /// `‖Tⁿx‖`.
    pub fn lognorm(&self, n: u64) -> LogReal<R> {
        LogReal::from_ln(self.ln_at(n))
    }

    /// All values; intended for small horizons.
    pub fn to_vec(&self) -> Vec<LogReal<R>> {
        (0..=self.horizon).map(|n| self.lognorm(n)).collect()
    }

    /// Maximal runs `[a, b]` (inclusive) within `[lo, hi]` where `cmp` holds.
    pub fn intervals(&self, cmp: Cmp<R>, lo: u64, hi: u64) -> Vec<(u64, u64)> {
        let mut out = Vec::new();
        if lo > hi || lo > self.horizon {
            return out;
        }
        let hi = hi.min(self.horizon);
        for p in &self.pieces[self.piece_index(lo)..] {
            if p.start() > hi {
                break;
            }
            let a = p.start().max(lo);
            let b = (p.end() - 1).min(hi);
            for run in piece_intervals(p, cmp, a, b) {
                push_merged(&mut out, run);
            }
        }
        out
    }

    /// First `n ≥ from` where `cmp` holds.
    pub fn first(&self, cmp: Cmp<R>, from: u64) -> Option<u64> {
        if from > self.horizon {
            return None;
        }
        for p in &self.pieces[self.piece_index(from)..] {
            let a = p.start().max(from);
            if let Some(&(s, _)) = piece_intervals(p, cmp, a, p.end() - 1).first() {
                return Some(s);
            }
        }
        None
    }

    pub fn count(&self, cmp: Cmp<R>, lo: u64, hi: u64) -> u64 {
        self.intervals(cmp, lo, hi).iter().map(|(a, b)| b - a + 1).sum()
    }

    /// `(argmax, max)` of `ln‖Tⁿx‖` over `[lo, hi]`, first maximiser.
    pub fn max_ln(&self, lo: u64, hi: u64) -> (u64, R) {
        let hi = hi.min(self.horizon);
        let mut best = (lo, R::neg_infinity());
        for p in &self.pieces[self.piece_index(lo)..] {
            if p.start() > hi {
                break;
            }
            let a = p.start().max(lo);
            let b = (p.end() - 1).min(hi);
            let cands: Vec<u64> = match p {
                Piece::Zero { .. } => vec![],
                Piece::Convex { .. } => vec![a, b],
                Piece::Explicit { .. } => (a..=b).collect(),
            };
            for n in cands {
                let f = p.ln_at(n);
                if f > best.1 {
                    best = (n, f);
                }
            }
        }
        best
    }
}

/// Runs of `[a, b]` (within one piece) where `cmp` holds; at most two.
fn piece_intervals<R: Real>(p: &Piece<R>, cmp: Cmp<R>, a: u64, b: u64) -> Vec<(u64, u64)> {
    if a > b {
        return vec![];
    }
    match p {
        Piece::Zero { .. } => {
            if cmp.holds(R::neg_infinity()) {
                vec![(a, b)]
            } else {
                vec![]
            }
        }
        Piece::Explicit { .. } => {
            let mut out = Vec::new();
            let mut open: Option<u64> = None;
            for n in a..=b {
                match (cmp.holds(p.ln_at(n)), open) {
                    (true, None) => open = Some(n),
                    (false, Some(s)) => {
                        out.push((s, n - 1));
                        open = None;
                    }
                    _ => {}
                }
            }
            if let Some(s) = open {
                out.push((s, b));
            }
            out
        }
        Piece::Convex { .. } => {
            let f = |n: u64| p.ln_at(n);
            match cmp {
                Cmp::Below { .. } => convex_sublevel(&f, cmp, a, b).into_iter().collect(),
                Cmp::Above { .. } => match convex_sublevel(&f, cmp.negate(), a, b) {
                    None => vec![(a, b)],
                    Some((l, r)) => {
                        let mut out = Vec::new();
                        if l > a {
                            out.push((a, l - 1));
                        }
                        if r < b {
                            out.push((r + 1, b));
                        }
                        out
                    }
                },
            }
        }
    }
}

/// The sublevel interval of a convex sequence on `[a, b]`.
fn convex_sublevel<R: Real>(f: &impl Fn(u64) -> R, below: Cmp<R>, a: u64, b: u64) -> Option<(u64, u64)> {
    let m = if a == b {
        a
    } else {
        first_true(a, b - 1, |n| f(n + 1) >= f(n)).unwrap_or(b)
    };
    if !below.holds(f(m)) {
        return None;
    }
    let left = first_true(a, m, |n| below.holds(f(n))).expect("minimiser qualifies");
    // largest n in [m, b] with holds: predicate "fails" is monotone on [m, b]
    let right = match first_true(m, b, |n| !below.holds(f(n))) {
        Some(n) => n - 1,
        None => b,
    };
    Some((left, right))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(tr: &Trace<f64>, cmp: Cmp<f64>) -> Vec<(u64, u64)> {
        let mut out = Vec::new();
        for n in 0..=tr.horizon() {
            if cmp.holds(tr.ln_at(n)) {
                push_merged(&mut out, (n, n));
            }
        }
        out
    }

    fn sample() -> Trace<f64> {
        let ln2 = 2f64.ln();
        Trace::new(
            60,
            vec![
                Piece::Convex {
                    start: 0,
                    end: 20,
                    mode: NormMode::Lp(2.0),
                    terms: vec![(0.0, -ln2), (-8.0, 0.5 * ln2)],
                },
                Piece::Explicit {
                    start: 20,
                    ln: vec![1.0, -3.0, 2.0, 0.5, -1.0],
                },
                Piece::Convex {
                    start: 25,
                    end: 40,
                    mode: NormMode::Sup,
                    terms: vec![(3.0, -0.4), (-4.0, 0.6)],
                },
                Piece::Zero { start: 40, end: 61 },
            ],
        )
    }

    #[test]
    fn intervals_match_brute_force() {
        let tr = sample();
        for t in [-5.0, -2.0, -0.7, 0.0, 0.3, 1.0, 2.5, 4.0] {
            for cmp in [
                Cmp::below(t),
                Cmp::above(t),
                Cmp::Below { t, strict: false },
                Cmp::at_least(t),
            ] {
                assert_eq!(tr.intervals(cmp, 0, 60), brute(&tr, cmp), "{cmp:?}");
                let want_first = brute(&tr, cmp).iter().flat_map(|&(a, b)| a..=b).find(|&n| n >= 7);
                assert_eq!(tr.first(cmp, 7), want_first, "{cmp:?}");
            }
        }
    }

    #[test]
    fn max_over_range() {
        let tr = sample();
        let (n, m) = tr.max_ln(0, 60);
        let want = (0..=60).map(|n| tr.ln_at(n)).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(m, want);
        assert_eq!(tr.ln_at(n), want);
    }
}
