//! `M_v = sup{v_n/v_m : m > n}` and `M_w = sup{Π_{k=n}^m |w_k| : m > n}`.

use serde::{Deserialize, Serialize};

use crate::seqspace::{BlockGen, LogReal, Tail, WeightSequence};

/// Number of growth witnesses produced for an infinite supremum.
pub const GROWTH_WITNESSES: u32 = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Supremum {
    Finite { value: LogReal },
    Infinite,
    Unknown { reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupremumVerdict {
    pub value: Supremum,
    /// Infinite: `(n_k, m_k)` with ratio/product `> 3^k` at the k-th entry.
    /// Finite: a pair attaining the supremum when one exists.
    pub witness: Vec<(u64, u64)>,
    pub search_bound: u64,
}

impl SupremumVerdict {
    pub fn is_infinite(&self) -> bool {
        matches!(self.value, Supremum::Infinite)
    }

    pub fn finite_value(&self) -> Option<LogReal> {
        match self.value {
            Supremum::Finite { value } => Some(value),
            _ => None,
        }
    }
}

fn ln3k(k: u32) -> f64 {
    k as f64 * 3f64.ln()
}

/// First `m ≥ from` with `ln v_m < thr`, assuming the tail of `v` is
/// non-increasing; `None` past `bound`.
fn first_below(v: &WeightSequence, from: u64, thr: f64, bound: u64) -> Option<u64> {
    let p = v.prefix_len();
    let mut i = from;
    while i < p {
        let seg = v.segment_at(i);
        if seg.ln_lo < thr {
            return (i <= bound).then_some(i);
        }
        i = seg.hi + 1;
    }
    if v.ln_at(i) < thr {
        return (i <= bound).then_some(i);
    }
    let mut step = 1u64;
    let mut hi;
    loop {
        hi = i.checked_add(step)?;
        if hi > bound {
            hi = bound;
            if v.ln_at(hi) >= thr {
                return None;
            }
            break;
        }
        if v.ln_at(hi) < thr {
            break;
        }
        step *= 2;
    }
    let mut lo = i;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if v.ln_at(mid) < thr {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

pub fn compute_mv(v: &WeightSequence, search_bound: u64) -> SupremumVerdict {
    let p = v.prefix_len();
    // running maximum over the prefix, run by run
    let mut best = f64::NEG_INFINITY;
    let mut best_pair = None;
    let mut run_max: Option<(f64, u64)> = None;
    for (k, run) in v.prefix().iter().enumerate() {
        let start = v.prefix()[..k].iter().map(|r| r.len).sum::<u64>();
        let u = run.value.ln();
        if run.len >= 2 && 0.0 > best {
            best = 0.0;
            best_pair = Some((start, start + 1));
        }
        if let Some((m, at)) = run_max {
            if m - u > best {
                best = m - u;
                best_pair = Some((at, start));
            }
        }
        if run_max.is_none_or(|(m, _)| u > m) {
            run_max = Some((u, start));
        }
    }
    let first_tail = v.ln_at(p);
    // best n for pairs reaching into the tail
    let anchor = match run_max {
        Some((m, at)) if m >= first_tail => (m, at),
        _ => (first_tail, p),
    };
    let decreasing_unbounded = match v.tail() {
        Tail::Geometric { ratio, .. } => ratio.ln() < 0.0,
        Tail::PowerLaw { exponent, .. } => *exponent < 0.0,
        _ => false,
    };
    if decreasing_unbounded {
        let (top, n) = anchor;
        let witness = (1..=GROWTH_WITNESSES)
            .map_while(|k| first_below(v, n + 1, top - ln3k(k), search_bound).map(|m| (n, m)))
            .collect();
        return SupremumVerdict {
            value: Supremum::Infinite,
            witness,
            search_bound,
        };
    }
    let mut consider = |val: f64, pair: (u64, u64)| {
        if val > best {
            best = val;
            best_pair = Some(pair);
        }
    };
    if let Some((m, at)) = run_max {
        consider(m - first_tail, (at, p));
    }
    match v.tail() {
        Tail::Constant { .. } => consider(0.0, (p, p + 1)),
        Tail::Geometric { ratio, .. } if ratio.ln() == 0.0 => consider(0.0, (p, p + 1)),
        Tail::PowerLaw { exponent, .. } if *exponent == 0.0 => consider(0.0, (p, p + 1)),
        Tail::Blocks { blocks } => {
            // every recurring value appears after every other one
            let live: Vec<&BlockGen> = blocks.iter().filter(|b| b.base > 0 || b.growth > 0).collect();
            let hi = live.iter().map(|b| b.value.ln()).fold(f64::NEG_INFINITY, f64::max);
            let lo = live.iter().map(|b| b.value.ln()).fold(f64::INFINITY, f64::min);
            let top = run_max.map_or(hi, |(m, _)| m.max(hi));
            let at_lo = locate_value(v, p, lo, search_bound);
            let at_top = match run_max {
                Some((m, at)) if m >= hi => Some(at),
                _ => locate_value(v, p, hi, search_bound),
            };
            let pair = match (at_top, at_lo) {
                (Some(a), Some(b)) if b > a => Some((a, b)),
                (Some(a), _) => locate_value(v, a + 1, lo, search_bound).map(|b| (a, b)),
                _ => None,
            };
            if top - lo > best {
                best = top - lo;
                best_pair = pair;
            }
        }
        _ => {}
    }
    SupremumVerdict {
        value: Supremum::Finite {
            value: LogReal::from_ln(best),
        },
        witness: best_pair.into_iter().collect(),
        search_bound,
    }
}

/// First index `≥ from` where `ln s_i == target`, scanning segments.
fn locate_value(s: &WeightSequence, from: u64, target: f64, bound: u64) -> Option<u64> {
    let mut i = from;
    while i <= bound {
        let seg = s.segment_at(i);
        if seg.is_flat() && seg.ln_lo == target {
            return Some(i);
        }
        if seg.hi == u64::MAX {
            return None;
        }
        i = seg.hi + 1;
    }
    None
}

/// Kadane state: best sum of a window ending at the current element and its start.
#[derive(Clone, Copy)]
struct Scan {
    e1: f64,
    start: u64,
    best: f64,
    pair: Option<(u64, u64)>,
    next: u64,
}

impl Scan {
    fn new() -> Self {
        Scan {
            e1: f64::NEG_INFINITY,
            start: 0,
            best: f64::NEG_INFINITY,
            pair: None,
            next: 0,
        }
    }

    /// Feeds `len ≥ 1` copies of `u` in closed form; windows must have at
    /// least two factors.
    fn run(&mut self, u: f64, len: u64) {
        let s = self.next;
        let e0 = self.e1;
        let lf = len as f64;
        // best window of length ≥ 2 ending inside this run
        if u >= 0.0 {
            if len >= 2 {
                let (v, from) = if e0 > 0.0 { (e0 + lf * u, self.start) } else { (lf * u, s) };
                self.offer(v, from, s + len - 1);
            } else if e0 > f64::NEG_INFINITY {
                self.offer(e0 + u, self.start, s);
            }
        } else {
            if e0 > f64::NEG_INFINITY {
                self.offer(e0 + u, self.start, s);
            }
            if len >= 2 {
                let (v, from) = if e0 > 0.0 { (2.0 * u + e0, self.start) } else { (2.0 * u, s) };
                self.offer(v, from, s + 1);
            }
        }
        // E1 after the run: max(max(e0,0) + len·u, u)
        let carried = e0.max(0.0) + lf * u;
        if carried >= u || len == 1 {
            if e0 <= 0.0 {
                self.start = s;
            }
            self.e1 = carried;
        } else {
            self.start = s + len - 1;
            self.e1 = u;
        }
        self.next = s + len;
    }

    fn offer(&mut self, v: f64, a: u64, b: u64) {
        if v > self.best {
            self.best = v;
            self.pair = Some((a, b));
        }
    }
}

pub fn compute_mw(w: &WeightSequence, search_bound: u64) -> SupremumVerdict {
    let mut scan = Scan::new();
    for r in w.prefix() {
        scan.run(r.value.ln(), r.len);
    }
    let p = w.prefix_len();
    let infinite = |witness: Vec<(u64, u64)>| SupremumVerdict {
        value: Supremum::Infinite,
        witness,
        search_bound,
    };
    let finite = |scan: Scan| SupremumVerdict {
        value: Supremum::Finite {
            value: LogReal::from_ln(scan.best),
        },
        witness: scan.pair.into_iter().collect(),
        search_bound,
    };
    let unknown = |reason: String| SupremumVerdict {
        value: Supremum::Unknown { reason },
        witness: vec![],
        search_bound,
    };
    match w.tail() {
        Tail::Constant { c } => {
            let u = c.ln();
            if u > 0.0 {
                return infinite(growth_from(w, p, search_bound));
            }
            scan.run(u, 2);
            finite(scan)
        }
        Tail::Geometric { ratio, .. } if ratio.ln() > 0.0 => infinite(growth_from(w, first_nonneg(w, p), search_bound)),
        Tail::PowerLaw { exponent, .. } if *exponent > 0.0 => {
            infinite(growth_from(w, first_nonneg(w, p), search_bound))
        }
        Tail::Geometric { .. } | Tail::PowerLaw { .. } => {
            // terms eventually negative and non-increasing: once max(E1, 0) + u_i
            // falls below the best, no later window can win
            let mut i = p;
            loop {
                let u = w.ln_at(i);
                if u <= 0.0 && scan.e1.max(0.0) + u < scan.best {
                    return finite(scan);
                }
                if u == 0.0 && w.segment_at(i).hi == u64::MAX {
                    scan.run(0.0, 2);
                    return finite(scan);
                }
                if i >= search_bound {
                    return unknown(format!("tail scan reached the search bound {search_bound}"));
                }
                scan.run(u, 1);
                i += 1;
            }
        }
        Tail::Blocks { blocks } => {
            let live: Vec<&BlockGen> = blocks.iter().filter(|b| b.base > 0 || b.growth > 0).collect();
            if live.iter().any(|b| b.growth > 0 && b.value.ln() > 0.0) {
                return infinite(growth_from(w, p, search_bound));
            }
            let periodic = live.iter().all(|b| b.growth == 0);
            let cycle_sum: f64 = live.iter().map(|b| b.base as f64 * b.value.ln()).sum();
            if periodic && cycle_sum > 0.0 {
                return infinite(growth_from(w, p, search_bound));
            }
            // growing non-positive blocks: cycles eventually have arbitrarily
            // negative sums; periodic non-positive cycles: a best window spans
            // fewer than two cycles
            let pos: f64 = live.iter().map(|b| b.base as f64 * b.value.ln().max(0.0)).sum();
            let mut c = 0u64;
            let mut extra = 0;
            if !periodic && !live.iter().any(|b| b.growth > 0 && b.value.ln() < 0.0) {
                return unknown("growing blocks with neutral weight".into());
            }
            loop {
                // a negative growing block whose mass exceeds a cycle's positive
                // mass separates windows: crossing it never pays
                let settled = if periodic {
                    c >= 1
                } else {
                    live.iter()
                        .any(|b| b.growth > 0 && (b.base + b.growth * c) as f64 * -b.value.ln() > pos)
                };
                if settled {
                    extra += 1;
                    if extra > 2 {
                        return finite(scan);
                    }
                }
                for b in blocks {
                    let len = b.base + b.growth * c;
                    if len > 0 {
                        scan.run(b.value.ln(), len);
                    }
                }
                if scan.next > search_bound {
                    return unknown(format!("block scan passed the search bound {search_bound}"));
                }
                c += 1;
            }
        }
    }
}

fn first_nonneg(w: &WeightSequence, from: u64) -> u64 {
    let mut i = from;
    let mut step = 1;
    while w.ln_at(i) < 0.0 {
        i += step;
        step *= 2;
    }
    i
}

/// Windows `[n, m_k]` with `Σ ln w > k ln 3`: greedy extension from `n`,
/// restarting past any prefix with negative sum.
fn growth_from(w: &WeightSequence, from: u64, bound: u64) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    let mut n = from;
    let mut i = from;
    let mut acc = 0.0;
    let mut k = 1;
    while k <= GROWTH_WITNESSES && i <= bound {
        let seg = w.segment_at(i);
        let u = seg.ln_at(i);
        let hi = seg.hi.min(bound);
        if seg.is_flat() && u != 0.0 && hi > i {
            // jump across a flat segment in closed form
            let need = ln3k(k) - acc;
            if u > 0.0 && (hi - i + 1) as f64 * u > need {
                let steps = ((need / u).floor() as u64 + 1).max(1);
                let m = (i + steps - 1).max(n + 1);
                acc += (m - i + 1) as f64 * u;
                out.push((n, m));
                k += 1;
                i = m + 1;
                continue;
            }
            acc += (hi - i + 1) as f64 * u;
            i = hi + 1;
        } else {
            acc += u;
            if acc > ln3k(k) && i > n {
                out.push((n, i));
                k += 1;
            }
            i += 1;
        }
        if acc < 0.0 {
            acc = 0.0;
            n = i;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqspace::Run;

    fn brute_mw(w: &WeightSequence, upto: u64) -> f64 {
        let mut best = f64::NEG_INFINITY;
        for n in 0..upto {
            let mut s = w.ln_at(n);
            for m in n + 1..upto {
                s += w.ln_at(m);
                best = best.max(s);
            }
        }
        best
    }

    #[test]
    fn mw_kadane_matches_brute_force() {
        let w = WeightSequence::from_runs(
            vec![
                Run { value: LogReal::from_value(0.5), len: 3 },
                Run { value: LogReal::from_value(3.0), len: 1 },
                Run { value: LogReal::from_value(0.9), len: 2 },
                Run { value: LogReal::from_value(1.7), len: 4 },
                Run { value: LogReal::from_value(0.2), len: 1 },
                Run { value: LogReal::from_value(2.5), len: 1 },
            ],
            Tail::Constant { c: LogReal::from_value(0.8) },
        )
        .unwrap();
        let got = compute_mw(&w, 1000);
        let want = brute_mw(&w, 60);
        let v = got.finite_value().unwrap().ln();
        assert!((v - want).abs() < 1e-12, "{v} vs {want}");
        let (a, b) = got.witness[0];
        assert!((w.ln_sum(a, b).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn growth_witnesses_exceed_powers_of_three() {
        let w = WeightSequence::constant(2.0);
        let r = compute_mw(&w, 10_000);
        assert!(r.is_infinite());
        for (k, &(n, m)) in r.witness.iter().enumerate() {
            assert!(m > n);
            assert!(w.ln_sum(n, m).unwrap() > ln3k(k as u32 + 1));
        }
        assert_eq!(r.witness.len(), GROWTH_WITNESSES as usize);
    }
}
