//! Rule-based infinite positive sequences.

use serde::{Deserialize, Serialize};

use super::logreal::LogReal;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::special::ln_gamma;

/// Above this many terms, power-law log-sums switch from direct summation
/// to log-gamma differences.
const DIRECT_SUM_LIMIT: u64 = 4096;

/// A run of `len` equal terms.
#[derive(Clone, Debug, PartialEq)]
pub struct Run<R: Real = f64> {
    pub value: LogReal<R>,
    pub len: u64,
}

/// One block of a cyclic block rule: in cycle `c` the block has length
/// `base + growth·c`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "R: Real", deny_unknown_fields)]
pub struct BlockGen<R: Real = f64> {
    pub value: LogReal<R>,
    pub base: u64,
    #[serde(default)]
    pub growth: u64,
}

/// Rule generating the terms after the explicit prefix. `t` below is the
/// tail-relative index `i - prefix_len`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case", bound = "R: Real")]
pub enum Tail<R: Real = f64> {
    /// `c`
    Constant { c: LogReal<R> },
    /// `scale · ratio^t`
    Geometric { scale: LogReal<R>, ratio: LogReal<R> },
    /// `scale · (i + shift)^exponent` (absolute index `i`).
    PowerLaw {
        scale: LogReal<R>,
        exponent: R,
        #[serde(default)]
        shift: i64,
    },
    /// Blocks repeating cyclically with (possibly) growing lengths.
    Blocks { blocks: Vec<BlockGen<R>> },
}

/// Maximal index interval `[lo, hi]` on which `ln s_i = ln_lo + slope·(i - lo)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment<R: Real = f64> {
    pub lo: u64,
    /// Inclusive; `u64::MAX` stands for "unbounded".
    pub hi: u64,
    pub ln_lo: R,
    pub slope: R,
}

impl<R: Real> Segment<R> {
    pub fn ln_at(&self, i: u64) -> R {
        debug_assert!(i >= self.lo && i <= self.hi);
        if self.slope == R::zero() {
            self.ln_lo
        } else {
            self.ln_lo + self.slope * R::from_u64(i - self.lo).unwrap()
        }
    }

    pub fn is_flat(&self) -> bool {
        self.slope == R::zero()
    }
}

const LONG_RANGE_RUNS: usize = 64;

/// Strictly positive sequence `s_0, s_1, …` given by an explicit run-length
/// prefix followed by a tail rule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "R: Real", try_from = "WeightRepr<R>", into = "WeightRepr<R>")]
pub struct WeightSequence<R: Real = f64> {
    prefix: Vec<Run<R>>,
    tail: Tail<R>,
    starts: Vec<u64>,
    // cum[k] = Σ ln over runs before k, for long-range sums
    cum: Vec<R>,
    prefix_len: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged, bound = "R: Real")]
enum RunRepr<R: Real> {
    Single(LogReal<R>),
    Run { value: LogReal<R>, len: u64 },
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "R: Real", deny_unknown_fields)]
struct WeightRepr<R: Real> {
    #[serde(default)]
    prefix: Vec<RunRepr<R>>,
    tail: Tail<R>,
}

impl<R: Real> TryFrom<WeightRepr<R>> for WeightSequence<R> {
    type Error = Error;

    fn try_from(repr: WeightRepr<R>) -> Result<Self> {
        let runs = repr
            .prefix
            .into_iter()
            .map(|r| match r {
                RunRepr::Single(value) => Run { value, len: 1 },
                RunRepr::Run { value, len } => Run { value, len },
            })
            .collect();
        WeightSequence::from_runs(runs, repr.tail)
    }
}

impl<R: Real> From<WeightSequence<R>> for WeightRepr<R> {
    fn from(w: WeightSequence<R>) -> Self {
        WeightRepr {
            prefix: w
                .prefix
                .into_iter()
                .map(|r| {
                    if r.len == 1 {
                        RunRepr::Single(r.value)
                    } else {
                        RunRepr::Run {
                            value: r.value,
                            len: r.len,
                        }
                    }
                })
                .collect(),
            tail: w.tail,
        }
    }
}

fn check_positive<R: Real>(what: &str, x: &LogReal<R>) -> Result<()> {
    if !x.is_positive() || !x.ln().is_finite() {
        return Err(Error::invalid(format!("{what} must be a finite positive number, got {x}")));
    }
    Ok(())
}

fn r<R: Real>(n: u128) -> R {
    R::from_u128(n).expect("count representable")
}

impl<R: Real> WeightSequence<R> {
    pub fn from_runs(runs: Vec<Run<R>>, tail: Tail<R>) -> Result<Self> {
        let mut prefix: Vec<Run<R>> = Vec::with_capacity(runs.len());
        for run in runs {
            check_positive("prefix term", &run.value)?;
            if run.len == 0 {
                continue;
            }
            match prefix.last_mut() {
                Some(last) if last.value == run.value => {
                    last.len = last.len.checked_add(run.len).ok_or_else(|| Error::invalid("prefix too long"))?
                }
                _ => prefix.push(run),
            }
        }
        let mut starts = Vec::with_capacity(prefix.len());
        let mut cum = Vec::with_capacity(prefix.len() + 1);
        let mut acc = R::zero();
        let mut at: u64 = 0;
        for run in &prefix {
            starts.push(at);
            cum.push(acc);
            acc = acc + run.value.ln() * r::<R>(run.len as u128);
            at = at.checked_add(run.len).ok_or_else(|| Error::invalid("prefix too long"))?;
        }
        match &tail {
            Tail::Constant { c } => check_positive("constant tail", c)?,
            Tail::Geometric { scale, ratio } => {
                check_positive("geometric scale", scale)?;
                check_positive("geometric ratio", ratio)?;
            }
            Tail::PowerLaw {
                scale,
                exponent,
                shift,
            } => {
                check_positive("power-law scale", scale)?;
                if !exponent.is_finite() {
                    return Err(Error::invalid("power-law exponent must be finite"));
                }
                if (at as i128) + (*shift as i128) < 1 {
                    return Err(Error::invalid(format!(
                        "power-law base i + shift must be >= 1 from index {at} (shift {shift})"
                    )));
                }
            }
            Tail::Blocks { blocks } => {
                if blocks.is_empty() {
                    return Err(Error::invalid("block rule needs at least one block"));
                }
                for b in blocks {
                    check_positive("block value", &b.value)?;
                    if b.base == 0 {
                        return Err(Error::invalid("block base length must be >= 1"));
                    }
                }
            }
        }
        Ok(WeightSequence {
            prefix,
            tail,
            starts,
            cum: {
                cum.push(acc);
                cum
            },
            prefix_len: at,
        })
    }

    pub fn new(prefix: Vec<LogReal<R>>, tail: Tail<R>) -> Result<Self> {
        Self::from_runs(prefix.into_iter().map(|value| Run { value, len: 1 }).collect(), tail)
    }

    pub fn constant(c: R) -> Self {
        Self::from_runs(vec![], Tail::Constant { c: LogReal::from_value(c) }).expect("positive constant")
    }

    /// `s_i = scale · ratio^i`.
    pub fn geometric(scale: R, ratio: R) -> Self {
        Self::from_runs(
            vec![],
            Tail::Geometric {
                scale: LogReal::from_value(scale),
                ratio: LogReal::from_value(ratio),
            },
        )
        .expect("positive geometric parameters")
    }

    /// `s_i = scale · (i + shift)^exponent`.
    pub fn power_law(scale: R, exponent: R, shift: i64) -> Result<Self> {
        Self::from_runs(
            vec![],
            Tail::PowerLaw {
                scale: LogReal::from_value(scale),
                exponent,
                shift,
            },
        )
    }

    pub fn prefix(&self) -> &[Run<R>] {
        &self.prefix
    }

    pub fn tail(&self) -> &Tail<R> {
        &self.tail
    }

    pub fn prefix_len(&self) -> u64 {
        self.prefix_len
    }

    pub fn cast<S: Real>(&self) -> WeightSequence<S> {
        let c = |x: &LogReal<R>| x.cast::<S>();
        let tail = match &self.tail {
            Tail::Constant { c: v } => Tail::Constant { c: c(v) },
            Tail::Geometric { scale, ratio } => Tail::Geometric {
                scale: c(scale),
                ratio: c(ratio),
            },
            Tail::PowerLaw {
                scale,
                exponent,
                shift,
            } => Tail::PowerLaw {
                scale: c(scale),
                exponent: S::from_f64(exponent.to_f64().unwrap()).unwrap(),
                shift: *shift,
            },
            Tail::Blocks { blocks } => Tail::Blocks {
                blocks: blocks
                    .iter()
                    .map(|b| BlockGen {
                        value: c(&b.value),
                        base: b.base,
                        growth: b.growth,
                    })
                    .collect(),
            },
        };
        WeightSequence::from_runs(
            self.prefix
                .iter()
                .map(|r| Run {
                    value: c(&r.value),
                    len: r.len,
                })
                .collect(),
            tail,
        )
        .expect("cast preserves validity")
    }

    fn run_index(&self, i: u64) -> usize {
        debug_assert!(i < self.prefix_len);
        self.starts.partition_point(|&s| s <= i) - 1
    }

    pub fn ln_at(&self, i: u64) -> R {
        if i < self.prefix_len {
            return self.prefix[self.run_index(i)].value.ln();
        }
        let t = i - self.prefix_len;
        match &self.tail {
            Tail::Constant { c } => c.ln(),
            Tail::Geometric { scale, ratio } => scale.ln() + ratio.ln() * r::<R>(t as u128),
            Tail::PowerLaw {
                scale,
                exponent,
                shift: _,
            } => scale.ln() + *exponent * self.power_base(i).ln(),
            Tail::Blocks { blocks } => {
                let (_, g, _, _) = locate_block(blocks, t);
                blocks[g].value.ln()
            }
        }
    }

    pub fn at(&self, i: u64) -> LogReal<R> {
        LogReal::from_ln(self.ln_at(i))
    }

    fn power_base(&self, i: u64) -> R {
        match &self.tail {
            Tail::PowerLaw { shift, .. } => r::<R>((i as i128 + *shift as i128) as u128),
            _ => unreachable!(),
        }
    }

    /// `Σ_{k=a}^{b} ln s_k`.
    pub fn ln_sum(&self, a: u64, b: u64) -> Result<R> {
        if a > b {
            return Err(Error::ReversedRange { lo: a, hi: b });
        }
        let mut total = R::zero();
        let mut lo = a;
        if lo < self.prefix_len {
            let hi = b.min(self.prefix_len - 1);
            total = self.prefix_ln_sum(lo, hi);
            lo = hi + 1;
            if lo > b {
                return Ok(total);
            }
        }
        Ok(total + self.tail_ln_sum(lo - self.prefix_len, b - self.prefix_len))
    }

    /// `ln Π_{k=a}^{b} s_k`; the empty product (a = b + 1) is allowed and gives 1.
    pub fn weight_product(&self, a: u64, b: u64) -> Result<LogReal<R>> {
        Ok(LogReal::from_ln(self.ln_sum(a, b)?))
    }

    fn prefix_ln_sum(&self, lo: u64, hi: u64) -> R {
        let k = self.run_index(lo);
        let kb = self.run_index(hi);
        let ln = |k: usize| self.prefix[k].value.ln();
        if k == kb {
            return ln(k) * r::<R>((hi - lo + 1) as u128);
        }
        let head = ln(k) * r::<R>((self.starts[k + 1] - lo) as u128);
        let tail = ln(kb) * r::<R>((hi - self.starts[kb] + 1) as u128);
        let mid = if kb > k + LONG_RANGE_RUNS {
            self.cum[kb] - self.cum[k + 1]
        } else {
            (k + 1..kb).fold(R::zero(), |acc, i| acc + ln(i) * r::<R>(self.prefix[i].len as u128))
        };
        head + mid + tail
    }

    pub(crate) fn ln_sum_or_empty(&self, a: u64, b_plus_one: u64) -> R {
        if b_plus_one <= a {
            R::zero()
        } else {
            self.ln_sum(a, b_plus_one - 1).expect("ordered range")
        }
    }

    fn tail_ln_sum(&self, ta: u64, tb: u64) -> R {
        let n = (tb - ta) as u128 + 1;
        match &self.tail {
            Tail::Constant { c } => c.ln() * r::<R>(n),
            Tail::Geometric { scale, ratio } => {
                // Σ t over [ta, tb] = n (ta + tb) / 2, exact in u128.
                let tsum = n * (ta as u128 + tb as u128) / 2;
                scale.ln() * r::<R>(n) + ratio.ln() * r::<R>(tsum)
            }
            Tail::PowerLaw { scale, exponent, .. } => {
                let a = self.prefix_len + ta;
                let b = self.prefix_len + tb;
                let logs = if n as u64 <= DIRECT_SUM_LIMIT {
                    let mut acc = R::zero();
                    let mut i = a;
                    loop {
                        acc = acc + self.power_base(i).ln();
                        if i == b {
                            break;
                        }
                        i += 1;
                    }
                    acc
                } else {
                    ln_gamma(self.power_base(b) + R::one()) - ln_gamma(self.power_base(a))
                };
                scale.ln() * r::<R>(n) + *exponent * logs
            }
            Tail::Blocks { blocks } => blocks_ln_sum(blocks, ta, tb),
        }
    }

    /// The affine segment containing index `i`.
    pub fn segment_at(&self, i: u64) -> Segment<R> {
        if i < self.prefix_len {
            let k = self.run_index(i);
            return Segment {
                lo: self.starts[k],
                hi: self.starts[k] + self.prefix[k].len - 1,
                ln_lo: self.prefix[k].value.ln(),
                slope: R::zero(),
            };
        }
        let p = self.prefix_len;
        match &self.tail {
            Tail::Constant { c } => Segment {
                lo: p,
                hi: u64::MAX,
                ln_lo: c.ln(),
                slope: R::zero(),
            },
            Tail::Geometric { scale, ratio } => Segment {
                lo: p,
                hi: u64::MAX,
                ln_lo: scale.ln(),
                slope: ratio.ln(),
            },
            Tail::PowerLaw { .. } => Segment {
                lo: i,
                hi: i,
                ln_lo: self.ln_at(i),
                slope: R::zero(),
            },
            Tail::Blocks { blocks } => {
                let (_, g, block_start, len) = locate_block(blocks, i - p);
                Segment {
                    lo: p + block_start,
                    hi: (p + block_start).saturating_add(len - 1),
                    ln_lo: blocks[g].value.ln(),
                    slope: R::zero(),
                }
            }
        }
    }

    /// Segments covering `[lo, hi]`, clipped to it. Fails if more than
    /// `max_segments` would be produced.
    pub fn segments(&self, lo: u64, hi: u64, max_segments: usize) -> Result<Vec<Segment<R>>> {
        let mut out = Vec::new();
        let mut i = lo;
        while i <= hi {
            if out.len() >= max_segments {
                return Err(Error::Budget {
                    needed: (hi - lo) as u128 + 1,
                    budget: max_segments as u64,
                });
            }
            let mut s = self.segment_at(i);
            if s.lo < i {
                s.ln_lo = s.ln_at(i);
                s.lo = i;
            }
            s.hi = s.hi.min(hi);
            let next = s.hi;
            out.push(s);
            if next == u64::MAX {
                break;
            }
            i = next + 1;
        }
        Ok(out)
    }

    /// `ln sup_i s_i`, or `None` if unbounded.
    pub fn ln_sup(&self) -> Option<R> {
        let pre = self
            .prefix
            .iter()
            .map(|r| r.value.ln())
            .fold(R::neg_infinity(), R::max);
        let tail = match &self.tail {
            Tail::Constant { c } => Some(c.ln()),
            Tail::Geometric { scale, ratio } => (ratio.ln() <= R::zero()).then(|| scale.ln()),
            Tail::PowerLaw { exponent, .. } => {
                (*exponent <= R::zero()).then(|| self.ln_at(self.prefix_len))
            }
            Tail::Blocks { blocks } => Some(blocks.iter().map(|b| b.value.ln()).fold(R::neg_infinity(), R::max)),
        }?;
        Some(pre.max(tail))
    }

    /// `ln inf_i s_i`, or `None` when the infimum is 0.
    pub fn ln_inf(&self) -> Option<R> {
        let pre = self
            .prefix
            .iter()
            .map(|r| r.value.ln())
            .fold(R::infinity(), R::min);
        let tail = match &self.tail {
            Tail::Constant { c } => Some(c.ln()),
            Tail::Geometric { scale, ratio } => (ratio.ln() >= R::zero()).then(|| scale.ln()),
            Tail::PowerLaw { exponent, .. } => {
                (*exponent >= R::zero()).then(|| self.ln_at(self.prefix_len))
            }
            Tail::Blocks { blocks } => Some(blocks.iter().map(|b| b.value.ln()).fold(R::infinity(), R::min)),
        }?;
        Some(pre.min(tail))
    }

    /// `ln sup_i s_i / s_{i+1}`, or `None` if unbounded. This is the
    /// boundedness condition for the unweighted backward shift on a space
    /// weighted by this sequence.
    pub fn ln_sup_ratio(&self) -> Option<R> {
        let mut best = R::neg_infinity();
        for (k, run) in self.prefix.iter().enumerate() {
            if run.len >= 2 {
                best = best.max(R::zero());
            }
            let next = if k + 1 < self.prefix.len() {
                self.prefix[k + 1].value.ln()
            } else {
                self.ln_at(self.prefix_len)
            };
            best = best.max(run.value.ln() - next);
        }
        let tail = match &self.tail {
            Tail::Constant { .. } => R::zero(),
            Tail::Geometric { ratio, .. } => -ratio.ln(),
            Tail::PowerLaw { exponent, .. } => {
                if *exponent < R::zero() {
                    let p = self.prefix_len;
                    self.ln_at(p) - self.ln_at(p + 1)
                } else {
                    R::zero()
                }
            }
            Tail::Blocks { blocks } => {
                let mut m = R::neg_infinity();
                for (g, b) in blocks.iter().enumerate() {
                    if b.base >= 2 || b.growth >= 1 {
                        m = m.max(R::zero());
                    }
                    let next = &blocks[(g + 1) % blocks.len()];
                    m = m.max(b.value.ln() - next.value.ln());
                }
                m
            }
        };
        Some(best.max(tail))
    }

    /// Absolute index where cycle `c` of a block tail starts.
    pub(crate) fn cycle_start(&self, c: u64) -> Option<u64> {
        match &self.tail {
            Tail::Blocks { blocks } => {
                let a: u128 = blocks.iter().map(|b| b.base as u128).sum();
                let g: u128 = blocks.iter().map(|b| b.growth as u128).sum();
                let at = self.prefix_len as u128 + cycles_len(a, g, c as u128);
                u64::try_from(at).ok()
            }
            _ => None,
        }
    }

    /// Cycle index containing absolute index `i` of a block tail.
    pub(crate) fn cycle_of(&self, i: u64) -> Option<u64> {
        match &self.tail {
            Tail::Blocks { blocks } if i >= self.prefix_len => Some(locate_block(blocks, i - self.prefix_len).0),
            Tail::Blocks { .. } => Some(0),
            _ => None,
        }
    }

    /// Whether the block tail (if any) repeats with a fixed period.
    pub fn is_periodic_tail(&self) -> bool {
        match &self.tail {
            Tail::Blocks { blocks } => blocks.iter().all(|b| b.growth == 0),
            Tail::Constant { .. } => true,
            _ => false,
        }
    }
}

/// Cumulative length of cycles `0..c`: `A c + B c(c-1)/2`.
fn cycles_len(a: u128, b: u128, c: u128) -> u128 {
    a * c + b * c * c.saturating_sub(1) / 2
}

/// Locates tail-relative index `t` in a block rule. Returns
/// `(cycle, block, block_start, block_len)` with `block_start` tail-relative.
fn locate_block<R: Real>(blocks: &[BlockGen<R>], t: u64) -> (u64, usize, u64, u64) {
    let a: u128 = blocks.iter().map(|b| b.base as u128).sum();
    let bsum: u128 = blocks.iter().map(|b| b.growth as u128).sum();
    let t = t as u128;
    // largest c with cycles_len(c) <= t
    let (mut lo, mut hi) = (0u128, t + 1);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if cycles_len(a, bsum, mid) <= t {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let c = lo;
    let mut start = cycles_len(a, bsum, c);
    for (g, b) in blocks.iter().enumerate() {
        let len = b.base as u128 + b.growth as u128 * c;
        if t < start + len {
            return (c as u64, g, start.min(u64::MAX as u128) as u64, len.min(u64::MAX as u128) as u64);
        }
        start += len;
    }
    unreachable!("index located inside its cycle")
}

fn blocks_ln_sum<R: Real>(blocks: &[BlockGen<R>], ta: u64, tb: u64) -> R {
    let (ca, ga, sa, _) = locate_block(blocks, ta);
    let (cb, _, _, _) = locate_block(blocks, tb);
    let mut total = R::zero();
    let len_in = |c: u64, g: usize| blocks[g].base as u128 + blocks[g].growth as u128 * c as u128;
    // walk block by block while the range is short, else use per-generator totals
    if cb - ca <= 2 {
        let (mut c, mut g, mut start) = (ca, ga, sa as u128);
        let (ta, tb) = (ta as u128, tb as u128);
        loop {
            let len = len_in(c, g);
            let lo = start.max(ta);
            let hi = (start + len - 1).min(tb);
            if hi >= lo {
                total = total + blocks[g].value.ln() * r::<R>(hi - lo + 1);
            }
            if start + len > tb {
                break;
            }
            start += len;
            g += 1;
            if g == blocks.len() {
                g = 0;
                c += 1;
            }
        }
        return total;
    }
    // partial first cycle, full middle cycles, partial last cycle
    let first_end = cycles_len(
        blocks.iter().map(|b| b.base as u128).sum(),
        blocks.iter().map(|b| b.growth as u128).sum(),
        ca as u128 + 1,
    ) - 1;
    total = total + blocks_ln_sum(blocks, ta, first_end as u64);
    let last_start = cycles_len(
        blocks.iter().map(|b| b.base as u128).sum(),
        blocks.iter().map(|b| b.growth as u128).sum(),
        cb as u128,
    );
    total = total + blocks_ln_sum(blocks, last_start as u64, tb);
    let (c1, c2) = (ca as u128 + 1, cb as u128 - 1);
    let n = c2 - c1 + 1;
    for b in blocks {
        let count = n * b.base as u128 + b.growth as u128 * (c1 + c2) * n / 2;
        total = total + b.value.ln() * r::<R>(count);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    type W = WeightSequence<f64>;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
    }

    fn direct_ln_sum(w: &W, a: u64, b: u64) -> f64 {
        (a..=b).map(|i| w.ln_at(i)).sum()
    }

    #[test]
    fn product_examples() {
        let two = W::constant(2.0);
        assert!(close(two.weight_product(1, 5).unwrap().value(), 32.0));
        let p = W::power_law(1.0, -2.0 / 3.0, 0)
            .unwrap_err();
        // base 0 at i = 0 is rejected; the sequence starts at index 1
        assert!(matches!(p, Error::Invalid(_)));
        let pl = W::from_runs(
            vec![Run { value: LogReal::one(), len: 1 }],
            Tail::PowerLaw {
                scale: LogReal::one(),
                exponent: -2.0 / 3.0,
                shift: 0,
            },
        )
        .unwrap();
        assert!(close(pl.weight_product(1, 3).unwrap().value(), 6f64.powf(-2.0 / 3.0)));
        let g = W::from_runs(
            vec![Run { value: LogReal::one(), len: 1 }],
            Tail::Geometric {
                scale: LogReal::one(),
                ratio: LogReal::from_value(0.5),
            },
        )
        .unwrap();
        assert!(close(g.weight_product(1, 4).unwrap().value(), 1.0 / 64.0));
        assert!(matches!(two.ln_sum(3, 2), Err(Error::ReversedRange { .. })));
    }

    #[test]
    fn block_rule_lookup_and_sums() {
        // lengths k and 2k (k = 1, 2, …) of 2's and 1/2's
        let w = W::from_runs(
            vec![Run { value: LogReal::from_value(3.0), len: 2 }],
            Tail::Blocks {
                blocks: vec![
                    BlockGen { value: LogReal::from_value(2.0), base: 1, growth: 1 },
                    BlockGen { value: LogReal::from_value(0.5), base: 2, growth: 2 },
                ],
            },
        )
        .unwrap();
        let mut expect = vec![3.0, 3.0];
        for k in 1..=30u64 {
            expect.extend(std::iter::repeat(2.0).take(k as usize));
            expect.extend(std::iter::repeat(0.5).take(2 * k as usize));
        }
        for (i, &x) in expect.iter().enumerate() {
            assert!(close(w.at(i as u64).value(), x), "index {i}");
        }
        for (a, b) in [(0, 0), (0, 10), (3, 400), (57, 1200), (2, expect.len() as u64 - 1)] {
            let want: f64 = expect[a as usize..=b as usize].iter().map(|x| x.ln()).sum();
            assert!(close(w.ln_sum(a, b).unwrap(), want), "[{a},{b}]");
        }
        let s = w.segment_at(5);
        assert_eq!((s.lo, s.hi), (5, 6));
    }

    #[test]
    fn power_law_sum_switches_to_gamma() {
        let w = W::power_law(1.0, -0.5, 1).unwrap();
        let a = 10;
        let b = 10 + DIRECT_SUM_LIMIT + 500;
        let want = direct_ln_sum(&w, a, b);
        assert!((w.ln_sum(a, b).unwrap() - want).abs() < 1e-8 * want.abs());
    }

    #[test]
    fn geometric_sum_closed_form() {
        let w = W::geometric(3.0, 0.9);
        assert!(close(w.ln_sum(7, 900).unwrap(), direct_ln_sum(&w, 7, 900)));
    }

    #[test]
    fn bounds() {
        assert_eq!(W::constant(2.0).ln_sup(), Some(2f64.ln()));
        assert_eq!(W::geometric(1.0, 2.0).ln_sup(), None);
        assert_eq!(W::geometric(1.0, 0.5).ln_inf(), None);
        let v = W::power_law(1.0, -1.0, 1).unwrap();
        assert!(close(v.ln_sup_ratio().unwrap(), 2f64.ln()));
        assert!(close(W::geometric(1.0, 0.5).ln_sup_ratio().unwrap(), 2f64.ln()));
    }

    #[test]
    fn json_schema() {
        let w: W = serde_json::from_str(
            r#"{"prefix": [1, {"value": 2, "len": 3}], "tail": {"kind": "constant", "params": {"c": "ln:0e0"}}}"#,
        )
        .unwrap();
        assert_eq!(w.prefix_len(), 4);
        let back: W = serde_json::from_str(&serde_json::to_string(&w).unwrap()).unwrap();
        assert_eq!(back, w);
        assert!(serde_json::from_str::<W>(r#"{"prefix": [0], "tail": {"kind": "constant", "params": {"c": 1}}}"#).is_err());
        assert!(serde_json::from_str::<W>(r#"{"tail": {"kind": "constant", "params": {"c": 1}}, "extra": 1}"#).is_err());
    }
}
