//! `‖Tⁿ‖` for the supported operator kinds.
//!
//! For a shift, `Tⁿ` sends distinct basis vectors to multiples of distinct
//! basis vectors, so `‖Tⁿ‖ = sup_k ‖Tⁿe_k‖ / ‖e_k‖`. Writing the log of the
//! supremand as `G(k) = W(k) + V(k)` (weight product over a window of
//! length `n`, plus the space-weight ratio), the supremum over the explicit
//! prefix region is found from breakpoints of the piecewise structure and the
//! supremum over the tail from the monotonicity or periodicity of each part.

use nalgebra::DMatrix;
use serde::Serialize;

use super::{Direction, OperatorKind, OperatorSpec};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::seqspace::{LogReal, NormMode, SpaceSpec, Tail, WeightSequence};

/// Ranges up to this length are enumerated point by point.
const ENUM_LIMIT: u64 = 200_000;
/// Cap on affine segments inspected when looking for breakpoints.
const SEGMENT_CAP: usize = 2_000_000;
/// Normalised power iterations per start vector for matrix lower bounds.
const MATRIX_ITERATIONS: usize = 64;

/// `‖Tⁿ‖`, or a bracket `[lower, value]` when `exact` is false.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(bound = "R: Real")]
pub struct PowerNorm<R: Real = f64> {
    pub value: LogReal<R>,
    pub lower: LogReal<R>,
    pub exact: bool,
}

impl<R: Real> PowerNorm<R> {
    fn exact(value: LogReal<R>) -> Self {
        PowerNorm {
            value,
            lower: value,
            exact: true,
        }
    }

    fn bracket(lower: R, upper: R) -> Self {
        let tight = upper - lower <= R::log_tolerance() * R::one().max(upper.abs());
        PowerNorm {
            value: LogReal::from_ln(upper),
            lower: LogReal::from_ln(lower.min(upper)),
            exact: tight,
        }
    }
}

pub fn power_norm<R: Real>(t: &OperatorSpec<R>, n: u64) -> Result<PowerNorm<R>> {
    kind_power_norm(t.kind(), t.space(), n)
}

pub(crate) fn kind_power_norm<R: Real>(kind: &OperatorKind<R>, space: &SpaceSpec<R>, n: u64) -> Result<PowerNorm<R>> {
    if n == 0 {
        return Ok(PowerNorm::exact(LogReal::one()));
    }
    if let Some((dir, w)) = kind.as_shift() {
        return ShiftNorm::new(dir, w, space, n)?.compute();
    }
    let (lambda, base) = flatten_scalar_plus(kind);
    match base {
        OperatorKind::FiniteMatrix { rows } => Ok(matrix_power_norm(rows, lambda, space, n)),
        _ => {
            // (|λ| + ‖T‖)ⁿ; no exact rule for λI + shift.
            let t1 = kind_power_norm(base, space, 1)?.value;
            let upper = (lambda.abs() + t1).ln() * R::from_u64(n).unwrap();
            Ok(PowerNorm {
                value: LogReal::from_ln(upper),
                lower: LogReal::zero(),
                exact: false,
            })
        }
    }
}

/// `λ₁I + (λ₂I + (… + T))` as `(Σλ, T)`.
pub(crate) fn flatten_scalar_plus<R: Real>(kind: &OperatorKind<R>) -> (LogReal<R>, &OperatorKind<R>) {
    let mut lambda = LogReal::zero();
    let mut k = kind;
    while let OperatorKind::ScalarPlus { lambda: l, inner } = k {
        lambda = lambda + *l;
        k = inner;
    }
    (lambda, k)
}

/// Tail behaviour of one part of `G` on `k ≥ R0`.
#[derive(Clone, Copy, Debug, PartialEq)]
enum Behaviour<R> {
    Const(R),
    /// Non-increasing towards `limit`.
    Down(R),
    /// Non-decreasing towards `limit` (`+∞` = unbounded).
    Up(R),
    Blocks,
}

impl<R: Real> Behaviour<R> {
    fn limit(&self) -> R {
        match *self {
            Behaviour::Const(c) | Behaviour::Down(c) | Behaviour::Up(c) => c,
            Behaviour::Blocks => R::nan(),
        }
    }
}

#[derive(Clone, Copy)]
struct Parts {
    w: bool,
    v: bool,
}

const BOTH: Parts = Parts { w: true, v: true };

struct ShiftNorm<'a, R: Real> {
    dir: Direction,
    w: Option<&'a WeightSequence<R>>,
    v: &'a WeightSequence<R>,
    q: R,
    n: u64,
    nr: R,
}

impl<'a, R: Real> ShiftNorm<'a, R> {
    fn new(dir: Direction, w: Option<&'a WeightSequence<R>>, space: &'a SpaceSpec<R>, n: u64) -> Result<Self> {
        if n > u64::MAX / 4 {
            return Err(Error::invalid(format!("power {n} too large")));
        }
        Ok(ShiftNorm {
            dir,
            w,
            v: space.v(),
            q: space.mode().weight_exponent(),
            n,
            nr: R::from_u64(n).unwrap(),
        })
    }

    /// First index of the weight window of length `n` at `k`.
    fn window_start(&self, k: u64) -> u64 {
        match self.dir {
            Direction::Backward => k + 1,
            Direction::Forward => k,
        }
    }

    fn w_part(&self, k: u64) -> R {
        match self.w {
            None => R::zero(),
            Some(w) => {
                let a = self.window_start(k);
                w.ln_sum(a, a + self.n - 1).expect("ordered window")
            }
        }
    }

    fn v_part(&self, k: u64) -> R {
        let d = self.v.ln_at(k) - self.v.ln_at(k + self.n);
        match self.dir {
            Direction::Backward => self.q * d,
            Direction::Forward => -self.q * d,
        }
    }

    fn g(&self, k: u64, parts: Parts) -> R {
        let mut s = R::zero();
        if parts.w {
            s = s + self.w_part(k);
        }
        if parts.v {
            s = s + self.v_part(k);
        }
        s
    }

    fn r0(&self) -> u64 {
        self.w.map_or(0, |w| w.prefix_len()).max(self.v.prefix_len())
    }

    fn compute(&self) -> Result<PowerNorm<R>> {
        let r0 = self.r0();
        let (head, head_exact) = if r0 == 0 {
            (R::neg_infinity(), true)
        } else {
            self.sup_range(0, r0 - 1, BOTH)
        };
        let tail = self.tail_sup(r0)?;
        let lower = head.max(tail.lower.ln());
        let upper = head.max(tail.value.ln());
        let mut out = PowerNorm::bracket(lower, upper);
        out.exact = out.exact || (head_exact && tail.exact);
        if out.exact {
            out.lower = out.value;
        }
        Ok(out)
    }

    fn classify_w(&self) -> Behaviour<R> {
        let Some(w) = self.w else {
            return Behaviour::Const(R::zero());
        };
        match w.tail() {
            Tail::Constant { c } => Behaviour::Const(self.nr * c.ln()),
            Tail::Geometric { scale, ratio } => {
                let lr = ratio.ln();
                if lr == R::zero() {
                    Behaviour::Const(self.nr * scale.ln())
                } else if lr < R::zero() {
                    Behaviour::Down(R::neg_infinity())
                } else {
                    Behaviour::Up(R::infinity())
                }
            }
            Tail::PowerLaw { scale, exponent, .. } => {
                if *exponent == R::zero() {
                    Behaviour::Const(self.nr * scale.ln())
                } else if *exponent < R::zero() {
                    Behaviour::Down(R::neg_infinity())
                } else {
                    Behaviour::Up(R::infinity())
                }
            }
            Tail::Blocks { .. } => Behaviour::Blocks,
        }
    }

    fn classify_v(&self) -> Behaviour<R> {
        let backward = self.dir == Direction::Backward;
        match self.v.tail() {
            Tail::Constant { .. } => Behaviour::Const(R::zero()),
            Tail::Geometric { ratio, .. } => {
                let d = self.q * self.nr * ratio.ln();
                Behaviour::Const(if backward { -d } else { d })
            }
            Tail::PowerLaw { exponent, .. } => {
                // ln v_k - ln v_{k+n} = α (ln(k+s) - ln(k+n+s)) → 0 monotonically
                let a = *exponent;
                if a == R::zero() {
                    Behaviour::Const(R::zero())
                } else if (a > R::zero()) == backward {
                    Behaviour::Up(R::zero())
                } else {
                    Behaviour::Down(R::zero())
                }
            }
            Tail::Blocks { .. } => Behaviour::Blocks,
        }
    }

    /// `sup_{k ≥ r0} G(k)`.
    fn tail_sup(&self, r0: u64) -> Result<PowerNorm<R>> {
        use Behaviour::*;
        let (bw, bv) = (self.classify_w(), self.classify_v());
        if matches!(bw, Up(l) if l == R::infinity()) {
            return Err(Error::Unbounded("weight products grow without bound".into()));
        }
        let exact_ln = |x: R| PowerNorm::exact(LogReal::from_ln(x));
        match (bw, bv) {
            (Blocks, Blocks) => {
                let end = self.stable_end(r0)?;
                let (lower, _) = self.sup_range(r0, end, BOTH);
                let (sw, _) = self.sup_range(r0, end, Parts { w: true, v: false });
                let (sv, _) = self.sup_range(r0, end, Parts { w: false, v: true });
                Ok(PowerNorm::bracket(lower, sw + sv))
            }
            (Blocks, other) | (other, Blocks) => {
                let end = self.stable_end(r0)?;
                let (lower, ex) = self.sup_range(r0, end, BOTH);
                match other {
                    Const(_) => Ok(if ex {
                        exact_ln(lower)
                    } else {
                        PowerNorm::bracket(lower, R::infinity())
                    }),
                    _ => {
                        let only = if bw == Blocks { Parts { w: true, v: false } } else { Parts { w: false, v: true } };
                        let (sb, _) = self.sup_range(r0, end, only);
                        let so = match other {
                            Down(_) => self.g(r0, Parts { w: !only.w, v: !only.v }),
                            _ => other.limit(),
                        };
                        Ok(PowerNorm::bracket(lower, sb + so))
                    }
                }
            }
            (Const(_) | Down(_), Const(_) | Down(_)) => Ok(exact_ln(self.g(r0, BOTH))),
            (Const(a) | Up(a), Const(b) | Up(b)) => Ok(exact_ln(a + b)),
            (Down(ld), Up(lu)) | (Up(lu), Down(ld)) => {
                // G(k) ≤ D(k) + lu and D decreases, so scanning far enough pins the sup.
                let down = if matches!(bw, Down(_)) { Parts { w: true, v: false } } else { Parts { w: false, v: true } };
                let end = r0 + ENUM_LIMIT;
                let (best, _) = self.sup_range(r0, end, BOTH);
                let best = best.max(ld + lu);
                let upper = best.max(self.g(end + 1, down) + lu);
                Ok(PowerNorm::bracket(best, upper))
            }
        }
    }

    /// Range end beyond which the block structure of `w` and `v` repeats.
    fn stable_end(&self, r0: u64) -> Result<u64> {
        let mut end = r0;
        for s in self.w.into_iter().chain(Some(self.v)) {
            let Tail::Blocks { blocks } = s.tail() else { continue };
            let c_start = s.cycle_of(r0).expect("block tail");
            let c_star = blocks
                .iter()
                .filter(|b| b.growth > 0)
                .map(|b| (self.n + 1).saturating_sub(b.base).div_ceil(b.growth))
                .max()
                .unwrap_or(0);
            let c = c_star.max(c_start + 1) + 2;
            let e = s
                .cycle_start(c)
                .and_then(|x| x.checked_add(self.n + 2))
                .ok_or_else(|| Error::invalid("block structure too long to analyse"))?;
            end = end.max(e);
        }
        Ok(end)
    }

    /// `sup_{lo ≤ k ≤ hi} G(k)` and whether it is exact.
    fn sup_range(&self, lo: u64, hi: u64, parts: Parts) -> (R, bool) {
        if hi - lo < ENUM_LIMIT {
            return (self.enumerate(lo, hi, parts), true);
        }
        match self.breakpoints(lo, hi) {
            Some(mut cands) => {
                cands.push(lo);
                cands.push(hi);
                cands.sort_unstable();
                cands.dedup();
                let mut best = R::neg_infinity();
                for pair in cands.windows(2) {
                    let (a, b) = (pair[0], pair[1]);
                    best = best.max(self.g(a, parts)).max(self.g(b, parts));
                    if b > a + 2 {
                        // G is concave or linear between breakpoints: look for
                        // a sign change of the forward difference.
                        let d = |k: u64| self.g(k + 1, parts) - self.g(k, parts);
                        if d(a) > R::zero() && d(b - 1) < R::zero() {
                            let (mut l, mut h) = (a, b - 1);
                            while l < h {
                                let m = l + (h - l) / 2;
                                if d(m) <= R::zero() {
                                    h = m;
                                } else {
                                    l = m + 1;
                                }
                            }
                            best = best.max(self.g(l, parts));
                        }
                    }
                }
                (best, true)
            }
            None => {
                let step = ((hi - lo) / ENUM_LIMIT).max(1);
                let mut best = self.g(hi, parts);
                let mut k = lo;
                while k <= hi {
                    best = best.max(self.g(k, parts));
                    k = match k.checked_add(step) {
                        Some(x) => x,
                        None => break,
                    };
                }
                (best, false)
            }
        }
    }

    fn enumerate(&self, lo: u64, hi: u64, parts: Parts) -> R {
        let mut best = R::neg_infinity();
        let mut wk = R::zero();
        for (i, k) in (lo..=hi).enumerate() {
            if parts.w && self.w.is_some() {
                wk = if i % 1024 == 0 {
                    self.w_part(k)
                } else {
                    let w = self.w.unwrap();
                    let a = self.window_start(k - 1);
                    wk - w.ln_at(a) + w.ln_at(a + self.n)
                };
            }
            let vk = if parts.v { self.v_part(k) } else { R::zero() };
            best = best.max(wk + vk);
        }
        best
    }

    /// Points where the affine configuration of `G` may change on `[lo, hi]`.
    fn breakpoints(&self, lo: u64, hi: u64) -> Option<Vec<u64>> {
        let span_hi = hi.checked_add(self.n + 2)?;
        let mut bounds = Vec::new();
        for s in self.w.into_iter().chain(Some(self.v)) {
            for seg in s.segments(lo, span_hi, SEGMENT_CAP).ok()? {
                bounds.push(seg.lo);
                bounds.push(seg.hi.saturating_add(1));
            }
        }
        let n = self.n as i128;
        let mut out = Vec::new();
        for b in bounds {
            for d in [-n - 2, -n - 1, -n, -n + 1, -2, -1, 0, 1] {
                let k = b as i128 + d;
                if k >= lo as i128 && k <= hi as i128 {
                    out.push(k as u64);
                }
            }
        }
        Some(out)
    }
}

/// Bracket for `‖(λI + A)ⁿ‖` on the weighted coordinate space.
fn matrix_power_norm<R: Real>(rows: &[Vec<R>], lambda: LogReal<R>, space: &SpaceSpec<R>, n: u64) -> PowerNorm<R> {
    let d = rows.len();
    let q = space.mode().weight_exponent().to_f64().unwrap();
    let lnv: Vec<f64> = (0..d).map(|i| space.v().ln_at(i as u64).to_f64().unwrap()).collect();
    let lam = lambda.value().to_f64().unwrap();
    // D A D⁻¹ with D = diag(v_i^q): the weighted norm of A is the plain norm of this.
    let b = DMatrix::from_fn(d, d, |i, j| {
        let a = rows[i][j].to_f64().unwrap() + if i == j { lam } else { 0.0 };
        a * (q * (lnv[i] - lnv[j])).exp()
    });
    let (m, scale) = scaled_power(&b, n);
    let mode = match space.mode() {
        NormMode::Lp(p) => Some(p.to_f64().unwrap()),
        NormMode::Sup => None,
    };
    let to_r = |x: f64| R::from_f64(x).unwrap();
    if m.iter().all(|&x| x == 0.0) {
        return PowerNorm::exact(LogReal::zero());
    }
    let col1 = (0..d).map(|j| m.column(j).iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
    let rowinf = (0..d).map(|i| m.row(i).iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
    let (upper, exact) = match mode {
        Some(p) if p == 1.0 => (col1.ln(), true),
        None => (rowinf.ln(), true),
        Some(p) if p == 2.0 => (m.clone().singular_values().max().ln(), true),
        Some(p) => (col1.ln() / p + rowinf.ln() * (1.0 - 1.0 / p), false),
    };
    if exact {
        return PowerNorm::exact(LogReal::from_ln(to_r(upper + scale)));
    }
    let p = mode.unwrap();
    let pnorm = |x: &nalgebra::DVector<f64>| x.iter().map(|c| c.abs().powf(p)).sum::<f64>().powf(1.0 / p);
    let mut lower = f64::NEG_INFINITY;
    for j in 0..d {
        let mut x = nalgebra::DVector::from_fn(d, |i, _| if i == j { 1.0 } else { 0.0 });
        for _ in 0..MATRIX_ITERATIONS {
            let y = &m * &x;
            let (nx, ny) = (pnorm(&x), pnorm(&y));
            if ny == 0.0 {
                break;
            }
            lower = lower.max((ny / nx).ln());
            x = y / ny;
        }
    }
    PowerNorm::bracket(to_r(lower + scale), to_r(upper + scale))
}

/// `Bⁿ = M · e^{scale}` by repeated squaring with renormalisation.
fn scaled_power(b: &DMatrix<f64>, mut n: u64) -> (DMatrix<f64>, f64) {
    let d = b.nrows();
    let normalise = |m: DMatrix<f64>, s: f64| {
        let mx = m.amax();
        if mx == 0.0 {
            (m, s)
        } else {
            (m / mx, s + mx.ln())
        }
    };
    let (mut base, mut bs) = normalise(b.clone(), 0.0);
    let (mut acc, mut as_) = (DMatrix::<f64>::identity(d, d), 0.0);
    while n > 0 {
        if n & 1 == 1 {
            (acc, as_) = normalise(&acc * &base, as_ + bs);
        }
        n >>= 1;
        if n > 0 {
            (base, bs) = normalise(&base * &base, 2.0 * bs);
        }
    }
    (acc, as_)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqspace::{BlockGen, Run};

    fn val(pn: PowerNorm<f64>) -> f64 {
        assert!(pn.exact);
        pn.value.value()
    }

    #[test]
    fn examples() {
        let t = OperatorSpec::weighted_backward(WeightSequence::constant(2.0), SpaceSpec::ell2()).unwrap();
        assert!((val(power_norm(&t, 5).unwrap()) - 32.0).abs() < 1e-12);
        assert_eq!(val(power_norm(&t, 0).unwrap()), 1.0);
        let v = WeightSequence::power_law(1.0, -1.0, 1).unwrap();
        let b = OperatorSpec::backward_shift(SpaceSpec::ell_p(2.0, v).unwrap()).unwrap();
        assert!((val(power_norm(&b, 3).unwrap()) - 2.0).abs() < 1e-12);
    }

    /// Brute-force `max_{k ≤ K} G(k)` for comparison.
    fn brute(t: &OperatorSpec<f64>, n: u64, kmax: u64) -> f64 {
        let (dir, w) = t.kind().as_shift().unwrap();
        let q = t.space().mode().weight_exponent();
        let v = t.space().v();
        (0..=kmax)
            .map(|k| {
                let (a, b, from, to) = match dir {
                    Direction::Backward => (k + 1, k + n, k + n, k),
                    Direction::Forward => (k, k + n - 1, k, k + n),
                };
                w.map_or(0.0, |w| w.ln_sum(a, b).unwrap()) + q * (v.ln_at(to) - v.ln_at(from))
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn block_weights_match_brute_force() {
        let w = WeightSequence::from_runs(
            vec![Run { value: LogReal::from_value(0.5), len: 4 }, Run { value: LogReal::from_value(3.0), len: 2 }],
            Tail::Blocks {
                blocks: vec![
                    BlockGen { value: LogReal::from_value(1.5), base: 1, growth: 1 },
                    BlockGen { value: LogReal::from_value(0.4), base: 3, growth: 0 },
                    BlockGen { value: LogReal::from_value(2.5), base: 1, growth: 0 },
                ],
            },
        )
        .unwrap();
        for n in [1, 2, 5, 9] {
            for op in [
                OperatorSpec::weighted_backward(w.clone(), SpaceSpec::ell2()).unwrap(),
                OperatorSpec::weighted_forward(w.clone(), SpaceSpec::c0(WeightSequence::constant(1.0))).unwrap(),
            ] {
                let pn = power_norm(&op, n).unwrap();
                let want = brute(&op, n, 20_000);
                assert!(pn.exact);
                assert!((pn.value.ln() - want).abs() < 1e-9, "n={n}: {} vs {want}", pn.value.ln());
            }
        }
    }

    #[test]
    fn monotone_tails_match_brute_force() {
        let cases: Vec<(WeightSequence<f64>, WeightSequence<f64>)> = vec![
            (WeightSequence::geometric(2.0, 0.9), WeightSequence::constant(1.0)),
            (WeightSequence::power_law(3.0, -0.5, 1).unwrap(), WeightSequence::power_law(1.0, 1.0, 1).unwrap()),
            (WeightSequence::constant(1.0), WeightSequence::geometric(1.0, 0.5)),
            (WeightSequence::power_law(1.0, -0.3, 2).unwrap(), WeightSequence::power_law(1.0, -2.0, 1).unwrap()),
        ];
        for (w, v) in cases {
            for n in [1, 3, 7] {
                let sp = SpaceSpec::ell_p(2.0, v.clone()).unwrap();
                for op in [
                    OperatorSpec::weighted_backward(w.clone(), sp.clone()).unwrap(),
                    OperatorSpec::weighted_forward(w.clone(), sp.clone()).unwrap(),
                ] {
                    let pn = power_norm(&op, n).unwrap();
                    let b = brute(&op, n, 5_000);
                    assert!(pn.value.ln() >= b - 1e-9, "sup below sampled value");
                    if pn.exact {
                        assert!(pn.value.ln() - b < 1e-3, "{op:?} n={n}: {} vs {b}", pn.value.ln());
                    }
                }
            }
        }
    }

    #[test]
    fn large_prefix_uses_breakpoints() {
        let runs = (0..400)
            .map(|i| Run {
                value: LogReal::from_value(if i % 2 == 0 { 0.5 } else { 1.9 }),
                len: 997 + (i % 7),
            })
            .collect();
        let w = WeightSequence::from_runs(runs, Tail::Constant { c: LogReal::one() }).unwrap();
        let op = OperatorSpec::weighted_backward(w, SpaceSpec::ell2()).unwrap();
        for n in [1, 50, 2000] {
            let pn = power_norm(&op, n).unwrap();
            let want = brute(&op, n, 400_000);
            assert!(pn.exact);
            assert!((pn.value.ln() - want).abs() < 1e-7, "n={n}");
        }
    }

    #[test]
    fn matrix_bracket() {
        let space = SpaceSpec::ell2();
        let op = OperatorSpec::matrix(vec![vec![0.5, 0.0], vec![0.0, 1.0 / 3.0]], space).unwrap();
        assert!((val(power_norm(&op, 3).unwrap()) - 0.125).abs() < 1e-14);
        let sp3 = SpaceSpec::ell_p(3.0, WeightSequence::constant(1.0)).unwrap();
        let m = OperatorSpec::matrix(vec![vec![1.0, 2.0], vec![-0.5, 0.3]], sp3).unwrap();
        let pn = power_norm(&m, 4).unwrap();
        assert!(pn.lower.ln() <= pn.value.ln() + 1e-12);
    }
}
