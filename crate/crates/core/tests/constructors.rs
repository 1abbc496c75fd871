use linchaos::constructors::*;
use linchaos::operators::{apply_power, DEFAULT_ORBIT_BUDGET};
use linchaos::orbitstats::{irregular_test, DetectorOptions};
use linchaos::seqspace::{norm, LogReal, SpaceSpec, WeightSequence};
use linchaos::{Error, OperatorSpec, SparseVector};

const BUDGET: u64 = DEFAULT_ORBIT_BUDGET;

fn w2_backward() -> OperatorSpec {
    OperatorSpec::weighted_backward(WeightSequence::constant(2.0), SpaceSpec::ell2()).unwrap()
}

/// ln‖Fⁱu‖ for a forward shift, by direct enumeration of the weight products.
fn forward_orbit_ln(w: &WeightSequence, u: &SparseVector, n: u64) -> Vec<f64> {
    let entries: Vec<(u64, f64)> = u.iter().map(|(i, c)| (i, c.ln())).collect();
    let mut logs: Vec<f64> = entries.iter().map(|&(_, c)| 2.0 * c).collect();
    let mut out = Vec::with_capacity(n as usize + 1);
    for i in 0..=n {
        let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let s: f64 = logs.iter().map(|l| (l - m).exp()).sum();
        out.push(0.5 * (m + s.ln()));
        for (k, &(p, _)) in entries.iter().enumerate() {
            logs[k] += 2.0 * w.ln_at(p + i);
        }
    }
    out
}

fn oscillating() -> (WeightSequence, OperatorSpec) {
    let w = oscillating_block_weights(2.0, 0.5, 1200).unwrap();
    let t = OperatorSpec::weighted_forward(w.clone(), SpaceSpec::ell2()).unwrap();
    (w, t)
}

#[test]
fn bounded_oscillation_k2_matches_enumeration() {
    let (w, t) = oscillating();
    let h = w.prefix_len();
    let out = irregular_from_bounded_oscillation(&t, &SparseVector::basis(0), 1.5, h, 2, BUDGET).unwrap();
    assert!(out.verified, "{:#?}", out.plan.targets);
    assert!(out.selection.iter().all(|c| c.holds));
    let last = *out.lows.last().unwrap();
    let oracle = forward_orbit_ln(&w, &out.u, last);
    // the dropped tail is at most 4^{-(K+1)}·4/3 even after ‖T‖^{n_{2K+1}}
    let tail = out.plan.tail_bound.ln() + last as f64 * 2f64.ln();
    assert!(tail <= (4f64 / 3.0).ln() - 3.0 * 4f64.ln() + 1e-9);
    for k in 0..=2usize {
        let (low, high) = out.witness_indices(k);
        assert!(oracle[low as usize] < -(k as f64) * 2f64.ln());
        if let Some(hi) = high {
            let bar = k as f64 - 4f64.powi(-(k as i32));
            assert!(oracle[hi as usize].exp() > bar, "k = {k}");
        }
    }
    // the interleaving n_1 < m_1 < n_2 < …
    let mut seq = vec![];
    for i in 1..out.lows.len() {
        seq.push(out.lows[i]);
        if i - 1 < out.highs.len() {
            seq.push(out.highs[i - 1]);
        }
    }
    assert!(seq.windows(2).all(|p| p[0] < p[1]), "{seq:?}");
}

#[test]
fn bounded_oscillation_deepening_keeps_checks() {
    let (w, t) = oscillating();
    let h = w.prefix_len();
    let a = irregular_from_bounded_oscillation(&t, &SparseVector::basis(0), 1.5, h, 1, BUDGET).unwrap();
    let b = irregular_from_bounded_oscillation(&t, &SparseVector::basis(0), 1.5, h, 2, BUDGET).unwrap();
    assert_eq!(&b.lows[..a.lows.len()], &a.lows[..]);
    for c in &a.plan.targets {
        let d = b.plan.targets.iter().find(|d| d.label == c.label && d.level == c.level).unwrap();
        assert!(!c.holds || d.holds);
    }
}

#[test]
fn bounded_oscillation_failures() {
    let t = OperatorSpec::weighted_forward(WeightSequence::constant(0.5), SpaceSpec::ell2()).unwrap();
    // ‖T‖ < 1 already rules the construction out
    assert!(irregular_from_bounded_oscillation(&t, &SparseVector::basis(0), 1.5, 200, 2, BUDGET).is_err());
    let (w, t) = oscillating();
    let r = irregular_from_bounded_oscillation(&t, &SparseVector::basis(0), 2.5, w.prefix_len(), 2, BUDGET);
    assert!(matches!(r, Err(Error::Selection { level: 1, .. })), "{r:?}");
}

fn lycc_terms(count: usize) -> Vec<LyccTerm> {
    // u_j = e_{m_j}: ‖Tⁱu_j‖ = 2ⁱ up to i = m_j, then 0
    let mut out = vec![];
    let (mut index, mut prev_n, mut sup) = (1u64, 0u64, f64::NEG_INFINITY);
    for _ in 0..count {
        let bar = if out.is_empty() { 0.0 } else { index as f64 * 3f64.log2() + sup };
        let m = (prev_n + 1).max(bar.floor() as u64 + 1);
        let n = m + 1;
        out.push(LyccTerm {
            index,
            u: SparseVector::basis(m),
            m,
            n,
        });
        sup = m as f64;
        prev_n = n;
        index += n + 1;
    }
    out
}

#[test]
fn lycc_series_is_irregular() {
    let t = w2_backward();
    let terms = lycc_terms(7);
    let h = terms.last().unwrap().n + 8;
    let opts = DetectorOptions::default();
    for rule in [IndexRule::Greedy, IndexRule::EveryOther] {
        let c = irregular_from_lycc(&t, &terms, &rule, h, BUDGET).unwrap();
        assert!(c.verified, "{rule:?}: {:#?}", c.plan.targets);
        let v = irregular_test(&t, &c.u, h, 1.0, 1.0, &opts).unwrap();
        assert!(v.is_ok(), "{rule:?}: {:?}", v.err());
    }
}

#[test]
fn lycc_violation_identifies_index() {
    let t = w2_backward();
    let mut terms = lycc_terms(3);
    // growth at the second term falls short of 3^j M_1
    terms[1].m = terms[0].n + 1;
    terms[1].u = SparseVector::basis(terms[1].m);
    terms[1].n = terms[1].m + 1;
    let r = irregular_from_lycc(&t, &terms, &IndexRule::Greedy, 4096, BUDGET);
    match r {
        Err(Error::Violation { at, .. }) => assert_eq!(at, vec![terms[1].index]),
        other => panic!("{other:?}"),
    }
}

#[test]
fn growth_seed_on_weighted_space() {
    let v = WeightSequence::geometric(1.0, 0.5);
    let b = OperatorSpec::backward_shift(SpaceSpec::ell_p(2.0, v).unwrap()).unwrap();
    let c = irregular_from_growth(&b, 4, 4096, &IndexRule::Greedy, 8192, BUDGET).unwrap();
    assert!(c.verified);
    let v = irregular_test(&b, &c.u, 8192, 1.0, 1.0, &DetectorOptions::default()).unwrap();
    assert!(v.is_ok());

    let flat = OperatorSpec::backward_shift(SpaceSpec::ell2()).unwrap();
    let r = irregular_from_growth(&flat, 4, 512, &IndexRule::Greedy, 1024, BUDGET);
    assert!(matches!(r, Err(Error::Selection { level: 2, .. })), "{r:?}");
}

#[test]
fn dcc_subsequence_and_construction() {
    let t = w2_backward();
    let ns: Vec<u64> = (1..=5).map(|m| 4u64.pow(m)).collect();
    let inputs = DccInputs::basis(&t, ns, 2).unwrap();
    let picked = select_dcc_subsequence(&t, &inputs, BUDGET).unwrap();
    assert_eq!(picked, vec![0, 2]);
    let mut opts = DetectorOptions::default();
    opts.density_floor = 0.75;
    let sub = inputs.subsequence(&picked);
    let c = dirregular_from_dcc(&t, &sub, 4u64.pow(10), 0.5, &opts).unwrap();
    assert!(c.accepted(), "{:?}", c.verdict.as_ref().err());
    // the raw inputs violate the small-count ratio at m = 2
    let r = dirregular_from_dcc(&t, &inputs, 4u64.pow(10), 0.5, &opts);
    assert!(matches!(r, Err(Error::Violation { ref at, .. }) if at[0] == 2), "{r:?}");
    let one = DccInputs::basis(&t, vec![4], 2).unwrap();
    assert!(matches!(dirregular_from_dcc(&t, &one, 64, 0.5, &opts), Err(Error::Violation { .. })));
}

#[test]
fn dcc_feasible_schedule_holds_directly() {
    let t = w2_backward();
    let ns = dcc_feasible_schedule(6).unwrap();
    assert_eq!(&ns[..4], &[3, 17, 163, 2625]);
    let inputs = DccInputs::basis(&t, ns, 1).unwrap();
    assert_eq!(select_dcc_subsequence(&t, &inputs, BUDGET).unwrap(), (0..6).collect::<Vec<_>>());
    let mut opts = DetectorOptions::default();
    opts.density_floor = 0.75;
    let c = dirregular_from_dcc(&t, &inputs, 1 << 24, 0.5, &opts).unwrap();
    assert!(c.accepted(), "{:?} {:#?}", c.verdict.as_ref().err(), c.counting);
}

#[test]
fn small_manifold_passes() {
    let t = w2_backward();
    let inputs = DccInputs::basis(&t, dcc_feasible_schedule(4).unwrap(), 1).unwrap();
    let mut det = DetectorOptions::default();
    det.density_floor = 0.7;
    let c = dirregular_from_dcc(&t, &inputs, 1 << 16, 0.5, &det).unwrap();
    let x_terms: Vec<SparseVector> = c.plan.terms.iter().map(|s| s.vector.scale(s.coefficient)).collect();
    let ys: Vec<SparseVector> = (0..2).map(SparseVector::basis).collect();
    let opts = ManifoldOptions {
        horizon: 1 << 16,
        detector: det,
        ..Default::default()
    };
    let r = dense_irregular_manifold(&t, &ys, &x_terms, &MaskFamily::TwoAdic, 2, &opts).unwrap();
    assert!(r.all_passed, "{:?}", r.first_failure());
    assert_eq!(r.combinations.len(), 8);
}

#[test]
fn manifold_rejects_overlapping_masks() {
    let t = w2_backward();
    let masks = MaskFamily::Explicit {
        sets: vec![vec![1, 2], vec![2]],
    };
    let r = dense_irregular_manifold(&t, &vec![SparseVector::basis(0); 2], &vec![SparseVector::basis(5); 2], &masks, 2, &Default::default());
    assert!(matches!(r, Err(Error::Violation { .. })));
}

#[test]
fn di_design_accepts_and_negative_control_rejects() {
    let d = design_di_forward_weights(0.9, 8).unwrap();
    assert!(!d.insufficient);
    let v = d.verify(0.5, &DetectorOptions::default()).unwrap();
    assert!(v.is_ok(), "{:?}", v.err());

    // constant lengths: periodic orbit, densities bounded away from 1
    let runs = (0..40)
        .map(|k| linchaos::seqspace::Run {
            value: LogReal::from_value(if k % 2 == 0 { 2.0 } else { 0.5 }),
            len: 8,
        })
        .collect();
    let w = WeightSequence::from_runs(runs, linchaos::seqspace::Tail::Constant { c: LogReal::one() }).unwrap();
    let t = OperatorSpec::weighted_forward(w, SpaceSpec::ell2()).unwrap();
    let opts = DetectorOptions {
        density_floor: 0.9,
        ..Default::default()
    };
    let v = linchaos::orbitstats::dirregular_test(&t, &SparseVector::basis(0), 320, 0.5, &opts).unwrap();
    assert!(v.is_err());
    assert!(design_di_forward_weights(0.9, 1).unwrap().insufficient);
}

fn binomial_u128(n: u64, k: u64) -> u128 {
    let mut row = vec![1u128];
    for _ in 0..n {
        let mut next = vec![1u128; row.len() + 1];
        for i in 1..row.len() {
            next[i] = row[i - 1] + row[i];
        }
        row = next;
    }
    row[k as usize]
}

#[test]
fn existence_norms_match_integer_binomials() {
    for (i, j) in [(0, 5), (1, 7), (10, 30), (25, 25), (60, 119), (60, 40)] {
        let mut sq = 0.0f64;
        let mut prod = 1.0f64;
        for k in 0..=i.min(j) {
            if k > 0 {
                prod *= existence_weight(j - k);
            }
            let c = binomial_u128(i, k) as f64 * prod;
            sq += c * c;
        }
        let got = norm_power_basis(i, j);
        assert!((got - 0.5 * sq.ln()).abs() < 1e-11, "({i}, {j}): {got} vs {}", 0.5 * sq.ln());
        // the k = 1 term alone
        if i >= 1 && j >= 1 {
            assert!(got >= (i as f64 * existence_weight(j - 1)).ln() - 1e-12);
        }
    }
}

#[test]
fn existence_operator_agrees_with_apply_power() {
    let r = existence_operator(1).unwrap();
    for (i, j) in [(3u64, 6u64), (7, 5), (12, 40)] {
        let y = apply_power(&r.operator, &SparseVector::basis(j), i).unwrap();
        let got = norm(&y, r.operator.space()).ln();
        assert!((got - norm_power_basis(i, j)).abs() < 1e-10, "({i}, {j})");
    }
}

#[test]
fn existence_stage_three_golden() {
    let r = existence_operator(4).unwrap();
    let s = &r.stages[2];
    assert_eq!((s.m, s.n_m, s.j), (3, 25, 120));
    // exact binomial-sum enumeration of card{0 ≤ i < 25 : ‖(I+T)ⁱe_120‖ ≥ 3}
    let mut count = 0;
    for i in 0..25u64 {
        let mut sq = 0.0f64;
        let mut prod = 1.0f64;
        for k in 0..=i {
            if k > 0 {
                prod *= existence_weight(120 - k);
            }
            let c = binomial_u128(i, k) as f64 * prod;
            sq += c * c;
        }
        if sq.sqrt() >= 3.0 {
            count += 1;
        }
    }
    assert_eq!(s.count, count);
    assert_eq!(s.count, 0);
    assert!(r.stages.iter().all(|s| s.monotone));
    assert!(r.stages.iter().all(|s| s.alpha.vacuous && s.alpha_broad.all_hold));
    assert!(matches!(existence_operator(7), Err(Error::Budget { .. })));
}
