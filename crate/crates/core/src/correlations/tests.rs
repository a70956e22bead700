use super::*;
use crate::precision::UnitAngle;
use proptest::prelude::*;

const GOLDEN: f64 = 0.618_033_988_749_894_9;

fn seg_of(values: &[f64]) -> Segment {
    Segment::from_values(SequenceSpec::linear(1.0).unwrap(), values)
}

fn fns() -> Vec<TestFunction> {
    vec![
        TestFunction::fejer(1.0).unwrap(),
        TestFunction::fejer(0.7).unwrap(),
        TestFunction::gaussian(1.0).unwrap(),
        TestFunction::bump(1.5).unwrap(),
    ]
}

// O(N³) reference for the triple sum.
fn triple_brute(x: &[f64], f: &TestFunction, g: &TestFunction) -> f64 {
    let n = x.len();
    let nf = n as f64;
    let mut acc = NeumaierSum::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            for l in 0..n {
                if l == i || l == j {
                    continue;
                }
                acc.add(f.periodized(nf, x[i] - x[j]) * g.periodized(nf, x[j] - x[l]));
            }
        }
    }
    acc.value() / nf
}

#[test]
fn separated_points_give_zero() {
    let seg = seg_of(&[0.0, 0.25, 0.5, 0.75]);
    let f = TestFunction::bump(0.5).unwrap();
    assert_eq!(pair_corr_naive(&seg, &f, false).unwrap().value, 0.0);
    assert_eq!(pair_corr_fast(&seg, &f, false).unwrap().value, 0.0);
}

#[test]
fn two_antipodal_points() {
    // P(1/2) = Σ_k f(2k+1); for Fejér(1/2) only the zero mode survives, so P ≡ 1/2.
    let seg = seg_of(&[0.0, 0.5]);
    let f = TestFunction::fejer(0.5).unwrap();
    let direct: f64 = (-200_000i64..200_000).map(|k| f.eval(2.0 * k as f64 + 1.0)).sum();
    assert!((direct - 0.5).abs() < 1e-5);
    for rep in [pair_corr_naive(&seg, &f, false).unwrap(), pair_corr_fast(&seg, &f, false).unwrap()] {
        assert!((rep.value - 0.5).abs() < 1e-14, "{rep:?}");
        assert_eq!(rep.deviation, rep.value - rep.poisson_reference);
    }
}

#[test]
fn diagonal_adds_periodized_zero() {
    let seg = generate(SequenceSpec::monomial(1.3, 0.5).unwrap(), 300).unwrap();
    for f in fns() {
        let with = pair_corr_naive(&seg, &f, true).unwrap();
        let without = pair_corr_naive(&seg, &f, false).unwrap();
        let lattice: f64 = f.at_zero() + 2.0 * (1..10_000).map(|k| f.eval(300.0 * k as f64)).sum::<f64>();
        assert!((with.value - without.value - lattice).abs() < 1e-9, "{f}");
        assert_eq!(with.poisson_reference, f.integral() + f.at_zero());
    }
}

#[test]
fn symmetric_under_reflection() {
    let seg = generate(SequenceSpec::monomial(0.9, 0.3).unwrap(), 500).unwrap();
    let reflected = Segment {
        spec: seg.spec,
        points: seg.points.iter().map(|p| UnitAngle::from_f64((1.0 - p.value).fract())).collect(),
    };
    for f in fns() {
        let a = pair_corr_naive(&seg, &f, false).unwrap().value;
        let b = pair_corr_naive(&reflected, &f, false).unwrap().value;
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn fast_equals_naive_golden_ratio() {
    let seg = generate(SequenceSpec::linear(GOLDEN).unwrap(), 10_000).unwrap();
    let f = TestFunction::fejer(1.0).unwrap();
    let naive = pair_corr_naive(&seg, &f, false).unwrap();
    let fast = pair_corr_fast(&seg, &f, false).unwrap();
    assert!((naive.value - fast.value).abs() <= 1e-10, "{} vs {}", naive.value, fast.value);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]
    #[test]
    fn fast_equals_naive(alpha in 0.5f64..3.0, theta in 0.1f64..1.5, n in 2usize..2000, which in 0usize..4) {
        let seg = generate(SequenceSpec::monomial(alpha, theta).unwrap(), n as u64).unwrap();
        let f = fns()[which];
        for diag in [false, true] {
            let a = pair_corr_naive(&seg, &f, diag).unwrap().value;
            let b = pair_corr_fast(&seg, &f, diag).unwrap().value;
            prop_assert!((a - b).abs() <= 1e-10, "{} N={} {} vs {}", f, n, a, b);
        }
    }
}

#[test]
fn naive_guard() {
    let seg = seg_of(&vec![0.1; 10]);
    let f = TestFunction::fejer(1.0).unwrap();
    assert!(matches!(
        pair_corr_naive_with_limit(&seg, &f, false, 5),
        Err(Error::SizeGuard { .. })
    ));
}

#[test]
fn triple_three_points() {
    let seg = seg_of(&[0.0, 1.0 / 3.0, 2.0 / 3.0]);
    let f = TestFunction::fejer(1.0).unwrap();
    let expected = 2.0 * f.periodized(3.0, 1.0 / 3.0).powi(2);
    for mode in [TripleMode::Naive, TripleMode::Fast] {
        let rep = triple_corr(&seg, &f, &f, mode).unwrap();
        assert!((rep.value - expected).abs() < 1e-14, "{mode:?}: {}", rep.value);
        assert!(rep.value.abs() < 1e-14);
    }
}

#[test]
fn triple_against_brute_force() {
    let seg = generate(SequenceSpec::monomial(1.7, 0.6).unwrap(), 40).unwrap();
    let x = seg.values();
    let all = fns();
    for f in &all {
        for g in &all {
            let want = triple_brute(&x, f, g);
            let naive = triple_corr(&seg, f, g, TripleMode::Naive).unwrap().value;
            let fast = triple_corr(&seg, f, g, TripleMode::Fast).unwrap().value;
            assert!((naive - want).abs() < 1e-11, "{f} x {g}: naive {naive} vs {want}");
            assert!((fast - want).abs() < 1e-10, "{f} x {g}: fast {fast} vs {want}");
        }
    }
}

#[test]
fn triple_fast_matches_naive_large() {
    let seg = generate(SequenceSpec::monomial(std::f64::consts::SQRT_2, 0.3).unwrap(), 1500).unwrap();
    let fe = TestFunction::fejer(1.0).unwrap();
    let ga = TestFunction::gaussian(0.8).unwrap();
    for (f, g) in [(fe, fe), (ga, ga), (fe, ga)] {
        let naive = triple_corr(&seg, &f, &g, TripleMode::Naive).unwrap();
        let fast = triple_corr(&seg, &f, &g, TripleMode::Fast).unwrap();
        assert!((naive.value - fast.value).abs() < 1e-9, "{f} x {g}");
        assert_eq!(naive.poisson_reference, f.integral() * g.integral());
    }
    assert!(triple_corr(&generate(seg.spec, 3001).unwrap(), &fe, &fe, TripleMode::Naive).is_err());
}

#[test]
fn gaps_of_quarter_rotation() {
    let seg = generate(SequenceSpec::linear(0.25).unwrap(), 4).unwrap();
    let rep = gap_report(&seg, 10).unwrap();
    assert_eq!(rep.distinct_count, 1);
    for g in &rep.gaps {
        assert!((g - 1.0).abs() < 1e-12);
    }
    let mass: f64 = rep.histogram.iter().map(|b| b.mass).sum();
    assert!((mass - 1.0).abs() < 1e-12);
}

#[test]
fn three_gaps_for_sqrt_two() {
    let seg = generate(SequenceSpec::linear(std::f64::consts::SQRT_2).unwrap(), 10_000).unwrap();
    let rep = gap_report(&seg, 50).unwrap();
    assert!(rep.distinct_count <= 3 && rep.distinct_count >= 2);
    let unscaled: f64 = rep.gaps.iter().map(|g| g / 10_000.0).sum();
    assert!((unscaled - 1.0).abs() < 1e-9);
}

#[test]
fn gap_multiset_is_rotation_invariant() {
    let seg = generate(SequenceSpec::monomial(1.1, 0.4).unwrap(), 2000).unwrap();
    let shifted = Segment {
        spec: seg.spec,
        points: seg.points.iter().map(|p| UnitAngle::from_f64((p.value + 0.375).fract())).collect(),
    };
    let mut a = gap_report(&seg, 20).unwrap().gaps;
    let mut b = gap_report(&shifted, 20).unwrap().gaps;
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    for (u, v) in a.iter().zip(&b) {
        assert!((u - v).abs() < 1e-9);
    }
}

#[test]
fn ks_distance_of_lattice_is_large() {
    let seg = generate(SequenceSpec::linear(0.001).unwrap(), 1000).unwrap();
    let rep = gap_report(&seg, 5).unwrap();
    // all scaled gaps equal 1: sup |1{x>=1} - (1 - e^{-x})| = 1 - e^{-1}
    assert!((rep.ks_vs_exponential - (1.0 - (-1.0f64).exp())).abs() < 1e-9);
}

#[test]
fn three_gap_theorem_examples() {
    let golden = three_gap_check(GOLDEN, &(1..=500).collect::<Vec<_>>()).unwrap();
    assert!(golden.passed);
    let sqrt2 = three_gap_check(std::f64::consts::SQRT_2, &[10, 100, 1000, 10_000]).unwrap();
    assert!(sqrt2.passed);
    let seventh = three_gap_check(1.0 / 7.0, &[100]).unwrap();
    assert_eq!(seventh.counts, vec![(100, 1)]);
    let exact = three_gap_check_rational(1, 7, &[100]).unwrap();
    assert_eq!(exact.counts, vec![(100, 1)]);
    let exact = three_gap_check_rational(355, 1130, &(1..=300).collect::<Vec<_>>()).unwrap();
    assert!(exact.passed);
}

#[test]
fn csv_row_layout() {
    let spec = SequenceSpec::monomial(1.5, 0.3).unwrap();
    let rep = CorrelationReport::new(10, 1.25, 1.0, Mode::FastPair, Truncation::Exact);
    assert_eq!(rep.csv_row(&spec, None), "monomial,1.5,0.3,10,1.25,1,0.25,FastPair,");
    assert_eq!(CorrelationReport::CSV_HEADER.split(',').count(), rep.csv_row(&spec, Some(2.0)).split(',').count());
}
