use super::*;
use std::f64::consts::SQRT_2;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn integer_linear_phase_counts_points() {
    // e(3n) = 1 for every integer n
    let phase = MonomialPhase::new(3.0, 1.0, 0.0, 1000.0).unwrap();
    let s = direct_sum(&phase).unwrap();
    assert!((s - c(1000.0, 0.0)).norm() < 1e-12);
}

#[test]
fn zero_coefficient_gives_interval_length() {
    let phase = MonomialPhase::new(0.0, 10.0 / 7.0, 2.5, 40.0).unwrap();
    assert_eq!(direct_sum(&phase).unwrap(), c(37.0, 0.0));
}

#[test]
fn sqrt_phase_matches_golden_value() {
    // 40-digit summation with the binary64 value of sqrt(2)
    let want = c(-11.565_602_703_599_938, -51.415_503_508_470_355);
    let phase = MonomialPhase::new(SQRT_2, 0.5, 1e4, 2e4).unwrap();
    let got = direct_sum(&phase).unwrap();
    assert!((got - want).norm() < 1e-11, "{got}");
}

#[test]
fn negated_coefficient_conjugates() {
    let p = MonomialPhase::new(1.234_567, 0.37, 10.0, 50_000.0).unwrap();
    let a = direct_sum(&p).unwrap();
    let b = direct_sum(&p.negated()).unwrap();
    assert!((a - b.conj()).norm() < 1e-12);
}

#[test]
fn size_guard_on_huge_ranges() {
    let p = MonomialPhase::new(1.0, 0.5, 0.0, 2e9).unwrap();
    assert!(matches!(direct_sum(&p), Err(Error::SizeGuard { .. })));
}

#[test]
fn beta_closed_form_examples() {
    assert!((derive_beta(1.0, 0.5).unwrap() - 0.25).abs() < 1e-15);
    assert!((derive_beta(2.0, 0.5).unwrap() - 1.0).abs() < 1e-15);
    // the θ^{1−Θ} variant differs
    assert!((printed_beta(1.0, 0.5) - 0.25).abs() > 0.1);
}

#[test]
fn beta_matches_stationary_phase_and_ignores_k() {
    let th = Exponent::new(1.0 / 3.0).unwrap();
    let beta = derive_beta(1.0, 1.0 / 3.0).unwrap();
    let big = 1.5f64;
    for (k, m) in [(100u64, 7u64), (10, 7), (1000, 7)] {
        let direct = stationary_phase_direct(1.0, th, k, m).to_f64();
        let pred = beta * (k as f64).powf(big) * (m as f64).powf(1.0 - big);
        assert!((direct - pred).abs() <= 1e-10 * pred.abs(), "k={k}");
    }
}

#[test]
fn constants_invariants() {
    let k = PaperConstants::new(SQRT_2, 0.3, 20, 0.01).unwrap();
    assert!((k.big_theta * (1.0 - k.theta) - 1.0).abs() < 1e-15);
    assert!((k.vartheta * (1.0 - k.big_theta) - 1.0).abs() < 1e-15);
    assert!((k.w - 20.0 * 0.71).abs() < 1e-12);
    assert!((k.c1.arg() + PI / 4.0).abs() < 1e-15);
    assert!(PaperConstants::with_w(SQRT_2, 0.3, 20, 0.01, 5.0).is_err());
    assert!(PaperConstants::new(1.0, 1.0, 20, 0.01).is_err());
}

fn spec_example() -> (MonomialPhase, f64) {
    // E_q(k) with α = 1, θ = 1/2, k = 10³ on [10⁶, 2·10⁶); conjugate of a convex phase
    let p = MonomialPhase::new(1000.0, 0.5, 1e6, 2e6).unwrap();
    let lambda = p.derivative(2, 2e6).abs();
    (p, lambda)
}

#[test]
fn b_process_example_within_bound() {
    let (p, lambda) = spec_example();
    let r = b_process(&p, lambda, 11.0).unwrap();
    // φ' ranges over [-0.5, -0.354): no integer frequency
    assert!(r.stationary_points.is_empty());
    assert_eq!(r.main_term, c(0.0, 0.0));
    assert!(r.observed_error <= 10.0 * r.bound);
    assert!((r.observed_error - r.direct.norm()).abs() < 1e-12);
}

#[test]
fn growth_violation_is_reported() {
    let (p, lambda) = spec_example();
    match b_process(&p, lambda, 2.0) {
        Err(Error::GrowthCondition(msg)) => assert!(msg.contains("derivative")),
        other => panic!("expected growth failure, got {other:?}"),
    }
}

#[test]
fn stationary_points_solve_first_derivative() {
    let consts = PaperConstants::new(0.7, 0.3, 4, 0.01).unwrap();
    let (lo, hi) = (consts.block_start(12), consts.block_start(13));
    let phase = block_phase(&consts, 400_000, lo, hi).unwrap();
    let r = b_process(&phase, phase.derivative(2, hi).abs(), 10.0).unwrap();
    assert!(r.stationary_points.len() > 5);
    for sp in &r.stationary_points {
        let d = phase.derivative(1, sp.x);
        assert!((d - sp.m as f64).abs() <= 1e-12 * (sp.m as f64).abs(), "{sp:?}");
        assert!(sp.x >= lo && sp.x < hi);
    }
}

#[test]
fn two_main_term_paths_agree() {
    for (alpha, theta, q, k) in [
        (0.7, 0.3, 12u64, 400_000u64),
        (SQRT_2, 0.3, 20, 3_000_000),
        (SQRT_2, 0.5, 15, 200_000),
        (1.0, 1.0 / 3.0, 10, 90_000),
    ] {
        let consts = PaperConstants::new(alpha, theta, 4, 0.01).unwrap();
        let (lo, hi) = (consts.block_start(q), consts.block_start(q + 1));
        let phase = block_phase(&consts, k, lo, hi).unwrap();
        let r = b_process(&phase, phase.derivative(2, hi).abs(), 10.0).unwrap();
        let eb = eb_main_term(&consts, k, q);
        assert!(!r.stationary_points.is_empty());
        assert!(
            (r.main_term - eb).norm() <= 1e-9 * eb.norm(),
            "alpha={alpha} theta={theta}: {} vs {eb}",
            r.main_term
        );
        let (first, end) = frequency_range(&consts, k, lo, hi);
        assert_eq!((end - first) as usize, r.stationary_points.len());
    }
}

#[test]
fn empty_frequency_range_gives_zero() {
    let consts = PaperConstants::new(1.0, 0.5, 4, 0.01).unwrap();
    let (first, end) = frequency_range(&consts, 1, consts.block_start(10), consts.block_start(11));
    assert_eq!(first, end);
    assert_eq!(eb_main_term(&consts, 1, 10), c(0.0, 0.0));
}

#[test]
fn a_process_bound_arithmetic() {
    let (f, m) = (1e4, 1e3);
    assert!((a_process_bound(f, m, 0).unwrap() - (f.sqrt() + m / f)).abs() < 1e-12);
    let v = a_process_bound(1e6, 1e6, 3).unwrap();
    let want = 10f64.powf(0.2) * 1e5 + 1.0;
    assert!((v - want).abs() < 1e-9 * want);
    assert!(a_process_bound(1.0, 2.0, 0).is_err());
    // at F = M the exponent 1 − (l+1)/(4L−2) grows with l
    let seq: Vec<f64> = (0..5).map(|l| a_process_bound(1e12, 1e12, l).unwrap()).collect();
    assert!(seq.windows(2).all(|w| w[1] > w[0]));
    // for F = M³ the first steps help
    let seq: Vec<f64> = (0..3).map(|l| a_process_bound(1e12, 1e4, l).unwrap()).collect();
    assert!(seq.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn a_process_case_ratio_is_finite() {
    let case = a_process_case(0.3, 1.0, 1000.0, 1000.0, 2000.0).unwrap();
    assert!(case.ratio().is_finite() && case.bound > 0.0);
    assert!(a_process_case(0.3, 1.0, 1000.0, 900.0, 2000.0).is_err());
}

#[test]
fn maximal_operator_trivial_cases() {
    let u = 6;
    let count = ((u + 1) as f64).exp().ceil() as u64 - (u as f64).exp().ceil() as u64;
    let zero = maximal_op_sample(0.3, 0.0, 1.0, u, 3, 1).unwrap();
    assert_eq!(zero.lattice_count, count);
    assert!((zero.value - count as f64).abs() < 1e-9);
    assert_eq!(zero.end - zero.start, count);
    let s = maximal_op_sample(0.3, 50.0, 4.0, u, 40, 9).unwrap();
    assert!(s.value <= count as f64 + 1e-9);
    assert!(s.gamma >= 50.0 && s.gamma < 200.0);
    let again = maximal_op_sample(0.3, 50.0, 4.0, u, 40, 9).unwrap();
    assert_eq!(s.value, again.value);
}

#[test]
fn maximal_operator_interval_is_exact() {
    let s = maximal_op_sample(0.5, 3.7, 1.0, 4, 1, 0).unwrap();
    let phase = MonomialPhase::new(3.7, 2.0, s.start as f64, s.end as f64).unwrap();
    assert!((direct_sum(&phase).unwrap().norm() - s.value).abs() < 1e-10);
    // brute force over all subintervals of [e^4, e^5)
    let first = 4f64.exp().ceil() as u64;
    let end = 5f64.exp().ceil() as u64;
    let mut best: f64 = 0.0;
    for a in first..end {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in a..end {
            acc += crate::precision::e_of_f64(3.7 * (k * k) as f64);
            best = best.max(acc.norm());
        }
    }
    assert!((best - s.value).abs() < 1e-9);
}

#[test]
fn lemma5_bound_spot_values() {
    let consts = PaperConstants::new(1.0, 0.3, 20, 0.01).unwrap();
    assert!((lemma5_bound(0, 0, 1, 1, &consts) - 2.0).abs() < 1e-15);
    let a = lemma5_bound(10, 0, 2, 3, &consts);
    let b = lemma5_bound(10, 4, 2, 3, &consts);
    assert!(b < a);
}

#[test]
fn partial_summation_constant_b_is_tight() {
    let a: Vec<Complex64> = [1.0, -2.0, 0.5, 3.0].iter().map(|&x| c(x, 0.0)).collect();
    let b = vec![c(2.0, 0.0); 4];
    let r = partial_summation_check(10, &a, &b, 0.0, 2.0).unwrap();
    assert!(r.holds);
    assert!((r.lhs - r.rhs).abs() < 1e-12);
}

#[test]
fn partial_summation_alternating_over_harmonic() {
    let s0 = 100u64;
    let a: Vec<Complex64> = (0..100).map(|i| c(if i % 2 == 0 { 1.0 } else { -1.0 }, 0.0)).collect();
    let b: Vec<Complex64> = (0..100).map(|i| c(1.0 / (s0 + i) as f64, 0.0)).collect();
    let t = 1.0 / (s0 + 1) as f64;
    let r = partial_summation_check(s0, &a, &b, t, 2.0).unwrap();
    assert!(r.holds);
    assert!(r.c_empirical <= 1.0);
}

#[test]
fn partial_summation_rejects_rough_b() {
    let a = vec![c(1.0, 0.0); 3];
    let b = vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)];
    match partial_summation_check(5, &a, &b, 0.1, 2.0) {
        Err(Error::Hypothesis { index, .. }) => assert_eq!(index, 5),
        other => panic!("{other:?}"),
    }
    assert!(partial_summation_check(5, &a, &vec![c(0.0, 0.0); 3], 0.0, 1.2).is_err());
}

#[test]
fn partial_summation_random_trials() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..1000 {
        let s0: u64 = rng.gen_range(1..500);
        let cc: f64 = rng.gen_range(1.0..4.0);
        let len = ((cc * s0 as f64).floor() as u64 - s0 + 1) as usize;
        let a: Vec<Complex64> = (0..len)
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let freq: f64 = rng.gen_range(0.0..3.0);
        let amp: f64 = rng.gen_range(0.1..2.0);
        // b_s = amp·e(freq·ln s): |b_s − b_{s+1}| ≤ 2π·amp·freq/s
        let b: Vec<Complex64> = (0..len)
            .map(|i| amp * crate::precision::e_of_f64(freq * ((s0 + i as u64) as f64).ln()))
            .collect();
        let t = 2.0 * PI * amp * freq + 1e-12;
        let r = partial_summation_check(s0, &a, &b, t, cc).unwrap();
        assert!(r.holds, "S={s0} c={cc}: {r:?}");
    }
}

#[test]
fn bprocess_csv_layout() {
    let (p, lambda) = spec_example();
    let r = b_process(&p, lambda, 11.0).unwrap();
    let row = r.csv_row(1.0, 0.5, 1000, 1);
    assert_eq!(row.split(',').count(), BPROCESS_CSV_HEADER.split(',').count());
}
