use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

use num_complex::Complex64;
use rayon::prelude::*;

use super::angle::UnitAngle;
use super::dd::two_sum;

/// Chunk length of every parallel reduction. Fixed so that results do not
/// depend on the worker count.
pub const REDUCTION_CHUNK: usize = 4096;

/// Kahan–Babuška–Neumaier accumulator.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, v: f64) {
        let (s, e) = two_sum(self.sum, v);
        self.sum = s;
        self.comp += e;
    }

    /// Merges another accumulator, keeping both compensation terms.
    #[inline]
    pub fn merge(&mut self, other: NeumaierSum) {
        self.add(other.sum);
        self.comp += other.comp;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = NeumaierSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Compensated complex accumulator.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ComplexAcc {
    re: NeumaierSum,
    im: NeumaierSum,
}

impl ComplexAcc {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    #[inline]
    pub fn merge(&mut self, other: ComplexAcc) {
        self.re.merge(other.re);
        self.im.merge(other.im);
    }

    #[inline]
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

/// `(cos 2πx, sin 2πx)` for `x` already in `[0, 1)`, exact at multiples of 1/8.
#[inline]
fn cis_turns(x: f64) -> (f64, f64) {
    let t = 4.0 * x;
    let quadrant = t.floor();
    let r = t - quadrant;
    let (c, s) = if r == 0.5 {
        (FRAC_1_SQRT_2, FRAC_1_SQRT_2)
    } else if r < 0.5 {
        let (s, c) = (r * FRAC_PI_2).sin_cos();
        (c, s)
    } else {
        let (s, c) = ((1.0 - r) * FRAC_PI_2).sin_cos();
        (s, c)
    };
    match quadrant as i64 & 3 {
        0 => (c, s),
        1 => (-s, c),
        2 => (-c, -s),
        _ => (s, -c),
    }
}

/// `e(x) = exp(2πi x)`.
#[inline]
pub fn e_of(x: UnitAngle) -> Complex64 {
    let (c, s) = cis_turns(x.value);
    Complex64::new(c, s)
}

/// `e(x)` for an arbitrary real, reduced mod 1 in double precision.
#[inline]
pub fn e_of_f64(x: f64) -> Complex64 {
    let (c, s) = cis_turns(x - x.floor());
    Complex64::new(c, s)
}

/// `sin(πx)` for arbitrary double-word input `hi + lo`, with the argument
/// reduced mod 2 before rounding.
#[inline]
pub fn sin_pi(hi: f64, lo: f64) -> f64 {
    // sin(πx) = Im e(x/2)
    let half = hi * 0.5;
    let r = half - half.floor();
    let r = r + lo * 0.5;
    let r = r - r.floor();
    cis_turns(r).1
}

/// Compensated `Σ e(x_i)`.
pub fn sum_phases<I: IntoIterator<Item = UnitAngle>>(angles: I) -> Complex64 {
    let mut acc = ComplexAcc::new();
    for a in angles {
        acc.add(e_of(a));
    }
    acc.value()
}

/// Deterministic parallel compensated sum of `f(i)` over `0..len`.
pub fn par_sum<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let chunks: Vec<NeumaierSum> = (0..len.div_ceil(REDUCTION_CHUNK))
        .into_par_iter()
        .map(|c| {
            let lo = c * REDUCTION_CHUNK;
            let hi = (lo + REDUCTION_CHUNK).min(len);
            (lo..hi).map(&f).collect()
        })
        .collect();
    let mut total = NeumaierSum::new();
    for c in chunks {
        total.merge(c);
    }
    total.value()
}

/// Deterministic parallel compensated complex sum of `f(i)` over `0..len`.
pub fn par_sum_complex<F>(len: usize, f: F) -> Complex64
where
    F: Fn(usize) -> Complex64 + Sync,
{
    let chunks: Vec<ComplexAcc> = (0..len.div_ceil(REDUCTION_CHUNK))
        .into_par_iter()
        .map(|c| {
            let lo = c * REDUCTION_CHUNK;
            let hi = (lo + REDUCTION_CHUNK).min(len);
            let mut acc = ComplexAcc::new();
            for i in lo..hi {
                acc.add(f(i));
            }
            acc
        })
        .collect();
    let mut total = ComplexAcc::new();
    for c in chunks {
        total.merge(c);
    }
    total.value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn e_of_exact_points() {
        assert_eq!(e_of(UnitAngle::ZERO), Complex64::new(1.0, 0.0));
        assert_eq!(e_of(UnitAngle::from_f64(0.5)), Complex64::new(-1.0, 0.0));
        assert_eq!(e_of(UnitAngle::from_f64(0.25)), Complex64::new(0.0, 1.0));
        assert_eq!(
            e_of(UnitAngle::from_f64(0.125)),
            Complex64::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2)
        );
        assert_eq!(
            e_of(UnitAngle::from_f64(0.875)),
            Complex64::new(FRAC_1_SQRT_2, -FRAC_1_SQRT_2)
        );
    }

    #[test]
    fn sum_phases_small_cases() {
        assert_eq!(sum_phases(std::iter::empty()), Complex64::new(0.0, 0.0));
        let z = sum_phases([UnitAngle::ZERO, UnitAngle::from_f64(0.5)]);
        assert_eq!(z, Complex64::new(0.0, 0.0));
        let z = sum_phases(std::iter::repeat_n(UnitAngle::ZERO, 100_000));
        assert_eq!(z, Complex64::new(100_000.0, 0.0));
    }

    #[test]
    fn reversal_agrees_at_a_million_terms() {
        let angles: Vec<UnitAngle> = (1..=1_000_000u64)
            .map(|n| UnitAngle::from_f64((n as f64 * 0.618_033_988_749_894_9).fract()))
            .collect();
        let fwd = sum_phases(angles.iter().copied());
        let rev = sum_phases(angles.iter().rev().copied());
        let scale = fwd.norm().max(1.0);
        assert!((fwd - rev).norm() / scale <= 1e-12);
    }

    #[test]
    fn sin_pi_reduces_large_arguments() {
        assert_eq!(sin_pi(1e6, 0.0), 0.0);
        assert!((sin_pi(1e6 + 0.5, 0.0) - 1.0).abs() < 1e-15);
        assert!((sin_pi(0.25, 0.0) - FRAC_1_SQRT_2).abs() < 1e-16);
    }

    #[test]
    fn par_sum_matches_serial() {
        let f = |i: usize| (i as f64).sqrt().sin();
        let serial: NeumaierSum = (0..50_000).map(f).collect();
        assert!((par_sum(50_000, f) - serial.value()).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn unit_modulus(x in 0.0f64..1.0) {
            let z = e_of(UnitAngle::from_f64(x));
            prop_assert!((z.norm() - 1.0).abs() <= 4.0 * f64::EPSILON);
        }
    }
}
