//! Double-word ("double-double") arithmetic.
//!
//! Values are unevaluated sums `hi + lo` with `|lo| <= ulp(hi)/2`, giving
//! roughly 106 bits of significand. Only the handful of operations needed
//! for phase formation are provided.

use std::cmp::Ordering;
use std::ops::{Add, Mul, Neg, Sub};

const LN2: ExtReal = ExtReal {
    hi: 6.931_471_805_599_453e-1,
    lo: 2.319_046_813_846_299_6e-17,
};

#[inline]
pub(crate) fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

// valid only for |a| >= |b|
#[inline]
pub(crate) fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
pub(crate) fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ExtReal {
    pub hi: f64,
    pub lo: f64,
}

impl ExtReal {
    pub const ZERO: ExtReal = ExtReal { hi: 0.0, lo: 0.0 };
    pub const ONE: ExtReal = ExtReal { hi: 1.0, lo: 0.0 };

    #[inline]
    pub const fn from_f64(x: f64) -> Self {
        ExtReal { hi: x, lo: 0.0 }
    }

    /// Renormalizes an arbitrary pair into canonical form.
    #[inline]
    pub fn new(hi: f64, lo: f64) -> Self {
        let (h, l) = two_sum(hi, lo);
        ExtReal { hi: h, lo: l }
    }

    /// Exact for every integer below 2^106.
    pub fn from_u128(v: u128) -> Self {
        let hi = v as f64;
        // `hi` is v rounded to 53 bits, so the residual fits in an i128 and,
        // for v < 2^106, in 53 bits.
        let rest = v as i128 - hi as i128;
        ExtReal::new(hi, rest as f64)
    }

    #[inline]
    pub fn from_u64(v: u64) -> Self {
        Self::from_u128(v as u128)
    }

    /// Exact quotient p/q rounded to double-word precision.
    pub fn ratio(p: u64, q: u64) -> Self {
        ExtReal::from_u64(p).div(ExtReal::from_u64(q))
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn abs(self) -> Self {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }

    #[inline]
    pub fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        let e = e + self.lo * b;
        let (h, l) = quick_two_sum(p, e);
        ExtReal { hi: h, lo: l }
    }

    #[inline]
    pub fn add_f64(self, b: f64) -> Self {
        let (s, e) = two_sum(self.hi, b);
        let e = e + self.lo;
        let (h, l) = quick_two_sum(s, e);
        ExtReal { hi: h, lo: l }
    }

    pub fn div(self, b: ExtReal) -> Self {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (h, l) = quick_two_sum(q1, q2);
        ExtReal { hi: h, lo: l }.add_f64(q3)
    }

    pub fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return ExtReal::ZERO;
        }
        // One Newton step from the double approximation doubles the precision.
        let x = self.hi.sqrt();
        let (p, e) = two_prod(x, x);
        let resid = ((self.hi - p) - e + self.lo) / (2.0 * x);
        ExtReal::new(x, resid)
    }

    pub fn floor(self) -> Self {
        let h = self.hi.floor();
        if h == self.hi {
            let l = self.lo.floor();
            ExtReal::new(h, l)
        } else {
            ExtReal { hi: h, lo: 0.0 }
        }
    }

    /// Fractional part in double-word precision, in `[0, 1)`.
    pub fn frac(self) -> Self {
        let fl = self.hi.floor();
        // hi - floor(hi) is exact.
        let mut r = ExtReal::new(self.hi - fl, self.lo);
        if r.hi < 0.0 {
            r = r.add_f64(1.0);
        } else if r.hi >= 1.0 {
            r = r.add_f64(-1.0);
        }
        r
    }

    pub fn exp(self) -> Self {
        if self.hi > 709.0 {
            return ExtReal::from_f64(f64::INFINITY);
        }
        if self.hi < -745.0 {
            return ExtReal::ZERO;
        }
        let k = (self.hi / LN2.hi).round();
        let r = self - LN2.mul_f64(k);
        // exp(r) = (1 + p)^(2^9) with p = expm1(r / 2^9)
        let t = r.mul_f64(1.0 / 512.0);
        let mut term = t;
        let mut p = t;
        for n in 2..=11 {
            term = (term * t).div(ExtReal::from_f64(n as f64));
            p = p + term;
        }
        for _ in 0..9 {
            // (1+p)^2 - 1 = 2p + p^2
            p = p.mul_f64(2.0) + p * p;
        }
        let e = p.add_f64(1.0);
        let scale = 2f64.powi(k as i32);
        ExtReal {
            hi: e.hi * scale,
            lo: e.lo * scale,
        }
    }

    pub fn ln(self) -> Self {
        if self.hi <= 0.0 {
            return ExtReal::from_f64(f64::NAN);
        }
        let y0 = ExtReal::from_f64(self.hi.ln());
        // Newton on exp(y) = x.
        y0 + self * (-y0).exp() - ExtReal::ONE
    }

    pub fn powd(self, p: ExtReal) -> Self {
        (p * self.ln()).exp()
    }

    pub fn powi(self, mut n: u32) -> Self {
        let mut base = self;
        let mut acc = ExtReal::ONE;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            n >>= 1;
        }
        acc
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.hi.is_finite()
    }
}

impl From<f64> for ExtReal {
    fn from(x: f64) -> Self {
        ExtReal::from_f64(x)
    }
}

impl Neg for ExtReal {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        ExtReal {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Add for ExtReal {
    type Output = Self;
    #[inline]
    fn add(self, b: Self) -> Self {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let e = e + t;
        let (s, e) = quick_two_sum(s, e);
        let e = e + f;
        let (h, l) = quick_two_sum(s, e);
        ExtReal { hi: h, lo: l }
    }
}

impl Sub for ExtReal {
    type Output = Self;
    #[inline]
    fn sub(self, b: Self) -> Self {
        self + (-b)
    }
}

impl Mul for ExtReal {
    type Output = Self;
    #[inline]
    fn mul(self, b: Self) -> Self {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (h, l) = quick_two_sum(p, e);
        ExtReal { hi: h, lo: l }
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            ord => ord,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_ln_round_trip() {
        for &x in &[1e-3, 0.5, 1.0, 2.0, 10.0, 123.456, 1e6, 1e15] {
            let v = ExtReal::from_f64(x);
            let back = v.ln().exp();
            let rel = ((back - v).to_f64() / x).abs();
            assert!(rel < 1e-29, "x={x} rel={rel:e}");
        }
    }

    #[test]
    fn exp_of_one_matches_e() {
        // e = 2.718281828459045235360287471352662497757...
        let e = ExtReal::ONE.exp();
        let want = ExtReal::new(2.718_281_828_459_045, 1.445_646_891_729_250_2e-16);
        assert!((e - want).to_f64().abs() < 1e-31);
    }

    #[test]
    fn sqrt_two_squared() {
        let r = ExtReal::from_f64(2.0).sqrt();
        let err = (r * r - ExtReal::from_f64(2.0)).to_f64().abs();
        assert!(err < 1e-31);
    }

    #[test]
    fn from_u128_exact() {
        let v: u128 = (1u128 << 100) + 12345;
        let d = ExtReal::from_u128(v);
        assert_eq!(d.hi as u128 as i128 + d.lo as i128, v as i128);
    }

    #[test]
    fn frac_handles_negative_low_word() {
        let x = ExtReal::new(3.0, -1e-20);
        let f = x.frac();
        assert!(((f - ExtReal::ONE).to_f64() + 1e-20).abs() < 1e-36);
    }

    #[test]
    fn renormalized_invariant() {
        let a = ExtReal::from_f64(1.0).div(ExtReal::from_f64(3.0));
        let b = a * a + a.exp();
        for v in [a, b] {
            let ulp = f64::EPSILON * v.hi.abs();
            assert!(v.lo.abs() <= ulp / 2.0);
        }
    }
}
