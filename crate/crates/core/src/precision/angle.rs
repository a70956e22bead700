use serde::{Deserialize, Serialize};

use super::dd::{two_prod, ExtReal};
use crate::error::{Error, Result};

/// Phases at or above this magnitude are rejected rather than reduced.
pub const PHASE_LIMIT: f64 = 1e16;

/// Relative error budget of the exp/log double-word path.
const REL_TRANSCENDENTAL: f64 = 1.262_177_448_353_618_9e-29; // 2^-96
/// Relative error of one double-word multiplication by an exact power.
const REL_PRODUCT: f64 = 4.930_380_657_631_324e-32; // 2^-104

const MAX_DENOMINATOR: u32 = 1000;

/// A point of the circle `[0, 1)` together with an absolute accuracy bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitAngle {
    pub value: f64,
    pub err: f64,
}

impl UnitAngle {
    pub const ZERO: UnitAngle = UnitAngle {
        value: 0.0,
        err: 0.0,
    };

    /// Wraps an exact double into `[0, 1)`.
    pub fn from_f64(x: f64) -> Self {
        Self::reduce(ExtReal::from_f64(x), 0.0)
    }

    /// Reduces a double-word phase mod 1 and rounds to a double. `err` is the
    /// accuracy of `x` itself; the rounding residual is added to it.
    pub fn reduce(x: ExtReal, err: f64) -> Self {
        let r = x.frac();
        let mut value = r.hi + r.lo;
        let residual = ((r.hi - value) + r.lo).abs();
        if value >= 1.0 {
            value = 0.0;
        }
        UnitAngle {
            value,
            err: err + residual,
        }
    }

    /// Signed circular difference `self - other` in `[-1/2, 1/2)`.
    pub fn circular_diff(self, other: UnitAngle) -> f64 {
        let d = self.value - other.value;
        d - (d + 0.5).floor()
    }
}

/// Exponent of a monomial phase. Small rationals are recognized so that
/// perfect powers reduce exactly, e.g. `(10^6)^(1/3) = 100`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exponent {
    value: f64,
    ratio: Option<(u32, u32)>,
}

impl Exponent {
    /// Accepts any finite positive `theta`. If `theta` is the double nearest
    /// to `p/q` for some `q <= 1000`, it is treated as exactly `p/q`.
    pub fn new(theta: f64) -> Result<Self> {
        if !(theta.is_finite() && theta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "exponent must be positive and finite, got {theta}"
            )));
        }
        for q in 1..=MAX_DENOMINATOR {
            let p = (theta * q as f64).round();
            if p >= 1.0 && p < u32::MAX as f64 && p / q as f64 == theta {
                return Ok(Self::rational(p as u32, q));
            }
        }
        Ok(Exponent { value: theta, ratio: None })
    }

    pub fn rational(p: u32, q: u32) -> Self {
        assert!(p > 0 && q > 0, "exponent must be positive");
        let g = gcd(p as u64, q as u64) as u32;
        let (p, q) = (p / g, q / g);
        Exponent {
            value: p as f64 / q as f64,
            ratio: Some((p, q)),
        }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn ratio(&self) -> Option<(u32, u32)> {
        self.ratio
    }

    pub fn is_integer(&self) -> bool {
        matches!(self.ratio, Some((_, 1)))
    }

    /// The exponent in double-word precision.
    pub fn to_ext(&self) -> ExtReal {
        match self.ratio {
            Some((p, q)) => ExtReal::ratio(p as u64, q as u64),
            None => ExtReal::from_f64(self.value),
        }
    }

    /// `n^theta` in double-word precision, with a flag telling whether the
    /// result is exact.
    pub fn pow(&self, n: u64) -> (ExtReal, bool) {
        if n <= 1 {
            return (ExtReal::from_u64(n), true);
        }
        match self.ratio {
            Some((p, 1)) => match checked_pow(n, p) {
                Some(v) if v < (1u128 << 106) => (ExtReal::from_u128(v), true),
                _ => (ExtReal::from_u64(n).powi(p), false),
            },
            Some((p, q)) => {
                if let Some(root) = exact_root(n, q) {
                    if let Some(v) = checked_pow(root, p) {
                        if v < (1u128 << 106) {
                            return (ExtReal::from_u128(v), true);
                        }
                    }
                }
                if q == 2 {
                    let s = ExtReal::from_u64(n).sqrt();
                    let whole = ExtReal::from_u64(n).powi(p / 2);
                    (whole * s, false)
                } else {
                    (ExtReal::from_u64(n).powd(self.to_ext()), false)
                }
            }
            None => (ExtReal::from_u64(n).powd(self.to_ext()), false),
        }
    }
}

/// `coefficient * n^theta` evaluated for many `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonomialMap {
    pub coefficient: ExtReal,
    pub exponent: Exponent,
}

impl MonomialMap {
    pub fn new(coefficient: ExtReal, exponent: Exponent) -> Self {
        MonomialMap {
            coefficient,
            exponent,
        }
    }

    /// The phase `coefficient * n^theta` with an absolute error bound.
    pub fn phase(&self, n: u64) -> Result<(ExtReal, f64)> {
        let (power, exact) = self.exponent.pow(n);
        let x = if self.coefficient.lo == 0.0 {
            power.mul_f64(self.coefficient.hi)
        } else {
            self.coefficient * power
        };
        let mag = x.hi.abs();
        if !(mag < PHASE_LIMIT) {
            return Err(Error::OutOfRange {
                value: mag,
                limit: PHASE_LIMIT,
            });
        }
        let err = if exact {
            let (_, e) = two_prod(power.hi, self.coefficient.hi);
            if power.lo == 0.0 && self.coefficient.lo == 0.0 && e == 0.0 {
                0.0
            } else {
                mag * REL_PRODUCT
            }
        } else {
            mag * REL_TRANSCENDENTAL
        };
        Ok((x, err))
    }

    pub fn angle(&self, n: u64) -> Result<UnitAngle> {
        let (x, err) = self.phase(n)?;
        Ok(UnitAngle::reduce(x, err))
    }
}

/// `alpha * n^theta mod 1`.
pub fn frac_monomial(alpha: f64, theta: f64, n: u64) -> Result<UnitAngle> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must be positive and finite, got {alpha}"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    MonomialMap::new(ExtReal::from_f64(alpha), Exponent::new(theta)?).angle(n)
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn checked_pow(base: u64, exp: u32) -> Option<u128> {
    (base as u128).checked_pow(exp)
}

/// `Some(r)` when `n = r^q` exactly.
pub(crate) fn exact_root(n: u64, q: u32) -> Option<u64> {
    if q == 1 {
        return Some(n);
    }
    let guess = (n as f64).powf(1.0 / q as f64).round() as u64;
    (guess.saturating_sub(1)..=guess + 1).find(|&r| checked_pow(r, q) == Some(n as u128))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_input_integer_exponent_is_exact_zero() {
        let a = frac_monomial(1.0, 2.0, 10).unwrap();
        assert_eq!(a, UnitAngle { value: 0.0, err: 0.0 });
    }

    #[test]
    fn perfect_cube_reduces_to_zero() {
        let a = frac_monomial(1.0, 1.0 / 3.0, 1_000_000).unwrap();
        assert_eq!(a.value, 0.0);
        assert_eq!(a.err, 0.0);
    }

    #[test]
    fn two_sqrt_two() {
        // 2*sqrt(2) mod 1 = 0.82842712474619009760337744841939615713934375...
        let a = frac_monomial(std::f64::consts::SQRT_2, 0.5, 4).unwrap();
        assert!((a.value - 0.828_427_124_746_190_1).abs() < 1e-15);
        assert!(a.err < 2f64.powi(-40));
    }

    #[test]
    fn rejects_huge_phases() {
        let e = frac_monomial(1.0, 3.0, 1_000_000).unwrap_err();
        assert!(matches!(e, Error::OutOfRange { .. }));
        assert!(frac_monomial(1.0, 2.0, 99_999_999).is_ok());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(frac_monomial(0.0, 0.5, 3).is_err());
        assert!(frac_monomial(1.0, -0.5, 3).is_err());
        assert!(frac_monomial(1.0, 0.5, 0).is_err());
    }

    #[test]
    fn exponent_recognizes_small_rationals() {
        assert_eq!(Exponent::new(0.3).unwrap().ratio(), Some((3, 10)));
        assert_eq!(Exponent::new(1.0 / 3.0).unwrap().ratio(), Some((1, 3)));
        assert_eq!(Exponent::new(2.0).unwrap().ratio(), Some((2, 1)));
        assert_eq!(Exponent::new(std::f64::consts::PI / 10.0).unwrap().ratio(), None);
    }

    #[test]
    fn rounding_up_to_one_wraps_to_zero() {
        let a = UnitAngle::reduce(ExtReal::new(1.0, -1e-20), 0.0);
        assert_eq!(a.value, 0.0);
        assert!(a.err <= 1e-19);
    }

    #[test]
    fn circular_diff_range() {
        let a = UnitAngle::from_f64(0.9);
        let b = UnitAngle::from_f64(0.1);
        assert!((a.circular_diff(b) + 0.2).abs() < 1e-15);
        assert!((b.circular_diff(a) - 0.2).abs() < 1e-15);
    }
}
