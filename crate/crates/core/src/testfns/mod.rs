//! Even test functions with evaluable Fourier transforms.
//!
//! Convention: `f̂(ξ) = ∫ f(x) e(-xξ) dx`.
//!
//! * `gaussian:σ` is `exp(-πx²/σ²)`, with `f̂(ξ) = σ exp(-πσ²ξ²)`.
//! * `fejer:s` is `s·sinc²(sx)` (`sinc y = sin πy / πy`), so `f(0) = s`,
//!   `∫f = 1` and `f̂(ξ) = (1 - |ξ|/s)₊` is supported in `[-s, s]`.
//! * `bump:s` is `exp(1 - 1/(1 - (x/s)²))` on `(-s, s)`, so `f(0) = 1`; its
//!   transform is read from a precomputed table with cubic interpolation.

mod bump;
pub mod quadrature;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::precision::{sin_pi, two_prod, ExtReal, NeumaierSum, UnitAngle};
use quadrature::{gauss_kronrod, GaussLegendre};

/// Tail tolerance required by [`poisson_check`].
pub const POISSON_TAIL: f64 = 1e-12;

const QUAD_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestKind {
    Gaussian { sigma: f64 },
    Fejer { s: f64 },
    SmoothBump { s: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestFunction {
    kind: TestKind,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

// sin(πy)/(πy)
fn sinc(y: f64) -> f64 {
    if y.abs() < 1e-8 {
        1.0 - (PI * y).powi(2) / 6.0
    } else {
        sin_pi(y, 0.0) / (PI * y)
    }
}

// Σ_{j>=0} exp(-c (a+j)²) for a > 0.
fn gaussian_tail(c: f64, a: f64) -> f64 {
    if a <= 0.0 {
        return f64::INFINITY;
    }
    let first = (-c * a * a).exp();
    if first == 0.0 {
        return 0.0;
    }
    first / -(-2.0 * c * a).exp_m1()
}

impl TestFunction {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        positive("sigma", sigma)?;
        Ok(TestFunction {
            kind: TestKind::Gaussian { sigma },
        })
    }

    pub fn fejer(s: f64) -> Result<Self> {
        positive("s", s)?;
        Ok(TestFunction {
            kind: TestKind::Fejer { s },
        })
    }

    pub fn bump(s: f64) -> Result<Self> {
        positive("s", s)?;
        bump::table();
        Ok(TestFunction {
            kind: TestKind::SmoothBump { s },
        })
    }

    pub fn kind(&self) -> TestKind {
        self.kind
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self.kind {
            TestKind::Gaussian { sigma } => (-PI * (x / sigma).powi(2)).exp(),
            TestKind::Fejer { s } => s * sinc(s * x.abs()).powi(2),
            TestKind::SmoothBump { s } => bump::unit_bump(x / s),
        }
    }

    pub fn transform(&self, xi: f64) -> f64 {
        match self.kind {
            TestKind::Gaussian { sigma } => sigma * (-PI * (sigma * xi).powi(2)).exp(),
            TestKind::Fejer { s } => (1.0 - xi.abs() / s).max(0.0),
            TestKind::SmoothBump { s } => s * bump::table().eval(s * xi),
        }
    }

    /// `∫f = f̂(0)`.
    pub fn integral(&self) -> f64 {
        match self.kind {
            TestKind::Gaussian { sigma } => sigma,
            TestKind::Fejer { .. } => 1.0,
            TestKind::SmoothBump { s } => s * bump::table().integral(),
        }
    }

    pub fn at_zero(&self) -> f64 {
        match self.kind {
            TestKind::Fejer { s } => s,
            _ => 1.0,
        }
    }

    /// True when `f̂` vanishes identically outside a bounded interval.
    pub fn transform_is_compact(&self) -> bool {
        matches!(self.kind, TestKind::Fejer { .. })
    }

    /// Smallest `r` with `|f| < tol` outside `[-r, r]` (for Fejér, of its envelope).
    pub fn decay_radius(&self, tol: f64) -> f64 {
        if tol >= self.at_zero() {
            return 0.0;
        }
        match self.kind {
            TestKind::Gaussian { sigma } => {
                if tol <= 0.0 {
                    return f64::INFINITY;
                }
                sigma * ((1.0 / tol).ln() / PI).sqrt()
            }
            TestKind::Fejer { s } => {
                if tol <= 0.0 {
                    return f64::INFINITY;
                }
                // |f(x)| <= 1/(π² s x²)
                1.0 / (PI * (s * tol).sqrt())
            }
            TestKind::SmoothBump { s } => {
                if tol <= 0.0 {
                    return s;
                }
                let l = 1.0 - tol.ln();
                s * (1.0 - 1.0 / l).sqrt()
            }
        }
    }

    /// Smallest `r` with `|f̂| < tol` outside `[-r, r]`.
    pub fn transform_decay_radius(&self, tol: f64) -> f64 {
        match self.kind {
            TestKind::Gaussian { sigma } => {
                if tol >= sigma {
                    return 0.0;
                }
                if tol <= 0.0 {
                    return f64::INFINITY;
                }
                ((sigma / tol).ln() / PI).sqrt() / sigma
            }
            TestKind::Fejer { s } => s * (1.0 - tol).max(0.0),
            TestKind::SmoothBump { s } => bump::table().decay_radius(tol / s) / s,
        }
    }

    /// Bound on `∫_{|ξ| > ξ0} |f̂(ξ)| dξ`.
    pub fn transform_tail(&self, xi0: f64) -> f64 {
        let xi0 = xi0.max(0.0);
        match self.kind {
            TestKind::Gaussian { sigma } => {
                // ∫_{|ξ|>ξ0} σ e^{-πσ²ξ²} = erfc(√π σ ξ0) <= e^{-πσ²ξ0²}
                (-PI * (sigma * xi0).powi(2)).exp()
            }
            TestKind::Fejer { s } => {
                let r = (1.0 - xi0 / s).max(0.0);
                s * r * r
            }
            TestKind::SmoothBump { s } => 2.0 * bump::table().tail_mass(s * xi0),
        }
    }

    /// Bound on `Σ_{|k| > K} |f(N(x + k))|`.
    pub fn lattice_tail(&self, n: f64, x: f64, k: u64) -> f64 {
        let gap = k as f64 - x.abs();
        if gap <= 0.0 {
            return f64::INFINITY;
        }
        match self.kind {
            TestKind::Gaussian { sigma } => {
                2.0 * gaussian_tail(PI * (n / sigma).powi(2), gap + 1.0)
            }
            TestKind::Fejer { s } => {
                // s·sinc²(sN(x+k)) = sin²(πsN(x+k)) / (π² s N² (x+k)²); the
                // numerator does not depend on k when sN is an integer.
                let m = s * n;
                let num = if m.fract() == 0.0 {
                    let (hi, lo) = two_prod(m, x);
                    sin_pi(hi, lo).powi(2)
                } else {
                    1.0
                };
                // Σ_{k'>K} 1/(k'-|x|)² <= 1/(K-|x|)
                2.0 * num / (PI * PI * s * n * n * gap)
            }
            TestKind::SmoothBump { s } => {
                if n * (gap + 1.0) >= s {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// Bound on `(1/N) Σ_{|m| > m0} |f̂(m/N)|`.
    pub fn dual_tail(&self, n: f64, m0: u64) -> f64 {
        let a = m0 as f64 + 1.0;
        match self.kind {
            TestKind::Gaussian { sigma } => {
                2.0 * sigma / n * gaussian_tail(PI * (sigma / n).powi(2), a)
            }
            TestKind::Fejer { s } => {
                let big_m = s * n;
                // terms m0 < m < sN
                let top = big_m.ceil() - 1.0;
                if top < a {
                    return 0.0;
                }
                let count = top - a + 1.0;
                let msum = (a + top) * count / 2.0;
                2.0 / n * (count - msum / big_m)
            }
            // (1/N) Σ_{m>m0} M(m/N) <= ∫_{m0/N}^∞ M for non-increasing M
            TestKind::SmoothBump { .. } => self.transform_tail(m0 as f64 / n),
        }
    }

    /// `Σ_k f(N(t + k))`.
    pub fn periodized(&self, n: f64, t: f64) -> f64 {
        let t = t - t.round();
        match self.kind {
            TestKind::Fejer { s } => fejer_periodized(s * n, n, t),
            TestKind::Gaussian { .. } | TestKind::SmoothBump { .. } => {
                let r = self.decay_radius(1e-18) / n;
                let lo = (-t - r).ceil() as i64;
                let hi = (-t + r).floor() as i64;
                let mut acc = NeumaierSum::new();
                for k in lo.min(0)..=hi.max(0) {
                    acc.add(self.eval(n * (t + k as f64)));
                }
                acc.value()
            }
        }
    }
}

// (1/N) Σ_{|m|<M} (1 - |m|/M) e(mt) for M = sN, t in [-1/2, 1/2].
fn fejer_periodized(big_m: f64, n: f64, t: f64) -> f64 {
    let j = big_m.ceil() - 1.0;
    let l = j + 1.0;
    let a = l / big_m;
    if t == 0.0 {
        return (a * l + (1.0 - a) * (2.0 * j + 1.0)) / n;
    }
    let den = sin_pi(t, 0.0);
    let (fh, fl) = two_prod(l, t);
    let fej = (sin_pi(fh, fl) / den).powi(2) / l;
    let dir = if a == 1.0 {
        0.0
    } else {
        let (dh, dl) = two_prod(2.0 * j + 1.0, t);
        sin_pi(dh, dl) / den
    };
    (a * fej + (1.0 - a) * dir) / n
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            TestKind::Gaussian { sigma } => write!(f, "gaussian:{sigma:?}"),
            TestKind::Fejer { s } => write!(f, "fejer:{s:?}"),
            TestKind::SmoothBump { s } => write!(f, "bump:{s:?}"),
        }
    }
}

impl FromStr for TestFunction {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let bad = || {
            Error::InvalidParameter(format!(
                "test function '{text}' (expected gaussian:σ, fejer:s or bump:s)"
            ))
        };
        let (name, param) = text.split_once(':').ok_or_else(bad)?;
        let v: f64 = param.trim().parse().map_err(|_| bad())?;
        match name.trim().to_ascii_lowercase().as_str() {
            "gaussian" => Self::gaussian(v),
            "fejer" => Self::fejer(v),
            "bump" => Self::bump(v),
            _ => Err(bad()),
        }
    }
}

impl Serialize for TestFunction {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TestFunction {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Smallest K for which both Poisson-summation tails are below `tol`.
pub fn required_k(f: &TestFunction, n: u64, x: f64, tol: f64) -> Option<u64> {
    let nf = n as f64;
    let ok = |k: u64| {
        f.lattice_tail(nf, x, k) <= tol && k.checked_mul(n).is_some_and(|m| f.dual_tail(nf, m) <= tol)
    };
    let mut hi = 1u64;
    while !ok(hi) {
        hi = hi.checked_mul(2)?;
        if hi > 1 << 50 {
            return None;
        }
    }
    let mut lo = hi / 2;
    while lo + 1 < hi {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// Largest number of dual terms [`poisson_check`] will evaluate.
pub const POISSON_TERM_LIMIT: u64 = 100_000_000;

/// Both sides of `Σ_{|k|<=K} f(N(x+k)) = (1/N) Σ_{|m|<=KN} f̂(m/N) e(mx)`.
pub fn poisson_check(f: &TestFunction, n: u64, x: f64, k: u64) -> Result<(f64, f64)> {
    if n == 0 || !x.is_finite() {
        return Err(Error::InvalidParameter("N must be positive and x finite".into()));
    }
    let nf = n as f64;
    let m_max = k.checked_mul(n).unwrap_or(u64::MAX);
    let tails_ok = f.lattice_tail(nf, x, k) <= POISSON_TAIL && f.dual_tail(nf, m_max) <= POISSON_TAIL;
    if !tails_ok {
        return Err(Error::KTooSmall {
            required: required_k(f, n, x, POISSON_TAIL).unwrap_or(u64::MAX),
            tolerance: POISSON_TAIL,
        });
    }
    // Terms beyond the support of f̂ vanish exactly.
    let m_eff = if f.transform_is_compact() {
        m_max.min((f.transform_decay_radius(0.0) * nf).ceil() as u64)
    } else {
        m_max
    };
    if m_eff > POISSON_TERM_LIMIT {
        return Err(Error::SizeGuard {
            what: "dual-side terms K*N",
            got: m_eff,
            limit: POISSON_TERM_LIMIT,
        });
    }
    let mut lhs = NeumaierSum::new();
    let ki = k as i64;
    for j in -ki..=ki {
        lhs.add(f.eval(nf * (x + j as f64)));
    }
    let mut rhs = NeumaierSum::new();
    rhs.add(f.transform(0.0));
    let xe = ExtReal::from_f64(x);
    for m in 1..=m_eff {
        let w = f.transform(m as f64 / nf);
        if w == 0.0 {
            continue;
        }
        let phase = UnitAngle::reduce(xe.mul_f64(m as f64), 0.0);
        rhs.add(2.0 * w * crate::precision::e_of(phase).re);
    }
    Ok((lhs.value(), rhs.value() / nf))
}

// (f̂(ξ) by quadrature, stored value) for the side of the pair that is
// integrable by quadrature to full accuracy.
fn quadrature_pair(f: &TestFunction, xi: f64, legendre: Option<&GaussLegendre>) -> (f64, f64) {
    let integrate = |g: &dyn Fn(f64) -> f64, a: f64, b: f64| match legendre {
        Some(gl) => gl.adaptive(g, a, b, QUAD_TOL).value,
        None => gauss_kronrod(g, a, b, QUAD_TOL).value,
    };
    let w = 2.0 * PI * xi;
    match f.kind {
        TestKind::Gaussian { .. } => {
            let r = f.decay_radius(1e-18);
            let v = 2.0 * integrate(&|x| f.eval(x) * (w * x).cos(), 0.0, r);
            (v, f.transform(xi))
        }
        TestKind::Fejer { s } => {
            // f decays only like x⁻², so the pair is checked from the compact side.
            let v = 2.0 * integrate(&|u| (1.0 - u / s) * (w * u).cos(), 0.0, s);
            (v, f.eval(xi))
        }
        TestKind::SmoothBump { s } => {
            let v = 2.0 * integrate(&|x| f.eval(x) * (w * x).cos(), 0.0, s);
            (v, f.transform(xi))
        }
    }
}

/// Max over `grid` of |quadrature transform − stored transform|.
pub fn transform_accuracy(f: &TestFunction, grid: &[f64]) -> f64 {
    grid.iter()
        .map(|&xi| {
            let (q, stored) = quadrature_pair(f, xi, None);
            (q - stored).abs()
        })
        .fold(0.0, f64::max)
}

/// Max over `grid` of the gap between the Kronrod and the 20-point Legendre quadratures.
pub fn quadrature_consistency(f: &TestFunction, grid: &[f64]) -> f64 {
    let gl = GaussLegendre::new(20);
    grid.iter()
        .map(|&xi| (quadrature_pair(f, xi, None).0 - quadrature_pair(f, xi, Some(&gl)).0).abs())
        .fold(0.0, f64::max)
}

/// `∫ f(x) sin(2πxξ) dx` by quadrature; zero for even `f`.
pub fn transform_imaginary(f: &TestFunction, xi: f64) -> f64 {
    let r = match f.kind {
        TestKind::SmoothBump { s } => s,
        _ => f.decay_radius(1e-18),
    };
    let w = 2.0 * PI * xi;
    gauss_kronrod(|x| f.eval(x) * (w * x).sin(), -r, r, QUAD_TOL).value
}
