//! Exponential sums `Σ e(φ(n))` for monomial phases and the van der Corput
//! machinery built on them: the B-process main term, the A-process bound,
//! the maximal operator over dyadic-exponential ranges and the
//! partial-summation inequality.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::precision::{
    e_of, par_sum_complex, ComplexAcc, Exponent, ExtReal, MonomialMap, UnitAngle, PHASE_LIMIT,
};

mod hull;
#[cfg(test)]
mod tests;

/// Largest number of lattice points a direct sum will visit.
pub const DIRECT_SUM_LIMIT: u64 = 1_000_000_000;
/// Largest range `[e^u, e^{u+1})` the maximal operator will enumerate.
pub const MAXIMAL_OP_LIMIT: u64 = 50_000_000;
/// Grid size for the growth-condition scan.
pub const GROWTH_GRID: usize = 100;

const GROWTH_SLACK: f64 = 1e-12;
const BETA_TOL: f64 = 1e-10;
// relative error of a double-word phase after a few powd steps
const DD_REL: f64 = 1e-28;

/// `φ(x) = coefficient · x^exponent` restricted to `[lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonomialPhase {
    pub coefficient: ExtReal,
    pub exponent: Exponent,
    pub lo: f64,
    pub hi: f64,
}

impl MonomialPhase {
    pub fn new(coefficient: f64, exponent: f64, lo: f64, hi: f64) -> Result<Self> {
        Self::with_ext(ExtReal::from_f64(coefficient), Exponent::new(exponent)?, lo, hi)
    }

    pub fn with_ext(coefficient: ExtReal, exponent: Exponent, lo: f64, hi: f64) -> Result<Self> {
        if !coefficient.is_finite() {
            return Err(Error::InvalidParameter("coefficient must be finite".into()));
        }
        if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo <= hi) {
            return Err(Error::InvalidParameter(format!(
                "domain [{lo}, {hi}) must satisfy 0 <= A <= B"
            )));
        }
        Ok(MonomialPhase {
            coefficient,
            exponent,
            lo,
            hi,
        })
    }

    /// `φ^{(r)}(x)` from the falling factorial of the exponent.
    pub fn derivative(&self, r: u32, x: f64) -> f64 {
        let e = self.exponent.value();
        let falling: f64 = (0..r).map(|i| e - i as f64).product();
        self.coefficient.to_f64() * falling * x.powf(e - r as f64)
    }

    /// Integers in `[lo, hi)` as `first..end`.
    pub fn lattice(&self) -> (u64, u64) {
        (self.lo.ceil() as u64, self.hi.ceil() as u64)
    }

    pub fn lattice_count(&self) -> u64 {
        let (a, b) = self.lattice();
        b.saturating_sub(a)
    }

    fn map(&self) -> MonomialMap {
        MonomialMap::new(self.coefficient, self.exponent)
    }

    fn ext_value(&self, x: ExtReal) -> ExtReal {
        if x.hi == 0.0 {
            return ExtReal::ZERO;
        }
        self.coefficient * x.powd(self.exponent.to_ext())
    }

    fn ext_first_derivative(&self, x: f64) -> ExtReal {
        let e = self.exponent.to_ext();
        let p = ExtReal::from_f64(x).powd(e - ExtReal::ONE);
        self.coefficient * e * p
    }

    fn negated(&self) -> Self {
        MonomialPhase {
            coefficient: -self.coefficient,
            ..*self
        }
    }
}

/// `Σ_{n ∈ [A,B) ∩ ℤ} e(φ(n))`.
pub fn direct_sum(phase: &MonomialPhase) -> Result<Complex64> {
    let count = phase.lattice_count();
    if count > DIRECT_SUM_LIMIT {
        return Err(Error::SizeGuard {
            what: "lattice points in direct sum",
            got: count,
            limit: DIRECT_SUM_LIMIT,
        });
    }
    if count == 0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let (first, end) = phase.lattice();
    let map = phase.map();
    // |φ| is monotone on the domain, so the endpoints bound every phase.
    map.phase(first)?;
    map.phase(end - 1)?;
    Ok(par_sum_complex(count as usize, |i| {
        let a = map
            .angle(first + i as u64)
            .expect("phase magnitude checked at both endpoints");
        e_of(a)
    }))
}

/// `α^Θ (θ^{Θ−1} − θ^Θ)` in double-word precision.
fn beta_ext(alpha: f64, theta: Exponent) -> ExtReal {
    let big = big_theta(theta);
    let t = theta.to_ext();
    let a = ExtReal::from_f64(alpha).powd(big);
    a * (t.powd(big - ExtReal::ONE) - t.powd(big))
}

/// The same shape with `θ^{1−Θ}` in place of `θ^{Θ−1}`.
pub fn printed_beta(alpha: f64, theta: f64) -> f64 {
    let big = 1.0 / (1.0 - theta);
    alpha.powf(big) * (theta.powf(1.0 - big) - theta.powf(big))
}

fn big_theta(theta: Exponent) -> ExtReal {
    ExtReal::ONE.div(ExtReal::ONE - theta.to_ext())
}

fn check_theta(theta: f64) -> Result<Exponent> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "theta must lie in (0, 1), got {theta}"
        )));
    }
    Exponent::new(theta)
}

/// `φ(x_m) − m x_m` for `φ(y) = αk y^θ`, evaluated directly at the
/// stationary point `x_m = (αkθ/m)^Θ`.
fn stationary_phase_direct(alpha: f64, theta: Exponent, k: u64, m: u64) -> ExtReal {
    let big = big_theta(theta);
    let ak = ExtReal::from_f64(alpha) * ExtReal::from_u64(k);
    let x = (ak * theta.to_ext()).div(ExtReal::from_u64(m)).powd(big);
    ak * x.powd(theta.to_ext()) - ExtReal::from_u64(m) * x
}

/// The constant in `φ(x_m) − m x_m = β k^Θ m^{1−Θ}`, checked numerically on
/// a small `(k, m)` grid before it is returned.
pub fn derive_beta(alpha: f64, theta: f64) -> Result<f64> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    let th = check_theta(theta)?;
    let beta = beta_ext(alpha, th);
    let big = big_theta(th);
    let grid = [
        (1, 1),
        (3, 2),
        (10, 7),
        (50, 3),
        (100, 7),
        (100, 41),
        (777, 5),
        (1000, 999),
        (12345, 17),
        (100_000, 3),
    ];
    for (k, m) in grid {
        let direct = stationary_phase_direct(alpha, th, k, m);
        let scale = ExtReal::from_u64(k).powd(big) * ExtReal::from_u64(m).powd(ExtReal::ONE - big);
        let measured = direct.div(scale).to_f64();
        if !((measured - beta.to_f64()).abs() <= BETA_TOL * beta.to_f64().abs()) {
            return Err(Error::BetaMismatch {
                closed_form: beta.to_f64(),
                alternative: printed_beta(alpha, theta),
                measured,
            });
        }
    }
    Ok(beta.to_f64())
}

/// Constants shared by the main-term and maximal-operator estimates.
#[derive(Debug, Clone, Serialize)]
pub struct PaperConstants {
    pub alpha: f64,
    pub theta: f64,
    #[serde(rename = "Theta")]
    pub big_theta: f64,
    pub vartheta: f64,
    pub c1: Complex64,
    pub beta: f64,
    /// The variant with `θ^{1−Θ}`, kept for reporting only.
    pub printed_beta: f64,
    #[serde(rename = "Gamma")]
    pub gamma: u32,
    pub w: f64,
    pub epsilon: f64,
    /// `C` in `η = C N_{q2} / N_{q1}`.
    pub eta_factor: f64,
    #[serde(skip)]
    exponent: Exponent,
    #[serde(skip)]
    beta_ext: ExtReal,
}

pub const DEFAULT_GAMMA: u32 = 20;
pub const DEFAULT_EPSILON: f64 = 0.01;

impl PaperConstants {
    pub fn new(alpha: f64, theta: f64, gamma: u32, epsilon: f64) -> Result<Self> {
        let w = gamma as f64 * (1.0 - theta + epsilon);
        Self::with_w(alpha, theta, gamma, epsilon, w)
    }

    pub fn with_w(alpha: f64, theta: f64, gamma: u32, epsilon: f64, w: f64) -> Result<Self> {
        let beta = derive_beta(alpha, theta)?;
        let exponent = check_theta(theta)?;
        if gamma == 0 {
            return Err(Error::InvalidParameter("Gamma must be positive".into()));
        }
        if !(epsilon > 0.0 && epsilon < theta) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must lie in (0, theta), got {epsilon}"
            )));
        }
        let g = gamma as f64;
        let (w_lo, w_hi) = (g * (1.0 - theta + epsilon), g);
        if !(w >= w_lo * (1.0 - 1e-15) && w <= w_hi) {
            return Err(Error::InvalidParameter(format!(
                "w = {w} outside [{w_lo}, {w_hi}]"
            )));
        }
        let big = big_theta(exponent).to_f64();
        let vartheta = 1.0 / (1.0 - big);
        let amp = (big * (alpha * theta).powf(big)).sqrt();
        Ok(PaperConstants {
            alpha,
            theta,
            big_theta: big,
            vartheta,
            c1: Complex64::from_polar(amp, -PI / 4.0),
            beta,
            printed_beta: printed_beta(alpha, theta),
            gamma,
            w,
            epsilon,
            eta_factor: 4.0 * PI,
            exponent,
            beta_ext: beta_ext(alpha, exponent),
        })
    }

    /// `N_q = q^Γ`.
    pub fn block_start(&self, q: u64) -> f64 {
        (q as f64).powi(self.gamma as i32)
    }

    /// `Λ(j) = e^{j − uΘ} N_{q1}`.
    pub fn lambda(&self, u: i64, j: i64, q1: u64) -> f64 {
        (j as f64 - u as f64 * self.big_theta).exp() * self.block_start(q1)
    }

    /// `η = C N_{q2} / N_{q1}`.
    pub fn eta(&self, q1: u64, q2: u64) -> f64 {
        self.eta_factor * self.block_start(q2) / self.block_start(q1)
    }

    /// Right end of `J_{u,q1} = [0, u − (1−ε)(1−θ)Γ log q1)`.
    pub fn j_limit(&self, u: i64, q1: u64) -> f64 {
        u as f64
            - (1.0 - self.epsilon) * (1.0 - self.theta) * self.gamma as f64 * (q1 as f64).ln()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StationaryPoint {
    pub m: i64,
    pub x: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BProcessReport {
    pub direct: Complex64,
    pub main_term: Complex64,
    pub observed_error: f64,
    pub bound: f64,
    pub lambda: f64,
    pub eta: f64,
    /// `φ'(A)` and `φ'(B)`.
    pub a: f64,
    pub b: f64,
    pub stationary_points: Vec<StationaryPoint>,
}

pub const BPROCESS_CSV_HEADER: &str =
    "alpha,theta,k,q,direct_re,direct_im,main_re,main_im,observed_error,bound,ratio";

impl BProcessReport {
    pub fn ratio(&self) -> f64 {
        self.observed_error / self.bound
    }

    pub fn csv_row(&self, alpha: f64, theta: f64, k: u64, q: u64) -> String {
        format!(
            "{alpha},{theta},{k},{q},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            self.direct.re,
            self.direct.im,
            self.main_term.re,
            self.main_term.im,
            self.observed_error,
            self.bound,
            self.ratio()
        )
    }
}

fn check_growth(psi: &MonomialPhase, lambda: f64, eta: f64) -> Result<()> {
    let width = psi.hi - psi.lo;
    let upper = eta * lambda * (1.0 + GROWTH_SLACK);
    for i in 0..=GROWTH_GRID {
        let x = psi.lo + width * i as f64 / GROWTH_GRID as f64;
        let d2 = psi.derivative(2, x);
        if d2 < lambda * (1.0 - GROWTH_SLACK) || d2 >= upper {
            return Err(Error::GrowthCondition(format!(
                "second derivative {d2:e} at x = {x} outside [{lambda:e}, {:e})",
                eta * lambda
            )));
        }
        let d3 = psi.derivative(3, x).abs();
        if d3 * width >= upper {
            return Err(Error::GrowthCondition(format!(
                "third derivative {d3:e} at x = {x} not below {:e}",
                eta * lambda / width
            )));
        }
        let d4 = psi.derivative(4, x).abs();
        if d4 * width * width >= upper {
            return Err(Error::GrowthCondition(format!(
                "fourth derivative {d4:e} at x = {x} not below {:e}",
                eta * lambda / (width * width)
            )));
        }
    }
    Ok(())
}

/// Stationary-phase sum `e(1/8) Σ_{m ∈ [a,b)} e(ψ(x_m) − m x_m) / √ψ''(x_m)`
/// for a phase with `ψ'' > 0`.
fn convex_main_term(psi: &MonomialPhase) -> (Complex64, Vec<StationaryPoint>, f64, f64) {
    let a = psi.ext_first_derivative(psi.lo);
    let b = psi.ext_first_derivative(psi.hi);
    let e = psi.exponent.to_ext();
    let inv = ExtReal::ONE.div(e - ExtReal::ONE);
    let slope = psi.coefficient * e;
    // smallest integer >= a, and the first integer not below b
    let m_first = ceil_ext(a);
    let m_end = ceil_ext(b);
    let mut acc = ComplexAcc::new();
    let mut points = Vec::new();
    for m in m_first..m_end {
        if m == 0 {
            continue;
        }
        let mm = ExtReal::from_f64(m as f64);
        let x = mm.div(slope).powd(inv);
        let value = psi.ext_value(x) - mm * x;
        let turn = UnitAngle::reduce(value, value.hi.abs() * DD_REL);
        let amp = 1.0 / psi.derivative(2, x.to_f64()).sqrt();
        acc.add(e_of(turn) * amp);
        points.push(StationaryPoint { m, x: x.to_f64() });
    }
    let main = acc.value() * Complex64::from_polar(1.0, PI / 4.0);
    (main, points, a.to_f64(), b.to_f64())
}

fn ceil_ext(x: ExtReal) -> i64 {
    let fl = x.floor();
    let fl_i = fl.hi as i64 + fl.lo as i64;
    if fl == x {
        fl_i
    } else {
        fl_i + 1
    }
}

/// Compares `Σ e(φ(n))` with its stationary-phase main term. For `φ'' < 0`
/// the B-process runs on `−φ` and the result is conjugated back.
pub fn b_process(phase: &MonomialPhase, lambda: f64, eta: f64) -> Result<BProcessReport> {
    let e = phase.exponent.value();
    let curvature = phase.coefficient.to_f64() * e * (e - 1.0);
    if curvature == 0.0 {
        return Err(Error::InvalidParameter(
            "B-process needs a nonzero coefficient and exponent outside {0, 1}".into(),
        ));
    }
    if !(phase.lo > 0.0 && phase.hi > phase.lo) {
        return Err(Error::InvalidParameter(format!(
            "B-process needs 0 < A < B, got [{}, {})",
            phase.lo, phase.hi
        )));
    }
    if !(lambda > 0.0 && eta >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "need Lambda > 0 and eta >= 1, got {lambda}, {eta}"
        )));
    }
    let flip = curvature < 0.0;
    let psi = if flip { phase.negated() } else { *phase };
    check_growth(&psi, lambda, eta)?;
    let direct = direct_sum(phase)?;
    let (mut main, mut points, mut a, mut b) = convex_main_term(&psi);
    if flip {
        main = main.conj();
        for p in &mut points {
            p.m = -p.m;
        }
        (a, b) = (-a, -b);
    }
    let bound = lambda.powf(-0.5) + eta * eta * ((b - a).abs() + 1.0).ln();
    Ok(BProcessReport {
        direct,
        main_term: main,
        observed_error: (direct - main).norm(),
        bound,
        lambda,
        eta,
        a,
        b,
        stationary_points: points,
    })
}

/// `E_q(k)`'s phase `αk y^θ` on `[lo, hi)`.
pub fn block_phase(consts: &PaperConstants, k: u64, lo: f64, hi: f64) -> Result<MonomialPhase> {
    let coefficient = ExtReal::from_f64(consts.alpha) * ExtReal::from_u64(k);
    MonomialPhase::with_ext(coefficient, consts.exponent, lo, hi)
}

/// `r ∈ αθk (hi^{θ−1}, lo^{θ−1}]` as `first..end`.
pub fn frequency_range(consts: &PaperConstants, k: u64, lo: f64, hi: f64) -> (u64, u64) {
    let t = consts.exponent.to_ext();
    let scale = ExtReal::from_f64(consts.alpha) * t * ExtReal::from_u64(k);
    let edge = |n: f64| scale * ExtReal::from_f64(n).powd(t - ExtReal::ONE);
    let left = edge(hi).floor();
    let right = edge(lo).floor();
    let first = (left.hi + left.lo) as u64 + 1;
    let end = (right.hi + right.lo) as u64 + 1;
    (first, end.max(first))
}

/// `c₁ Σ_{r ∈ ℛ} k^{Θ/2} r^{−(Θ+1)/2} e(β k^Θ r^{1−Θ})` over the block `[lo, hi)`.
pub fn eb_main_term_on(consts: &PaperConstants, k: u64, lo: f64, hi: f64) -> Complex64 {
    let (first, end) = frequency_range(consts, k, lo, hi);
    let big = big_theta(consts.exponent);
    let k_pow = ExtReal::from_u64(k).powd(big);
    let head = consts.beta_ext * k_pow;
    let kf = (k as f64).powf(consts.big_theta / 2.0);
    let mut acc = ComplexAcc::new();
    for r in first..end {
        let phase = head * ExtReal::from_u64(r).powd(ExtReal::ONE - big);
        let turn = UnitAngle::reduce(phase, phase.hi.abs() * DD_REL);
        let amp = kf * (r as f64).powf(-(consts.big_theta + 1.0) / 2.0);
        acc.add(e_of(turn) * amp);
    }
    consts.c1 * acc.value()
}

/// [`eb_main_term_on`] for the block `[q^Γ, (q+1)^Γ)`.
pub fn eb_main_term(consts: &PaperConstants, k: u64, q: u64) -> Complex64 {
    eb_main_term_on(consts, k, consts.block_start(q), consts.block_start(q + 1))
}

/// `F^{1/(4L−2)} M^{1−(l+2)/(4L−2)} + M/F` with `L = 2^l`.
pub fn a_process_bound(f: f64, m: f64, l: u32) -> Result<f64> {
    if !(m > 2.0 && f > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "A-process bound needs M > 2 and F > 0, got M = {m}, F = {f}"
        )));
    }
    if l > 30 {
        return Err(Error::InvalidParameter(format!("l = {l} too large")));
    }
    let big_l = (1u64 << l) as f64;
    let d = 4.0 * big_l - 2.0;
    Ok(f.powf(1.0 / d) * m.powf(1.0 - (l as f64 + 2.0) / d) + m / f)
}

/// One empirical A-process case: `φ(h) = γ^ϑ h^{1−ϑ}` on `[lo, hi) ⊆ [M, 2M)`.
#[derive(Debug, Clone, Serialize)]
pub struct AProcessCase {
    pub theta: f64,
    pub gamma: f64,
    pub m: f64,
    pub lo: f64,
    pub hi: f64,
    /// `F = φ(M)`, the scale with `φ^{(r)} ≍ F M^{−r}`.
    pub f: f64,
    pub direct_abs: f64,
    /// Smallest bound over `l = 0..=4`.
    pub bound: f64,
    pub best_l: u32,
}

impl AProcessCase {
    pub fn ratio(&self) -> f64 {
        self.direct_abs / self.bound
    }
}

pub fn a_process_case(theta: f64, gamma: f64, m: f64, lo: f64, hi: f64) -> Result<AProcessCase> {
    check_theta(theta)?;
    if !(lo >= m && hi <= 2.0 * m && lo < hi) {
        return Err(Error::InvalidParameter(format!(
            "[{lo}, {hi}) must lie in [M, 2M) with M = {m}"
        )));
    }
    let big = 1.0 / (1.0 - theta);
    let vartheta = 1.0 / (1.0 - big);
    // 1 − ϑ = 1/θ
    let exponent = 1.0 / theta;
    let coefficient = gamma.powf(vartheta);
    let phase = MonomialPhase::new(coefficient, exponent, lo, hi)?;
    let direct_abs = direct_sum(&phase)?.norm();
    let f = coefficient * m.powf(exponent);
    let mut best = (f64::INFINITY, 0);
    for l in 0..=4 {
        let b = a_process_bound(f, m, l)?;
        if b < best.0 {
            best = (b, l);
        }
    }
    Ok(AProcessCase {
        theta,
        gamma,
        m,
        lo,
        hi,
        f,
        direct_abs,
        bound: best.0,
        best_l: best.1,
    })
}

/// The deterministic 50-case A-process grid.
pub fn a_process_grid(seed: u64) -> Result<Vec<AProcessCase>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..50)
        .map(|i| {
            let theta = if i % 2 == 0 { 0.3 } else { 0.4 };
            let m = 10f64.powf(rng.gen_range(3.0..5.0)).round();
            let f = m.powf(rng.gen_range(1.2..2.5));
            // invert F = γ^ϑ M^{1/θ}
            let vartheta = -(1.0 - theta) / theta;
            let gamma = (f / m.powf(1.0 / theta)).powf(1.0 / vartheta);
            let a = rng.gen_range(0.0..0.5);
            let b = rng.gen_range(a + 0.25..1.0);
            let lo = (m * (1.0 + a)).floor();
            let hi = (m * (1.0 + b)).floor();
            a_process_case(theta, gamma, m, lo, hi)
        })
        .collect()
}

/// Best `(γ, ℐ)` found by [`maximal_op_sample`]. The value is a lower
/// bound for the supremum over the continuum `γ ∈ [Λ, ηΛ)`; for each sampled
/// `γ` the maximum over subintervals is exact.
#[derive(Debug, Clone, Serialize)]
pub struct MaximalSample {
    pub value: f64,
    pub gamma: f64,
    /// The maximizing `ℐ = [start, end)`.
    pub start: u64,
    pub end: u64,
    pub lattice_count: u64,
    pub samples: usize,
}

/// `max |Σ_{k ∈ ℐ} e(γ k^Θ)|` over sampled `γ ∈ [Λ, ηΛ)` and every
/// subinterval `ℐ ⊆ [e^u, e^{u+1})`.
pub fn maximal_op_sample(
    theta: f64,
    lambda: f64,
    eta: f64,
    u: i64,
    samples: usize,
    seed: u64,
) -> Result<MaximalSample> {
    let th = check_theta(theta)?;
    if !(lambda >= 0.0 && lambda.is_finite() && eta >= 1.0 && eta.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "need Lambda >= 0 and eta >= 1, got {lambda}, {eta}"
        )));
    }
    if samples == 0 {
        return Err(Error::InvalidParameter("samples must be positive".into()));
    }
    let first = (u as f64).exp().ceil() as u64;
    let end = ((u + 1) as f64).exp().ceil() as u64;
    let count = end - first;
    if count > MAXIMAL_OP_LIMIT {
        return Err(Error::SizeGuard {
            what: "lattice points in [e^u, e^{u+1})",
            got: count,
            limit: MAXIMAL_OP_LIMIT,
        });
    }
    let big = big_theta(th);
    let powers: Vec<ExtReal> = (first..end)
        .into_par_iter()
        .map(|k| ExtReal::from_u64(k).powd(big))
        .collect();
    let top = eta * lambda * powers.last().map_or(0.0, |p| p.hi);
    if !(top < PHASE_LIMIT) {
        return Err(Error::OutOfRange {
            value: top,
            limit: PHASE_LIMIT,
        });
    }
    let best = (0..samples)
        .into_par_iter()
        .map(|s| {
            let gamma = sample_gamma(lambda, eta, s, seed);
            let (value, i, j) = interval_sup(&powers, gamma);
            (value, s, gamma, i, j)
        })
        .reduce(
            || (f64::NEG_INFINITY, usize::MAX, 0.0, 0, 0),
            |x, y| {
                if y.0 > x.0 || (y.0 == x.0 && y.1 < x.1) {
                    y
                } else {
                    x
                }
            },
        );
    Ok(MaximalSample {
        value: best.0,
        gamma: best.2,
        start: first + best.3 as u64,
        end: first + best.4 as u64,
        lattice_count: count,
        samples,
    })
}

/// Sample 0 is `Λ`, sample 1 the midpoint, the rest log-uniform on `[Λ, ηΛ)`.
fn sample_gamma(lambda: f64, eta: f64, s: usize, seed: u64) -> f64 {
    match s {
        0 => lambda,
        1 => lambda * (1.0 + eta) / 2.0,
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s as u64);
            lambda * eta.powf(rng.gen_range(0.0..1.0))
        }
    }
}

/// Exact `max_{i<j} |P_j − P_i|` over prefix sums of `e(γ k^Θ)`: the diameter
/// of the prefix-point set.
fn interval_sup(powers: &[ExtReal], gamma: f64) -> (f64, usize, usize) {
    let mut pts = Vec::with_capacity(powers.len() + 1);
    let mut acc = ComplexAcc::new();
    pts.push((0.0, 0.0));
    for p in powers {
        let x = p.mul_f64(gamma);
        acc.add(e_of(UnitAngle::reduce(x, x.hi.abs() * DD_REL)));
        let z = acc.value();
        pts.push((z.re, z.im));
    }
    let (d, i, j) = hull::diameter(&pts);
    (d, i.min(j), i.max(j))
}

/// `e^{8u/15} N_{q2}^{11θ/30} + e^{u−j/2} N_{q1}^{−1/2}`.
pub fn lemma5_bound(u: i64, j: i64, q1: u64, q2: u64, consts: &PaperConstants) -> f64 {
    let (u, j) = (u as f64, j as f64);
    (8.0 * u / 15.0).exp() * consts.block_start(q2).powf(11.0 * consts.theta / 30.0)
        + (u - j / 2.0).exp() * consts.block_start(q1).powf(-0.5)
}

#[derive(Debug, Clone, Serialize)]
pub struct PartialSummation {
    /// `max_{S̃} |Σ_{S ≤ s < S̃} a_s b_s|`
    pub lhs: f64,
    /// `(max|b_s| + C T) · max_{S̃} |Σ_{S ≤ s < S̃} a_s|` with the rigorous `C`
    pub rhs: f64,
    /// `1 + ln c`, from Abel summation
    pub c_rigorous: f64,
    /// Smallest `C` for which the inequality holds on this input.
    pub c_empirical: f64,
    pub holds: bool,
}

/// Checks the Abel-summation inequality for `a_s, b_s`, `s = S, S+1, …`.
pub fn partial_summation_check(
    start: u64,
    a: &[Complex64],
    b: &[Complex64],
    t: f64,
    c: f64,
) -> Result<PartialSummation> {
    if start == 0 || a.len() != b.len() || a.is_empty() {
        return Err(Error::InvalidParameter(
            "need S >= 1 and equal, nonempty a and b".into(),
        ));
    }
    if !(c >= 1.0 && t >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need c >= 1 and T >= 0, got c = {c}, T = {t}"
        )));
    }
    let last = start + a.len() as u64 - 1;
    if last as f64 > c * start as f64 {
        return Err(Error::InvalidParameter(format!(
            "index {last} exceeds cS = {}",
            c * start as f64
        )));
    }
    for (i, w) in b.windows(2).enumerate() {
        let s = start + i as u64;
        let diff = (w[0] - w[1]).norm();
        let allowed = t / s as f64;
        if diff > allowed * (1.0 + 1e-12) {
            return Err(Error::Hypothesis {
                index: s,
                diff,
                allowed,
            });
        }
    }
    let mut weighted = ComplexAcc::new();
    let mut plain = ComplexAcc::new();
    let (mut lhs, mut prefix) = (0.0f64, 0.0f64);
    for (x, y) in a.iter().zip(b) {
        weighted.add(x * y);
        plain.add(*x);
        lhs = lhs.max(weighted.value().norm());
        prefix = prefix.max(plain.value().norm());
    }
    let b_max = b.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let c_rigorous = 1.0 + c.ln();
    let rhs = (b_max + c_rigorous * t) * prefix;
    let c_empirical = if prefix == 0.0 || t == 0.0 {
        0.0
    } else {
        ((lhs / prefix - b_max) / t).max(0.0)
    };
    Ok(PartialSummation {
        lhs,
        rhs,
        c_rigorous,
        c_empirical,
        holds: lhs <= rhs * (1.0 + 1e-12) + 1e-300,
    })
}

/// One row of the B-process validation grid.
#[derive(Debug, Clone, Serialize)]
pub struct BGridRow {
    pub alpha: f64,
    pub theta: f64,
    pub k: u64,
    pub q: u64,
    pub report: BProcessReport,
    /// `E^{(B)}_q(k)` from the closed-form constants.
    pub eb: Complex64,
}

#[derive(Debug, Clone)]
pub struct BGrid {
    pub gamma: u32,
    pub qs: Vec<u64>,
    pub alphas: Vec<f64>,
    pub thetas: Vec<f64>,
    /// Target sizes of `ℛ_q(k)`; each picks one `k`.
    pub frequency_counts: Vec<f64>,
    pub eta: f64,
}

impl Default for BGrid {
    fn default() -> Self {
        BGrid {
            gamma: 4,
            qs: vec![10, 15, 20, 25, 30],
            alphas: vec![0.7, std::f64::consts::SQRT_2],
            thetas: vec![0.3, 0.5],
            frequency_counts: vec![0.5, 2.0, 8.0, 30.0, 100.0],
            eta: 10.0,
        }
    }
}

impl BGrid {
    pub fn run(&self) -> Result<Vec<BGridRow>> {
        let mut rows = Vec::new();
        for &alpha in &self.alphas {
            for &theta in &self.thetas {
                let consts = PaperConstants::new(alpha, theta, self.gamma, DEFAULT_EPSILON)?;
                for &q in &self.qs {
                    let (lo, hi) = (consts.block_start(q), consts.block_start(q + 1));
                    let width = alpha * theta * (lo.powf(theta - 1.0) - hi.powf(theta - 1.0));
                    for &target in &self.frequency_counts {
                        let k = (target / width).ceil().max(1.0) as u64;
                        let phase = block_phase(&consts, k, lo, hi)?;
                        let lambda = phase.derivative(2, hi).abs();
                        let report = b_process(&phase, lambda, self.eta)?;
                        let eb = eb_main_term_on(&consts, k, lo, hi);
                        rows.push(BGridRow {
                            alpha,
                            theta,
                            k,
                            q,
                            report,
                            eb,
                        });
                    }
                }
            }
        }
        Ok(rows)
    }
}
