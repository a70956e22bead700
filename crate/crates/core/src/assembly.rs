//! The Fourier-side form of `R̃(N, f)` split into blocks `y ∈ [N_q, N_{q+1})`
//! and frequency shells `k ∈ [e^u, e^{u+1})`, with the stationary-phase
//! surrogate and the diagonal contribution of each cell.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::correlations::pair_corr_fast;
use crate::error::{Error, Result};
use crate::expsum::{eb_main_term_on, frequency_range, PaperConstants};
use crate::precision::{e_of, ComplexAcc, ExtReal, NeumaierSum, UnitAngle};
use crate::sequences::{generate, Segment, SequenceKind, SequenceSpec};
use crate::spectral::exp_sums;
use crate::testfns::TestFunction;


/// Budget for the dropped frequencies `k >= k_end`.
pub const TRUNCATION_BUDGET: f64 = 1e-14;
/// Above this many `(k, y)` pairs the block sums go through the NUFFT.
pub const EXACT_PAIR_LIMIT: u64 = 50_000_000;
/// Cap on stationary-phase terms summed by [`eb_replacement_check`].
pub const SURROGATE_TERM_LIMIT: u64 = 200_000_000;
/// `Σ_{r=a}^{b-1}` is summed term by term up to this many terms.
const DIRECT_POWER_SUM: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Block {
    pub q: u64,
    /// `[start, end)`
    pub start: u64,
    pub end: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionPlan {
    pub n: u64,
    #[serde(rename = "Q")]
    pub q_max: u64,
    #[serde(rename = "Gamma")]
    pub gamma: u32,
    #[serde(rename = "U")]
    pub u_max: i64,
    pub epsilon: f64,
    pub blocks: Vec<Block>,
}

impl DecompositionPlan {
    /// First integer of the shell `[e^u, e^{u+1})`.
    pub fn shell_start(u: i64) -> u64 {
        (u as f64).exp().ceil() as u64
    }

    /// One past the last frequency of any shell `u <= U`.
    pub fn k_end(&self) -> u64 {
        Self::shell_start(self.u_max + 1)
    }

    pub fn block(&self, q: u64) -> Option<Block> {
        self.blocks.get((q as usize).checked_sub(1)?).copied()
    }
}

fn checked_power(base: u64, exp: u32) -> Option<u64> {
    base.checked_pow(exp)
}

fn integer_root(n: u64, gamma: u32) -> u64 {
    let mut r = (n as f64).powf(1.0 / gamma as f64).round() as u64;
    while r > 0 && checked_power(r, gamma).is_none_or(|v| v > n) {
        r -= 1;
    }
    while checked_power(r + 1, gamma).is_some_and(|v| v <= n) {
        r += 1;
    }
    r
}

/// `N = Q^Γ` split into `[q^Γ, (q+1)^Γ)` for `q < Q` and `[N, N + 1)`.
pub fn plan(n: u64, gamma: u32, epsilon: f64) -> Result<DecompositionPlan> {
    if gamma == 0 {
        return Err(Error::InvalidParameter("Gamma must be positive".into()));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    let root = integer_root(n, gamma);
    if root < 2 || checked_power(root, gamma) != Some(n) {
        let mut candidates: Vec<u64> = (root.saturating_sub(1)..=root + 2)
            .filter(|&r| r >= 2)
            .filter_map(|r| checked_power(r, gamma))
            .collect();
        candidates.sort_by_key(|&v| v.abs_diff(n));
        candidates.truncate(2);
        candidates.sort_unstable();
        return Err(Error::NotPerfectPower {
            n,
            gamma,
            suggestions: candidates,
        });
    }
    let blocks = (1..=root)
        .map(|q| {
            let start = q.pow(gamma);
            let end = if q == root { n + 1 } else { (q + 1).pow(gamma) };
            Block { q, start, end }
        })
        .collect();
    let u_max = ((1.0 + epsilon) * (n as f64).ln()).floor() as i64;
    Ok(DecompositionPlan {
        n,
        q_max: root,
        gamma,
        u_max,
        epsilon,
        blocks,
    })
}

fn check_spec(spec: &SequenceSpec) -> Result<()> {
    spec.validate()?;
    if spec.kind == SequenceKind::SqrtNoSquares {
        return Err(Error::InvalidParameter(
            "the Fourier decomposition needs a monomial or linear sequence".into(),
        ));
    }
    Ok(())
}

/// `f̂(k/N)` for `k in 0..k_end`.
fn weights(f: &TestFunction, n: u64, k_end: u64) -> Vec<f64> {
    (0..k_end).map(|k| f.transform(k as f64 / n as f64)).collect()
}

/// `2 Σ_{k >= k_end} |f̂(k/N)|`, which bounds the dropped part of `E(N)`.
fn truncation_tail(f: &TestFunction, n: u64, k_end: u64) -> f64 {
    n as f64 * f.dual_tail(n as f64, k_end.saturating_sub(1))
}

fn check_truncation(f: &TestFunction, n: u64, k_end: u64) -> Result<f64> {
    let tail = truncation_tail(f, n, k_end);
    if tail <= TRUNCATION_BUDGET {
        return Ok(tail);
    }
    let mut hi = k_end.max(1);
    while truncation_tail(f, n, hi) > TRUNCATION_BUDGET {
        hi = hi.checked_mul(2).ok_or_else(|| {
            Error::InvalidParameter("transform tail never meets the budget".into())
        })?;
    }
    let mut lo = k_end;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if truncation_tail(f, n, mid) > TRUNCATION_BUDGET {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::TruncationBudget {
        tail,
        budget: TRUNCATION_BUDGET,
        required: hi,
    })
}

/// `E(k) = Σ_{y ∈ [start, end)} e(αk y^θ)` for `k in 0..k_end`.
fn block_sums(spec: &SequenceSpec, seg: Option<&Segment>, start: u64, end: u64, k_end: u64) -> Result<Vec<Complex64>> {
    let len = end - start;
    if len.saturating_mul(k_end) <= EXACT_PAIR_LIMIT || seg.is_none() {
        let map = spec.map()?;
        let phases = (start..end).map(|y| map.phase(y)).collect::<Result<Vec<_>>>()?;
        (0..k_end)
            .into_par_iter()
            .map(|k| {
                let kk = ExtReal::from_u64(k);
                let mut acc = ComplexAcc::new();
                for (x, err) in &phases {
                    let p = *x * kk;
                    acc.add(e_of(UnitAngle::reduce(p, err * k as f64 + p.hi.abs() * 1e-30)));
                }
                Ok(acc.value())
            })
            .collect()
    } else {
        let seg = seg.expect("segment present on the NUFFT path");
        let xs: Vec<f64> = seg.points[(start - 1) as usize..(end - 1) as usize]
            .iter()
            .map(|p| p.value)
            .collect();
        let k_max = (k_end - 1) as usize;
        let full = exp_sums(&xs, k_max);
        Ok(full[k_max..].to_vec())
    }
}

fn needs_segment(plan: &DecompositionPlan) -> bool {
    plan.n.saturating_mul(plan.k_end()) > EXACT_PAIR_LIMIT
}

#[derive(Debug, Clone, Serialize)]
pub struct Cell {
    pub q1: u64,
    pub q2: u64,
    pub u: i64,
    /// Frequencies `[k_lo, k_hi)`, clipped to the truncation.
    pub k_lo: u64,
    pub k_hi: u64,
    /// `e^u > max(q1^w, q2^w)`
    pub main: bool,
    pub value: Complex64,
}

pub const CELL_CSV_HEADER: &str = "q1,q2,u,k_lo,k_hi,main,value_re,value_im";

impl Cell {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{:e},{:e}",
            self.q1, self.q2, self.u, self.k_lo, self.k_hi, self.main, self.value.re, self.value.im
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AssemblyReport {
    pub n: u64,
    pub plan: DecompositionPlan,
    pub k_end: u64,
    pub truncation_tail: f64,
    pub method: &'static str,
    /// `(1/N) Σ_{i,j} P(x_i − x_j)` from the pair statistic.
    pub direct_rtilde: f64,
    /// `f̂(0) + Σ cells`
    pub fourier_rtilde: f64,
    /// `E(N)` from the unblocked sums over `y ∈ [1, N]`.
    pub unblocked_e: f64,
    pub cell_total: Complex64,
    pub bookkeeping_rel: f64,
    pub diagonal_total: Option<f64>,
    pub diagonal_target: f64,
    pub f_at_zero: f64,
    /// `Σ_{q1 ≠ q2, u} |ℰ_{q,u}|`
    pub offdiag_total: f64,
    pub cells: Vec<Cell>,
}

struct CellSums {
    cells: Vec<Cell>,
    unblocked_e: f64,
    k_end: u64,
    tail: f64,
    method: &'static str,
}

fn main_cell(plan: &DecompositionPlan, theta: f64, q1: u64, q2: u64, u: i64) -> bool {
    let w = plan.gamma as f64 * (1.0 - theta + plan.epsilon);
    let edge = (q1.max(q2) as f64).powf(w);
    (u as f64).exp() > edge
}

fn cell_sums(spec: &SequenceSpec, f: &TestFunction, plan: &DecompositionPlan, seg: Option<&Segment>) -> Result<CellSums> {
    check_spec(spec)?;
    let n = plan.n;
    let k_end = plan.k_end();
    let tail = check_truncation(f, n, k_end)?;
    let w = weights(f, n, k_end);
    let blocks = plan
        .blocks
        .iter()
        .map(|b| block_sums(spec, seg, b.start, b.end, k_end))
        .collect::<Result<Vec<_>>>()?;
    let full = block_sums(spec, seg, 1, n + 1, k_end)?;
    let scale = 2.0 / (n as f64 * n as f64);
    let mut cells = Vec::new();
    for u in 0..=plan.u_max {
        let k_lo = DecompositionPlan::shell_start(u).max(1).min(k_end);
        let k_hi = DecompositionPlan::shell_start(u + 1).min(k_end);
        for (i1, b1) in plan.blocks.iter().enumerate() {
            for (i2, b2) in plan.blocks.iter().enumerate() {
                let mut acc = ComplexAcc::new();
                for k in k_lo..k_hi {
                    let k = k as usize;
                    if i1 == i2 {
                        acc.add(Complex64::new(w[k] * blocks[i1][k].norm_sqr(), 0.0));
                    } else {
                        acc.add((blocks[i1][k] * blocks[i2][k].conj()) * w[k]);
                    }
                }
                cells.push(Cell {
                    q1: b1.q,
                    q2: b2.q,
                    u,
                    k_lo,
                    k_hi,
                    main: main_cell(plan, spec.theta, b1.q, b2.q, u),
                    value: acc.value() * scale,
                });
            }
        }
    }
    let mut unblocked = NeumaierSum::new();
    for k in 1..k_end as usize {
        unblocked.add(w[k] * full[k].norm_sqr());
    }
    Ok(CellSums {
        cells,
        unblocked_e: unblocked.value() * scale,
        k_end,
        tail,
        method: if seg.is_some() { "nufft" } else { "exact" },
    })
}

fn segment_for(spec: &SequenceSpec, plan: &DecompositionPlan) -> Result<Option<Segment>> {
    if needs_segment(plan) {
        Ok(Some(generate(*spec, plan.n)?))
    } else {
        Ok(None)
    }
}

/// `R̃(N, f)` two ways: the pair statistic with diagonal, and
/// `f̂(0) + (2/N²) Σ_k f̂(k/N) |Σ_y e(αk y^θ)|²` assembled cell by cell.
pub fn fourier_statistic(spec: &SequenceSpec, f: &TestFunction, plan: &DecompositionPlan) -> Result<AssemblyReport> {
    let seg_opt = segment_for(spec, plan)?;
    let sums = cell_sums(spec, f, plan, seg_opt.as_ref())?;
    let seg = match seg_opt {
        Some(s) => s,
        None => generate(*spec, plan.n)?,
    };
    let direct = pair_corr_fast(&seg, f, true)?;
    let mut total = ComplexAcc::new();
    let mut offdiag = NeumaierSum::new();
    for c in &sums.cells {
        total.add(c.value);
        if c.q1 != c.q2 {
            offdiag.add(c.value.norm());
        }
    }
    let cell_total = total.value();
    let fourier = f.transform(0.0) + cell_total.re;
    let diagonal = if spec.theta > 0.0 && spec.theta < 1.0 {
        Some(diagonal_sum(spec, f, plan)?.value)
    } else {
        None
    };
    Ok(AssemblyReport {
        n: plan.n,
        plan: plan.clone(),
        k_end: sums.k_end,
        truncation_tail: sums.tail,
        method: sums.method,
        direct_rtilde: direct.value,
        fourier_rtilde: fourier,
        unblocked_e: sums.unblocked_e,
        cell_total,
        bookkeeping_rel: (cell_total.re - sums.unblocked_e).abs() / sums.unblocked_e.abs().max(f64::MIN_POSITIVE),
        diagonal_total: diagonal,
        diagonal_target: f.at_zero() - f.transform(0.0),
        f_at_zero: f.at_zero(),
        offdiag_total: offdiag.value(),
        cells: sums.cells,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CellResidual {
    pub q1: u64,
    pub q2: u64,
    pub u: i64,
    pub main: bool,
    pub cell: Complex64,
    /// `(2/N²) Σ_k f̂(k/N) E^B_{q1}(k) conj(E^B_{q2}(k))` for main cells.
    pub surrogate: Option<Complex64>,
    /// `|ℰ − surrogate|` for main cells, `|ℰ|` otherwise.
    pub residual: f64,
    pub relative: f64,
}

fn constants_for(spec: &SequenceSpec, plan: &DecompositionPlan) -> Result<PaperConstants> {
    if !(spec.theta > 0.0 && spec.theta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "stationary-phase constants need theta in (0, 1), got {}",
            spec.theta
        )));
    }
    PaperConstants::new(spec.alpha, spec.theta, plan.gamma, plan.epsilon)
}

/// Replaces `E_q(k)` by its stationary-phase surrogate in the listed cells.
pub fn eb_replacement_check(
    spec: &SequenceSpec,
    f: &TestFunction,
    plan: &DecompositionPlan,
    cells: &[(u64, u64, i64)],
) -> Result<Vec<CellResidual>> {
    check_spec(spec)?;
    let consts = constants_for(spec, plan)?;
    let n = plan.n;
    let k_end = plan.k_end();
    check_truncation(f, n, k_end)?;
    let scale = 2.0 / (n as f64 * n as f64);
    let seg = segment_for(spec, plan)?;
    let mut out = Vec::with_capacity(cells.len());
    for &(q1, q2, u) in cells {
        let (b1, b2) = match (plan.block(q1), plan.block(q2)) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "cell ({q1}, {q2}, {u}) outside 1..={}",
                    plan.q_max
                )))
            }
        };
        if !(0..=plan.u_max).contains(&u) {
            return Err(Error::InvalidParameter(format!("u = {u} outside 0..={}", plan.u_max)));
        }
        let k_lo = DecompositionPlan::shell_start(u).max(1).min(k_end);
        let k_hi = DecompositionPlan::shell_start(u + 1).min(k_end);
        let ks: Vec<u64> = (k_lo..k_hi).filter(|&k| f.transform(k as f64 / n as f64) != 0.0).collect();
        let main = main_cell(plan, spec.theta, q1, q2, u);
        if ks.is_empty() {
            out.push(CellResidual {
                q1,
                q2,
                u,
                main,
                cell: Complex64::new(0.0, 0.0),
                surrogate: main.then(|| Complex64::new(0.0, 0.0)),
                residual: 0.0,
                relative: 0.0,
            });
            continue;
        }
        let e1 = block_sums(spec, seg.as_ref(), b1.start, b1.end, k_hi)?;
        let e2 = if q1 == q2 { e1.clone() } else { block_sums(spec, seg.as_ref(), b2.start, b2.end, k_hi)? };
        let mut acc = ComplexAcc::new();
        for &k in &ks {
            let k = k as usize;
            acc.add(f.transform(k as f64 / n as f64) * e1[k] * e2[k].conj());
        }
        let cell = acc.value() * scale;
        let surrogate = if main {
            let terms: u64 = ks
                .iter()
                .map(|&k| {
                    let (a, b) = frequency_range(&consts, k, b1.start as f64, b1.end as f64);
                    let (c, d) = frequency_range(&consts, k, b2.start as f64, b2.end as f64);
                    (b - a) + (d - c)
                })
                .sum();
            if terms > SURROGATE_TERM_LIMIT {
                return Err(Error::SizeGuard {
                    what: "stationary-phase terms in cell",
                    got: terms,
                    limit: SURROGATE_TERM_LIMIT,
                });
            }
            let parts: Vec<Complex64> = ks
                .par_iter()
                .map(|&k| {
                    let m1 = eb_main_term_on(&consts, k, b1.start as f64, b1.end as f64);
                    let m2 = if q1 == q2 { m1 } else { eb_main_term_on(&consts, k, b2.start as f64, b2.end as f64) };
                    f.transform(k as f64 / n as f64) * m1 * m2.conj()
                })
                .collect();
            let mut s = ComplexAcc::new();
            for p in parts {
                s.add(p);
            }
            Some(s.value() * scale)
        } else {
            None
        };
        let residual = match surrogate {
            Some(s) => (cell - s).norm(),
            None => cell.norm(),
        };
        out.push(CellResidual {
            q1,
            q2,
            u,
            main,
            cell,
            surrogate,
            residual,
            relative: if cell.norm() > 0.0 { residual / cell.norm() } else { 0.0 },
        });
    }
    Ok(out)
}

/// `Σ_{n >= 0} (a + n)^{-s}` for `a >= 1`, `s > 1`, by Euler–Maclaurin after
/// shifting `a` past 16.
fn hurwitz(s: f64, a: f64) -> f64 {
    const B2J: [f64; 7] = [
        1.0 / 6.0,
        -1.0 / 30.0,
        1.0 / 42.0,
        -1.0 / 30.0,
        5.0 / 66.0,
        -691.0 / 2730.0,
        7.0 / 6.0,
    ];
    let mut head = NeumaierSum::new();
    let mut a = a;
    while a < 16.0 {
        head.add(a.powf(-s));
        a += 1.0;
    }
    let mut acc = NeumaierSum::new();
    acc.add(a.powf(1.0 - s) / (s - 1.0));
    acc.add(0.5 * a.powf(-s));
    // B_{2j}/(2j)! · s(s+1)…(s+2j−2) · a^{−s−2j+1}
    let mut rising = s;
    let mut fact = 2.0;
    let mut power = a.powf(-s - 1.0);
    for (j, b) in B2J.iter().enumerate() {
        let jj = (j + 1) as f64;
        acc.add(b / fact * rising * power);
        rising *= (s + 2.0 * jj - 1.0) * (s + 2.0 * jj);
        fact *= (2.0 * jj + 1.0) * (2.0 * jj + 2.0);
        power /= a * a;
    }
    head.merge(acc);
    head.value()
}

/// `Σ_{r=a}^{b-1} r^{-s}`.
fn power_sum(s: f64, a: u64, b: u64) -> f64 {
    if b <= a {
        return 0.0;
    }
    if b - a <= DIRECT_POWER_SUM {
        let mut acc = NeumaierSum::new();
        for r in a..b {
            acc.add((r as f64).powf(-s));
        }
        return acc.value();
    }
    hurwitz(s, a as f64) - hurwitz(s, b as f64)
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagonalReport {
    /// `(1/N²) Σ_{u <= U} Σ_{q <= Q} D_{u,q}`
    pub value: f64,
    /// `f(0) − f̂(0)`
    pub target: f64,
    pub f_at_zero: f64,
}

/// The `q1 = q2, r1 = r2` part of the surrogate cell sums.
pub fn diagonal_sum(spec: &SequenceSpec, f: &TestFunction, plan: &DecompositionPlan) -> Result<DiagonalReport> {
    check_spec(spec)?;
    let consts = constants_for(spec, plan)?;
    let n = plan.n;
    let k_end = plan.k_end();
    check_truncation(f, n, k_end)?;
    let big = consts.big_theta;
    let c1_sq = consts.c1.norm_sqr();
    let parts: Vec<f64> = (1..k_end)
        .into_par_iter()
        .map(|k| {
            let w = f.transform(k as f64 / n as f64);
            if w == 0.0 {
                return 0.0;
            }
            let mut inner = NeumaierSum::new();
            for b in &plan.blocks {
                let (first, end) = frequency_range(&consts, k, b.start as f64, b.end as f64);
                inner.add(power_sum(big + 1.0, first, end));
            }
            w * (k as f64).powf(big) * inner.value()
        })
        .collect();
    let mut acc = NeumaierSum::new();
    for p in parts {
        acc.add(p);
    }
    Ok(DiagonalReport {
        value: 2.0 * c1_sq * acc.value() / (n as f64 * n as f64),
        target: f.at_zero() - f.transform(0.0),
        f_at_zero: f.at_zero(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BarrierRow {
    pub theta: f64,
    pub n: u64,
    pub offdiag_total: f64,
    /// `log offdiag_total / log N`
    pub empirical_exponent: f64,
    /// `46/30 + 41θ/30 − 2 + ε`
    pub predicted_exponent: f64,
    pub predicted_bound: f64,
}

pub fn predicted_exponent(theta: f64, epsilon: f64) -> f64 {
    46.0 / 30.0 + 41.0 * theta / 30.0 - 2.0 + epsilon
}

/// Off-diagonal cell mass against the predicted power of `N` for each `θ`.
pub fn barrier_probe(
    alpha: f64,
    thetas: &[f64],
    f: &TestFunction,
    plan: &DecompositionPlan,
) -> Result<Vec<BarrierRow>> {
    thetas
        .iter()
        .map(|&theta| {
            if !(theta > 0.0 && theta < 1.0) {
                return Err(Error::InvalidParameter(format!("theta must lie in (0, 1), got {theta}")));
            }
            let spec = SequenceSpec::monomial(alpha, theta)?;
            let seg = segment_for(&spec, plan)?;
            let sums = cell_sums(&spec, f, plan, seg.as_ref())?;
            let mut off = NeumaierSum::new();
            for c in sums.cells.iter().filter(|c| c.q1 != c.q2) {
                off.add(c.value.norm());
            }
            let off = off.value();
            let nf = plan.n as f64;
            let pe = predicted_exponent(theta, plan.epsilon);
            Ok(BarrierRow {
                theta,
                n: plan.n,
                offdiag_total: off,
                empirical_exponent: off.ln() / nf.ln(),
                predicted_exponent: pe,
                predicted_bound: nf.powf(pe),
            })
        })
        .collect()
}
