//! Pair and triple correlation sums, gap statistics and the three-gap check.
//!
//! With `P(t) = Σ_k f(N(t+k))`, the pair statistic is `(1/N) Σ_{i≠j} P(x_i - x_j)`;
//! including the diagonal adds `P(0)`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::precision::{par_sum, NeumaierSum};
use crate::sequences::{generate, Segment, SequenceSpec};
use crate::spectral::{exp_sums, Nufft};
use crate::testfns::TestFunction;

/// Default size guard of [`pair_corr_naive`].
pub const NAIVE_PAIR_LIMIT: usize = 50_000;
/// Size guard of the naive triple path.
pub const NAIVE_TRIPLE_LIMIT: usize = 3_000;
/// Largest frequency cut-off the spectral paths accept.
pub const SPECTRAL_MODE_LIMIT: usize = 50_000_000;
/// Values of `f` below this are dropped by the sorted-window paths.
pub const WINDOW_TOL: f64 = 1e-16;
/// Gap lengths closer than this multiple of `N` are counted as equal.
pub const GAP_TOL_FACTOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    NaivePair,
    FastPair,
    NaivePairWithDiagonal,
    FastPairWithDiagonal,
    Triple,
}

/// How the lattice sum over `k` was cut off.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    /// The sum was evaluated in closed form or over a finite exact support.
    Exact,
    /// Terms with `|f| < tol` were dropped.
    Tail { tol: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub n: u64,
    pub value: f64,
    pub poisson_reference: f64,
    pub deviation: f64,
    pub mode: Mode,
    pub truncation: Truncation,
}

impl CorrelationReport {
    fn new(n: usize, value: f64, poisson_reference: f64, mode: Mode, truncation: Truncation) -> Self {
        CorrelationReport {
            n: n as u64,
            value,
            poisson_reference,
            deviation: value - poisson_reference,
            mode,
            truncation,
        }
    }

    pub const CSV_HEADER: &'static str = "kind,alpha,theta,N,value,reference,deviation,mode,runtime_ms";

    /// One CSV row; `runtime_ms` is left empty when `None`.
    pub fn csv_row(&self, spec: &SequenceSpec, runtime_ms: Option<f64>) -> String {
        let kind = serde_json::to_value(spec.kind)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default();
        let mode = serde_json::to_value(self.mode)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default();
        format!(
            "{kind},{},{},{},{},{},{},{mode},{}",
            spec.alpha,
            spec.theta,
            self.n,
            self.value,
            self.poisson_reference,
            self.deviation,
            runtime_ms.map(|t| format!("{t:.3}")).unwrap_or_default()
        )
    }
}

fn pair_reference(f: &TestFunction, with_diagonal: bool) -> f64 {
    if with_diagonal {
        f.integral() + f.at_zero()
    } else {
        f.integral()
    }
}

fn lattice_truncation(f: &TestFunction) -> Truncation {
    if f.transform_is_compact() {
        Truncation::Exact
    } else {
        Truncation::Tail { tol: 1e-18 }
    }
}

/// Brute-force pair correlation with the default size guard.
pub fn pair_corr_naive(seg: &Segment, f: &TestFunction, with_diagonal: bool) -> Result<CorrelationReport> {
    pair_corr_naive_with_limit(seg, f, with_diagonal, NAIVE_PAIR_LIMIT)
}

pub fn pair_corr_naive_with_limit(
    seg: &Segment,
    f: &TestFunction,
    with_diagonal: bool,
    limit: usize,
) -> Result<CorrelationReport> {
    let n = seg.len();
    if n > limit {
        return Err(Error::SizeGuard {
            what: "naive pair correlation N",
            got: n as u64,
            limit: limit as u64,
        });
    }
    let x = seg.values();
    let nf = n as f64;
    let offdiag = 2.0
        * par_sum(n, |i| {
            let xi = x[i];
            x[i + 1..].iter().map(|&xj| f.periodized(nf, xi - xj)).collect::<NeumaierSum>().value()
        });
    let mut value = offdiag / nf;
    if with_diagonal {
        value += f.periodized(nf, 0.0);
    }
    let mode = if with_diagonal {
        Mode::NaivePairWithDiagonal
    } else {
        Mode::NaivePair
    };
    Ok(CorrelationReport::new(n, value, pair_reference(f, with_diagonal), mode, lattice_truncation(f)))
}

fn sorted(seg: &Segment) -> Vec<f64> {
    let mut y = seg.values();
    y.par_sort_unstable_by(f64::total_cmp);
    y
}

// Number of modes with f̂(m/N) above `tol`; exact support for compact transforms.
fn mode_cutoff(f: &TestFunction, n: usize) -> Result<usize> {
    let nf = n as f64;
    let k = if f.transform_is_compact() {
        let big = f.transform_decay_radius(0.0) * nf;
        (big.ceil() - 1.0).max(0.0) as usize
    } else {
        let mut k = (f.transform_decay_radius(1e-17) * nf).ceil() as usize;
        while f.dual_tail(nf, k as u64) > 1e-15 && k < SPECTRAL_MODE_LIMIT {
            k = k * 2 + 1;
        }
        k
    };
    if k > SPECTRAL_MODE_LIMIT {
        return Err(Error::SizeGuard {
            what: "spectral mode cut-off",
            got: k as u64,
            limit: SPECTRAL_MODE_LIMIT as u64,
        });
    }
    Ok(k)
}

// Σ_{i,j} P(x_i - x_j) = (1/N) Σ_m f̂(m/N) |S_m|²
fn spectral_energy(weights: impl Fn(usize) -> f64, s: &[Complex64], k: usize, n: usize) -> f64 {
    let mut acc = NeumaierSum::new();
    acc.add(weights(0) * s[k].norm_sqr());
    for m in 1..=k {
        acc.add(2.0 * weights(m) * s[k + m].norm_sqr());
    }
    acc.value() / n as f64
}

// Σ term(d) over sorted pairs, where d <= r is the forward circular distance
// from the earlier point to the later one.
fn window_rows<F>(y: &[f64], r: f64, term: F) -> f64
where
    F: Fn(f64) -> f64 + Sync,
{
    let n = y.len();
    par_sum(n, |i| {
        let mut acc = NeumaierSum::new();
        for step in 1..n {
            let j = i + step;
            let d = if j < n { y[j] - y[i] } else { y[j - n] + 1.0 - y[i] };
            if d > r {
                break;
            }
            acc.add(term(d));
        }
        acc.value()
    })
}

/// Fast pair correlation: spectral for band-limited `f`, sorted window otherwise.
pub fn pair_corr_fast(seg: &Segment, f: &TestFunction, with_diagonal: bool) -> Result<CorrelationReport> {
    let n = seg.len();
    let nf = n as f64;
    let p0 = f.periodized(nf, 0.0);
    let (offdiag_total, truncation) = if f.transform_is_compact() {
        let k = mode_cutoff(f, n)?;
        let s = exp_sums(&seg.values(), k);
        let total = spectral_energy(|m| f.transform(m as f64 / nf), &s, k, n);
        (total - nf * p0, Truncation::Exact)
    } else {
        let r = f.decay_radius(WINDOW_TOL) / nf;
        if r >= 0.5 {
            let rep = pair_corr_naive_with_limit(seg, f, false, usize::MAX)?;
            (rep.value * nf, rep.truncation)
        } else {
            let y = sorted(seg);
            let half = window_rows(&y, r, |d| f.eval(nf * d));
            (2.0 * half, Truncation::Tail { tol: WINDOW_TOL })
        }
    };
    let mut value = offdiag_total / nf;
    if with_diagonal {
        value += p0;
    }
    let mode = if with_diagonal {
        Mode::FastPairWithDiagonal
    } else {
        Mode::FastPair
    };
    Ok(CorrelationReport::new(n, value, pair_reference(f, with_diagonal), mode, truncation))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TripleMode {
    Naive,
    Fast,
}

/// `(1/N) Σ_{i,j,l distinct} P_f(x_i - x_j) P_g(x_j - x_l)`.
pub fn triple_corr(seg: &Segment, f: &TestFunction, g: &TestFunction, mode: TripleMode) -> Result<CorrelationReport> {
    let n = seg.len();
    let (value, truncation) = match mode {
        TripleMode::Naive => {
            if n > NAIVE_TRIPLE_LIMIT {
                return Err(Error::SizeGuard {
                    what: "naive triple correlation N",
                    got: n as u64,
                    limit: NAIVE_TRIPLE_LIMIT as u64,
                });
            }
            let tr = if f.transform_is_compact() && g.transform_is_compact() {
                Truncation::Exact
            } else {
                Truncation::Tail { tol: 1e-18 }
            };
            (triple_corr_unguarded(seg, f, g), tr)
        }
        TripleMode::Fast => {
            if f.transform_is_compact() || g.transform_is_compact() {
                (spectral_triple(seg, f, g)?, Truncation::Exact)
            } else {
                window_triple(seg, f, g)?
            }
        }
    };
    Ok(CorrelationReport::new(n, value, f.integral() * g.integral(), Mode::Triple, truncation))
}

fn combine_triple(rows: &[(f64, f64, f64)], nf: f64) -> f64 {
    let mut acc = NeumaierSum::new();
    for &(af, ag, cross) in rows {
        acc.add(af * ag);
        acc.add(-cross);
    }
    acc.value() / nf
}

fn spectral_triple(seg: &Segment, f: &TestFunction, g: &TestFunction) -> Result<f64> {
    let n = seg.len();
    let nf = n as f64;
    let kf = mode_cutoff(f, n)?;
    let kg = mode_cutoff(g, n)?;
    let kfg = kf + kg;
    if kfg > SPECTRAL_MODE_LIMIT {
        return Err(Error::SizeGuard {
            what: "spectral mode cut-off",
            got: kfg as u64,
            limit: SPECTRAL_MODE_LIMIT as u64,
        });
    }
    let x = seg.values();
    let s = exp_sums(&x, kfg);
    let wf: Vec<f64> = (-(kf as i64)..=kf as i64).map(|m| f.transform(m as f64 / nf)).collect();
    let wg: Vec<f64> = (-(kg as i64)..=kg as i64).map(|m| g.transform(m as f64 / nf)).collect();

    // A_j = (1/N) Σ_m w_m S_m e(-m x_j) - P(0), evaluated as Σ_k w_k conj(S_k) e(k x_j)
    let row_sums = |w: &[f64], k: usize, p0: f64| -> Vec<f64> {
        let a: Vec<Complex64> = (0..2 * k + 1)
            .map(|idx| s[kfg - k + idx].conj() * w[idx])
            .collect();
        Nufft::new(k)
            .type2(&x, &a)
            .into_iter()
            .map(|u| u.re / nf - p0)
            .collect()
    };
    let pf0 = f.periodized(nf, 0.0);
    let pg0 = g.periodized(nf, 0.0);
    let af = row_sums(&wf, kf, pf0);
    let ag = row_sums(&wg, kg, pg0);

    // Fourier coefficients of P_f P_g (times N²) by FFT convolution.
    let conv = convolve(&wf, &wg);
    let mut cross_total = NeumaierSum::new();
    cross_total.add(conv[kfg] * s[kfg].norm_sqr());
    for m in 1..=kfg {
        cross_total.add(2.0 * conv[kfg + m] * s[kfg + m].norm_sqr());
    }
    // Σ_{i,j} (P_f P_g)(x_i - x_j) minus the diagonal
    let cross = cross_total.value() / (nf * nf) - nf * pf0 * pg0;

    let mut acc = NeumaierSum::new();
    for (a, b) in af.iter().zip(&ag) {
        acc.add(a * b);
    }
    acc.add(-cross);
    Ok(acc.value() / nf)
}

// Linear convolution of two real sequences.
fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let out = a.len() + b.len() - 1;
    let size = out.next_power_of_two();
    let mut planner = rustfft::FftPlanner::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let pad = |v: &[f64]| {
        let mut buf = vec![Complex64::new(0.0, 0.0); size];
        for (slot, &x) in buf.iter_mut().zip(v) {
            slot.re = x;
        }
        buf
    };
    let mut fa = pad(a);
    let mut fb = pad(b);
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    for (p, q) in fa.iter_mut().zip(&fb) {
        *p *= q;
    }
    inv.process(&mut fa);
    fa[..out].iter().map(|z| z.re / size as f64).collect()
}

fn window_triple(seg: &Segment, f: &TestFunction, g: &TestFunction) -> Result<(f64, Truncation)> {
    let n = seg.len();
    let nf = n as f64;
    let rf = f.decay_radius(WINDOW_TOL) / nf;
    let rg = g.decay_radius(WINDOW_TOL) / nf;
    let r = rf.max(rg);
    if r >= 0.5 {
        if n > NAIVE_TRIPLE_LIMIT * 10 {
            return Err(Error::SizeGuard {
                what: "triple correlation without a short window",
                got: n as u64,
                limit: (NAIVE_TRIPLE_LIMIT * 10) as u64,
            });
        }
        let rep = triple_corr_unguarded(seg, f, g);
        return Ok((rep, Truncation::Tail { tol: 1e-18 }));
    }
    let y = sorted(seg);
    let rows: Vec<(f64, f64, f64)> = (0..n)
        .into_par_iter()
        .map(|j| {
            let (mut af, mut ag, mut cross) = (NeumaierSum::new(), NeumaierSum::new(), NeumaierSum::new());
            let mut visit = |d: f64| {
                let a = if d.abs() <= rf { f.eval(nf * d) } else { 0.0 };
                let b = if d.abs() <= rg { g.eval(nf * d) } else { 0.0 };
                af.add(a);
                ag.add(b);
                cross.add(a * b);
            };
            // forward then backward neighbours on the circle
            let mut taken = 0;
            for step in 1..n {
                let i = j + step;
                let d = if i < n { y[i] - y[j] } else { y[i - n] + 1.0 - y[j] };
                if d > r {
                    break;
                }
                visit(d);
                taken = step;
            }
            for step in 1..n - taken {
                let d = if step <= j { y[j - step] - y[j] } else { y[j + n - step] - 1.0 - y[j] };
                if -d > r {
                    break;
                }
                visit(d);
            }
            (af.value(), ag.value(), cross.value())
        })
        .collect();
    Ok((combine_triple(&rows, nf), Truncation::Tail { tol: WINDOW_TOL }))
}

fn triple_corr_unguarded(seg: &Segment, f: &TestFunction, g: &TestFunction) -> f64 {
    let n = seg.len();
    let nf = n as f64;
    let x = seg.values();
    let rows: Vec<(f64, f64, f64)> = (0..n)
        .into_par_iter()
        .map(|j| {
            let (mut af, mut ag, mut cross) = (NeumaierSum::new(), NeumaierSum::new(), NeumaierSum::new());
            for (i, &xi) in x.iter().enumerate() {
                if i != j {
                    let pf = f.periodized(nf, xi - x[j]);
                    let pg = g.periodized(nf, xi - x[j]);
                    af.add(pf);
                    ag.add(pg);
                    cross.add(pf * pg);
                }
            }
            (af.value(), ag.value(), cross.value())
        })
        .collect();
    combine_triple(&rows, nf)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub left: f64,
    pub right: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub n: u64,
    /// Circular gaps scaled by `N`, in circular order starting after the smallest point.
    pub gaps: Vec<f64>,
    /// Number of distinct positive gap lengths (coincident points excluded).
    pub distinct_count: usize,
    pub histogram: Vec<HistogramBin>,
    pub ks_vs_exponential: f64,
}

fn circular_gaps(y: &[f64]) -> Vec<f64> {
    let n = y.len();
    let mut gaps: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.push(y[0] + 1.0 - y[n - 1]);
    gaps
}

// Clusters sorted gap lengths with link distance `tol`, ignoring lengths <= tol.
fn distinct_lengths(gaps: &[f64], tol: f64) -> Vec<f64> {
    let mut g: Vec<f64> = gaps.iter().copied().filter(|&v| v > tol).collect();
    g.sort_unstable_by(f64::total_cmp);
    let mut reps: Vec<f64> = Vec::new();
    let mut last = f64::NEG_INFINITY;
    for v in g {
        if v - last > tol {
            reps.push(v);
        }
        last = v;
    }
    reps
}

pub fn gap_report(seg: &Segment, bins: usize) -> Result<GapReport> {
    let n = seg.len();
    if n < 2 {
        return Err(Error::InvalidParameter("gap statistics need N >= 2".into()));
    }
    if bins == 0 {
        return Err(Error::InvalidParameter("bins must be positive".into()));
    }
    let y = sorted(seg);
    let raw = circular_gaps(&y);
    let total: NeumaierSum = raw.iter().copied().collect();
    if (total.value() - 1.0).abs() > 1e-9 {
        return Err(Error::Format(format!("gaps sum to {} instead of 1", total.value())));
    }
    let nf = n as f64;
    let distinct_count = distinct_lengths(&raw, GAP_TOL_FACTOR * nf).len();
    let gaps: Vec<f64> = raw.iter().map(|g| g * nf).collect();

    let top = gaps.iter().copied().fold(0.0, f64::max);
    let width = if top > 0.0 { top / bins as f64 } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for &g in &gaps {
        let b = ((g / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let histogram = counts
        .iter()
        .enumerate()
        .map(|(b, &c)| HistogramBin {
            left: b as f64 * width,
            right: (b + 1) as f64 * width,
            mass: c as f64 / nf,
        })
        .collect();

    let mut s = gaps.clone();
    s.sort_unstable_by(f64::total_cmp);
    let mut ks: f64 = 0.0;
    for (i, &g) in s.iter().enumerate() {
        let cdf = -(-g).exp_m1();
        ks = ks.max((i + 1) as f64 / nf - cdf).max(cdf - i as f64 / nf);
    }
    Ok(GapReport {
        n: n as u64,
        gaps,
        distinct_count,
        histogram,
        ks_vs_exponential: ks,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreeGapWitness {
    pub n: u64,
    /// The distinct gap lengths found (unscaled).
    pub lengths: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreeGapOutcome {
    pub passed: bool,
    /// `(N, distinct gap count)` for each requested `N`.
    pub counts: Vec<(u64, usize)>,
    pub first_counterexample: Option<ThreeGapWitness>,
}

fn outcome(results: Vec<(u64, Vec<f64>)>) -> ThreeGapOutcome {
    let counts = results.iter().map(|(n, l)| (*n, l.len())).collect();
    let first_counterexample = results
        .into_iter()
        .find(|(_, l)| l.len() > 3)
        .map(|(n, lengths)| ThreeGapWitness { n, lengths });
    ThreeGapOutcome {
        passed: first_counterexample.is_none(),
        counts,
        first_counterexample,
    }
}

/// Distinct gap counts of `{αn mod 1 : n <= N}`.
pub fn three_gap_check(alpha: f64, n_list: &[u64]) -> Result<ThreeGapOutcome> {
    let spec = SequenceSpec::linear(alpha)?;
    let mut results = Vec::with_capacity(n_list.len());
    for &n in n_list {
        if n < 2 {
            results.push((n, if n == 1 { vec![1.0] } else { vec![] }));
            continue;
        }
        let seg = generate(spec, n)?;
        let y = sorted(&seg);
        let lengths = distinct_lengths(&circular_gaps(&y), GAP_TOL_FACTOR * n as f64);
        results.push((n, lengths));
    }
    Ok(outcome(results))
}

/// Exact three-gap check for rational `α = p/q`; lengths are reported as multiples of `1/q`.
pub fn three_gap_check_rational(p: u64, q: u64, n_list: &[u64]) -> Result<ThreeGapOutcome> {
    if q == 0 {
        return Err(Error::InvalidParameter("denominator must be positive".into()));
    }
    let mut results = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let mut pts: Vec<u128> = (1..=n as u128).map(|k| (p as u128 * k) % q as u128).collect();
        pts.sort_unstable();
        pts.dedup();
        let mut lengths: Vec<u128> = pts.windows(2).map(|w| w[1] - w[0]).collect();
        if let (Some(&first), Some(&last)) = (pts.first(), pts.last()) {
            lengths.push(first + q as u128 - last);
        }
        lengths.sort_unstable();
        lengths.dedup();
        results.push((n, lengths.into_iter().map(|l| l as f64 / q as f64).collect()));
    }
    Ok(outcome(results))
}

#[cfg(test)]
mod tests;
