//! Non-uniform FFT by Gaussian gridding.
//!
//! `type1` computes `F(k) = Σ_j c_j e(-k x_j)` for `|k| <= K`; `type2` evaluates
//! `u_j = Σ_k a_k e(k x_j)`. Spreading runs serially in index order so results
//! do not depend on the worker count.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Half-width of the spreading stencil in grid cells.
const SPREAD: i64 = 16;

pub(crate) struct Nufft {
    k_max: usize,
    grid: usize,
    tau: f64,
    // kernel is exp(-lambda * d²) with d in grid cells
    lambda: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn smooth_size(min: usize) -> usize {
    let mut best = usize::MAX;
    let mut p2 = 2usize;
    while p2 < 2 * min.max(2) {
        let mut p3 = p2;
        while p3 < 2 * min.max(2) {
            let mut p5 = p3;
            while p5 < min {
                p5 *= 5;
            }
            best = best.min(p5);
            p3 *= 3;
        }
        p2 *= 2;
    }
    best
}

impl Nufft {
    pub(crate) fn new(k_max: usize) -> Self {
        let modes = 2 * k_max + 1;
        let grid = smooth_size((2 * modes).max(4 * SPREAD as usize));
        let r = grid as f64 / modes as f64;
        let tau = PI * SPREAD as f64 / (modes as f64 * modes as f64 * r * (r - 0.5));
        let lambda = PI * PI / (grid as f64 * grid as f64 * tau);
        let mut planner = FftPlanner::new();
        Nufft {
            k_max,
            grid,
            tau,
            lambda,
            forward: planner.plan_fft_forward(grid),
            inverse: planner.plan_fft_inverse(grid),
        }
    }

    // Calls `visit(cell, weight)` for the stencil around `x`.
    #[inline]
    fn stencil<V: FnMut(usize, f64)>(&self, x: f64, mut visit: V) {
        let g = self.grid as f64;
        let pos = (x - x.floor()) * g;
        let base = pos.floor();
        let d = pos - base;
        let base = base as i64;
        let l0 = 1 - SPREAD;
        let mut v = (-self.lambda * (d - l0 as f64).powi(2)).exp();
        let mut ratio = (2.0 * self.lambda * (d - l0 as f64) - self.lambda).exp();
        let q = (-2.0 * self.lambda).exp();
        let n = self.grid as i64;
        for l in l0..=SPREAD {
            let cell = (base + l).rem_euclid(n) as usize;
            visit(cell, v);
            v *= ratio;
            ratio *= q;
        }
    }

    fn deconvolution(&self, k: i64) -> f64 {
        (PI / self.tau).sqrt() * ((k * k) as f64 * self.tau).exp() / self.grid as f64
    }

    /// `F(k) = Σ_j c_j e(-k x_j)`, returned at index `k + K`.
    pub(crate) fn type1<C>(&self, x: &[f64], coeff: C) -> Vec<Complex64>
    where
        C: Fn(usize) -> Complex64,
    {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.grid];
        for (j, &xj) in x.iter().enumerate() {
            let c = coeff(j);
            self.stencil(xj, |cell, w| buf[cell] += c * w);
        }
        self.forward.process(&mut buf);
        let k = self.k_max as i64;
        (-k..=k)
            .map(|kk| buf[kk.rem_euclid(self.grid as i64) as usize] * self.deconvolution(kk))
            .collect()
    }

    /// `u_j = Σ_k a_k e(k x_j)` with `a` indexed by `k + K`.
    pub(crate) fn type2(&self, x: &[f64], a: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(a.len(), 2 * self.k_max + 1);
        let mut buf = vec![Complex64::new(0.0, 0.0); self.grid];
        let k = self.k_max as i64;
        for (idx, kk) in (-k..=k).enumerate() {
            buf[kk.rem_euclid(self.grid as i64) as usize] = a[idx] * self.deconvolution(kk);
        }
        self.inverse.process(&mut buf);
        x.iter()
            .map(|&xj| {
                let mut acc = Complex64::new(0.0, 0.0);
                self.stencil(xj, |cell, w| acc += buf[cell] * w);
                acc
            })
            .collect()
    }
}

/// `S_m = Σ_j e(m x_j)` for `|m| <= K`, at index `m + K`.
pub(crate) fn exp_sums(x: &[f64], k_max: usize) -> Vec<Complex64> {
    let plan = Nufft::new(k_max);
    let mut f = plan.type1(x, |_| Complex64::new(1.0, 0.0));
    f.reverse();
    // the zero mode is known exactly
    f[k_max] = Complex64::new(x.len() as f64, 0.0);
    f
}
