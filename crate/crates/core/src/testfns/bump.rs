//! Transform table for the unit bump `g(u) = exp(1 - 1/(1 - u²))` on (-1, 1).

use std::sync::OnceLock;

use num_complex::Complex64;
use rustfft::FftPlanner;

/// Grid spacing of the transform table.
const STEP: f64 = 1.0 / 512.0;
/// Trapezoid step in `u`.
const NODE: f64 = 1.0 / 1024.0;
/// Table extent in frequency; beyond it |ĝ| is below 1e-20 and the table
/// entries are at the rounding floor (~1e-17).
pub(crate) const TABLE_END: f64 = 400.0;

pub(crate) fn unit_bump(u: f64) -> f64 {
    let a = u.abs();
    if a >= 1.0 {
        return 0.0;
    }
    let d = (1.0 - a) * (1.0 + a);
    (1.0 - 1.0 / d).exp()
}

pub(crate) struct BumpTable {
    values: Vec<f64>,
    // max_{j >= i} |ĝ_j|
    tail_max: Vec<f64>,
    // STEP * Σ_{j >= i} tail_max[j], dominates ∫_{η_i}^∞ |ĝ|
    tail_mass: Vec<f64>,
}

impl BumpTable {
    fn build() -> Self {
        // Trapezoid with step h on [-1, 1] is spectrally accurate for g; zero
        // padding to period 1/STEP puts the DFT bins on the table grid.
        let per_unit = (1.0 / NODE) as usize;
        let len = per_unit * (1.0 / STEP) as usize;
        let mut buf = vec![Complex64::new(0.0, 0.0); len];
        buf[0] = Complex64::new(unit_bump(0.0), 0.0);
        for j in 1..per_unit {
            let v = unit_bump(j as f64 * NODE);
            buf[j] = Complex64::new(v, 0.0);
            buf[len - j] = Complex64::new(v, 0.0);
        }
        FftPlanner::new().plan_fft_forward(len).process(&mut buf);
        let count = (TABLE_END / STEP) as usize + 3;
        let values: Vec<f64> = buf[..count].iter().map(|z| z.re * NODE).collect();
        let mut tail_max = vec![0.0; count];
        let mut tail_mass = vec![0.0; count];
        let (mut m, mut acc) = (0.0f64, 0.0);
        for i in (0..count).rev() {
            m = m.max(values[i].abs());
            acc += m * STEP;
            tail_max[i] = m;
            tail_mass[i] = acc;
        }
        BumpTable {
            values,
            tail_max,
            tail_mass,
        }
    }

    fn at(&self, i: isize) -> f64 {
        self.values[i.unsigned_abs()]
    }

    /// Cubic interpolation of ĝ(η).
    pub(crate) fn eval(&self, eta: f64) -> f64 {
        let eta = eta.abs();
        if eta >= TABLE_END {
            return 0.0;
        }
        let pos = eta / STEP;
        let i = pos.floor() as isize;
        let t = pos - i as f64;
        let (p0, p1, p2, p3) = (self.at(i - 1), self.at(i), self.at(i + 1), self.at(i + 2));
        // Lagrange weights on nodes -1, 0, 1, 2
        let w0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
        let w1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
        let w2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
        let w3 = (t + 1.0) * t * (t - 1.0) / 6.0;
        w0 * p0 + w1 * p1 + w2 * p2 + w3 * p3
    }

    pub(crate) fn integral(&self) -> f64 {
        self.values[0]
    }

    /// Bound on ∫_η^∞ |ĝ|.
    pub(crate) fn tail_mass(&self, eta: f64) -> f64 {
        let eta = eta.max(0.0);
        if eta >= TABLE_END {
            return 0.0;
        }
        // round down so the sum starts at or before η
        self.tail_mass[(eta / STEP).floor() as usize]
    }

    /// Smallest tabulated η beyond which |ĝ| < tol.
    pub(crate) fn decay_radius(&self, tol: f64) -> f64 {
        let idx = self.tail_max.partition_point(|&m| m >= tol);
        if idx >= self.tail_max.len() {
            if tol > 0.0 {
                TABLE_END
            } else {
                f64::INFINITY
            }
        } else {
            idx as f64 * STEP
        }
    }
}

pub(crate) fn table() -> &'static BumpTable {
    static TABLE: OnceLock<BumpTable> = OnceLock::new();
    TABLE.get_or_init(BumpTable::build)
}

#[cfg(test)]
mod tests {
    use super::*;

    // 30-digit quadrature values of ĝ and ∫g.
    const GOLDEN: [(f64, f64); 7] = [
        (0.0, 1.206_900_322_437_876_175_336_237_996_33),
        (0.5, 0.490_663_176_267_173_208_189_307_749_118),
        (1.0, -0.116_498_869_165_102_628_000_012_786_947),
        (3.0, 0.006_865_667_469_349_137_672_514_257_185_17),
        (10.0, -0.000_098_838_841_085_550_047_208_272_195_923_2),
        (40.0, -3.125_831_115_178_036_881_024_300_457_2e-9),
        (100.0, 2.883_690_635_653_986_715_243_393_841_188_6e-13),
    ];

    #[test]
    fn table_matches_golden_values() {
        let t = table();
        for (eta, want) in GOLDEN {
            assert!((t.eval(eta) - want).abs() < 1e-13, "eta={eta}");
        }
    }

    #[test]
    fn interpolation_between_nodes() {
        // ĝ(1) is on the grid; check an off-grid point against a direct trapezoid.
        let eta = 2.345_678_9;
        let h = 1.0 / 4096.0;
        let mut direct = unit_bump(0.0);
        for j in 1..4096 {
            let u = j as f64 * h;
            direct += 2.0 * unit_bump(u) * (2.0 * std::f64::consts::PI * u * eta).cos();
        }
        direct *= h;
        assert!((table().eval(eta) - direct).abs() < 1e-9);
    }

    #[test]
    fn tail_mass_is_monotone_and_small_far_out() {
        let t = table();
        assert!(t.tail_mass(10.0) > t.tail_mass(20.0));
        // far out the table sits at the FFT rounding floor
        assert!(t.tail_mass(350.0) < 1e-14);
        assert!(t.eval(390.0).abs() < 1e-16);
        assert!((t.eval(140.0) - 4.333_657_885_295_936_889_7e-15).abs() < 1e-16);
        assert!(t.decay_radius(1e-14) < 200.0);
    }
}
