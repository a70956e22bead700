//! Sequence recipes and initial segments `(x_n)_{n <= N}` on the circle.

use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::precision::{Exponent, ExtReal, MonomialMap, UnitAngle};

/// Segments above this length are only available through [`stream`].
pub const MATERIALIZE_LIMIT: u64 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SequenceKind {
    /// `alpha * n^theta mod 1`
    Monomial,
    /// `alpha * n mod 1`
    Linear,
    /// `alpha * sqrt(m) mod 1` over the non-squares `m = 2, 3, 5, 6, 7, 8, 10, ...`
    SqrtNoSquares,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceSpec {
    pub kind: SequenceKind,
    pub alpha: f64,
    pub theta: f64,
}

impl SequenceSpec {
    pub fn monomial(alpha: f64, theta: f64) -> Result<Self> {
        Self::validated(SequenceKind::Monomial, alpha, theta)
    }

    pub fn linear(alpha: f64) -> Result<Self> {
        Self::validated(SequenceKind::Linear, alpha, 1.0)
    }

    pub fn sqrt_no_squares(alpha: f64) -> Result<Self> {
        Self::validated(SequenceKind::SqrtNoSquares, alpha, 0.5)
    }

    fn validated(kind: SequenceKind, alpha: f64, theta: f64) -> Result<Self> {
        let spec = SequenceSpec { kind, alpha, theta };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        let fixed = match self.kind {
            SequenceKind::Monomial => None,
            SequenceKind::Linear => Some(1.0),
            SequenceKind::SqrtNoSquares => Some(0.5),
        };
        if let Some(t) = fixed {
            if self.theta != t {
                return Err(Error::InvalidParameter(format!(
                    "{:?} fixes theta = {t}, got {}",
                    self.kind, self.theta
                )));
            }
        }
        Exponent::new(self.theta)?;
        Ok(())
    }

    pub fn map(&self) -> Result<MonomialMap> {
        Ok(MonomialMap::new(
            ExtReal::from_f64(self.alpha),
            Exponent::new(self.theta)?,
        ))
    }

    /// The integer fed to the monomial for the `n`-th term (1-based).
    pub fn index(&self, n: u64) -> u64 {
        match self.kind {
            SequenceKind::SqrtNoSquares => nth_non_square(n),
            _ => n,
        }
    }
}

/// The `n`-th positive integer that is not a perfect square: `n + round(sqrt n)`.
pub fn nth_non_square(n: u64) -> u64 {
    let r = isqrt(n);
    let rounded = if n - r * r > r { r + 1 } else { r };
    n + rounded
}

pub(crate) fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// An initial segment in index order.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub spec: SequenceSpec,
    pub points: Vec<UnitAngle>,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }

    pub fn max_err(&self) -> f64 {
        self.points.iter().map(|p| p.err).fold(0.0, f64::max)
    }

    /// A segment built from raw points, e.g. for hand-made test configurations.
    pub fn from_values(spec: SequenceSpec, values: &[f64]) -> Self {
        Segment {
            spec,
            points: values.iter().map(|&v| UnitAngle::from_f64(v)).collect(),
        }
    }
}

pub fn generate(spec: SequenceSpec, n: u64) -> Result<Segment> {
    if n == 0 {
        return Err(Error::InvalidParameter("N must be at least 1".into()));
    }
    if n > MATERIALIZE_LIMIT {
        return Err(Error::SizeGuard {
            what: "materialized segment length",
            got: n,
            limit: MATERIALIZE_LIMIT,
        });
    }
    spec.validate()?;
    let map = spec.map()?;
    let points = (1..=n)
        .into_par_iter()
        .map(|i| map.angle(spec.index(i)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Segment { spec, points })
}

/// Lazily generated points `x_1, x_2, ...`.
pub fn stream(spec: SequenceSpec) -> Result<impl Iterator<Item = Result<UnitAngle>>> {
    spec.validate()?;
    let map = spec.map()?;
    Ok((1u64..).map(move |i| map.angle(spec.index(i))))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentSidecar {
    pub spec: SequenceSpec,
    pub n: u64,
    pub max_err: f64,
    pub sha256: String,
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes `<stem>.bin` (little-endian f64 values) and `<stem>.json`.
pub fn dump(segment: &Segment, stem: &Path) -> Result<SegmentSidecar> {
    let mut bytes = Vec::with_capacity(segment.len() * 8);
    for p in &segment.points {
        bytes.extend_from_slice(&p.value.to_le_bytes());
    }
    let sidecar = SegmentSidecar {
        spec: segment.spec,
        n: segment.len() as u64,
        max_err: segment.max_err(),
        sha256: sha256_hex(&bytes),
    };
    fs::File::create(stem.with_extension("bin"))?.write_all(&bytes)?;
    fs::write(
        stem.with_extension("json"),
        serde_json::to_string_pretty(&sidecar)?,
    )?;
    Ok(sidecar)
}

pub fn load(stem: &Path) -> Result<Segment> {
    let sidecar: SegmentSidecar =
        serde_json::from_str(&fs::read_to_string(stem.with_extension("json"))?)?;
    let bytes = fs::read(stem.with_extension("bin"))?;
    if bytes.len() as u64 != sidecar.n * 8 {
        return Err(Error::Format(format!(
            "expected {} bytes, found {}",
            sidecar.n * 8,
            bytes.len()
        )));
    }
    let sum = sha256_hex(&bytes);
    if sum != sidecar.sha256 {
        return Err(Error::Format(format!(
            "checksum mismatch: sidecar {}, data {sum}",
            sidecar.sha256
        )));
    }
    let points = bytes
        .chunks_exact(8)
        .map(|c| {
            let v = f64::from_le_bytes(c.try_into().expect("8-byte chunk"));
            if !(0.0..1.0).contains(&v) {
                return Err(Error::Format(format!("point {v} outside [0, 1)")));
            }
            Ok(UnitAngle {
                value: v,
                err: sidecar.max_err,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Segment {
        spec: sidecar.spec,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_third() {
        let seg = generate(SequenceSpec::linear(1.0 / 3.0).unwrap(), 3).unwrap();
        let v = seg.values();
        assert!((v[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((v[1] - 2.0 / 3.0).abs() < 1e-15);
        assert!(v[2] == 0.0 || v[2] > 1.0 - 1e-15);
    }

    #[test]
    fn cube_root_of_eight() {
        let seg = generate(SequenceSpec::monomial(1.0, 1.0 / 3.0).unwrap(), 8).unwrap();
        assert_eq!(seg.points[7].value, 0.0);
    }

    #[test]
    fn non_squares_skip_squares() {
        let firsts: Vec<u64> = (1..=12).map(nth_non_square).collect();
        assert_eq!(firsts, vec![2, 3, 5, 6, 7, 8, 10, 11, 12, 13, 14, 15]);
        for n in 1..200_000u64 {
            let m = nth_non_square(n);
            let r = isqrt(m);
            assert_ne!(r * r, m, "n={n} produced square {m}");
        }
    }

    #[test]
    fn fixed_theta_is_enforced() {
        let bad = SequenceSpec {
            kind: SequenceKind::Linear,
            alpha: 1.0,
            theta: 0.5,
        };
        assert!(bad.validate().is_err());
        assert!(SequenceSpec::monomial(-1.0, 0.5).is_err());
    }

    #[test]
    fn prefix_stability() {
        let spec = SequenceSpec::monomial(1.7, 0.37).unwrap();
        let a = generate(spec, 500).unwrap();
        let b = generate(spec, 501).unwrap();
        assert_eq!(&b.points[..500], &a.points[..]);
        let streamed: Vec<UnitAngle> = stream(spec).unwrap().take(501).map(|r| r.unwrap()).collect();
        assert_eq!(streamed, b.points);
    }

    #[test]
    fn rational_linear_has_q_distinct_points() {
        let q = 7u64;
        let spec = SequenceSpec::linear(3.0 / q as f64).unwrap();
        let seg = generate(spec, 100).unwrap();
        let mut classes = std::collections::BTreeSet::new();
        for v in seg.values() {
            let j = (v * q as f64).round();
            assert!((v - j / q as f64).abs() < 1e-12);
            classes.insert(j as u64 % q);
        }
        assert_eq!(classes.len(), q as usize);
    }

    #[test]
    fn dump_load_round_trip_and_checksum() {
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("seg");
        let seg = generate(SequenceSpec::sqrt_no_squares(1.0).unwrap(), 1000).unwrap();
        dump(&seg, &stem).unwrap();
        let back = load(&stem).unwrap();
        assert_eq!(back.values(), seg.values());
        assert_eq!(back.spec, seg.spec);

        let mut bytes = fs::read(stem.with_extension("bin")).unwrap();
        bytes[3] ^= 1;
        fs::write(stem.with_extension("bin"), bytes).unwrap();
        assert!(matches!(load(&stem), Err(Error::Format(_))));
    }
}
