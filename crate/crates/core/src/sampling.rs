//! Axis-aligned boxes and the seeded low-discrepancy point sequence.
//!
//! Points come from the Halton sequence (bases 2, 3, 5, 7, ...) starting at
//! index 1, shifted modulo 1 by a Cranley-Patterson rotation drawn from a
//! ChaCha8 generator seeded with the caller's seed. The same seed always
//! yields the same points.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoxError {
    #[error("box must have at least one axis")]
    Empty,
    #[error("axis {axis}: lower bound {lo} must be below upper bound {hi}")]
    Inverted { axis: usize, lo: f64, hi: f64 },
    #[error("axis {axis}: bounds must be finite")]
    NonFinite { axis: usize },
    #[error("dimension {0} exceeds the supported number of Halton bases")]
    TooManyAxes(usize),
}

/// A product of finite intervals `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct BoxDomain {
    bounds: Vec<(f64, f64)>,
}

impl BoxDomain {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self, BoxError> {
        if bounds.is_empty() {
            return Err(BoxError::Empty);
        }
        for (axis, &(lo, hi)) in bounds.iter().enumerate() {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(BoxError::NonFinite { axis });
            }
            if lo >= hi {
                return Err(BoxError::Inverted { axis, lo, hi });
            }
        }
        if bounds.len() > PRIMES.len() {
            return Err(BoxError::TooManyAxes(bounds.len()));
        }
        Ok(BoxDomain { bounds })
    }

    /// `[-r, r]^n`.
    pub fn cube(n: usize, r: f64) -> Result<Self, BoxError> {
        Self::new(vec![(-r, r); n])
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn contains(&self, x: &DVector<f64>) -> bool {
        x.len() == self.dim() && self.bounds.iter().zip(x.iter()).all(|(&(lo, hi), &v)| v >= lo && v <= hi)
    }

    /// Euclidean length of the box diagonal.
    pub fn diameter(&self) -> f64 {
        self.bounds.iter().map(|(lo, hi)| (hi - lo).powi(2)).sum::<f64>().sqrt()
    }

    /// `count` seeded low-discrepancy points inside the box.
    pub fn low_discrepancy_points(&self, count: usize, seed: u64) -> Vec<DVector<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shift: Vec<f64> = (0..self.dim()).map(|_| rng.random::<f64>()).collect();
        (1..=count as u64)
            .map(|k| {
                DVector::from_fn(self.dim(), |axis, _| {
                    let u = (radical_inverse(k, PRIMES[axis]) + shift[axis]).fract();
                    let (lo, hi) = self.bounds[axis];
                    lo + u * (hi - lo)
                })
            })
            .collect()
    }
}

impl TryFrom<Vec<[f64; 2]>> for BoxDomain {
    type Error = BoxError;

    fn try_from(v: Vec<[f64; 2]>) -> Result<Self, Self::Error> {
        BoxDomain::new(v.into_iter().map(|[lo, hi]| (lo, hi)).collect())
    }
}

impl From<BoxDomain> for Vec<[f64; 2]> {
    fn from(b: BoxDomain) -> Self {
        b.bounds.into_iter().map(|(lo, hi)| [lo, hi]).collect()
    }
}

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Van der Corput radical inverse of `k` in `base`.
fn radical_inverse(mut k: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut factor = inv;
    let mut out = 0.0;
    while k > 0 {
        out += (k % base) as f64 * factor;
        k /= base;
        factor *= inv;
    }
    out
}
