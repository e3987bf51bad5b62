//! Extraction and certification of the prescribed-gradient non-integrable
//! locus.
//!
//! For a potential `f`, a field `F` and a side, the locus is the set of points
//! where the side's gradient-like field of `f` equals `F` while the obstruction
//! `Γ(C DF)^m` is nonzero. Writing `G = C F` with `C = (B*)^{-1}` (left) or
//! `C = B^{-1}` (right), the first condition is `Φ = ∇f - G = 0`. The locus is
//! covered by the charts `Σ_α`, `α` an increasing `m`-subset of the `2m`
//! components, on which `Φ_α = 0` and `DΦ_α` has rank `m`.
//!
//! Sampling runs a Levenberg-Marquardt solve from each of a set of seeded
//! low-discrepancy points in a box, keeps converged points inside the box,
//! removes near-duplicates and attaches the obstruction and chart memberships.
//! A sample is *certified* when `|Φ| ≤ tol_residual`, the obstruction is above
//! threshold and at least one chart contains it.

mod charts;
mod dimension;
mod solver;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use thiserror::Error;

use crate::exterior::antisymmetric_part;
use crate::fields::{FieldError, ScalarField, VectorField};
use crate::geometry::GeometricPair;
use crate::integrability::{obstruction_of, IntegrabilityError, Side, TOL_GAMMA};
use crate::sampling::BoxDomain;

pub use charts::{
    binomial, chart_mask, chart_memberships, charts_for_jacobian, charts_from_mask, enumerate_charts,
    rank_with_tolerance, verify_cover, ChartIndex, CoverReport,
};
pub use dimension::{box_counting_dimension, default_scales, DimensionEstimate, MIN_POINTS};
pub use solver::{solve_from_seed, Converged, SolveOptions};

pub const TOL_RANK: f64 = 1e-6;
pub const TOL_RESIDUAL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LocusError {
    #[error("odd dimension {0}: the locus needs n = 2m")]
    OddDimension(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Integrability(#[from] IntegrabilityError),
    #[error("solver diverged after {iterations} iterations with |Φ| = {phi_norm:e}")]
    Diverged { iterations: usize, phi_norm: f64 },
    #[error("point is not on the locus: |Φ| = {phi_norm:e} > {tol_residual:e}")]
    NotOnLocus { phi_norm: f64, tol_residual: f64 },
    #[error("box counting needs at least {needed} points, got {got}")]
    TooFewPoints { got: usize, needed: usize },
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

/// `Φ = ∇f - C F` and `DΦ = Hess f - C DF` for one geometric pair and side.
#[derive(Debug, Clone)]
pub struct PhiSystem {
    pair: GeometricPair,
    f: ScalarField,
    field: VectorField,
    side: Side,
    c: DMatrix<f64>,
}

pub fn build_phi(
    pair: &GeometricPair,
    f: &ScalarField,
    field: &VectorField,
    side: Side,
) -> Result<PhiSystem, LocusError> {
    let n = pair.dim();
    if n == 0 || n % 2 == 1 {
        return Err(LocusError::OddDimension(n));
    }
    for got in [f.dim(), field.dim()] {
        if got != n {
            return Err(LocusError::DimensionMismatch { expected: n, got });
        }
    }
    Ok(PhiSystem { pair: pair.clone(), f: f.clone(), field: field.clone(), side, c: side.matrix(pair).clone() })
}

impl PhiSystem {
    pub fn dim(&self) -> usize {
        self.pair.dim()
    }

    pub fn half_dim(&self) -> usize {
        self.dim() / 2
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn pair(&self) -> &GeometricPair {
        &self.pair
    }

    pub fn potential(&self) -> &ScalarField {
        &self.f
    }

    pub fn field(&self) -> &VectorField {
        &self.field
    }

    /// `C = (B*)^{-1}` on the left side, `B^{-1}` on the right.
    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn phi(&self, x: &DVector<f64>) -> Result<DVector<f64>, LocusError> {
        Ok(self.f.gradient(x)? - &self.c * self.field.eval(x)?)
    }

    pub fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>, LocusError> {
        Ok(self.f.hessian(x)? - &self.c * self.field.jacobian(x)?)
    }

    /// `C DF(x)`, the matrix whose `Γ`-power is the obstruction.
    pub fn obstruction_matrix(&self, x: &DVector<f64>) -> Result<DMatrix<f64>, LocusError> {
        Ok(&self.c * self.field.jacobian(x)?)
    }

    /// `|A(DΦ) + A(C DF)|_F` where `A(M) = M - M^T`; zero whenever the Hessian
    /// of `f` is symmetric.
    pub fn antisymmetry_transfer(&self, x: &DVector<f64>) -> Result<f64, LocusError> {
        let dphi = self.jacobian(x)?;
        let cdf = self.obstruction_matrix(x)?;
        Ok((antisymmetric_part(&dphi) + antisymmetric_part(&cdf)).norm())
    }
}

/// Thresholds for certification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub residual: f64,
    pub gamma: f64,
    pub rank: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { residual: TOL_RESIDUAL, gamma: TOL_GAMMA, rank: TOL_RANK }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocusSample {
    pub x: DVector<f64>,
    pub phi_norm: f64,
    pub gamma_value: f64,
    pub gamma_scale: f64,
    pub charts: Vec<ChartIndex>,
    /// `|Φ(x)| ≤ tol_residual`.
    pub on_locus: bool,
    /// The obstruction is above threshold.
    pub obstructed: bool,
    pub certified: bool,
}

/// Evaluates the obstruction and charts at `x` and decides certification.
pub fn classify_point(phi: &PhiSystem, x: DVector<f64>, tol: &Tolerances) -> Result<LocusSample, LocusError> {
    let phi_norm = phi.phi(&x)?.norm();
    let ob = obstruction_of(&phi.obstruction_matrix(&x)?)?;
    let on_locus = phi_norm <= tol.residual;
    let charts = if on_locus { charts_for_jacobian(&phi.jacobian(&x)?, phi.half_dim(), tol.rank) } else { Vec::new() };
    let obstructed = ob.is_nonzero(tol.gamma);
    let certified = on_locus && obstructed && !charts.is_empty();
    Ok(LocusSample {
        x,
        phi_norm,
        gamma_value: ob.value,
        gamma_scale: ob.scale,
        charts,
        on_locus,
        obstructed,
        certified,
    })
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SampleOptions {
    pub solve: SolveOptions,
    pub tolerances: Tolerances,
    pub rng_seed: u64,
    /// Minimum separation between kept samples; `1e-3 ×` box diameter when unset.
    pub dedup_radius: Option<f64>,
    /// Caps the worker threads used for the independent solves.
    pub threads: Option<usize>,
}

fn lexicographic(a: &DVector<f64>, b: &DVector<f64>) -> std::cmp::Ordering {
    a.iter().zip(b.iter()).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
}

/// Samples the locus inside `domain` from `n_seeds` low-discrepancy seeds.
///
/// Seeds that diverge or leave the domain of the expressions are dropped. The
/// output is sorted lexicographically and depends only on the inputs and
/// `opts.rng_seed`, not on the thread count.
pub fn sample_locus(
    phi: &PhiSystem,
    domain: &BoxDomain,
    n_seeds: usize,
    opts: &SampleOptions,
) -> Result<Vec<LocusSample>, LocusError> {
    if domain.dim() != phi.dim() {
        return Err(LocusError::DimensionMismatch { expected: phi.dim(), got: domain.dim() });
    }
    let seeds = domain.low_discrepancy_points(n_seeds, opts.rng_seed);
    let solve_all = || -> Vec<Option<DVector<f64>>> {
        seeds.par_iter().map(|x0| solve_from_seed(phi, x0, &opts.solve).ok().map(|c| c.x)).collect()
    };
    let solved = match opts.threads {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build()
            .map_err(|e| LocusError::ThreadPool(e.to_string()))?
            .install(solve_all),
        None => solve_all(),
    };

    let mut converged: Vec<DVector<f64>> = solved.into_iter().flatten().filter(|x| domain.contains(x)).collect();
    converged.sort_by(lexicographic);

    let radius = opts.dedup_radius.unwrap_or(1e-3 * domain.diameter());
    let kept = dedup(converged, radius);

    kept.into_iter().map(|x| classify_point(phi, x, &opts.tolerances)).collect()
}

/// Greedy thinning in input order: a point survives when it is at least
/// `radius` away from every point kept before it.
fn dedup(points: Vec<DVector<f64>>, radius: f64) -> Vec<DVector<f64>> {
    let mut kept: Vec<DVector<f64>> = Vec::with_capacity(points.len());
    for p in points {
        // points are sorted by first coordinate, so only a trailing window can be close
        let close = kept.iter().rev().take_while(|k| p[0] - k[0] < radius).any(|k| (k - &p).norm() < radius);
        if !close {
            kept.push(p);
        }
    }
    kept
}
