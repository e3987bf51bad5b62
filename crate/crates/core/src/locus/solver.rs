use nalgebra::{DMatrix, DVector};

use super::{LocusError, PhiSystem};
use crate::fields::FieldError;

/// Levenberg-Marquardt settings for driving `Φ` to zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub max_iters: usize,
    pub tol_residual: f64,
    /// Initial damping `λ0`.
    pub damping: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { max_iters: 50, tol_residual: 1e-10, damping: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Converged {
    pub x: DVector<f64>,
    pub phi_norm: f64,
    pub iterations: usize,
}

const DAMPING_FLOOR: f64 = 1e-15;
const DAMPING_CEILING: f64 = 1e16;

/// Minimizes `½|Φ|²` from `x0` with a damped Gauss-Newton (Levenberg-Marquardt)
/// iteration. The zero set is `m`-dimensional, so `DΦ` is rank-deficient at
/// the solution; the damping term keeps each step well posed and close to the
/// minimum-norm Gauss-Newton step.
pub fn solve_from_seed(phi: &PhiSystem, x0: &DVector<f64>, opts: &SolveOptions) -> Result<Converged, LocusError> {
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(LocusError::Diverged { iterations: 0, phi_norm: f64::NAN });
    }
    let n = phi.dim();
    let mut x = x0.clone();
    let mut r = phi.phi(&x)?;
    let mut norm = r.norm();
    let mut lambda = opts.damping;

    for iter in 0..opts.max_iters {
        if norm <= opts.tol_residual {
            return Ok(Converged { x, phi_norm: norm, iterations: iter });
        }
        let jac = phi.jacobian(&x)?;
        let jt = jac.transpose();
        let normal = &jt * &jac;
        let grad = &jt * &r;
        let diag_scale = 1.0 + normal.diagonal().amax();

        loop {
            let system = &normal + DMatrix::identity(n, n) * (lambda * diag_scale);
            let step = match system.cholesky() {
                Some(ch) => -ch.solve(&grad),
                None => {
                    lambda *= 10.0;
                    if lambda > DAMPING_CEILING {
                        return Err(LocusError::Diverged { iterations: iter, phi_norm: norm });
                    }
                    continue;
                }
            };
            if step.iter().any(|v| !v.is_finite()) {
                return Err(LocusError::Diverged { iterations: iter, phi_norm: norm });
            }
            let trial = &x + &step;
            let accepted = match phi.phi(&trial) {
                Ok(tr) => {
                    let tn = tr.norm();
                    if tn < norm {
                        Some((tr, tn))
                    } else {
                        None
                    }
                }
                Err(LocusError::Field(FieldError::Domain { .. })) => None,
                Err(e) => return Err(e),
            };
            match accepted {
                Some((tr, tn)) => {
                    x = trial;
                    r = tr;
                    norm = tn;
                    lambda = (lambda / 10.0).max(DAMPING_FLOOR);
                    break;
                }
                None => {
                    lambda *= 10.0;
                    if lambda > DAMPING_CEILING {
                        return Err(LocusError::Diverged { iterations: iter, phi_norm: norm });
                    }
                }
            }
        }
    }
    if norm <= opts.tol_residual {
        Ok(Converged { x, phi_norm: norm, iterations: opts.max_iters })
    } else {
        Err(LocusError::Diverged { iterations: opts.max_iters, phi_norm: norm })
    }
}
