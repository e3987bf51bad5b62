//! Pointwise integrability conditions for gradient-like fields and the
//! `Γ`-power non-integrability obstruction.
//!
//! For a geometric pair `(b, B)` and a vector field `F`, the four conditions
//! are matrix identities in `DF(x)`:
//!
//! | condition    | identity                              | applies to        |
//! |--------------|---------------------------------------|-------------------|
//! | `left`       | `DF^T B^{-1} = (B*)^{-1} DF`          | any form          |
//! | `right`      | `DF^T (B*)^{-1} = B^{-1} DF`          | any form          |
//! | `symmetric`  | `DF^T B^{-1} = B^{-1} DF`             | symmetric forms   |
//! | `symplectic` | `DF^T B^{-1} + B^{-1} DF = 0`         | skew, even `n`    |
//!
//! Residuals are Frobenius norms of the difference of the two sides. The
//! obstruction is the top coefficient of `Γ(C DF(x))^m` with `C = (B*)^{-1}`
//! on the left side and `C = B^{-1}` on the right side.
//!
//! "Nonzero" is decided against a scale of the same polynomial degree:
//! `|Γ^m| > tol_gamma · (m! |C DF|_F^m + 1e-300)`. Points where neither
//! verdict can be made are left in a gray zone rather than forced.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exterior::{gamma, gamma_power, ExteriorError};
use crate::fields::{FieldError, VectorField};
use crate::geometry::{FormKind, GeometricPair};

/// Default threshold on `|Γ^m| / scale`.
pub const TOL_GAMMA: f64 = 1e-8;
/// Default threshold on scaled integrability residuals.
pub const TOL_INTEGRABLE: f64 = 1e-8;
/// Floor added to every obstruction scale.
pub const SCALE_FLOOR: f64 = 1e-300;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegrabilityError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Exterior(#[from] ExteriorError),
    #[error("the {condition:?} condition needs a {needed} form")]
    WrongKind { condition: Condition, needed: &'static str },
    #[error("odd dimension {0}: the obstruction needs n = 2m")]
    OddDimension(usize),
    #[error("dimension mismatch: pair has dimension {pair}, field has {field}")]
    DimensionMismatch { pair: usize, field: usize },
}

/// Which gradient-like operator a field is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    /// `(B*)^{-1}` for the left side, `B^{-1}` for the right side.
    pub fn matrix(self, pair: &GeometricPair) -> &DMatrix<f64> {
        match self {
            Side::Left => pair.b_star_inv(),
            Side::Right => pair.b_inv(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    Left,
    Right,
    Symmetric,
    Symplectic,
}

impl Condition {
    /// The obstruction side matching this condition. The symmetric and
    /// symplectic identities are special cases of the left one.
    pub fn side(self) -> Side {
        match self {
            Condition::Right => Side::Right,
            _ => Side::Left,
        }
    }

    /// Conditions that make sense for `pair`.
    pub fn applicable(pair: &GeometricPair) -> Vec<Condition> {
        let mut out = vec![Condition::Left, Condition::Right];
        match pair.form().kind() {
            FormKind::Symmetric => out.push(Condition::Symmetric),
            FormKind::SkewSymmetric if pair.dim().is_multiple_of(2) => out.push(Condition::Symplectic),
            _ => {}
        }
        out
    }
}

fn check_dims(pair: &GeometricPair, field: &VectorField) -> Result<(), IntegrabilityError> {
    if pair.dim() != field.dim() {
        return Err(IntegrabilityError::DimensionMismatch { pair: pair.dim(), field: field.dim() });
    }
    Ok(())
}

/// Residual of `condition` for a given Jacobian `df`.
pub fn residual_for_jacobian(
    pair: &GeometricPair,
    condition: Condition,
    df: &DMatrix<f64>,
) -> Result<f64, IntegrabilityError> {
    let dft = df.transpose();
    let diff = match condition {
        Condition::Left => &dft * pair.b_inv() - pair.b_star_inv() * df,
        Condition::Right => &dft * pair.b_star_inv() - pair.b_inv() * df,
        Condition::Symmetric => {
            if pair.form().kind() != FormKind::Symmetric {
                return Err(IntegrabilityError::WrongKind { condition, needed: "symmetric" });
            }
            &dft * pair.b_inv() - pair.b_inv() * df
        }
        Condition::Symplectic => {
            if pair.form().kind() != FormKind::SkewSymmetric || pair.dim() % 2 == 1 {
                return Err(IntegrabilityError::WrongKind { condition, needed: "skew-symmetric even-dimensional" });
            }
            &dft * pair.b_inv() + pair.b_inv() * df
        }
    };
    Ok(diff.norm())
}

/// Residual of `condition` for `field` at `x`.
pub fn residual(
    pair: &GeometricPair,
    field: &VectorField,
    x: &DVector<f64>,
    condition: Condition,
) -> Result<f64, IntegrabilityError> {
    check_dims(pair, field)?;
    residual_for_jacobian(pair, condition, &field.jacobian(x)?)
}

pub fn left_residual(pair: &GeometricPair, field: &VectorField, x: &DVector<f64>) -> Result<f64, IntegrabilityError> {
    residual(pair, field, x, Condition::Left)
}

pub fn right_residual(pair: &GeometricPair, field: &VectorField, x: &DVector<f64>) -> Result<f64, IntegrabilityError> {
    residual(pair, field, x, Condition::Right)
}

pub fn symmetric_residual(
    pair: &GeometricPair,
    field: &VectorField,
    x: &DVector<f64>,
) -> Result<f64, IntegrabilityError> {
    residual(pair, field, x, Condition::Symmetric)
}

pub fn symplectic_residual(
    pair: &GeometricPair,
    field: &VectorField,
    x: &DVector<f64>,
) -> Result<f64, IntegrabilityError> {
    residual(pair, field, x, Condition::Symplectic)
}

/// Raw value and normalizer of the obstruction `Γ(M)^m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaObstruction {
    pub value: f64,
    pub scale: f64,
}

impl GammaObstruction {
    pub fn is_nonzero(&self, tol_gamma: f64) -> bool {
        self.value.abs() > tol_gamma * self.scale
    }
}

fn factorial(m: usize) -> f64 {
    (1..=m).map(|k| k as f64).product()
}

/// Obstruction of an arbitrary `2m × 2m` matrix.
pub fn obstruction_of(m: &DMatrix<f64>) -> Result<GammaObstruction, IntegrabilityError> {
    let n = m.nrows();
    if n == 0 || n % 2 == 1 {
        return Err(IntegrabilityError::OddDimension(n));
    }
    let half = n / 2;
    let value = gamma_power(m, half)?;
    let scale = factorial(half) * m.norm().powi(half as i32) + SCALE_FLOOR;
    Ok(GammaObstruction { value, scale })
}

/// `Γ(C DF(x))^m` with `C` chosen by `side`.
pub fn gamma_obstruction(
    pair: &GeometricPair,
    field: &VectorField,
    x: &DVector<f64>,
    side: Side,
) -> Result<GammaObstruction, IntegrabilityError> {
    check_dims(pair, field)?;
    if pair.dim() % 2 == 1 {
        return Err(IntegrabilityError::OddDimension(pair.dim()));
    }
    let m = side.matrix(pair) * field.jacobian(x)?;
    obstruction_of(&m)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegrabilityReport {
    pub point: Vec<f64>,
    pub condition: Condition,
    pub residual: f64,
    /// `residual / (1 + |C DF|_F)`.
    pub scaled_residual: f64,
    /// `None` in odd dimension, where the obstruction is undefined.
    pub gamma_value: Option<f64>,
    pub gamma_scale: Option<f64>,
    pub verdict_integrable: bool,
    pub verdict_nonintegrable: bool,
}

/// Evaluates one condition and the matching obstruction at `x`.
pub fn report_at(
    pair: &GeometricPair,
    field: &VectorField,
    x: &DVector<f64>,
    condition: Condition,
    tol_integrable: f64,
    tol_gamma: f64,
) -> Result<IntegrabilityReport, IntegrabilityError> {
    check_dims(pair, field)?;
    let df = field.jacobian(x)?;
    let res = residual_for_jacobian(pair, condition, &df)?;
    let cdf = condition.side().matrix(pair) * &df;
    let scaled = res / (1.0 + cdf.norm());
    let integrable = scaled <= tol_integrable;
    let (gamma_value, gamma_scale, nonintegrable) = if pair.dim().is_multiple_of(2) {
        let ob = obstruction_of(&cdf)?;
        (Some(ob.value), Some(ob.scale), ob.is_nonzero(tol_gamma) && !integrable)
    } else {
        (None, None, false)
    };
    Ok(IntegrabilityReport {
        point: x.iter().copied().collect(),
        condition,
        residual: res,
        scaled_residual: scaled,
        gamma_value,
        gamma_scale,
        verdict_integrable: integrable,
        verdict_nonintegrable: nonintegrable,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub side: Side,
    pub tol: f64,
    pub checked: usize,
    /// Points within a factor 10 of `tol` on either measure, excluded.
    pub gray_zone: usize,
    pub violations: usize,
    pub violation_points: Vec<usize>,
}

/// Compares the residual test against the `Γ` test point by point: the
/// residual of `side` is small iff every coefficient of `Γ(C DF)` is small,
/// both measured relative to `1 + |C DF|_F`.
pub fn equivalence_probe(
    pair: &GeometricPair,
    field: &VectorField,
    points: &[DVector<f64>],
    side: Side,
    tol: f64,
) -> Result<ProbeReport, IntegrabilityError> {
    check_dims(pair, field)?;
    let condition = match side {
        Side::Left => Condition::Left,
        Side::Right => Condition::Right,
    };
    let mut report = ProbeReport { side, tol, checked: 0, gray_zone: 0, violations: 0, violation_points: Vec::new() };
    let gray = |v: f64| v > tol / 10.0 && v <= tol * 10.0;
    for (i, x) in points.iter().enumerate() {
        let df = field.jacobian(x)?;
        let cdf = side.matrix(pair) * &df;
        let scale = 1.0 + cdf.norm();
        let r = residual_for_jacobian(pair, condition, &df)? / scale;
        let g = gamma(&cdf, None)?.max_abs_coeff() / scale;
        if gray(r) || gray(g) {
            report.gray_zone += 1;
            continue;
        }
        report.checked += 1;
        if (r <= tol) != (g <= tol) {
            report.violations += 1;
            report.violation_points.push(i);
        }
    }
    Ok(report)
}
