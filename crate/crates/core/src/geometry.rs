//! Geometric structures on `R^n` and their geometric pairs.
//!
//! A geometric structure is a nondegenerate bilinear form `b(x, y) = x^T Q y`,
//! stored through its Gram matrix `Q` in the canonical basis. The companion
//! map `B` is the unique automorphism with `<x, y> = b(x, B y)`, which forces
//! `Q B = I`. Its adjoint with respect to `b`, written `B*` here, satisfies
//! `b(B* x, y) = b(x, B y)` and coincides with the Euclidean transpose of `B`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative singular-value threshold below which a form counts as degenerate.
pub const TOL_DEGENERATE: f64 = 1e-10;
/// Threshold on `|Q -/+ Q^T|` used to classify symmetric and skew forms.
pub const TOL_SYM: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("degenerate form: singular-value ratio {ratio:e} is below {threshold:e}")]
    DegenerateForm { ratio: f64, threshold: f64 },
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormKind {
    Symmetric,
    SkewSymmetric,
    General,
}

/// A nondegenerate real bilinear form on `R^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct BilinearForm {
    gram: DMatrix<f64>,
    kind: FormKind,
    signature: Option<(usize, usize)>,
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Classifies `q` and validates nondegeneracy.
///
/// Symmetric forms carry their signature `(p, q)`, the counts of positive and
/// negative eigenvalues. An eigenvalue within `1e-10` of zero relative to the
/// spectral radius is reported as a degenerate form.
pub fn make_form(q: DMatrix<f64>) -> Result<BilinearForm, GeometryError> {
    if q.nrows() != q.ncols() {
        return Err(GeometryError::NotSquare { rows: q.nrows(), cols: q.ncols() });
    }
    if q.nrows() == 0 {
        return Err(GeometryError::InvalidArgument("form dimension must be positive".into()));
    }
    if q.iter().any(|v| !v.is_finite()) {
        return Err(GeometryError::InvalidArgument("form has non-finite entries".into()));
    }

    let sv = q.clone().singular_values();
    let smax = sv.max();
    let smin = sv.min();
    let ratio = if smax > 0.0 { smin / smax } else { 0.0 };
    if ratio <= TOL_DEGENERATE {
        return Err(GeometryError::DegenerateForm { ratio, threshold: TOL_DEGENERATE });
    }

    let scale = max_abs(&q).max(1.0);
    let sym_dev = max_abs(&(&q - q.transpose()));
    let skew_dev = max_abs(&(&q + q.transpose()));
    let kind = if sym_dev <= TOL_SYM * scale {
        FormKind::Symmetric
    } else if skew_dev <= TOL_SYM * scale {
        FormKind::SkewSymmetric
    } else {
        FormKind::General
    };

    let signature = if kind == FormKind::Symmetric {
        let sym = (&q + q.transpose()) * 0.5;
        let eig = sym.symmetric_eigenvalues();
        let radius = eig.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let cut = TOL_DEGENERATE * radius;
        if let Some(v) = eig.iter().find(|v| v.abs() <= cut) {
            return Err(GeometryError::DegenerateForm { ratio: v.abs() / radius, threshold: TOL_DEGENERATE });
        }
        let p = eig.iter().filter(|v| **v > 0.0).count();
        Some((p, eig.len() - p))
    } else {
        None
    };

    Ok(BilinearForm { gram: q, kind, signature })
}

/// The canonical inner product on `R^n`.
pub fn standard_euclidean(n: usize) -> Result<BilinearForm, GeometryError> {
    if n == 0 {
        return Err(GeometryError::InvalidArgument("n must be at least 1".into()));
    }
    make_form(DMatrix::identity(n, n))
}

/// The canonical symplectic form on `R^{2m}`, `Q = [[0, I_m], [-I_m, 0]]`.
pub fn standard_symplectic(m: usize) -> Result<BilinearForm, GeometryError> {
    if m == 0 {
        return Err(GeometryError::InvalidArgument("m must be at least 1".into()));
    }
    let n = 2 * m;
    let mut q = DMatrix::zeros(n, n);
    for i in 0..m {
        q[(i, m + i)] = 1.0;
        q[(m + i, i)] = -1.0;
    }
    make_form(q)
}

/// `Q = diag(+1 (p times), -1 (q times))`.
pub fn pseudo_euclidean(p: usize, q: usize) -> Result<BilinearForm, GeometryError> {
    if p + q == 0 {
        return Err(GeometryError::InvalidArgument("p + q must be at least 1".into()));
    }
    let diag = DVector::from_fn(p + q, |i, _| if i < p { 1.0 } else { -1.0 });
    make_form(DMatrix::from_diagonal(&diag))
}

/// Signature `(n - 1, 1)`, with the negative direction last.
pub fn minkowski(n: usize) -> Result<BilinearForm, GeometryError> {
    if n == 0 {
        return Err(GeometryError::InvalidArgument("n must be at least 1".into()));
    }
    pseudo_euclidean(n - 1, 1)
}

impl BilinearForm {
    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn kind(&self) -> FormKind {
        self.kind
    }

    pub fn signature(&self) -> Option<(usize, usize)> {
        self.signature
    }

    /// `b(x, y) = x^T Q y`.
    pub fn evaluate(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<f64, GeometryError> {
        let n = self.dim();
        for v in [x, y] {
            if v.len() != n {
                return Err(GeometryError::DimensionMismatch { expected: n, got: v.len() });
            }
        }
        Ok(x.dot(&(&self.gram * y)))
    }
}

/// A geometric pair `(b, B)` together with the adjoint `B*` and the two
/// inverses the integrability conditions are written in.
#[derive(Debug, Clone)]
pub struct GeometricPair {
    form: BilinearForm,
    b: DMatrix<f64>,
    b_star: DMatrix<f64>,
    b_inv: DMatrix<f64>,
    b_star_inv: DMatrix<f64>,
}

fn invert(m: &DMatrix<f64>) -> Result<DMatrix<f64>, GeometryError> {
    let sv = m.clone().singular_values();
    let ratio = if sv.max() > 0.0 { sv.min() / sv.max() } else { 0.0 };
    if ratio <= TOL_DEGENERATE {
        return Err(GeometryError::DegenerateForm { ratio, threshold: TOL_DEGENERATE });
    }
    m.clone().try_inverse().ok_or(GeometryError::DegenerateForm { ratio, threshold: TOL_DEGENERATE })
}

/// Builds the geometric pair of `form`: `B = Q^{-1}` and `B* = B^T`.
pub fn companion_map(form: &BilinearForm) -> Result<GeometricPair, GeometryError> {
    let b = invert(form.gram())?;
    let b_star = b.transpose();
    GeometricPair::from_parts(form.clone(), b, b_star)
}

impl GeometricPair {
    /// Assembles a pair from explicit matrices without checking the pair
    /// identities. Useful for diagnostics; [`verify_pair`] reports whether
    /// the result is a genuine geometric pair.
    pub fn from_parts(form: BilinearForm, b: DMatrix<f64>, b_star: DMatrix<f64>) -> Result<Self, GeometryError> {
        let n = form.dim();
        for m in [&b, &b_star] {
            if m.nrows() != n || m.ncols() != n {
                return Err(GeometryError::DimensionMismatch { expected: n, got: m.nrows() });
            }
        }
        let b_inv = invert(&b)?;
        let b_star_inv = invert(&b_star)?;
        Ok(GeometricPair { form, b, b_star, b_inv, b_star_inv })
    }

    pub fn dim(&self) -> usize {
        self.form.dim()
    }

    pub fn form(&self) -> &BilinearForm {
        &self.form
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn b_star(&self) -> &DMatrix<f64> {
        &self.b_star
    }

    pub fn b_inv(&self) -> &DMatrix<f64> {
        &self.b_inv
    }

    pub fn b_star_inv(&self) -> &DMatrix<f64> {
        &self.b_star_inv
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairReport {
    pub trials: usize,
    /// Largest relative residual of `<x, y> = b(x, B y)`.
    pub max_pair_residual: f64,
    /// Largest relative residual of `b(B* x, y) = b(x, B y)`.
    pub max_adjoint_residual: f64,
    pub tol: f64,
    pub passed: bool,
}

/// Checks both pair identities on `trials` random vector pairs drawn from a
/// seeded generator. Residuals are relative to `|x| |y| |Q|_2`.
pub fn verify_pair(pair: &GeometricPair, trials: usize, tol: f64, seed: u64) -> PairReport {
    let n = pair.dim();
    let q = pair.form().gram();
    let qnorm = q.clone().singular_values().max().max(f64::MIN_POSITIVE);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_pair: f64 = 0.0;
    let mut max_adj: f64 = 0.0;
    for _ in 0..trials {
        let x = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let y = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let scale = x.norm() * y.norm() * qnorm;
        let by = pair.b() * &y;
        let rhs = x.dot(&(q * &by));
        max_pair = max_pair.max((x.dot(&y) - rhs).abs() / scale);
        let lhs = (pair.b_star() * &x).dot(&(q * &y));
        max_adj = max_adj.max((lhs - rhs).abs() / scale);
    }
    let passed = max_pair <= tol && max_adj <= tol;
    PairReport { trials, max_pair_residual: max_pair, max_adjoint_residual: max_adj, tol, passed }
}
