//! Scalar and vector fields given by expressions, their exact derivatives, and
//! the gradient-like operators of a geometric pair.

pub mod expr;
pub mod jet;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::geometry::{FormKind, GeometricPair};
pub use expr::{parse_expression, Expr, Func, ParseError};
use jet::{Dual, Jet2, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("domain error evaluating `{subexpression}` at {point:?}")]
    Domain { subexpression: String, point: Vec<f64> },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("Hamiltonian fields need a skew-symmetric form of even dimension")]
    NotSymplectic,
}

fn domain_error(e: &Expr, x: &[f64]) -> FieldError {
    FieldError::Domain { subexpression: e.to_string(), point: x.to_vec() }
}

fn eval_with<S: Scalar>(e: &Expr, x: &[f64], seed: &dyn Fn(usize, f64) -> S) -> Result<S, FieldError> {
    let n = x.len();
    let out = match e {
        Expr::Const(c) => S::constant(*c, n),
        Expr::Var(i) => seed(*i, x[*i]),
        Expr::Neg(a) => -eval_with(a, x, seed)?,
        Expr::Add(a, b) => eval_with(a, x, seed)? + eval_with(b, x, seed)?,
        Expr::Sub(a, b) => eval_with(a, x, seed)? - eval_with(b, x, seed)?,
        Expr::Mul(a, b) => eval_with(a, x, seed)? * eval_with(b, x, seed)?,
        Expr::Div(a, b) => {
            let num = eval_with(a, x, seed)?;
            let den = eval_with(b, x, seed)?;
            if den.value() == 0.0 {
                return Err(domain_error(e, x));
            }
            num / den
        }
        Expr::Pow(a, k) => {
            let base = eval_with(a, x, seed)?;
            if *k < 0 && base.value() == 0.0 {
                return Err(domain_error(e, x));
            }
            base.powi(*k)
        }
        Expr::Call(func, a) => {
            let arg = eval_with(a, x, seed)?;
            if *func == Func::Log && arg.value() <= 0.0 {
                return Err(domain_error(e, x));
            }
            arg.apply(*func)
        }
    };
    if !out.value().is_finite() {
        return Err(domain_error(e, x));
    }
    Ok(out)
}

/// Plain evaluation of `e` at `x`.
pub fn eval(e: &Expr, x: &[f64]) -> Result<f64, FieldError> {
    eval_with::<f64>(e, x, &|_, v| v)
}

fn check_len(expected: usize, got: usize) -> Result<(), FieldError> {
    if expected == got {
        Ok(())
    } else {
        Err(FieldError::DimensionMismatch { expected, got })
    }
}

fn validate_vars(e: &Expr, dim: usize) -> Result<(), FieldError> {
    match e.max_var() {
        Some(i) if i >= dim => Err(FieldError::DimensionMismatch { expected: dim, got: i + 1 }),
        _ => Ok(()),
    }
}

/// A `C^2` scalar field `f : R^n -> R` (wherever its expression is defined).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    dim: usize,
    expr: Expr,
}

impl ScalarField {
    pub fn new(expr: Expr, dim: usize) -> Result<Self, FieldError> {
        validate_vars(&expr, dim)?;
        Ok(ScalarField { dim, expr })
    }

    pub fn parse(text: &str, dim: usize) -> Result<Self, FieldError> {
        Ok(ScalarField { dim, expr: parse_expression(text, dim)? })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn eval(&self, x: &DVector<f64>) -> Result<f64, FieldError> {
        check_len(self.dim, x.len())?;
        eval(&self.expr, x.as_slice())
    }

    /// Canonical gradient `∇f(x)` by forward-mode dual numbers.
    pub fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>, FieldError> {
        check_len(self.dim, x.len())?;
        let n = self.dim;
        let d: Dual = eval_with(&self.expr, x.as_slice(), &|i, v| Dual::variable(i, v, n))?;
        Ok(DVector::from_vec(d.grad))
    }

    /// Hessian by second-order jets, symmetrized.
    pub fn hessian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>, FieldError> {
        let raw = self.hessian_unsymmetrized(x)?;
        let skew = (&raw - raw.transpose()).norm() * 0.5;
        if skew > 0.0 {
            log::debug!("hessian skew part {skew:e} removed at {:?}", x.as_slice());
        }
        Ok((&raw + raw.transpose()) * 0.5)
    }

    /// The jet Hessian as computed, before symmetrization.
    pub fn hessian_unsymmetrized(&self, x: &DVector<f64>) -> Result<DMatrix<f64>, FieldError> {
        check_len(self.dim, x.len())?;
        let n = self.dim;
        let j: Jet2 = eval_with(&self.expr, x.as_slice(), &|i, v| Jet2::variable(i, v, n))?;
        Ok(DMatrix::from_row_slice(n, n, &j.hess))
    }

    /// The vector field whose components are the symbolic partials of `f`.
    pub fn gradient_field(&self) -> VectorField {
        VectorField { dim: self.dim, components: (0..self.dim).map(|i| self.expr.derivative(i)).collect() }
    }
}

/// A `C^1` vector field `F : R^n -> R^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    dim: usize,
    components: Vec<Expr>,
}

impl VectorField {
    pub fn new(components: Vec<Expr>, dim: usize) -> Result<Self, FieldError> {
        check_len(dim, components.len())?;
        for c in &components {
            validate_vars(c, dim)?;
        }
        Ok(VectorField { dim, components })
    }

    pub fn parse<S: AsRef<str>>(texts: &[S], dim: usize) -> Result<Self, FieldError> {
        check_len(dim, texts.len())?;
        let components = texts.iter().map(|t| parse_expression(t.as_ref(), dim)).collect::<Result<Vec<_>, _>>()?;
        Ok(VectorField { dim, components })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn eval(&self, x: &DVector<f64>) -> Result<DVector<f64>, FieldError> {
        check_len(self.dim, x.len())?;
        let vals = self.components.iter().map(|c| eval(c, x.as_slice())).collect::<Result<Vec<_>, _>>()?;
        Ok(DVector::from_vec(vals))
    }

    /// `DF(x)`, row `i` holding the gradient of component `i`.
    pub fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>, FieldError> {
        check_len(self.dim, x.len())?;
        let n = self.dim;
        let mut jac = DMatrix::zeros(n, n);
        for (i, c) in self.components.iter().enumerate() {
            let d: Dual = eval_with(c, x.as_slice(), &|k, v| Dual::variable(k, v, n))?;
            for (j, g) in d.grad.into_iter().enumerate() {
                jac[(i, j)] = g;
            }
        }
        Ok(jac)
    }

    /// The field `x ↦ M F(x)` built symbolically.
    pub fn linear_map(&self, m: &DMatrix<f64>) -> Result<VectorField, FieldError> {
        check_len(self.dim, m.ncols())?;
        check_len(self.dim, m.nrows())?;
        let components = (0..self.dim)
            .map(|i| {
                let mut acc: Option<Expr> = None;
                for j in 0..self.dim {
                    let c = m[(i, j)];
                    if c == 0.0 {
                        continue;
                    }
                    let comp = self.components[j].clone();
                    acc = Some(match (acc, c) {
                        (None, 1.0) => comp,
                        (None, -1.0) => Expr::neg(comp),
                        (None, c) => Expr::mul(Expr::Const(c), comp),
                        (Some(a), 1.0) => Expr::add(a, comp),
                        (Some(a), -1.0) => Expr::sub(a, comp),
                        (Some(a), c) => Expr::add(a, Expr::mul(Expr::Const(c), comp)),
                    });
                }
                acc.unwrap_or(Expr::Const(0.0))
            })
            .collect();
        Ok(VectorField { dim: self.dim, components })
    }

    /// Component-wise sum with another field.
    pub fn plus(&self, other: &VectorField) -> Result<VectorField, FieldError> {
        check_len(self.dim, other.dim)?;
        let components =
            self.components.iter().zip(&other.components).map(|(a, b)| Expr::add(a.clone(), b.clone())).collect();
        Ok(VectorField { dim: self.dim, components })
    }
}

fn check_pair(pair: &GeometricPair, dim: usize) -> Result<(), FieldError> {
    check_len(pair.dim(), dim)
}

/// `∇^L_b f(x) = B* ∇f(x)`.
pub fn left_gradient(pair: &GeometricPair, f: &ScalarField, x: &DVector<f64>) -> Result<DVector<f64>, FieldError> {
    check_pair(pair, f.dim())?;
    Ok(pair.b_star() * f.gradient(x)?)
}

/// `∇^R_b f(x) = B ∇f(x)`.
pub fn right_gradient(pair: &GeometricPair, f: &ScalarField, x: &DVector<f64>) -> Result<DVector<f64>, FieldError> {
    check_pair(pair, f.dim())?;
    Ok(pair.b() * f.gradient(x)?)
}

/// The Hamiltonian vector field `X_f`, the left gradient of a symplectic form.
pub fn hamiltonian_field(pair: &GeometricPair, f: &ScalarField, x: &DVector<f64>) -> Result<DVector<f64>, FieldError> {
    if pair.form().kind() != FormKind::SkewSymmetric || pair.dim() % 2 == 1 {
        return Err(FieldError::NotSymplectic);
    }
    let left = left_gradient(pair, f, x)?;
    let right = right_gradient(pair, f, x)?;
    debug_assert!((&left + &right).amax() <= 1e-12 * left.amax().max(1.0));
    Ok(left)
}

/// Symbolic `B* ∇f`.
pub fn left_gradient_field(pair: &GeometricPair, f: &ScalarField) -> Result<VectorField, FieldError> {
    check_pair(pair, f.dim())?;
    f.gradient_field().linear_map(pair.b_star())
}

/// Symbolic `B ∇f`.
pub fn right_gradient_field(pair: &GeometricPair, f: &ScalarField) -> Result<VectorField, FieldError> {
    check_pair(pair, f.dim())?;
    f.gradient_field().linear_map(pair.b())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{companion_map, minkowski, standard_euclidean, standard_symplectic};
    use nalgebra::dmatrix;

    fn pt(v: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(v)
    }

    #[test]
    fn derivative_examples() {
        let f = ScalarField::parse("x1^2 + x2^2", 2).unwrap();
        assert_eq!(f.gradient(&pt(&[1.0, 2.0])).unwrap(), pt(&[2.0, 4.0]));
        assert_eq!(f.hessian(&pt(&[1.0, 2.0])).unwrap(), DMatrix::identity(2, 2) * 2.0);

        let rot = VectorField::parse(&["-x2", "x1"], 2).unwrap();
        assert_eq!(rot.jacobian(&pt(&[0.3, -7.0])).unwrap(), dmatrix![0.0, -1.0; 1.0, 0.0]);

        let g = ScalarField::parse("sin(x1)*x2", 2).unwrap();
        let x = pt(&[0.0, 3.0]);
        let grad = g.gradient(&x).unwrap();
        assert_eq!(grad, pt(&[3.0, 0.0]));
        let h = 1e-5;
        for i in 0..2 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            let fd = (g.eval(&xp).unwrap() - g.eval(&xm).unwrap()) / (2.0 * h);
            assert!((fd - grad[i]).abs() < 1e-9, "{fd} vs {}", grad[i]);
        }
    }

    #[test]
    fn domain_errors_name_the_subexpression() {
        let f = ScalarField::parse("x1 + log(x2)", 2).unwrap();
        match f.gradient(&pt(&[1.0, -1.0])) {
            Err(FieldError::Domain { subexpression, .. }) => assert_eq!(subexpression, "log(x2)"),
            other => panic!("{other:?}"),
        }
        let g = ScalarField::parse("1/(x1 - x2)", 2).unwrap();
        assert!(matches!(g.eval(&pt(&[2.0, 2.0])), Err(FieldError::Domain { .. })));
        let h = ScalarField::parse("x1^-1", 1).unwrap();
        assert!(matches!(h.hessian(&pt(&[0.0])), Err(FieldError::Domain { .. })));
        let e = ScalarField::parse("exp(x1)", 1).unwrap();
        assert!(matches!(e.eval(&pt(&[1000.0])), Err(FieldError::Domain { .. })));
    }

    #[test]
    fn dimension_checks() {
        let f = ScalarField::parse("x1", 2).unwrap();
        assert!(matches!(f.gradient(&pt(&[1.0])), Err(FieldError::DimensionMismatch { .. })));
        assert!(VectorField::parse(&["x1"], 2).is_err());
        assert!(ScalarField::new(Expr::Var(3), 2).is_err());
    }

    #[test]
    fn gradient_like_examples() {
        let f = ScalarField::parse("x1^2 + x2^2", 2).unwrap();
        let x = pt(&[1.0, 1.0]);
        let e = companion_map(&standard_euclidean(2).unwrap()).unwrap();
        assert_eq!(left_gradient(&e, &f, &x).unwrap(), f.gradient(&x).unwrap());
        assert_eq!(right_gradient(&e, &f, &x).unwrap(), f.gradient(&x).unwrap());

        let m = companion_map(&minkowski(2).unwrap()).unwrap();
        assert_eq!(left_gradient(&m, &f, &x).unwrap(), pt(&[2.0, -2.0]));

        let s = companion_map(&standard_symplectic(1).unwrap()).unwrap();
        let h = ScalarField::parse("(x1^2 + x2^2)/2", 2).unwrap();
        let x = pt(&[0.7, -1.3]);
        let left = left_gradient(&s, &h, &x).unwrap();
        assert!((left - pt(&[-1.3, -0.7])).amax() < 1e-15);
        assert_eq!(right_gradient(&s, &h, &x).unwrap(), -left_gradient(&s, &h, &x).unwrap());
        assert_eq!(hamiltonian_field(&s, &h, &x).unwrap(), left_gradient(&s, &h, &x).unwrap());

        let c = ScalarField::parse("4.5", 2).unwrap();
        assert_eq!(hamiltonian_field(&s, &c, &x).unwrap(), pt(&[0.0, 0.0]));
        assert_eq!(hamiltonian_field(&e, &h, &x), Err(FieldError::NotSymplectic));
    }

    #[test]
    fn symbolic_gradient_field_matches_numeric() {
        let pair = companion_map(&standard_symplectic(2).unwrap()).unwrap();
        let f = ScalarField::parse("x1*x4 + sin(x2)*x3^2 - exp(x1/3)", 4).unwrap();
        let field = left_gradient_field(&pair, &f).unwrap();
        let x = pt(&[0.2, -0.4, 1.1, 0.5]);
        let numeric = left_gradient(&pair, &f, &x).unwrap();
        assert!((field.eval(&x).unwrap() - numeric).amax() < 1e-14);
    }
}
