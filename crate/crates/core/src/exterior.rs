//! Sparse exterior algebra over `R^n`, the `Γ` operator and Pfaffians.
//!
//! Basis blades `e_{i1} ∧ … ∧ e_{ik}` with `i1 < … < ik` are keyed by a bitmask
//! whose bit `i` marks the (zero-based) basis vector `e_i`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

pub type SquareMatrix = DMatrix<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExteriorError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("odd dimension {0}: an even, nonzero dimension is required")]
    OddDimension(usize),
    #[error("matrix is not antisymmetric: |A + A^T| = {deviation:e}")]
    NotAntisymmetric { deviation: f64 },
    #[error("supplied basis is not orthonormal: Gram deviation {deviation:e}")]
    NotOrthonormal { deviation: f64 },
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension {0} exceeds the 64 basis vectors a blade mask can hold")]
    TooLarge(usize),
}

/// A homogeneous element of `Λ^k R^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiVector {
    dim: usize,
    grade: usize,
    coeffs: BTreeMap<u64, f64>,
}

/// Sign of the permutation that sorts the concatenation `a ++ b` of two
/// disjoint increasing index lists: `(-1)^{#{(i, j) : i ∈ a, j ∈ b, i > j}}`.
fn merge_sign(a: u64, b: u64) -> f64 {
    let mut inversions = 0u32;
    let mut rest = b;
    while rest != 0 {
        let j = rest.trailing_zeros();
        // bits of `a` strictly above j
        inversions += (a >> j >> 1).count_ones();
        rest &= rest - 1;
    }
    if inversions.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

impl MultiVector {
    pub fn zero(dim: usize, grade: usize) -> Self {
        MultiVector { dim, grade, coeffs: BTreeMap::new() }
    }

    pub fn scalar(dim: usize, value: f64) -> Self {
        let mut mv = Self::zero(dim, 0);
        if value != 0.0 {
            mv.coeffs.insert(0, value);
        }
        mv
    }

    /// The basis vector `e_i` (zero-based).
    pub fn basis(dim: usize, i: usize) -> Self {
        assert!(i < dim, "basis index {i} out of range for dimension {dim}");
        let mut mv = Self::zero(dim, 1);
        mv.coeffs.insert(1u64 << i, 1.0);
        mv
    }

    pub fn from_vector(v: &DVector<f64>) -> Self {
        let mut mv = Self::zero(v.len(), 1);
        for (i, &c) in v.iter().enumerate() {
            if c != 0.0 {
                mv.coeffs.insert(1u64 << i, c);
            }
        }
        mv
    }

    /// Builds a multivector from `(mask, coefficient)` terms. Every mask must
    /// have `grade` bits set, all below `dim`.
    pub fn from_terms(dim: usize, grade: usize, terms: impl IntoIterator<Item = (u64, f64)>) -> Self {
        let mut mv = Self::zero(dim, grade);
        for (mask, c) in terms {
            assert_eq!(mask.count_ones() as usize, grade, "blade {mask:#b} has wrong grade");
            assert!(dim >= 64 || mask >> dim == 0, "blade {mask:#b} exceeds dimension {dim}");
            mv.add_term(mask, c);
        }
        mv
    }

    fn add_term(&mut self, mask: u64, c: f64) {
        if c == 0.0 {
            return;
        }
        let entry = self.coeffs.entry(mask).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            self.coeffs.remove(&mask);
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grade(&self) -> usize {
        self.grade
    }

    /// Coefficient of the blade `mask` (zero when absent).
    pub fn coeff(&self, mask: u64) -> f64 {
        self.coeffs.get(&mask).copied().unwrap_or(0.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.coeffs.iter().map(|(&k, &v)| (k, v))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.values().fold(0.0_f64, |a, v| a.max(v.abs()))
    }

    /// Drops coefficients at or below `1e-14 · max|coeff|` (floor `1e-300`).
    pub fn pruned(&self) -> Self {
        let cut = (1e-14 * self.max_abs_coeff()).max(1e-300);
        MultiVector {
            dim: self.dim,
            grade: self.grade,
            coeffs: self.coeffs.iter().filter(|(_, v)| v.abs() > cut).map(|(&k, &v)| (k, v)).collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = Self::zero(self.dim, self.grade);
        for (&k, &v) in &self.coeffs {
            out.add_term(k, s * v);
        }
        out
    }

    pub fn add(&self, other: &MultiVector) -> Result<Self, ExteriorError> {
        if self.dim != other.dim {
            return Err(ExteriorError::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        if self.grade != other.grade {
            return Err(ExteriorError::DimensionMismatch { expected: self.grade, got: other.grade });
        }
        let mut out = self.clone();
        for (&k, &v) in &other.coeffs {
            out.add_term(k, v);
        }
        Ok(out)
    }

    /// The top-degree coefficient, i.e. the coefficient of `e_1 ∧ … ∧ e_n`.
    pub fn top_coeff(&self) -> f64 {
        if self.dim >= 64 {
            return 0.0;
        }
        self.coeff((1u64 << self.dim) - 1)
    }
}

/// Exterior product. Returns the zero multivector of grade `a.grade + b.grade`
/// when that exceeds the dimension.
pub fn wedge(a: &MultiVector, b: &MultiVector) -> Result<MultiVector, ExteriorError> {
    if a.dim != b.dim {
        return Err(ExteriorError::DimensionMismatch { expected: a.dim, got: b.dim });
    }
    let mut out = MultiVector::zero(a.dim, a.grade + b.grade);
    if out.grade > a.dim {
        return Ok(out);
    }
    for (&ka, &va) in &a.coeffs {
        for (&kb, &vb) in &b.coeffs {
            if ka & kb != 0 {
                continue;
            }
            out.add_term(ka | kb, merge_sign(ka, kb) * va * vb);
        }
    }
    Ok(out)
}

fn check_square(m: &SquareMatrix) -> Result<usize, ExteriorError> {
    if m.nrows() != m.ncols() {
        return Err(ExteriorError::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    if m.nrows() > 64 {
        return Err(ExteriorError::TooLarge(m.nrows()));
    }
    Ok(m.nrows())
}

/// `Γ(M) = Σ_i (M u_i) ∧ u_i` over the orthonormal basis `u` (the columns of
/// `basis`, canonical when `None`).
pub fn gamma(m: &SquareMatrix, basis: Option<&SquareMatrix>) -> Result<MultiVector, ExteriorError> {
    let n = check_square(m)?;
    let identity;
    let u = match basis {
        Some(u) => {
            if u.nrows() != n || u.ncols() != n {
                return Err(ExteriorError::DimensionMismatch { expected: n, got: u.nrows() });
            }
            let gram = u.transpose() * u - SquareMatrix::identity(n, n);
            let deviation = gram.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            if deviation > 1e-10 {
                return Err(ExteriorError::NotOrthonormal { deviation });
            }
            u
        }
        None => {
            identity = SquareMatrix::identity(n, n);
            &identity
        }
    };
    let mut acc = MultiVector::zero(n, 2);
    for i in 0..n {
        let ui: DVector<f64> = u.column(i).into_owned();
        let mui = m * &ui;
        let term = wedge(&MultiVector::from_vector(&mui), &MultiVector::from_vector(&ui))?;
        acc = acc.add(&term)?;
    }
    Ok(acc)
}

/// Top coefficient of `Γ(M)^m` for an `n = 2m` dimensional `M`.
pub fn gamma_power(m: &SquareMatrix, half_dim: usize) -> Result<f64, ExteriorError> {
    let n = check_square(m)?;
    if n == 0 || n % 2 == 1 {
        return Err(ExteriorError::OddDimension(n));
    }
    if n != 2 * half_dim {
        return Err(ExteriorError::DimensionMismatch { expected: 2 * half_dim, got: n });
    }
    let g = gamma(m, None)?;
    let mut power = g.clone();
    for _ in 1..half_dim {
        power = wedge(&power, &g)?;
    }
    Ok(power.top_coeff())
}

/// `M - M^T`, not halved.
pub fn antisymmetric_part(m: &SquareMatrix) -> SquareMatrix {
    m - m.transpose()
}

fn inf_norm(m: &SquareMatrix) -> f64 {
    m.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Pfaffian of an antisymmetric matrix of even order.
///
/// Up to order 8 the value is the signed sum over all perfect matchings;
/// larger matrices use the recursive expansion along the first row.
pub fn pfaffian(a: &SquareMatrix) -> Result<f64, ExteriorError> {
    let n = check_square(a)?;
    if n % 2 == 1 {
        return Err(ExteriorError::OddDimension(n));
    }
    let deviation = inf_norm(&(a + a.transpose()));
    if deviation > 1e-10 * inf_norm(a) {
        return Err(ExteriorError::NotAntisymmetric { deviation });
    }
    if n == 0 {
        return Ok(1.0);
    }
    if n <= 8 {
        Ok(matching_sum(a))
    } else {
        let idx: Vec<usize> = (0..n).collect();
        Ok(expand_first_row(a, &idx))
    }
}

/// `Σ_matchings sgn(π) Π a_{i j}` with the sign of the matching permutation
/// obtained by counting inversions of the flattened pair list.
fn matching_sum(a: &SquareMatrix) -> f64 {
    fn walk(a: &SquareMatrix, free: u64, perm: &mut Vec<usize>, total: &mut f64) {
        if free == 0 {
            let mut inv = 0usize;
            for i in 0..perm.len() {
                for j in i + 1..perm.len() {
                    if perm[i] > perm[j] {
                        inv += 1;
                    }
                }
            }
            let sign = if inv.is_multiple_of(2) { 1.0 } else { -1.0 };
            let prod: f64 = perm.chunks(2).map(|p| a[(p[0], p[1])]).product();
            *total += sign * prod;
            return;
        }
        let i = free.trailing_zeros() as usize;
        let mut rest = free & !(1u64 << i);
        while rest != 0 {
            let j = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            perm.push(i);
            perm.push(j);
            walk(a, free & !(1u64 << i) & !(1u64 << j), perm, total);
            perm.truncate(perm.len() - 2);
        }
    }
    let n = a.nrows();
    let mut total = 0.0;
    walk(a, (1u64 << n) - 1, &mut Vec::with_capacity(n), &mut total);
    total
}

fn expand_first_row(a: &SquareMatrix, idx: &[usize]) -> f64 {
    if idx.is_empty() {
        return 1.0;
    }
    if idx.len() == 2 {
        return a[(idx[0], idx[1])];
    }
    let first = idx[0];
    let mut total = 0.0;
    for (pos, &j) in idx.iter().enumerate().skip(1) {
        let entry = a[(first, j)];
        if entry == 0.0 {
            continue;
        }
        let rest: Vec<usize> = idx[1..].iter().copied().filter(|&k| k != j).collect();
        // pos is 1-based position of j among the remaining indices after `first`
        let sign = if pos % 2 == 1 { 1.0 } else { -1.0 };
        total += sign * entry * expand_first_row(a, &rest);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn blade(indices: &[usize]) -> u64 {
        indices.iter().fold(0, |m, &i| m | (1u64 << i))
    }

    #[test]
    fn wedge_signs() {
        let e = |i| MultiVector::basis(4, i);
        let e12 = wedge(&e(0), &e(1)).unwrap();
        assert_eq!(e12.coeff(blade(&[0, 1])), 1.0);
        let e21 = wedge(&e(1), &e(0)).unwrap();
        assert_eq!(e21.coeff(blade(&[0, 1])), -1.0);
        assert!(wedge(&e(2), &e(2)).unwrap().is_zero());

        let e34 = wedge(&e(2), &e(3)).unwrap();
        assert_eq!(wedge(&e12, &e34).unwrap().top_coeff(), 1.0);
        let e13 = wedge(&e(0), &e(2)).unwrap();
        let e24 = wedge(&e(1), &e(3)).unwrap();
        assert_eq!(wedge(&e13, &e24).unwrap().top_coeff(), -1.0);
    }

    #[test]
    fn wedge_overflow_grade_is_zero() {
        let a = MultiVector::from_terms(3, 2, [(blade(&[0, 1]), 1.0)]);
        let b = MultiVector::from_terms(3, 2, [(blade(&[1, 2]), 1.0)]);
        let w = wedge(&a, &b).unwrap();
        assert_eq!(w.grade(), 4);
        assert!(w.is_zero());
        assert!(matches!(wedge(&a, &MultiVector::basis(4, 0)), Err(ExteriorError::DimensionMismatch { .. })));
    }

    #[test]
    fn wedge_is_associative() {
        let a = MultiVector::from_vector(&DVector::from_vec(vec![1.0, 2.0, -1.0, 0.5, 3.0]));
        let b = MultiVector::from_vector(&DVector::from_vec(vec![0.0, 1.0, 4.0, -2.0, 1.0]));
        let c = MultiVector::from_vector(&DVector::from_vec(vec![2.0, -1.0, 0.0, 1.0, 1.5]));
        let left = wedge(&wedge(&a, &b).unwrap(), &c).unwrap();
        let right = wedge(&a, &wedge(&b, &c).unwrap()).unwrap();
        for (k, v) in left.terms() {
            assert!((v - right.coeff(k)).abs() < 1e-12);
        }
        assert_eq!(left.terms().count(), right.terms().count());
    }

    #[test]
    fn gamma_examples() {
        let sym = dmatrix![1.0, 2.0, 3.0; 2.0, 5.0, -1.0; 3.0, -1.0, 0.0];
        assert!(gamma(&sym, None).unwrap().is_zero());
        assert!(gamma(&SquareMatrix::identity(4, 4), None).unwrap().is_zero());

        let rot = dmatrix![0.0, -1.0; 1.0, 0.0];
        let g = gamma(&rot, None).unwrap();
        assert_eq!(g.coeff(blade(&[0, 1])), -2.0);
        assert_eq!(g.terms().count(), 1);
    }

    #[test]
    fn gamma_coefficient_convention() {
        let m = dmatrix![1.0, 2.0, 3.0; 4.0, 5.0, 6.0; 7.0, 8.0, 9.5];
        let g = gamma(&m, None).unwrap();
        for p in 0..3 {
            for q in p + 1..3 {
                assert_eq!(g.coeff(blade(&[p, q])), m[(p, q)] - m[(q, p)]);
            }
        }
    }

    #[test]
    fn gamma_rejects_non_orthonormal_basis() {
        let m = SquareMatrix::identity(2, 2);
        let skewed = dmatrix![1.0, 0.5; 0.0, 1.0];
        assert!(matches!(gamma(&m, Some(&skewed)), Err(ExteriorError::NotOrthonormal { .. })));
    }

    #[test]
    fn gamma_power_examples() {
        assert_eq!(gamma_power(&dmatrix![0.0, -1.0; 1.0, 0.0], 1).unwrap(), -2.0);
        let sym = dmatrix![1.0, 2.0, 0.0, 1.0; 2.0, 1.0, 3.0, 0.0; 0.0, 3.0, 1.0, 4.0; 1.0, 0.0, 4.0, 2.0];
        assert_eq!(gamma_power(&sym, 2).unwrap(), 0.0);

        // M - M^T has A_13 = A_24 = 1 (one-based) and nothing else.
        let mut m = SquareMatrix::zeros(4, 4);
        m[(0, 2)] = 1.0;
        m[(1, 3)] = 1.0;
        assert_eq!(gamma_power(&m, 2).unwrap(), -2.0);
        assert_eq!(pfaffian(&antisymmetric_part(&m)).unwrap(), -1.0);

        assert!(matches!(gamma_power(&SquareMatrix::zeros(3, 3), 1), Err(ExteriorError::OddDimension(3))));
        assert!(matches!(gamma_power(&SquareMatrix::zeros(0, 0), 0), Err(ExteriorError::OddDimension(0))));
    }

    #[test]
    fn pfaffian_examples() {
        assert_eq!(pfaffian(&dmatrix![0.0, 2.5; -2.5, 0.0]).unwrap(), 2.5);
        let mut blocks = SquareMatrix::zeros(4, 4);
        blocks[(0, 1)] = 1.0;
        blocks[(1, 0)] = -1.0;
        blocks[(2, 3)] = 1.0;
        blocks[(3, 2)] = -1.0;
        assert_eq!(pfaffian(&blocks).unwrap(), 1.0);
        assert_eq!(pfaffian(&SquareMatrix::zeros(6, 6)).unwrap(), 0.0);
        assert!(matches!(pfaffian(&SquareMatrix::identity(2, 2)), Err(ExteriorError::NotAntisymmetric { .. })));
        assert!(matches!(pfaffian(&SquareMatrix::zeros(3, 3)), Err(ExteriorError::OddDimension(3))));
    }

    #[test]
    fn pfaffian_algorithms_agree() {
        // deterministic antisymmetric 8x8
        let a = SquareMatrix::from_fn(8, 8, |i, j| {
            if i == j {
                0.0
            } else {
                let (p, q) = if i < j { (i, j) } else { (j, i) };
                let v = ((p * 7 + q * 13) % 11) as f64 - 5.0;
                if i < j {
                    v
                } else {
                    -v
                }
            }
        });
        let idx: Vec<usize> = (0..8).collect();
        let by_matching = matching_sum(&a);
        let by_expansion = expand_first_row(&a, &idx);
        assert!((by_matching - by_expansion).abs() <= 1e-9 * by_matching.abs().max(1.0));
    }

    #[test]
    fn antisymmetric_part_examples() {
        assert_eq!(antisymmetric_part(&dmatrix![1.0, 2.0; 2.0, 3.0]), SquareMatrix::zeros(2, 2));
        assert_eq!(antisymmetric_part(&dmatrix![0.0, -1.0; 1.0, 0.0]), dmatrix![0.0, -2.0; 2.0, 0.0]);
        assert_eq!(antisymmetric_part(&dmatrix![1.0, 2.0; 0.0, 1.0]), dmatrix![0.0, 2.0; -2.0, 0.0]);
    }

    #[test]
    fn pruning_keeps_grade() {
        let mv = MultiVector::from_terms(4, 2, [(blade(&[0, 1]), 1.0), (blade(&[2, 3]), 1e-20)]);
        let p = mv.pruned();
        assert_eq!(p.grade(), 2);
        assert_eq!(p.terms().count(), 1);
    }
}
