//! Pole sets, companion matrices and their diagonalization.
//!
//! The companion matrix of `prod_k (s + p_k)` has the known eigenvalues
//! `-p_k`, so the eigenvectors are Vandermonde columns and the inverse is
//! given row-by-row by Lagrange basis polynomials. No general eigensolver is
//! involved.
//!
//! [`optimal_condition`] computes the smallest `||S||_inf ||S^-1||_inf` over
//! all diagonalizers `S` of a matrix with distinct eigenvalues: rescale the
//! columns of any diagonalizer by the absolute row sums of its inverse.

use nalgebra::{DMatrix, DVector};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::graphs::inf_norm;

/// Relative gap below which two poles are considered equal.
pub const DISTINCT_TOLERANCE: f64 = 1e-9;

/// Residual above which `S * S_inv` is not accepted as an inverse pair.
pub const INVERSE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoleSet {
    poles: Vec<f64>,
    /// `a_0 .. a_{n-1}` of the monic polynomial `prod_k (s + p_k)`.
    coefficients: Vec<f64>,
}

impl PoleSet {
    pub fn new(poles: &[f64]) -> Result<Self> {
        Self::with_tolerance(poles, DISTINCT_TOLERANCE)
    }

    pub fn with_tolerance(poles: &[f64], rel_tol: f64) -> Result<Self> {
        if poles.is_empty() {
            return Err(Error::EmptyPoleSet);
        }
        for (index, &value) in poles.iter().enumerate() {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::NonPositivePole { index, value });
            }
        }
        for i in 0..poles.len() {
            for j in i + 1..poles.len() {
                let (a, b) = (poles[i], poles[j]);
                if (a - b).abs() <= rel_tol * a.max(b) {
                    return Err(Error::RepeatedPole {
                        first: i,
                        second: j,
                        value_a: a,
                        value_b: b,
                    });
                }
            }
        }
        Ok(Self {
            poles: poles.to_vec(),
            coefficients: vieta(poles),
        })
    }

    pub fn poles(&self) -> &[f64] {
        &self.poles
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn order(&self) -> usize {
        self.poles.len()
    }

    pub fn min_pole(&self) -> f64 {
        self.poles.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_pole(&self) -> f64 {
        self.poles.iter().copied().fold(0.0, f64::max)
    }

    /// Evaluates `s^n + a_{n-1} s^{n-1} + ... + a_0`.
    pub fn characteristic(&self, s: f64) -> f64 {
        self.coefficients.iter().rev().fold(1.0, |acc, &a| acc * s + a)
    }
}

/// Ascending coefficients of `prod (s + p_k)`, without the leading 1.
fn vieta(poles: &[f64]) -> Vec<f64> {
    let mut coeffs = monic_product(poles.iter().copied());
    coeffs.pop();
    coeffs
}

/// Ascending coefficients of `prod (s + r)` over `roots`, including the leading 1.
fn monic_product(shifts: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut coeffs = vec![1.0];
    for p in shifts {
        let mut next = vec![0.0; coeffs.len() + 1];
        for (k, &c) in coeffs.iter().enumerate() {
            next[k] += p * c;
            next[k + 1] += c;
        }
        coeffs = next;
    }
    coeffs
}

pub fn poles_to_coefficients(poles: &[f64]) -> Result<PoleSet> {
    PoleSet::new(poles)
}

/// Controllable canonical form: ones on the superdiagonal, `-a` on the last row.
#[derive(Debug, Clone, PartialEq)]
pub struct CompanionMatrix {
    matrix: DMatrix<f64>,
}

impl CompanionMatrix {
    pub fn order(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.matrix
    }
}

pub fn companion(ps: &PoleSet) -> CompanionMatrix {
    let n = ps.order();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n - 1 {
        m[(i, i + 1)] = 1.0;
    }
    for (j, &a) in ps.coefficients().iter().enumerate() {
        m[(n - 1, j)] = -a;
    }
    CompanionMatrix { matrix: m }
}

/// `M = S diag(eigenvalues) S^-1` with both factors held explicitly.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagonalization {
    s: DMatrix<f64>,
    s_inv: DMatrix<f64>,
    eigenvalues: Vec<f64>,
}

impl Diagonalization {
    /// Wraps an arbitrary diagonalizer; fails if `S * S_inv` is not close to `I`.
    pub fn new(s: DMatrix<f64>, s_inv: DMatrix<f64>, eigenvalues: Vec<f64>) -> Result<Self> {
        let n = s.nrows();
        for dim in [s.ncols(), s_inv.nrows(), s_inv.ncols(), eigenvalues.len()] {
            if dim != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: dim,
                });
            }
        }
        let residual = inverse_residual(&s, &s_inv);
        if !(residual <= INVERSE_TOLERANCE) {
            return Err(Error::NotInverse { residual });
        }
        Ok(Self { s, s_inv, eigenvalues })
    }

    pub fn order(&self) -> usize {
        self.s.nrows()
    }

    pub fn s(&self) -> &DMatrix<f64> {
        &self.s
    }

    pub fn s_inv(&self) -> &DMatrix<f64> {
        &self.s_inv
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `S diag(lambda) S^-1`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let lambda = DMatrix::from_diagonal(&DVector::from_column_slice(&self.eigenvalues));
        &self.s * lambda * &self.s_inv
    }

    pub fn condition(&self) -> f64 {
        inf_norm(&self.s) * inf_norm(&self.s_inv)
    }

    /// Another diagonalizer of the same matrix: columns of `S` scaled by `scales`.
    pub fn rescaled(&self, scales: &[f64]) -> Result<Self> {
        if scales.len() != self.order() {
            return Err(Error::DimensionMismatch {
                expected: self.order(),
                found: scales.len(),
            });
        }
        if let Some(row) = scales.iter().position(|&c| c == 0.0 || !c.is_finite()) {
            return Err(Error::SingularScaling { row });
        }
        let mut s = self.s.clone();
        let mut s_inv = self.s_inv.clone();
        for (k, &c) in scales.iter().enumerate() {
            s.column_mut(k).scale_mut(c);
            s_inv.row_mut(k).scale_mut(1.0 / c);
        }
        Ok(Self {
            s,
            s_inv,
            eigenvalues: self.eigenvalues.clone(),
        })
    }

    /// Reorders eigenpairs: new column `k` is old column `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.order();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: perm.len(),
            });
        }
        let s = DMatrix::from_fn(n, n, |i, k| self.s[(i, perm[k])]);
        let s_inv = DMatrix::from_fn(n, n, |k, j| self.s_inv[(perm[k], j)]);
        let eigenvalues = perm.iter().map(|&p| self.eigenvalues[p]).collect();
        Ok(Self { s, s_inv, eigenvalues })
    }
}

fn inverse_residual(s: &DMatrix<f64>, s_inv: &DMatrix<f64>) -> f64 {
    let n = s.nrows();
    inf_norm(&(s * s_inv - DMatrix::<f64>::identity(n, n)))
}

/// Eigenvectors `(1, l, l^2, ..., l^{n-1})` with `l = -p_k`, in pole order.
/// Row `k` of the inverse holds the coefficients of the Lagrange basis
/// polynomial that is 1 at `-p_k` and 0 at the other eigenvalues.
pub fn vandermonde_diagonalization(ps: &PoleSet) -> Diagonalization {
    let n = ps.order();
    let lambda: Vec<f64> = ps.poles().iter().map(|p| -p).collect();
    let s = DMatrix::from_fn(n, n, |i, k| lambda[k].powi(i as i32));

    let mut s_inv = DMatrix::zeros(n, n);
    for k in 0..n {
        let others = (0..n).filter(|&j| j != k);
        let numerator = monic_product(others.clone().map(|j| ps.poles()[j]));
        let denominator: f64 = others.map(|j| lambda[k] - lambda[j]).product();
        for (i, c) in numerator.iter().enumerate() {
            s_inv[(k, i)] = c / denominator;
        }
    }
    Diagonalization {
        s,
        s_inv,
        eigenvalues: lambda,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionResult {
    /// `min ||S||_inf ||S^-1||_inf` over all diagonalizers.
    pub optimal_bound: f64,
    /// Diagonal of `K`, the column scaling applied to the input diagonalizer.
    pub scaling: Vec<f64>,
    #[serde(serialize_with = "serialize_rows")]
    pub s_opt: DMatrix<f64>,
    #[serde(serialize_with = "serialize_rows")]
    pub s_opt_inv: DMatrix<f64>,
}

pub fn optimal_condition(d: &Diagonalization) -> Result<ConditionResult> {
    let n = d.order();
    let scaling: Vec<f64> = (0..n)
        .map(|i| d.s_inv().row(i).iter().map(|v| v.abs()).sum())
        .collect();
    if let Some(row) = scaling.iter().position(|&k| !(k > 0.0) || !k.is_finite()) {
        return Err(Error::SingularScaling { row });
    }
    let mut s_opt = d.s().clone();
    let mut s_opt_inv = d.s_inv().clone();
    for (k, &c) in scaling.iter().enumerate() {
        s_opt.column_mut(k).scale_mut(c);
        s_opt_inv.row_mut(k).scale_mut(1.0 / c);
    }
    Ok(ConditionResult {
        optimal_bound: inf_norm(&s_opt),
        scaling,
        s_opt,
        s_opt_inv,
    })
}

/// `||S||_inf ||S^-1||_inf` for a verified inverse pair.
pub fn condition_of(s: &DMatrix<f64>, s_inv: &DMatrix<f64>) -> Result<f64> {
    if !s.is_square() || s.shape() != s_inv.shape() {
        return Err(Error::DimensionMismatch {
            expected: s.nrows(),
            found: s_inv.nrows(),
        });
    }
    let residual = inverse_residual(s, s_inv);
    if !(residual <= INVERSE_TOLERANCE) {
        return Err(Error::NotInverse { residual });
    }
    Ok(inf_norm(s) * inf_norm(s_inv))
}

/// Minimum of `||S K||_inf ||K^-1 v||_inf` over positive diagonal `K`,
/// attained at `K_jj = |v_j|` (the same row-sum argument as
/// [`optimal_condition`], applied to a single column). Returns the value and
/// the scaling. Zero entries of `v` give the infimum, approached as `K_jj -> 0`.
pub fn optimal_vector_condition(s: &DMatrix<f64>, v: &DVector<f64>) -> (f64, Vec<f64>) {
    let scaling: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    let value = s
        .row_iter()
        .map(|row| row.iter().zip(&scaling).map(|(a, k)| a.abs() * k).sum::<f64>())
        .fold(0.0, f64::max);
    (value, scaling)
}

pub(crate) fn serialize_rows<S: Serializer>(m: &DMatrix<f64>, ser: S) -> Result<S::Ok, S::Error> {
    let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
    rows.serialize(ser)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::dmatrix;

    #[test]
    fn vieta_examples() {
        assert_eq!(PoleSet::new(&[1.0, 2.0]).unwrap().coefficients(), &[2.0, 3.0]);
        assert_eq!(PoleSet::new(&[1.0, 2.0, 3.0]).unwrap().coefficients(), &[6.0, 11.0, 6.0]);
        let ps = PoleSet::new(&[3.0, 1.0, 1.0 / 3.0]).unwrap();
        let a = ps.coefficients();
        assert_relative_eq!(a[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(a[1], 13.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(a[2], 13.0 / 3.0, epsilon = 1e-15);
        for &p in ps.poles() {
            assert!(ps.characteristic(-p).abs() <= 1e-9 * a[0].max(1.0));
        }
    }

    #[test]
    fn pole_validation() {
        assert!(matches!(PoleSet::new(&[]), Err(Error::EmptyPoleSet)));
        assert!(matches!(
            PoleSet::new(&[1.0, -2.0]),
            Err(Error::NonPositivePole { index: 1, .. })
        ));
        assert!(matches!(PoleSet::new(&[0.0]), Err(Error::NonPositivePole { .. })));
        assert!(matches!(PoleSet::new(&[f64::NAN]), Err(Error::NonPositivePole { .. })));
        assert!(matches!(
            PoleSet::new(&[2.0, 1.0, 2.0]),
            Err(Error::RepeatedPole { first: 0, second: 2, .. })
        ));
        assert!(PoleSet::new(&[1.0, 1.0 + 1e-10]).is_err());
        assert!(PoleSet::new(&[1.0, 1.0 + 1e-6]).is_ok());
    }

    #[test]
    fn companion_examples() {
        let (p1, p2) = (0.7, 2.5);
        let a = companion(&PoleSet::new(&[p1, p2]).unwrap());
        assert_relative_eq!(
            a.matrix(),
            &dmatrix![0.0, 1.0; -p1 * p2, -(p1 + p2)],
            epsilon = 1e-15
        );
        assert_eq!(companion(&PoleSet::new(&[1.0]).unwrap()).matrix(), &dmatrix![-1.0]);
        assert_eq!(
            companion(&PoleSet::new(&[1.0, 2.0, 3.0]).unwrap()).matrix(),
            &dmatrix![0.0, 1.0, 0.0; 0.0, 0.0, 1.0; -6.0, -11.0, -6.0]
        );
    }

    #[test]
    fn vandermonde_two_poles_matches_closed_form() {
        let (p1, p2) = (0.7, 2.5);
        let d = vandermonde_diagonalization(&PoleSet::new(&[p1, p2]).unwrap());
        assert_eq!(d.s(), &dmatrix![1.0, 1.0; -p1, -p2]);
        let expected = dmatrix![-p2, -1.0; p1, 1.0] / (p1 - p2);
        assert_relative_eq!(d.s_inv(), &expected, epsilon = 1e-14);
        assert_eq!(d.eigenvalues(), &[-p1, -p2]);
    }

    #[test]
    fn vandermonde_single_pole() {
        let d = vandermonde_diagonalization(&PoleSet::new(&[1.0]).unwrap());
        assert_eq!(d.s(), &dmatrix![1.0]);
        assert_eq!(d.s_inv(), &dmatrix![1.0]);
        assert_eq!(optimal_condition(&d).unwrap().optimal_bound, 1.0);
    }

    #[test]
    fn vandermonde_residual_three_poles() {
        let ps = PoleSet::new(&[1.0, 2.0, 3.0]).unwrap();
        let a = companion(&ps);
        let d = vandermonde_diagonalization(&ps);
        let lambda = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, -2.0, -3.0]));
        let residual = inf_norm(&(a.matrix() * d.s() - d.s() * lambda));
        assert!(residual <= 1e-12, "residual {residual}");
        assert!(inverse_residual(d.s(), d.s_inv()) <= 1e-12);
    }

    #[test]
    fn optimal_condition_closed_form_points() {
        let d = vandermonde_diagonalization(&PoleSet::new(&[3.0, 1.0 / 3.0]).unwrap());
        let r = optimal_condition(&d).unwrap();
        assert_relative_eq!(r.optimal_bound, 2.0, epsilon = 1e-14);
        assert_relative_eq!(inf_norm(&r.s_opt_inv), 1.0, epsilon = 1e-12);
        assert_relative_eq!(r.optimal_bound, inf_norm(&r.s_opt), epsilon = 1e-12);

        let d = vandermonde_diagonalization(&PoleSet::new(&[2.0, 1.0]).unwrap());
        assert_relative_eq!(optimal_condition(&d).unwrap().optimal_bound, 7.0, epsilon = 1e-14);
    }

    #[test]
    fn condition_of_examples() {
        assert_eq!(condition_of(&DMatrix::identity(3, 3), &DMatrix::identity(3, 3)).unwrap(), 1.0);
        assert_eq!(
            condition_of(&dmatrix![2.0, 0.0; 0.0, 1.0], &dmatrix![0.5, 0.0; 0.0, 1.0]).unwrap(),
            2.0
        );
        // S* = [[1, 1], [-2, -1]] and its inverse [[-1, -1], [2, 1]] both have norm 3.
        let d = vandermonde_diagonalization(&PoleSet::new(&[2.0, 1.0]).unwrap());
        assert_relative_eq!(condition_of(d.s(), d.s_inv()).unwrap(), 9.0, epsilon = 1e-14);
        assert!(matches!(
            condition_of(&DMatrix::identity(2, 2), &dmatrix![2.0, 0.0; 0.0, 1.0]),
            Err(Error::NotInverse { .. })
        ));
    }

    #[test]
    fn singular_scaling_is_reported() {
        let d = Diagonalization {
            s: DMatrix::identity(2, 2),
            s_inv: dmatrix![1.0, 0.0; 0.0, 0.0],
            eigenvalues: vec![-1.0, -2.0],
        };
        assert!(matches!(optimal_condition(&d), Err(Error::SingularScaling { row: 1 })));
    }

    #[test]
    fn general_diagonalization_is_accepted() {
        // M = [[2, 1], [0, 3]]: eigenvectors (1, 0) and (1, 1).
        let s = dmatrix![1.0, 1.0; 0.0, 1.0];
        let s_inv = dmatrix![1.0, -1.0; 0.0, 1.0];
        let d = Diagonalization::new(s, s_inv, vec![2.0, 3.0]).unwrap();
        assert_relative_eq!(d.reconstruct(), dmatrix![2.0, 1.0; 0.0, 3.0], epsilon = 1e-15);
        let r = optimal_condition(&d).unwrap();
        // K = diag(2, 1): S K = [[2, 1], [0, 1]].
        assert_eq!(r.scaling, vec![2.0, 1.0]);
        assert_relative_eq!(r.optimal_bound, 3.0, epsilon = 1e-15);
        assert!(r.optimal_bound <= d.condition());
    }

    #[test]
    fn vector_condition_matches_definition() {
        let d = vandermonde_diagonalization(&PoleSet::new(&[1.0, 2.0, 3.0]).unwrap());
        let v = d.s_inv().column(0).into_owned();
        let (value, k) = optimal_vector_condition(d.s(), &v);
        let sk = d.s() * DMatrix::from_diagonal(&DVector::from_vec(k.clone()));
        let kv = DVector::from_iterator(3, v.iter().zip(&k).map(|(a, b)| a / b));
        assert_relative_eq!(value, inf_norm(&sk) * inf_norm(&kv), epsilon = 1e-13);
    }
}
