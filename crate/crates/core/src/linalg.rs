//! Dense complex linear algebra.
//!
//! LU with partial pivoting is written over [`Real`] so it can serve as the
//! independent determinant oracle for the phase-matrix recurrence in any
//! precision. Singular values and Hermitian spectra are delegated to
//! `nalgebra` and only offered in `f64`.

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::scalar::Real;
use crate::C64;

/// Dense complex matrix.
pub type CMatrix<T> = DMatrix<Complex<T>>;

/// LU factorization `P·A = L·U` with partial pivoting.
#[derive(Clone, Debug)]
pub struct Lu<T: Real> {
    factors: CMatrix<T>,
    perm: Vec<usize>,
    parity: bool,
}

impl<T: Real> Lu<T> {
    pub fn new(a: &CMatrix<T>) -> Self {
        assert!(a.is_square(), "LU needs a square matrix");
        let n = a.nrows();
        let mut f = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut parity = false;
        for col in 0..n {
            let mut pivot = col;
            let mut best = f[(col, col)].norm();
            for row in col + 1..n {
                let v = f[(row, col)].norm();
                if v > best {
                    best = v;
                    pivot = row;
                }
            }
            if pivot != col {
                f.swap_rows(pivot, col);
                perm.swap(pivot, col);
                parity = !parity;
            }
            let p = f[(col, col)];
            if p.norm() == T::zero() {
                continue;
            }
            for row in col + 1..n {
                let factor = f[(row, col)] / p;
                f[(row, col)] = factor;
                for k in col + 1..n {
                    let u = f[(col, k)];
                    f[(row, k)] -= factor * u;
                }
            }
        }
        Lu { factors: f, perm, parity }
    }

    pub fn determinant(&self) -> Complex<T> {
        let mut det = Complex::new(T::one(), T::zero());
        for i in 0..self.factors.nrows() {
            det *= self.factors[(i, i)];
        }
        if self.parity {
            -det
        } else {
            det
        }
    }

    /// Solves `A·x = b`; `None` when a pivot is exactly zero.
    pub fn solve(&self, b: &[Complex<T>]) -> Option<Vec<Complex<T>>> {
        let n = self.factors.nrows();
        assert_eq!(b.len(), n);
        let mut y: Vec<Complex<T>> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for k in 0..i {
                let l = self.factors[(i, k)];
                let yk = y[k];
                y[i] -= l * yk;
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let u = self.factors[(i, k)];
                let yk = y[k];
                y[i] -= u * yk;
            }
            let d = self.factors[(i, i)];
            if d.norm() == T::zero() {
                return None;
            }
            y[i] /= d;
        }
        Some(y)
    }
}

/// Determinant by LU with partial pivoting.
pub fn determinant<T: Real>(a: &CMatrix<T>) -> Complex<T> {
    Lu::new(a).determinant()
}

/// `(M + M†)/2`.
pub fn hermitian_part(m: &CMatrix<f64>) -> CMatrix<f64> {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// `(M − M†)/2`, the anti-Hermitian component.
pub fn anti_hermitian_part(m: &CMatrix<f64>) -> CMatrix<f64> {
    (m - m.adjoint()) * C64::new(0.5, 0.0)
}

/// `(M − M†)/(2i)`, the Hermitian matrix whose semidefiniteness expresses
/// the Herglotz property.
pub fn imaginary_part(m: &CMatrix<f64>) -> CMatrix<f64> {
    (m - m.adjoint()) * C64::new(0.0, -0.5)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix<f64>) -> Vec<f64> {
    let h = hermitian_part(m);
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Singular values in ascending order together with the matching right
/// singular vectors.
pub fn singular_pairs(m: &CMatrix<f64>) -> Vec<(f64, Vec<C64>)> {
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.expect("right singular vectors requested");
    let mut pairs: Vec<(f64, Vec<C64>)> = svd
        .singular_values
        .iter()
        .enumerate()
        .map(|(i, &s)| (s, vt.row(i).iter().map(|c| c.conj()).collect()))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs
}

/// Singular values in ascending order.
pub fn singular_values(m: &CMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| a.total_cmp(b));
    s
}

/// Largest entrywise modulus of `a − b`.
pub fn max_abs_diff(a: &CMatrix<f64>, b: &CMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Largest entrywise modulus.
pub fn max_abs(a: &CMatrix<f64>) -> f64 {
    a.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Nested `[re, im]` rows, the JSON layout for matrices.
pub fn to_pairs(m: &CMatrix<f64>) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

/// Inverse of [`to_pairs`]; `None` for ragged input.
pub fn from_pairs(rows: &[Vec<[f64; 2]>]) -> Option<CMatrix<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != m) {
        return None;
    }
    Some(CMatrix::from_fn(n, m, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
}

/// Euclidean norm of a complex vector.
pub fn vector_norm<T: Real>(v: &[Complex<T>]) -> T {
    v.iter().fold(T::zero(), |acc, x| acc + x.norm_sqr()).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_determinant_and_solve() {
        let a = CMatrix::<f64>::from_row_slice(
            3,
            3,
            &[
                C64::new(1.0, 0.0),
                C64::new(0.0, 1.0),
                C64::new(-1.0, 0.0),
                C64::new(0.0, 1.0),
                C64::new(1.0, 0.0),
                C64::new(0.0, 1.0),
                C64::new(-1.0, 0.0),
                C64::new(0.0, 1.0),
                C64::new(1.0, 0.0),
            ],
        );
        // Cofactor expansion gives 4 for this matrix.
        assert!((determinant(&a) - C64::new(4.0, 0.0)).norm() < 1e-14);
        let b = vec![C64::new(1.0, 0.0), C64::new(2.0, -1.0), C64::new(0.5, 0.5)];
        let x = Lu::new(&a).solve(&b).unwrap();
        let r = &a * nalgebra::DVector::from_vec(x) - nalgebra::DVector::from_vec(b);
        assert!(r.norm() < 1e-14);
    }

    #[test]
    fn singular_matrix_has_zero_determinant() {
        let a = CMatrix::<f32>::from_element(2, 2, Complex::new(1.0, 0.0));
        assert!(determinant(&a).norm() < 1e-7);
        assert!(Lu::new(&a).solve(&[Complex::new(1.0, 0.0); 2]).is_none());
    }

    #[test]
    fn singular_pairs_sorted_with_null_vector() {
        let a = CMatrix::<f64>::from_row_slice(
            2,
            2,
            &[C64::new(1.0, 0.0), C64::new(-1.0, 0.0), C64::new(-1.0, 0.0), C64::new(1.0, 0.0)],
        );
        let p = singular_pairs(&a);
        assert!(p[0].0 < 1e-14 && (p[1].0 - 2.0).abs() < 1e-14);
        let v = &p[0].1;
        assert!((v[0] - v[1]).norm() < 1e-14);
    }
}
