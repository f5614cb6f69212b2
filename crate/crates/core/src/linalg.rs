//! Dense complex matrix helpers shared by the Fock-space modules.

use nalgebra::{DMatrix, DVector};

use crate::C64;

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let n = u.nrows();
    max_abs(&(u.adjoint() * u - CMatrix::identity(n, n)))
}

/// `a * b`, skipping zero entries of `a`. Exact same result as the dense
/// product; fast when `a` is banded.
pub fn mul_sparse_left(a: &CMatrix, b: &CMatrix) -> CMatrix {
    assert_eq!(a.ncols(), b.nrows());
    let mut out = CMatrix::zeros(a.nrows(), b.ncols());
    for k in 0..a.ncols() {
        for i in 0..a.nrows() {
            let aik = a[(i, k)];
            if aik == C64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..b.ncols() {
                out[(i, j)] += aik * b[(k, j)];
            }
        }
    }
    out
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    mul_sparse_left(a, b) - mul_sparse_left(b, a)
}

/// `exp(i t H)` for Hermitian `H`, by eigendecomposition. The result is
/// unitary up to roundoff.
pub fn expi_hermitian(h: &CMatrix, t: f64) -> CMatrix {
    let eig = h.clone().symmetric_eigen();
    let u = &eig.eigenvectors;
    let phases = CVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| C64::from_polar(1.0, t * l)),
    );
    let mut scaled = u.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= phases[j];
    }
    scaled * u.adjoint()
}

/// `<u|M|v>`.
pub fn sandwich(u: &CVector, m: &CMatrix, v: &CVector) -> C64 {
    u.dotc(&(m * v))
}

/// Kronecker product.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMatrix::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expi_of_diagonal() {
        let h = CMatrix::from_diagonal(&CVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(-2.0, 0.0)]));
        let u = expi_hermitian(&h, 0.5);
        assert!((u[(0, 0)] - C64::from_polar(1.0, 0.5)).norm() < 1e-14);
        assert!((u[(1, 1)] - C64::from_polar(1.0, -1.0)).norm() < 1e-14);
        assert!(u[(0, 1)].norm() < 1e-14);
    }

    #[test]
    fn expi_of_pauli_y() {
        // exp(i t sigma_y) = cos t + i sin t sigma_y
        let i = C64::new(0.0, 1.0);
        let sy = CMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), -i, i, C64::new(0.0, 0.0)]);
        let t = 0.7f64;
        let u = expi_hermitian(&sy, t);
        let expected = CMatrix::identity(2, 2) * C64::new(t.cos(), 0.0) + &sy * (i * t.sin());
        assert!(max_abs(&(u - expected)) < 1e-14);
    }

    #[test]
    fn sparse_product_matches_dense() {
        let a = CMatrix::from_fn(5, 5, |i, j| if i.abs_diff(j) <= 1 { C64::new(i as f64, j as f64) } else { C64::new(0.0, 0.0) });
        let b = CMatrix::from_fn(5, 5, |i, j| C64::new((i * j) as f64 - 2.0, 1.0));
        assert!(max_abs(&(mul_sparse_left(&a, &b) - &a * &b)) < 1e-12);
    }

    #[test]
    fn kron_shape_and_entries() {
        let a = CMatrix::identity(2, 2);
        let b = CMatrix::from_fn(3, 3, |i, j| C64::new((3 * i + j) as f64, 0.0));
        let k = kron(&a, &b);
        assert_eq!(k.shape(), (6, 6));
        assert_eq!(k[(4, 5)], b[(1, 2)]);
        assert_eq!(k[(1, 4)], C64::new(0.0, 0.0));
    }
}
