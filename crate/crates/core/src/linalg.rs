//! Small complex linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
pub use num_complex::Complex64 as C64;

pub type CVector = DVector<C64>;
pub type CMatrix = DMatrix<C64>;

/// `a^H b`.
pub fn inner(a: &CVector, b: &CVector) -> C64 {
    a.dotc(b)
}

pub fn norm_sqr(a: &CVector) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// `y^H A y` for Hermitian `A`; the (numerically negligible) imaginary part is dropped.
pub fn quad_form(a: &CMatrix, y: &CVector) -> f64 {
    y.dotc(&(a * y)).re
}

/// `v v^H`.
pub fn outer(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

/// Eigenvalues (ascending) and matching eigenvectors of a Hermitian matrix.
pub fn hermitian_eigen(a: &CMatrix) -> (Vec<f64>, Vec<CVector>) {
    let eig = SymmetricEigen::new(a.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| eig.eigenvectors.column(i).into_owned())
        .collect();
    (values, vectors)
}

/// `min_phi || a - e^{j phi} b ||` for unit vectors `a`, `b`.
pub fn phase_aligned_distance(a: &CVector, b: &CVector) -> f64 {
    let c = inner(b, a);
    let phase = if c.norm() > 0.0 { c / c.norm() } else { C64::new(1.0, 0.0) };
    (a - b * phase).norm()
}

/// Largest absolute entry.
pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}
