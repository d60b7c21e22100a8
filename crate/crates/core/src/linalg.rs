//! Small dense complex linear algebra helpers on top of nalgebra.

use crate::{Error, Result, C64};
use nalgebra::DMatrix;

pub type CMatrix = DMatrix<C64>;

/// Largest singular value.
pub fn operator_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.iter().cloned().fold(0.0, f64::max)
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn hermiticity_defect(h: &CMatrix) -> f64 {
    max_abs_diff(h, &h.adjoint())
}

/// `exp(-i t H)` for Hermitian `H` via its eigendecomposition.
pub fn unitary_exp(h: &CMatrix, t: f64) -> CMatrix {
    let eig = h.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let phases = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| C64::from_polar(1.0, -l * t)),
    ));
    v * phases * v.adjoint()
}

pub fn inverse(m: &CMatrix) -> Result<CMatrix> {
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(smin > 1e-13 * smax) {
        return Err(Error::Conditioning { singular_values: sv.iter().cloned().collect() });
    }
    m.clone().try_inverse().ok_or_else(|| Error::Conditioning { singular_values: sv.iter().cloned().collect() })
}

/// Moore-Penrose pseudo-inverse of a full-row-rank matrix.
pub fn pseudo_inverse(m: &CMatrix, rcond: f64) -> Result<CMatrix> {
    let svd = m.clone().svd(true, true);
    let sv: Vec<f64> = svd.singular_values.iter().cloned().collect();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if sv.len() < m.nrows().min(m.ncols()) || sv.iter().any(|&s| !(s > rcond * smax)) {
        return Err(Error::Conditioning { singular_values: sv });
    }
    let u = svd.u.expect("requested");
    let vt = svd.v_t.expect("requested");
    let sinv =
        CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(sv.len(), sv.iter().map(|&s| C64::new(1.0 / s, 0.0))));
    Ok(vt.adjoint() * sinv * u.adjoint())
}

pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    m.clone().svd(false, false).singular_values.iter().cloned().collect()
}

/// Trace distance of two d x d Hermitian matrices.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    let mut diff = a - b;
    // symmetrize against rounding before the Hermitian solver
    diff = (&diff + diff.adjoint()) * C64::new(0.5, 0.0);
    0.5 * diff.symmetric_eigen().eigenvalues.iter().map(|l| l.abs()).sum::<f64>()
}
