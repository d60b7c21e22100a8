//! System Hamiltonian and bare Liouville-space propagators.
//!
//! Pair indices are flattened row-major: `(x+, x-) -> x+ * d + x-`, so a density matrix
//! `rho` maps to the vector of its entries read row by row.

use crate::error::invalid;
use crate::linalg::{self, CMatrix};
use crate::{Result, C64};
use nalgebra::DVector;
use std::fmt;
use std::ops::Mul;
use std::sync::Arc;

pub type DensityVector = DVector<C64>;
pub type HamiltonianFn = Arc<dyn Fn(f64) -> CMatrix + Send + Sync>;

const HERMITIAN_TOL: f64 = 1e-12;

pub mod pauli {
    use super::CMatrix;
    use crate::C64;

    pub fn identity() -> CMatrix {
        CMatrix::identity(2, 2)
    }
    pub fn x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0].map(|v| C64::new(v, 0.0)))
    }
    pub fn y() -> CMatrix {
        CMatrix::from_row_slice(
            2,
            2,
            &[C64::new(0.0, 0.0), C64::new(0.0, -1.0), C64::new(0.0, 1.0), C64::new(0.0, 0.0)],
        )
    }
    pub fn z() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0].map(|v| C64::new(v, 0.0)))
    }
}

/// System Hamiltonian with a diagonal coupling operator given by its eigenvalues.
#[derive(Clone)]
pub struct SystemHamiltonian {
    h: CMatrix,
    coupling: Vec<f64>,
    drive: Option<HamiltonianFn>,
}

impl fmt::Debug for SystemHamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SystemHamiltonian")
            .field("h", &self.h)
            .field("coupling", &self.coupling)
            .field("driven", &self.drive.is_some())
            .finish()
    }
}

impl SystemHamiltonian {
    pub fn new(h: CMatrix, coupling: Vec<f64>) -> Result<Self> {
        if !h.is_square() || h.nrows() == 0 {
            return Err(invalid("Hamiltonian must be a non-empty square matrix"));
        }
        if coupling.len() != h.nrows() {
            return Err(invalid(format!(
                "coupling has {} eigenvalues for a {}-level system",
                coupling.len(),
                h.nrows()
            )));
        }
        if coupling.iter().any(|s| !s.is_finite()) {
            return Err(invalid("coupling eigenvalues must be finite"));
        }
        let defect = linalg::hermiticity_defect(&h);
        if defect >= HERMITIAN_TOL {
            return Err(invalid(format!("Hamiltonian is not Hermitian (defect {defect:.3e})")));
        }
        Ok(Self { h, coupling, drive: None })
    }

    /// `H = eps * sigma_z + delta * sigma_x`, coupled through `sigma_z`.
    pub fn spin_boson(epsilon: f64, delta: f64) -> Self {
        let h = pauli::z() * C64::new(epsilon, 0.0) + pauli::x() * C64::new(delta, 0.0);
        Self::new(h, vec![1.0, -1.0]).expect("spin-boson Hamiltonian is Hermitian")
    }

    /// Attach a time dependence. `h(t)` replaces the static matrix at every sampled time.
    pub fn with_drive(mut self, h: HamiltonianFn) -> Self {
        self.drive = Some(h);
        self
    }

    pub fn dim(&self) -> usize {
        self.h.nrows()
    }

    pub fn pair_dim(&self) -> usize {
        self.dim() * self.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.h
    }

    pub fn coupling(&self) -> &[f64] {
        &self.coupling
    }

    pub fn is_driven(&self) -> bool {
        self.drive.is_some()
    }

    pub fn is_diagonal(&self) -> bool {
        let d = self.dim();
        (0..d).all(|i| (0..d).all(|j| i == j || self.h[(i, j)].norm() < 1e-14))
    }

    /// Hamiltonian at time `t`, validated for Hermiticity.
    pub fn at(&self, t: f64) -> Result<CMatrix> {
        match &self.drive {
            None => Ok(self.h.clone()),
            Some(f) => {
                let h = f(t);
                if h.shape() != self.h.shape() {
                    return Err(invalid(format!("drive returned shape {:?} at t = {t}", h.shape())));
                }
                let defect = linalg::hermiticity_defect(&h);
                if defect >= HERMITIAN_TOL {
                    return Err(invalid(format!("H(t = {t}) is not Hermitian (defect {defect:.3e})")));
                }
                Ok(h)
            }
        }
    }
}

/// Superoperator on the flattened pair space, `d^2 x d^2`.
#[derive(Clone, Debug, PartialEq)]
pub struct LiouvilleMatrix {
    d: usize,
    m: CMatrix,
}

impl LiouvilleMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(invalid("superoperator must be square"));
        }
        let d = (m.nrows() as f64).sqrt().round() as usize;
        if d * d != m.nrows() {
            return Err(invalid(format!("dimension {} is not a perfect square", m.nrows())));
        }
        Ok(Self { d, m })
    }

    pub fn identity(d: usize) -> Self {
        Self { d, m: CMatrix::identity(d * d, d * d) }
    }

    pub fn zeros(d: usize) -> Self {
        Self { d, m: CMatrix::zeros(d * d, d * d) }
    }

    pub fn from_diagonal(d: usize, diag: &[C64]) -> Self {
        assert_eq!(diag.len(), d * d);
        Self { d, m: CMatrix::from_diagonal(&DVector::from_column_slice(diag)) }
    }

    /// Build from a row-major buffer of length `d^4`.
    pub fn from_row_major(d: usize, data: &[C64]) -> Self {
        let n = d * d;
        assert_eq!(data.len(), n * n);
        Self { d, m: CMatrix::from_row_slice(n, n, data) }
    }

    pub fn to_row_major(&self) -> Vec<C64> {
        let n = self.pair_dim();
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                out.push(self.m[(i, j)]);
            }
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn pair_dim(&self) -> usize {
        self.d * self.d
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.m[(i, j)]
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.pair_dim()).map(|i| self.m[(i, i)]).collect()
    }

    pub fn apply(&self, v: &DensityVector) -> DensityVector {
        &self.m * v
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { d: self.d, m: &self.m * C64::new(s, 0.0) }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { d: self.d, m: &self.m + &other.m }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { d: self.d, m: &self.m - &other.m }
    }

    pub fn norm(&self) -> f64 {
        linalg::operator_norm(&self.m)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        linalg::max_abs_diff(&self.m, &other.m)
    }

    pub fn inverse(&self) -> Result<Self> {
        Ok(Self { d: self.d, m: linalg::inverse(&self.m)? })
    }

    pub fn pow(&self, n: usize) -> Self {
        (0..n).fold(Self::identity(self.d), |acc, _| &acc * self)
    }
}

impl Mul for &LiouvilleMatrix {
    type Output = LiouvilleMatrix;
    fn mul(self, rhs: &LiouvilleMatrix) -> LiouvilleMatrix {
        LiouvilleMatrix { d: self.d, m: &self.m * &rhs.m }
    }
}

/// Pair index of `(x+, x-)`.
pub fn pair_index(plus: usize, minus: usize, d: usize) -> usize {
    plus * d + minus
}

pub fn density_to_vector(rho: &CMatrix) -> DensityVector {
    let d = rho.nrows();
    DVector::from_iterator(d * d, (0..d).flat_map(|i| (0..d).map(move |j| rho[(i, j)])))
}

pub fn vector_to_density(v: &DensityVector) -> CMatrix {
    let d = (v.len() as f64).sqrt().round() as usize;
    CMatrix::from_row_slice(d, d, v.as_slice())
}

/// Sum of the pair-diagonal entries.
pub fn trace_of(v: &DensityVector) -> C64 {
    let d = (v.len() as f64).sqrt().round() as usize;
    (0..d).map(|i| v[i * d + i]).sum()
}

/// Superoperator of `rho -> V rho V^dagger`.
pub fn conjugation_superoperator(v: &CMatrix) -> LiouvilleMatrix {
    LiouvilleMatrix { d: v.nrows(), m: v.kronecker(&v.map(|z| z.conj())) }
}

pub fn half_step_from_matrix(h: &CMatrix, dt: f64) -> Result<LiouvilleMatrix> {
    if !(dt > 0.0) {
        return Err(invalid(format!("time step must be positive, got {dt}")));
    }
    let defect = linalg::hermiticity_defect(h);
    if defect >= HERMITIAN_TOL {
        return Err(invalid(format!("Hamiltonian is not Hermitian (defect {defect:.3e})")));
    }
    Ok(conjugation_superoperator(&linalg::unitary_exp(h, 0.5 * dt)))
}

pub fn liouvillian_from_matrix(h: &CMatrix, dt: f64) -> Result<LiouvilleMatrix> {
    if !(dt > 0.0) {
        return Err(invalid(format!("time step must be positive, got {dt}")));
    }
    let d = h.nrows();
    let id = CMatrix::identity(d, d);
    let comm = h.kronecker(&id) - id.kronecker(&h.transpose());
    let n = d * d;
    Ok(LiouvilleMatrix { d, m: CMatrix::identity(n, n) - comm * C64::new(0.0, dt) })
}

/// Half-step system propagator `G` for a static Hamiltonian.
pub fn bare_half_step(h: &SystemHamiltonian, dt: f64) -> Result<LiouvilleMatrix> {
    if h.is_driven() {
        return Err(invalid("bare_half_step needs a static Hamiltonian; use the driven module"));
    }
    half_step_from_matrix(h.matrix(), dt)
}

/// Full-step propagator `F = G G`.
pub fn bare_full_step(g: &LiouvilleMatrix) -> LiouvilleMatrix {
    g * g
}

/// First-order step `L = 1 - i dt [H, .]`.
pub fn liouvillian_step(h: &SystemHamiltonian, dt: f64) -> Result<LiouvilleMatrix> {
    liouvillian_from_matrix(h.matrix(), dt)
}
