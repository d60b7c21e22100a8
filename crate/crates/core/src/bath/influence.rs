use super::eta::EtaTable;
use crate::error::invalid;
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};

/// Influence functions `I_k[x, y]` on pair indices, `x` the later point.
///
/// `I_0` lives on a single pair index. Lags `1..=k_max` are dense `d^2 x d^2` blocks stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfluenceTable {
    pub dt: f64,
    pub eigenvalues: Vec<f64>,
    i0: Vec<C64>,
    lags: Vec<Vec<C64>>,
}

fn pair_eigs(eigs: &[f64]) -> Vec<(f64, f64)> {
    eigs.iter().flat_map(|&p| eigs.iter().map(move |&m| (p, m))).collect()
}

impl InfluenceTable {
    /// Table with every factor equal to one.
    pub fn unit(dt: f64, eigenvalues: Vec<f64>, k_max: usize) -> Self {
        let n = eigenvalues.len().pow(2);
        Self { dt, eigenvalues, i0: vec![C64::new(1.0, 0.0); n], lags: vec![vec![C64::new(1.0, 0.0); n * n]; k_max] }
    }

    pub fn from_parts(dt: f64, eigenvalues: Vec<f64>, i0: Vec<C64>, lags: Vec<Vec<C64>>) -> Result<Self> {
        let n = eigenvalues.len().pow(2);
        if i0.len() != n || lags.iter().any(|l| l.len() != n * n) {
            return Err(invalid("influence table blocks do not match the pair dimension"));
        }
        Ok(Self { dt, eigenvalues, i0, lags })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn pair_dim(&self) -> usize {
        self.dim() * self.dim()
    }

    pub fn k_max(&self) -> usize {
        self.lags.len()
    }

    pub fn i0(&self) -> &[C64] {
        &self.i0
    }

    pub fn set_i0(&mut self, i0: Vec<C64>) {
        assert_eq!(i0.len(), self.pair_dim());
        self.i0 = i0;
    }

    /// Row-major block of `I_k`, `k >= 1`.
    pub fn lag(&self, k: usize) -> &[C64] {
        &self.lags[k - 1]
    }

    pub fn get(&self, k: usize, later: usize, earlier: usize) -> C64 {
        self.lags[k - 1][later * self.pair_dim() + earlier]
    }

    pub fn tilde(&self, k: usize, later: usize, earlier: usize) -> C64 {
        self.get(k, later, earlier) - 1.0
    }

    /// `I_k - 1` as a row-major block.
    pub fn tilde_block(&self, k: usize) -> Vec<C64> {
        self.lag(k).iter().map(|v| v - 1.0).collect()
    }

    pub fn push_lag(&mut self, block: Vec<C64>) {
        assert_eq!(block.len(), self.pair_dim().pow(2));
        self.lags.push(block);
    }

    pub fn set_lag(&mut self, k: usize, block: Vec<C64>) {
        assert_eq!(block.len(), self.pair_dim().pow(2));
        self.lags[k - 1] = block;
    }

    /// Copy keeping lags `1..=k_max` only.
    pub fn truncated(&self, k_max: usize) -> Self {
        let mut t = self.clone();
        t.lags.truncate(k_max);
        t
    }

    /// Operator 2-norm of `I_k - 1`.
    pub fn tilde_norm(&self, k: usize) -> f64 {
        let n = self.pair_dim();
        let m = crate::linalg::CMatrix::from_row_slice(n, n, &self.tilde_block(k));
        crate::linalg::operator_norm(&m)
    }

    /// Elementwise quotient `self / known`, used to peel off a known bath.
    pub fn divide(&self, known: &Self) -> Result<Self> {
        if self.eigenvalues != known.eigenvalues || self.k_max() != known.k_max() {
            return Err(invalid("influence tables differ in shape"));
        }
        if (self.dt - known.dt).abs() > 1e-14 * self.dt.abs() {
            return Err(invalid("influence tables differ in time step"));
        }
        let div = |a: &C64, b: &C64| -> Result<C64> {
            if b.norm() < 1e-300 {
                return Err(Error::Data(format!("division by vanishing influence entry {b}")));
            }
            Ok(a / b)
        };
        let i0 = self.i0.iter().zip(&known.i0).map(|(a, b)| div(a, b)).collect::<Result<_>>()?;
        let lags = self
            .lags
            .iter()
            .zip(&known.lags)
            .map(|(la, lb)| la.iter().zip(lb).map(|(a, b)| div(a, b)).collect::<Result<Vec<_>>>())
            .collect::<Result<_>>()?;
        Ok(Self { dt: self.dt, eigenvalues: self.eigenvalues.clone(), i0, lags })
    }

    /// Elementwise product, the table of two independent baths acting together.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        if self.eigenvalues != other.eigenvalues || self.k_max() != other.k_max() {
            return Err(invalid("influence tables differ in shape"));
        }
        let i0 = self.i0.iter().zip(&other.i0).map(|(a, b)| a * b).collect();
        let lags =
            self.lags.iter().zip(&other.lags).map(|(la, lb)| la.iter().zip(lb).map(|(a, b)| a * b).collect()).collect();
        Ok(Self { dt: self.dt, eigenvalues: self.eigenvalues.clone(), i0, lags })
    }
}

/// `exp(-(s_a+ - s_a-)(eta s_b+ - conj(eta) s_b-))`, `a` later, `b` earlier.
pub fn influence_factor(eta: C64, later: (f64, f64), earlier: (f64, f64)) -> C64 {
    (-(later.0 - later.1) * (eta * earlier.0 - eta.conj() * earlier.1)).exp()
}

/// Build `I_0..=I_{k_max}` from `eta` for a coupling operator with the given eigenvalues.
pub fn influence_table(eta: &EtaTable, eigenvalues: &[f64], k_max: usize) -> Result<InfluenceTable> {
    if k_max > eta.k_max() {
        return Err(invalid(format!("k_max {k_max} exceeds eta table depth {}", eta.k_max())));
    }
    if eigenvalues.is_empty() {
        return Err(invalid("coupling operator has no eigenvalues"));
    }
    let pairs = pair_eigs(eigenvalues);
    let i0 = pairs.iter().map(|&x| influence_factor(eta.values[0], x, x)).collect();
    let lags = (1..=k_max)
        .map(|k| {
            let e = eta.values[k];
            pairs.iter().flat_map(|&x| pairs.iter().map(move |&y| influence_factor(e, x, y))).collect()
        })
        .collect();
    Ok(InfluenceTable { dt: eta.dt, eigenvalues: eigenvalues.to_vec(), i0, lags })
}
