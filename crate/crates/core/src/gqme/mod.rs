//! Memory kernels of the discrete generalized master equation
//! `rho_N = L rho_{N-1} + dt^2 sum_{m=1}^N K_{N-m} rho_{m-1}`.

use crate::bath::InfluenceTable;
use crate::dyck::{self, ArcBlocks};
use crate::error::invalid;
use crate::linalg::{self, CMatrix};
use crate::pathsum::PropagatorSeries;
use crate::system::{density_to_vector, pauli, DensityVector, LiouvilleMatrix};
use crate::{Error, Result, C64};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelOrigin {
    DyckBuilt,
    TtmExtracted,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KernelSeries {
    pub dt: f64,
    /// `K_0 ..= K_r`.
    pub kernels: Vec<LiouvilleMatrix>,
    pub origin: KernelOrigin,
}

impl KernelSeries {
    pub fn max_order(&self) -> usize {
        self.kernels.len() - 1
    }

    pub fn norms(&self) -> Vec<f64> {
        self.kernels.iter().map(|k| k.norm()).collect()
    }
}

/// Per-order diagnostics of a diagrammatic build.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OrderReport {
    pub order: usize,
    pub terms: usize,
    pub kernel_norm: f64,
    /// Norm of the crest term alone, scaled like the kernel.
    pub crest_norm: f64,
}

fn dress(g: &LiouvilleMatrix, m: &[C64], scale: f64) -> LiouvilleMatrix {
    let inner = LiouvilleMatrix::from_row_major(g.dim(), m);
    (&(g * &inner) * g).scale(scale)
}

/// `K_0 = (G diag(I_0) G - L) / dt^2`.
pub fn kernel_zero(g: &LiouvilleMatrix, l: &LiouvilleMatrix, i0: &[C64], dt: f64) -> LiouvilleMatrix {
    let d = g.dim();
    let mid = LiouvilleMatrix::from_diagonal(d, i0);
    (&(g * &mid) * g).sub(l).scale(1.0 / (dt * dt))
}

pub fn build_kernels_dyck(
    g: &LiouvilleMatrix,
    f: &LiouvilleMatrix,
    l: &LiouvilleMatrix,
    table: &InfluenceTable,
    r_max: usize,
) -> Result<KernelSeries> {
    Ok(build_kernels_dyck_report(g, f, l, table, r_max)?.0)
}

/// Kernels `K_0 ..= K_r` summed over Dyck terms, with per-order diagnostics.
pub fn build_kernels_dyck_report(
    g: &LiouvilleMatrix,
    f: &LiouvilleMatrix,
    l: &LiouvilleMatrix,
    table: &InfluenceTable,
    r_max: usize,
) -> Result<(KernelSeries, Vec<OrderReport>)> {
    if r_max > table.k_max() {
        return Err(invalid(format!("order {r_max} exceeds influence table depth {}", table.k_max())));
    }
    if table.dim() != g.dim() {
        return Err(invalid("influence table and propagators disagree on dimension"));
    }
    let dt = table.dt;
    let scale = 1.0 / (dt * dt);
    let blocks = ArcBlocks::new(table, f, r_max);
    let sums: Vec<dyck::OrderSum> =
        (1..=r_max).into_par_iter().map(|order| dyck::sum_order(&blocks, order, true)).collect::<Result<_>>()?;
    let mut kernels = vec![kernel_zero(g, l, table.i0(), dt)];
    let mut reports = Vec::with_capacity(r_max);
    for s in &sums {
        let k = dress(g, &s.total, scale);
        let crest = dress(g, s.crest.as_ref().expect("crest included"), scale);
        reports.push(OrderReport { order: s.order, terms: s.terms, kernel_norm: k.norm(), crest_norm: crest.norm() });
        kernels.push(k);
    }
    Ok((KernelSeries { dt, kernels, origin: KernelOrigin::DyckBuilt }, reports))
}

/// Crest term alone at each order in `orders`, dressed like a kernel.
pub fn crest_kernels(
    g: &LiouvilleMatrix,
    f: &LiouvilleMatrix,
    table: &InfluenceTable,
    orders: std::ops::RangeInclusive<usize>,
) -> Result<Vec<LiouvilleMatrix>> {
    let dt = table.dt;
    let top = *orders.end();
    if top > table.k_max() {
        return Err(invalid(format!("order {top} exceeds influence table depth {}", table.k_max())));
    }
    let blocks = ArcBlocks::new(table, f, top);
    orders
        .map(|order| {
            let r = dyck::recipe_from_path(&dyck::DyckPath::crest(order));
            Ok(dress(g, &dyck::contract_recipe(&blocks, &r), 1.0 / (dt * dt)))
        })
        .collect()
}

/// Transfer-tensor recursion from a propagator series.
pub fn ttm_extract(u: &PropagatorSeries, l: &LiouvilleMatrix) -> KernelSeries {
    let dt = u.dt;
    let scale = 1.0 / (dt * dt);
    let mut kernels: Vec<LiouvilleMatrix> = Vec::with_capacity(u.n_max());
    for big_n in 1..=u.n_max() {
        let mut k = u.props[big_n].sub(&(l * &u.props[big_n - 1])).scale(scale);
        for m in 2..=big_n {
            k = k.sub(&(&kernels[big_n - m] * &u.props[m - 1]));
        }
        kernels.push(k);
    }
    KernelSeries { dt, kernels, origin: KernelOrigin::TtmExtracted }
}

/// The four reference initial states `(1+z)/2, (1-z)/2, (1+x)/2, (1+x+y+z)/2`.
pub fn reference_initial_states() -> Vec<DensityVector> {
    let half = C64::new(0.5, 0.0);
    [
        pauli::identity() + pauli::z(),
        pauli::identity() - pauli::z(),
        pauli::identity() + pauli::x(),
        pauli::identity() + pauli::x() + pauli::y() + pauli::z(),
    ]
    .into_iter()
    .map(|m| density_to_vector(&(m * half)))
    .collect()
}

/// Trajectories from linearly independent initial states.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryEnsemble {
    pub dt: f64,
    /// `series[i][t]` is trajectory `i` at step `t`; `series[i][0]` is its initial state.
    pub series: Vec<Vec<DensityVector>>,
}

impl TrajectoryEnsemble {
    pub fn from_propagators(u: &PropagatorSeries, initial: &[DensityVector]) -> Self {
        Self { dt: u.dt, series: initial.iter().map(|r| u.trajectory(r)).collect() }
    }

    pub fn steps(&self) -> usize {
        self.series.iter().map(|s| s.len()).min().unwrap_or(0).saturating_sub(1)
    }

    fn stack(&self, t: usize) -> CMatrix {
        let n = self.series[0][0].len();
        CMatrix::from_fn(n, self.series.len(), |r, c| self.series[c][t][r])
    }
}

/// `U_N = P_N P_0^+` with the singular values of `P_0`.
pub fn propagators_from_trajectories(ens: &TrajectoryEnsemble) -> Result<(PropagatorSeries, Vec<f64>)> {
    if ens.series.is_empty() {
        return Err(invalid("empty trajectory ensemble"));
    }
    let n = ens.series[0][0].len();
    if ens.series.iter().any(|s| s.iter().any(|v| v.len() != n)) {
        return Err(invalid("trajectories disagree on dimension"));
    }
    let p0 = ens.stack(0);
    let sv = linalg::singular_values(&p0);
    if ens.series.len() < n {
        return Err(Error::Conditioning { singular_values: sv });
    }
    let pinv = linalg::pseudo_inverse(&p0, 1e-10)?;
    let props = (0..=ens.steps()).map(|t| LiouvilleMatrix::new(ens.stack(t) * &pinv)).collect::<Result<Vec<_>>>()?;
    Ok((PropagatorSeries { dt: ens.dt, props }, sv))
}

/// Iterate the master equation with kernels beyond `r_trunc` dropped.
pub fn propagate_gqme(
    k: &KernelSeries,
    l: &LiouvilleMatrix,
    rho0: &DensityVector,
    n_steps: usize,
    r_trunc: usize,
) -> Result<Vec<DensityVector>> {
    propagate_gqme_padded(k, &[], l, rho0, n_steps, r_trunc)
}

/// As [`propagate_gqme`], with extra kernels for orders `r_trunc + 1 ..` (e.g. crest terms).
pub fn propagate_gqme_padded(
    k: &KernelSeries,
    padding: &[LiouvilleMatrix],
    l: &LiouvilleMatrix,
    rho0: &DensityVector,
    n_steps: usize,
    r_trunc: usize,
) -> Result<Vec<DensityVector>> {
    if r_trunc > k.max_order() {
        return Err(invalid(format!("truncation order {r_trunc} exceeds stored kernels {}", k.max_order())));
    }
    let dt2 = k.dt * k.dt;
    let used: Vec<&CMatrix> = k.kernels[..=r_trunc].iter().chain(padding).map(|m| m.matrix()).collect();
    let mut rho = vec![rho0.clone()];
    for big_n in 1..=n_steps {
        let mut next = l.apply(&rho[big_n - 1]);
        // K_{N-m} rho_{m-1} for every stored lag
        for (lag, km) in used.iter().enumerate().take(big_n) {
            next += (*km * &rho[big_n - 1 - lag]) * C64::new(dt2, 0.0);
        }
        rho.push(next);
    }
    Ok(rho)
}
