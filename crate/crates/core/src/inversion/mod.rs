//! The inverse chain: kernels -> influence functions -> eta -> spectral density.

mod pipeline;
mod spectrum;

pub use pipeline::{
    extract_from_propagators, extract_spectral_density, extract_with_known_bath, ExtractionReport, ExtractionRoute,
};

pub use spectrum::{
    cosine_coefficients, default_grid, dephasing_eta_from_propagators, dephasing_extract, forward_spectral_function,
    nodal_mask, spectral_density_from_dephasing, spectral_density_from_eta, spectral_function, SpectralSamples,
};

use crate::bath::{EtaTable, InfluenceTable};
use crate::dyck::{self, ArcBlocks, DyckPath};
use crate::error::invalid;
use crate::gqme::KernelSeries;
use crate::pathsum::{dressed_sums, PathSumLimits};
use crate::system::LiouvilleMatrix;
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug)]
pub struct InversionOptions {
    /// Orders up to this use explicit enumeration of the non-crest terms; above it the non-crest
    /// sum is resummed from path sums.
    pub recipe_max_order: usize,
    /// Crest denominators below this fraction of their largest entry are rejected.
    pub denominator_threshold: f64,
    /// Whether the system Hamiltonian is diagonal (pure dephasing).
    pub diagonal_hamiltonian: bool,
    pub limits: PathSumLimits,
}

impl Default for InversionOptions {
    fn default() -> Self {
        Self {
            recipe_max_order: 12,
            denominator_threshold: 1e-12,
            diagonal_hamiltonian: false,
            limits: PathSumLimits::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NonCrestRoute {
    Enumerated,
    Resummed,
}

#[derive(Clone, Debug)]
pub struct InversionStep {
    pub order: usize,
    /// `I_N - 1`, row-major `[later][earlier]`.
    pub tilde: Vec<C64>,
    pub route: NonCrestRoute,
    /// Non-crest terms summed explicitly (zero on the resummed route).
    pub noncrest_terms: usize,
    /// Smallest crest-denominator magnitude relative to its largest.
    pub denominator_ratio: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OrderResidual {
    pub order: usize,
    /// Largest violation of the pair-swap conjugation symmetry of the recovered block.
    pub symmetry: f64,
    /// Largest `|I - 1|` on rows whose forward and backward coupling values agree.
    pub null_rows: f64,
    pub denominator_ratio: f64,
}

fn to_row_major(m: &LiouvilleMatrix) -> Vec<C64> {
    m.to_row_major()
}

/// `I_0` as the diagonal of `G^-1 (dt^2 K_0 + L) G^-1`, and the largest off-diagonal entry.
pub fn invert_i0(k0: &LiouvilleMatrix, g: &LiouvilleMatrix, l: &LiouvilleMatrix, dt: f64) -> Result<(Vec<C64>, f64)> {
    let gi = g.inverse()?;
    let m = &(&gi * &k0.scale(dt * dt).add(l)) * &gi;
    let n = m.pair_dim();
    let mut off = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                off = off.max(m.get(i, j).norm());
            }
        }
    }
    Ok((m.diagonal(), off))
}

/// `dt^2 G^-1 K_N G^-1`, the bare term sum of order `N`.
fn undressed(k: &LiouvilleMatrix, gi: &LiouvilleMatrix, dt: f64) -> Vec<C64> {
    to_row_major(&(&(gi * k) * gi).scale(dt * dt))
}

fn matmul(n: usize, a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = vec![C64::default(); n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == C64::default() {
                continue;
            }
            for j in 0..n {
                out[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    out
}

/// Recover `I_N` from `K_N` given `I_0 ..= I_{N-1}` in `partial`.
pub fn invert_i_general(
    k: &KernelSeries,
    g: &LiouvilleMatrix,
    f: &LiouvilleMatrix,
    partial: &InfluenceTable,
    order: usize,
    opts: &InversionOptions,
) -> Result<InversionStep> {
    if order == 0 || order > k.max_order() {
        return Err(invalid(format!("cannot invert order {order} from kernels up to {}", k.max_order())));
    }
    if partial.k_max() + 1 < order {
        return Err(invalid(format!("order {order} needs influence lags up to {}", order - 1)));
    }
    let partial = partial.truncated(order - 1);
    let n = partial.pair_dim();
    let gi = g.inverse()?;
    let data = undressed(&k.kernels[order], &gi, k.dt);
    let (noncrest, denom, route, terms) = if order <= opts.recipe_max_order {
        let blocks = ArcBlocks::new(&partial, f, order);
        let s = dyck::sum_order(&blocks, order, false)?;
        // the crest term with its dashed arc removed
        let crest = dyck::recipe_from_path(&DyckPath::crest(order));
        let arcs: Vec<(usize, usize, &[C64])> =
            crest.solid.iter().map(|a| (a.start, a.end, blocks.solid[a.lag() - 1].as_slice())).collect();
        let denom = dyck::contract_arcs(n, order, &blocks.i0, &blocks.links, &arcs);
        (s.total, denom, NonCrestRoute::Enumerated, s.terms)
    } else {
        let (noncrest, denom) = resummed_noncrest(&partial, f, order, &opts.limits)?;
        (noncrest, denom, NonCrestRoute::Resummed, 0)
    };
    let dmax = denom.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let dmin = denom.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
    let ratio = if dmax > 0.0 { dmin / dmax } else { 0.0 };
    if !(ratio >= opts.denominator_threshold) {
        if opts.diagonal_hamiltonian {
            return Err(Error::Numerical(format!(
                "crest denominator vanishes at order {order} for a diagonal Hamiltonian; use the dephasing extraction"
            )));
        }
        return Err(Error::Numerical(format!(
            "crest denominator at order {order} falls to {ratio:.3e} of its maximum; kernel input is inconsistent"
        )));
    }
    let tilde = data.iter().zip(&noncrest).zip(&denom).map(|((m, nc), b)| (m - nc) / b).collect();
    Ok(InversionStep { order, tilde, route, noncrest_terms: terms, denominator_ratio: ratio })
}

/// Non-crest sum and crest denominator of order `N` from path sums.
///
/// The denominator is the path sum over `N + 1` points with the end-to-end factor dropped. Term
/// sums of lower orders follow from the cumulant recursion `Ũ_n = M_n + sum_k M_k F Ũ_{n-1-k}`,
/// and the non-crest sum is the denominator minus its disconnected part.
fn resummed_noncrest(
    partial: &InfluenceTable,
    f: &LiouvilleMatrix,
    order: usize,
    limits: &PathSumLimits,
) -> Result<(Vec<C64>, Vec<C64>)> {
    let n = partial.pair_dim();
    let mut table = partial.clone();
    table.push_lag(vec![C64::new(1.0, 0.0); n * n]);
    let fr = f.to_row_major();
    let links = vec![fr.clone(); order];
    let sums = dressed_sums(&links, &table, order + 1, limits)?;
    let mut m: Vec<Vec<C64>> = Vec::with_capacity(order);
    for t in 0..order {
        let mut mt = sums[t].clone();
        for kk in 0..t {
            let prod = matmul(n, &matmul(n, &m[kk], &fr), &sums[t - 1 - kk]);
            for (a, b) in mt.iter_mut().zip(&prod) {
                *a -= b;
            }
        }
        m.push(mt);
    }
    let denom = sums[order].clone();
    let mut noncrest = denom.clone();
    for kk in 0..order {
        let prod = matmul(n, &matmul(n, &m[kk], &fr), &sums[order - 1 - kk]);
        for (a, b) in noncrest.iter_mut().zip(&prod) {
            *a -= b;
        }
    }
    Ok((noncrest, denom))
}

fn residual(table: &InfluenceTable, order: usize, ratio: f64) -> OrderResidual {
    let d = table.dim();
    let n = d * d;
    let eig = &table.eigenvalues;
    let swap = |x: usize| (x % d) * d + x / d;
    let mut symmetry = 0.0f64;
    let mut null_rows = 0.0f64;
    for x in 0..n {
        for y in 0..n {
            let v = table.get(order, x, y);
            symmetry = symmetry.max((v - table.get(order, swap(x), swap(y)).conj()).norm());
            if eig[x / d] == eig[x % d] {
                null_rows = null_rows.max((v - 1.0).norm());
            }
        }
    }
    OrderResidual { order, symmetry, null_rows, denominator_ratio: ratio }
}

/// Recovered influence table with per-order diagnostics.
#[derive(Clone, Debug)]
pub struct InfluenceRecovery {
    pub table: InfluenceTable,
    pub i0_offdiagonal: f64,
    pub residuals: Vec<OrderResidual>,
    pub steps: Vec<InversionStep>,
}

/// Invert kernels `K_0 ..= K_{n_max}` into `I_0 ..= I_{n_max}`.
pub fn invert_influence_series(
    k: &KernelSeries,
    g: &LiouvilleMatrix,
    f: &LiouvilleMatrix,
    l: &LiouvilleMatrix,
    eigenvalues: &[f64],
    n_max: usize,
    opts: &InversionOptions,
) -> Result<InfluenceRecovery> {
    if n_max > k.max_order() {
        return Err(invalid(format!("requested order {n_max} exceeds kernels up to {}", k.max_order())));
    }
    let (i0, off) = invert_i0(&k.kernels[0], g, l, k.dt)?;
    let mut table = InfluenceTable::from_parts(k.dt, eigenvalues.to_vec(), i0, Vec::new())?;
    let mut residuals = Vec::with_capacity(n_max);
    let mut steps = Vec::with_capacity(n_max);
    for order in 1..=n_max {
        let step = invert_i_general(k, g, f, &table, order, opts)?;
        table.push_lag(step.tilde.iter().map(|v| v + 1.0).collect());
        residuals.push(residual(&table, order, step.denominator_ratio));
        steps.push(step);
    }
    Ok(InfluenceRecovery { table, i0_offdiagonal: off, residuals, steps })
}

/// Least-squares `eta` from the logarithms of the influence entries.
///
/// With `d = s+ - s-` and `z = s+ + s-`, `ln I_k[x, y] = -d_x (Re eta d_y + i Im eta z_y)`.
///
/// Components that no entry constrains are returned as zero; `Im eta_0` is one of them whenever
/// the coupling spectrum is symmetric.
pub fn eta_from_influence(table: &InfluenceTable, eigenvalues: &[f64]) -> Result<EtaTable> {
    let dim = eigenvalues.len();
    if dim != table.dim() {
        return Err(invalid("eigenvalue list does not match the influence table"));
    }
    let distinct = eigenvalues.iter().any(|&s| s != eigenvalues[0]);
    if !distinct {
        return Err(invalid("coupling operator needs at least two distinct eigenvalues"));
    }
    let pairs: Vec<(f64, f64)> = eigenvalues.iter().flat_map(|&p| eigenvalues.iter().map(move |&m| (p, m))).collect();
    let fit = |entries: &mut dyn Iterator<Item = (usize, usize, C64)>| -> Result<C64> {
        let (mut num_re, mut den_re, mut num_im, mut den_im) = (0.0, 0.0, 0.0, 0.0);
        for (x, y, v) in entries {
            let (a, b) = (pairs[x], pairs[y]);
            let wr = (a.0 - a.1) * (b.0 - b.1);
            let wi = (a.0 - a.1) * (b.0 + b.1);
            if wr == 0.0 && wi == 0.0 {
                continue;
            }
            if !(v.norm() > 0.0) || !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::Data(format!("influence entry {v} has no logarithm")));
            }
            let ln = v.ln();
            num_re -= wr * ln.re;
            den_re += wr * wr;
            num_im -= wi * ln.im;
            den_im += wi * wi;
        }
        let re = if den_re > 0.0 { num_re / den_re } else { 0.0 };
        let im = if den_im > 0.0 { num_im / den_im } else { 0.0 };
        Ok(C64::new(re, im))
    };
    let n = pairs.len();
    let i0 = table.i0();
    let mut values = vec![fit(&mut (0..n).map(|x| (x, x, i0[x])))?];
    for k in 1..=table.k_max() {
        let blk = table.lag(k);
        values.push(fit(&mut (0..n * n).map(|i| (i / n, i % n, blk[i])))?);
    }
    Ok(EtaTable::new(table.dt, values))
}

/// Peel a known bath off a combined influence table.
pub fn divide_known_bath(total: &InfluenceTable, known: &InfluenceTable) -> Result<InfluenceTable> {
    total.divide(known)
}
