//! Influence-functional path sums: exact full-memory summation and the sliding-window
//! (memory-truncated) iteration.
//!
//! Environment points sit between half steps: point `k` is preceded by `G_{2k}` and followed by
//! `G_{2k+1}`, so consecutive points are joined by `G_{2k+2} G_{2k+1}` and a static
//! Hamiltonian gives `U_N = G Ũ_{N-1} G` with `Ũ` the dressed sum over `N` points.

use crate::bath::InfluenceTable;
use crate::error::invalid;
use crate::system::{DensityVector, LiouvilleMatrix};
use crate::{Error, Result, C64};
use rayon::prelude::*;

#[derive(Clone, Debug, PartialEq)]
pub struct PropagatorSeries {
    pub dt: f64,
    /// `U_0 ..= U_Nmax`, `U_0` the identity.
    pub props: Vec<LiouvilleMatrix>,
}

impl PropagatorSeries {
    pub fn n_max(&self) -> usize {
        self.props.len() - 1
    }

    /// Apply every `U_N` to `rho0`.
    pub fn trajectory(&self, rho0: &DensityVector) -> Vec<DensityVector> {
        self.props.iter().map(|u| u.apply(rho0)).collect()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct PathSumLimits {
    /// Upper bound on summed paths per series (`d^(2 N_points)` leaves).
    pub max_paths: f64,
    /// Upper bound on entries of the sliding-window tensor.
    pub max_window_entries: usize,
}

impl Default for PathSumLimits {
    fn default() -> Self {
        Self { max_paths: 2f64.powi(36), max_window_entries: 1 << 26 }
    }
}

/// Half-step propagators `G_0, G_1, ...` of a (possibly driven) system.
#[derive(Clone, Debug)]
pub enum Schedule {
    Static { g: LiouvilleMatrix, f: LiouvilleMatrix },
    Driven { half_steps: Vec<LiouvilleMatrix> },
}

impl Schedule {
    pub fn static_steps(g: &LiouvilleMatrix) -> Self {
        Self::Static { g: g.clone(), f: g * g }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Static { g, .. } => g.dim(),
            Self::Driven { half_steps } => half_steps[0].dim(),
        }
    }

    pub fn half(&self, m: usize) -> LiouvilleMatrix {
        match self {
            Self::Static { g, .. } => g.clone(),
            Self::Driven { half_steps } => half_steps[m].clone(),
        }
    }

    /// Link from point `k` to point `k + 1`: `G_{2k+2} G_{2k+1}`.
    pub fn link(&self, k: usize) -> LiouvilleMatrix {
        match self {
            Self::Static { f, .. } => f.clone(),
            Self::Driven { half_steps } => &half_steps[2 * k + 2] * &half_steps[2 * k + 1],
        }
    }

    /// Number of whole steps covered, if bounded.
    pub fn horizon(&self) -> Option<usize> {
        match self {
            Self::Static { .. } => None,
            Self::Driven { half_steps } => Some(half_steps.len() / 2),
        }
    }
}

fn check_table(table: &InfluenceTable, d: usize, need: usize) -> Result<()> {
    if table.dim() != d {
        return Err(invalid(format!("influence table is {}-level, system is {d}-level", table.dim())));
    }
    if table.k_max() < need {
        return Err(invalid(format!("path sum needs influence lags up to {need}, table holds {}", table.k_max())));
    }
    Ok(())
}

/// Dressed sums `Ũ_0 ..= Ũ_{P-1}` over `P` consecutive points with every pairwise factor.
///
/// `links[t]` joins point `t` to point `t + 1` (rows: later point). Each result is a row-major
/// `n x n` block indexed `[x_latest][x_first]`.
pub fn dressed_sums(
    links: &[Vec<C64>],
    table: &InfluenceTable,
    points: usize,
    limits: &PathSumLimits,
) -> Result<Vec<Vec<C64>>> {
    let n = table.pair_dim();
    if points == 0 {
        return Ok(Vec::new());
    }
    if links.len() + 1 < points {
        return Err(invalid("not enough propagator links for the requested points"));
    }
    check_table(table, table.dim(), points - 1)?;
    let zero = C64::default();
    let branching =
        |link: &[C64]| (0..n).map(|x| (0..n).filter(|&v| link[v * n + x] != zero).count()).max().unwrap_or(0);
    let leaves = links[..points - 1].iter().fold(n as f64, |acc, l| acc * branching(l) as f64);
    if leaves > limits.max_paths {
        return Err(Error::Resource(format!(
            "exact path sum over {points} points needs {leaves:.3e} paths (limit {:.3e}); use iterative_quapi",
            limits.max_paths
        )));
    }
    let lags: Vec<&[C64]> = (1..points).map(|k| table.lag(k)).collect();
    let per_root: Vec<Vec<Vec<C64>>> = (0..n)
        .into_par_iter()
        .map(|x0| {
            let mut acc = vec![vec![C64::default(); n]; points];
            let mut dfs = Dfs {
                n,
                points,
                links,
                i0: table.i0(),
                lags: &lags,
                acc: &mut acc,
                e: vec![vec![C64::default(); points * n]; points],
            };
            dfs.root(x0);
            acc
        })
        .collect();
    let mut out = vec![vec![C64::default(); n * n]; points];
    for (x0, acc) in per_root.iter().enumerate() {
        for (t, col) in acc.iter().enumerate() {
            for (v, val) in col.iter().enumerate() {
                out[t][v * n + x0] = *val;
            }
        }
    }
    Ok(out)
}

struct Dfs<'a> {
    n: usize,
    points: usize,
    links: &'a [Vec<C64>],
    i0: &'a [C64],
    lags: &'a [&'a [C64]],
    /// `acc[t][v]`: sum of weights of paths ending with `x_t = v`.
    acc: &'a mut Vec<Vec<C64>>,
    /// `e[t][b * n + u]`: product of arcs from points `0..=t` to a future point `b` taking value `u`.
    e: Vec<Vec<C64>>,
}

impl Dfs<'_> {
    fn root(&mut self, x0: usize) {
        let n = self.n;
        let w = self.i0[x0];
        self.acc[0][x0] += w;
        if self.points == 1 {
            return;
        }
        for b in 1..self.points {
            let lag = self.lags[b - 1];
            for u in 0..n {
                self.e[0][b * n + u] = lag[u * n + x0];
            }
        }
        self.descend(0, x0, w);
    }

    fn descend(&mut self, t: usize, xt: usize, w: C64) {
        let n = self.n;
        let c = t + 1;
        let link = &self.links[t];
        let last = c + 1 == self.points;
        for v in 0..n {
            let wv = w * link[v * n + xt] * self.i0[v] * self.e[t][c * n + v];
            if wv == C64::default() {
                continue;
            }
            self.acc[c][v] += wv;
            if last {
                continue;
            }
            let (lo, hi) = self.e.split_at_mut(c);
            let (prev, next) = (&lo[t], &mut hi[0]);
            for b in (c + 1)..self.points {
                let lag = self.lags[b - c - 1];
                for u in 0..n {
                    next[b * n + u] = prev[b * n + u] * lag[u * n + v];
                }
            }
            self.descend(c, v, wv);
        }
    }
}

fn dress(g_left: &LiouvilleMatrix, m: &[C64], g_right: &LiouvilleMatrix) -> LiouvilleMatrix {
    let d = g_left.dim();
    let inner = LiouvilleMatrix::from_row_major(d, m);
    &(g_left * &inner) * g_right
}

/// `U_0 ..= U_Nmax` by exact summation over every path.
pub fn exact_propagators(
    g: &LiouvilleMatrix,
    f: &LiouvilleMatrix,
    table: &InfluenceTable,
    n_max: usize,
) -> Result<PropagatorSeries> {
    exact_propagators_with(g, f, table, n_max, &PathSumLimits::default())
}

pub fn exact_propagators_with(
    g: &LiouvilleMatrix,
    f: &LiouvilleMatrix,
    table: &InfluenceTable,
    n_max: usize,
    limits: &PathSumLimits,
) -> Result<PropagatorSeries> {
    let d = g.dim();
    check_table(table, d, n_max.saturating_sub(1))?;
    let links = vec![f.to_row_major(); n_max.saturating_sub(1)];
    let sums = dressed_sums(&links, table, n_max, limits)?;
    let mut props = vec![LiouvilleMatrix::identity(d)];
    props.extend(sums.iter().map(|m| dress(g, m, g)));
    Ok(PropagatorSeries { dt: table.dt, props })
}

/// Two-time propagators `U_{s+N, s}` for `N = 0..=n_max` under a schedule.
pub fn exact_two_time(
    schedule: &Schedule,
    table: &InfluenceTable,
    start: usize,
    n_max: usize,
    limits: &PathSumLimits,
) -> Result<Vec<LiouvilleMatrix>> {
    let d = schedule.dim();
    check_table(table, d, n_max.saturating_sub(1))?;
    let links: Vec<Vec<C64>> = (0..n_max.saturating_sub(1)).map(|k| schedule.link(start + k).to_row_major()).collect();
    let sums = dressed_sums(&links, table, n_max, limits)?;
    let mut out = vec![LiouvilleMatrix::identity(d)];
    for (t, m) in sums.iter().enumerate() {
        let last = start + t;
        out.push(dress(&schedule.half(2 * last + 1), m, &schedule.half(2 * start)));
    }
    Ok(out)
}

/// Sliding-window propagation of one augmented amplitude tensor.
struct Window<'a> {
    n: usize,
    k_max: usize,
    table: &'a InfluenceTable,
    /// Number of tracked points.
    len: usize,
    data: Vec<C64>,
    /// Index of the newest tracked point.
    newest: usize,
}

impl<'a> Window<'a> {
    fn new(table: &'a InfluenceTable, k_max: usize, start: &[C64]) -> Self {
        let n = table.pair_dim();
        let data = start.iter().zip(table.i0()).map(|(a, b)| a * b).collect();
        Self { n, k_max, table, len: 1, data, newest: 0 }
    }

    /// Sum over all but the newest point.
    fn reduced(&self) -> Vec<C64> {
        let n = self.n;
        let mut out = vec![C64::default(); n];
        for chunk in self.data.chunks(n) {
            for (o, v) in out.iter_mut().zip(chunk) {
                *o += v;
            }
        }
        out
    }

    /// Product over tracked digits `digits` (oldest first, `len` of them) of arcs to a new point.
    fn arc_table(&self, digits: usize, offset: usize) -> Vec<C64> {
        // slot s of this block sits `offset + digits - 1 - s` points behind the newest tracked one
        let n = self.n;
        let size = n.pow(digits as u32);
        let mut out = vec![C64::new(1.0, 0.0); size * n];
        for idx in 0..size {
            let mut rest = idx;
            for s in (0..digits).rev() {
                let x = rest % n;
                rest /= n;
                let lag = offset + digits - s;
                if lag <= self.k_max {
                    let blk = self.table.lag(lag);
                    for v in 0..n {
                        out[idx * n + v] *= blk[v * n + x];
                    }
                }
            }
        }
        out
    }

    fn push(&mut self, link: &[C64], keep: usize) {
        let n = self.n;
        let len = self.len;
        // split tracked digits into an older block and a newer one
        let lo_digits = len / 2 + len % 2;
        let hi_digits = len - lo_digits;
        let hi_tab = self.arc_table(hi_digits, lo_digits);
        let mut lo_tab = self.arc_table(lo_digits, 0);
        let i0 = self.table.i0();
        let lo_size = n.pow(lo_digits as u32);
        for idx in 0..lo_size {
            let xt = idx % n;
            for v in 0..n {
                lo_tab[idx * n + v] *= link[v * n + xt] * i0[v];
            }
        }
        let drop = len + 1 > keep;
        let new_len = if drop { len } else { len + 1 };
        let mut out = vec![C64::default(); n.pow(new_len as u32)];
        let modulus = if drop { n.pow(len as u32 - 1) } else { usize::MAX };
        for (idx, &val) in self.data.iter().enumerate() {
            if val == C64::default() {
                continue;
            }
            let hi = idx / lo_size;
            let lo = idx % lo_size;
            let target = if drop { (idx % modulus) * n } else { idx * n };
            let h = &hi_tab[hi * n..hi * n + n];
            let l = &lo_tab[lo * n..lo * n + n];
            let dst = &mut out[target..target + n];
            for v in 0..n {
                dst[v] += val * h[v] * l[v];
            }
        }
        self.data = out;
        self.len = new_len;
        self.newest += 1;
    }
}

fn window_keep(k_max: usize) -> usize {
    k_max.max(1)
}

fn check_window(n: usize, k_max: usize, limits: &PathSumLimits) -> Result<()> {
    let entries = (n as f64).powi(window_keep(k_max) as i32 + 1);
    if entries > limits.max_window_entries as f64 {
        return Err(Error::Resource(format!(
            "memory window of {k_max} steps needs {entries:.3e} amplitudes (limit {})",
            limits.max_window_entries
        )));
    }
    Ok(())
}

/// Propagators with influence factors beyond lag `k_max` set to one.
pub fn iterative_quapi(
    g: &LiouvilleMatrix,
    f: &LiouvilleMatrix,
    table: &InfluenceTable,
    k_max: usize,
    n_max: usize,
) -> Result<PropagatorSeries> {
    let d = g.dim();
    let n = d * d;
    let k_eff = k_max.min(n_max.saturating_sub(1));
    check_table(table, d, k_eff)?;
    check_window(n, k_eff, &PathSumLimits::default())?;
    let link = f.to_row_major();
    let columns: Vec<Vec<Vec<C64>>> = (0..n)
        .into_par_iter()
        .map(|x0| {
            let mut e = vec![C64::default(); n];
            e[x0] = C64::new(1.0, 0.0);
            let mut w = Window::new(table, k_eff, &e);
            let mut cols = Vec::with_capacity(n_max);
            if n_max >= 1 {
                cols.push(w.reduced());
            }
            for _ in 1..n_max {
                w.push(&link, window_keep(k_eff));
                cols.push(w.reduced());
            }
            cols
        })
        .collect();
    let mut props = vec![LiouvilleMatrix::identity(d)];
    for t in 0..n_max {
        let mut m = vec![C64::default(); n * n];
        for (x0, cols) in columns.iter().enumerate() {
            for v in 0..n {
                m[v * n + x0] = cols[t][v];
            }
        }
        props.push(dress(g, &m, g));
    }
    Ok(PropagatorSeries { dt: table.dt, props })
}

/// Density trajectory `rho_0 ..= rho_N` under a schedule with memory truncated at `k_max`.
pub fn quapi_trajectory(
    schedule: &Schedule,
    table: &InfluenceTable,
    k_max: usize,
    rho0: &DensityVector,
    n_steps: usize,
) -> Result<Vec<DensityVector>> {
    let d = schedule.dim();
    let n = d * d;
    if rho0.len() != n {
        return Err(invalid("initial density has the wrong dimension"));
    }
    if let Some(h) = schedule.horizon() {
        if h < n_steps {
            return Err(invalid(format!("schedule covers {h} steps, {n_steps} requested")));
        }
    }
    let k_eff = k_max.min(n_steps.saturating_sub(1));
    check_table(table, d, k_eff)?;
    check_window(n, k_eff, &PathSumLimits::default())?;
    let mut out = vec![rho0.clone()];
    if n_steps == 0 {
        return Ok(out);
    }
    let start = schedule.half(0).apply(rho0);
    let mut w = Window::new(table, k_eff, start.as_slice());
    for t in 0..n_steps {
        if t > 0 {
            w.push(&schedule.link(t - 1).to_row_major(), window_keep(k_eff));
        }
        let r = DensityVector::from_vec(w.reduced());
        out.push(schedule.half(2 * t + 1).apply(&r));
    }
    Ok(out)
}
