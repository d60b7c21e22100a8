//! Time-dependent system Hamiltonians: two-time kernels from bath-only tensors and driven
//! propagation.

use crate::bath::InfluenceTable;
use crate::dyck::{build_t_tensor, TTensor};
use crate::error::invalid;
use crate::linalg::CMatrix;
use crate::pathsum::Schedule;
use crate::system::{
    half_step_from_matrix, liouvillian_from_matrix, pauli, DensityVector, LiouvilleMatrix, SystemHamiltonian,
};
use crate::{Error, Result, C64};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PauliChannel {
    I,
    X,
    Y,
    Z,
}

impl PauliChannel {
    pub fn matrix(self) -> CMatrix {
        match self {
            Self::I => pauli::identity(),
            Self::X => pauli::x(),
            Self::Y => pauli::y(),
            Self::Z => pauli::z(),
        }
    }
}

/// `amplitude * sin(frequency * t + phase)` on one Pauli channel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Waveform {
    pub channel: PauliChannel,
    pub amplitude: f64,
    pub frequency: f64,
    #[serde(default)]
    pub phase: f64,
}

/// Time dependence added to a static Hamiltonian.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DriveProfile {
    /// Sine waveforms added to the static two-level Hamiltonian.
    Sine { waveforms: Vec<Waveform> },
    /// Full Hamiltonians sampled at increasing times, interpolated linearly and held constant
    /// beyond the sampled range. Each sample is row-major.
    Tabulated { times: Vec<f64>, hamiltonians: Vec<Vec<C64>> },
}

impl DriveProfile {
    pub fn validate(&self, d: usize) -> Result<()> {
        match self {
            Self::Sine { waveforms } => {
                if d != 2 && !waveforms.is_empty() {
                    return Err(invalid("Pauli waveforms need a two-level system"));
                }
                if waveforms
                    .iter()
                    .any(|w| !(w.amplitude.is_finite() && w.frequency.is_finite() && w.phase.is_finite()))
                {
                    return Err(invalid("waveform parameters must be finite"));
                }
            }
            Self::Tabulated { times, hamiltonians } => {
                if times.is_empty() || times.len() != hamiltonians.len() {
                    return Err(invalid("tabulated drive needs one Hamiltonian per sample time"));
                }
                if times.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(invalid("tabulated drive times must increase strictly"));
                }
                for (t, h) in times.iter().zip(hamiltonians) {
                    if h.len() != d * d {
                        return Err(invalid(format!("tabulated Hamiltonian at t = {t} has {} entries", h.len())));
                    }
                }
            }
        }
        Ok(())
    }

    /// Attach this drive to a static Hamiltonian.
    pub fn apply(&self, base: &SystemHamiltonian) -> Result<SystemHamiltonian> {
        let d = base.dim();
        self.validate(d)?;
        let f: crate::system::HamiltonianFn = match self.clone() {
            Self::Sine { waveforms } => {
                let h0 = base.matrix().clone();
                let terms: Vec<(Waveform, CMatrix)> = waveforms.iter().map(|w| (*w, w.channel.matrix())).collect();
                Arc::new(move |t| {
                    let mut h = h0.clone();
                    for (w, m) in &terms {
                        h += m * C64::new(w.amplitude * (w.frequency * t + w.phase).sin(), 0.0);
                    }
                    h
                })
            }
            Self::Tabulated { times, hamiltonians } => {
                let mats: Vec<CMatrix> = hamiltonians.iter().map(|h| CMatrix::from_row_slice(d, d, h)).collect();
                Arc::new(move |t| {
                    let i = times.partition_point(|&s| s <= t);
                    if i == 0 {
                        return mats[0].clone();
                    }
                    if i == times.len() {
                        return mats[i - 1].clone();
                    }
                    let a = (t - times[i - 1]) / (times[i] - times[i - 1]);
                    &mats[i - 1] * C64::new(1.0 - a, 0.0) + &mats[i] * C64::new(a, 0.0)
                })
            }
        };
        Ok(base.clone().with_drive(f))
    }
}

/// Half-step propagators `G_0 .. G_{2 steps - 1}`, with `G_m` built from `H(m dt / 2)`.
pub fn half_step_schedule(h: &SystemHamiltonian, dt: f64, steps: usize) -> Result<Schedule> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(invalid("time step must be positive"));
    }
    let half_steps = (0..2 * steps.max(1))
        .map(|m| half_step_from_matrix(&h.at(0.5 * m as f64 * dt)?, dt))
        .collect::<Result<Vec<_>>>()?;
    Ok(Schedule::Driven { half_steps })
}

/// `L_n = 1 - i dt [H(n dt), .]` for `n = 0..steps`.
pub fn liouvillian_sequence(h: &SystemHamiltonian, dt: f64, steps: usize) -> Result<Vec<LiouvilleMatrix>> {
    (0..steps).map(|n| liouvillian_from_matrix(&h.at(n as f64 * dt)?, dt)).collect()
}

/// Bath-only tensors for two-time kernels: full Dyck sums up to `r_trunc`, crest terms beyond.
#[derive(Clone, Debug)]
pub struct BathTensors {
    pub i0: Vec<C64>,
    /// `tensors[k - 1]` is the order-`k` tensor.
    pub tensors: Vec<TTensor>,
    pub r_trunc: usize,
}

impl BathTensors {
    pub fn build(table: &InfluenceTable, r_trunc: usize, crest_pad: usize) -> Result<Self> {
        let top = r_trunc + crest_pad;
        if top > table.k_max() {
            return Err(invalid(format!(
                "orders up to {top} need influence lags up to {top}, table holds {}",
                table.k_max()
            )));
        }
        let tensors =
            (1..=top).into_par_iter().map(|k| build_t_tensor(table, k, k > r_trunc)).collect::<Result<Vec<_>>>()?;
        Ok(Self { i0: table.i0().to_vec(), tensors, r_trunc })
    }

    pub fn max_order(&self) -> usize {
        self.tensors.len()
    }

    pub fn pair_dim(&self) -> usize {
        self.i0.len()
    }
}

/// Bare-propagator tensor of one kernel, kept in factored form: `left`, the links from the
/// latest point backwards, and `right`.
#[derive(Clone, Debug)]
pub struct PTensor {
    pub order: usize,
    pub start: usize,
    pub left: LiouvilleMatrix,
    pub links: Vec<Vec<C64>>,
    pub right: LiouvilleMatrix,
}

impl PTensor {
    /// Propagators of the kernel `K_{start + order, start}`.
    pub fn new(schedule: &Schedule, start: usize, order: usize) -> Self {
        let n = start + order;
        Self {
            order,
            start,
            left: schedule.half(2 * n + 1),
            links: (0..order).map(|a| schedule.link(n - a - 1).to_row_major()).collect(),
            right: schedule.half(2 * start),
        }
    }

    /// `dt^2 K` from contraction with a bath tensor of the same order.
    pub fn contract(&self, t: &TTensor) -> Result<LiouvilleMatrix> {
        if t.order != self.order {
            return Err(invalid(format!("order {} bath tensor against order {} propagators", t.order, self.order)));
        }
        let n = t.pair_dim;
        let order = self.order;
        let stride = n.pow(order as u32);
        let rows: Vec<Vec<C64>> = (0..n)
            .into_par_iter()
            .map(|x0| {
                let slice = &t.data[x0 * stride..(x0 + 1) * stride];
                let first = &self.links[0];
                let inner = stride / n;
                let mut c: Vec<C64> = slice.iter().enumerate().map(|(i, v)| v * first[x0 * n + i / inner]).collect();
                for link in &self.links[1..] {
                    // sum over the leading index x_a with the link to x_{a+1}
                    let len = c.len() / n;
                    let inner = len / n;
                    let mut next = vec![C64::default(); len];
                    for xa in 0..n {
                        for (j, out) in next.iter_mut().enumerate() {
                            let w = link[xa * n + j / inner];
                            if w != C64::default() {
                                *out += c[xa * len + j] * w;
                            }
                        }
                    }
                    c = next;
                }
                c
            })
            .collect();
        let flat: Vec<C64> = rows.concat();
        let m = LiouvilleMatrix::from_row_major(self.left.dim(), &flat);
        Ok(&(&self.left * &m) * &self.right)
    }
}

/// Two-time kernels `K_{n,m}` for `n = 0..steps`; `kernels[n][k]` holds `K_{n, n-k}`.
#[derive(Clone, Debug)]
pub struct DrivenKernels {
    pub dt: f64,
    pub kernels: Vec<Vec<LiouvilleMatrix>>,
}

impl DrivenKernels {
    pub fn get(&self, n: usize, m: usize) -> Option<&LiouvilleMatrix> {
        if m > n {
            return None;
        }
        self.kernels.get(n)?.get(n - m)
    }

    pub fn steps(&self) -> usize {
        self.kernels.len()
    }
}

/// Contract bath tensors with time-dependent propagators into `K_{n,m}` for `n < steps`.
pub fn driven_kernels(
    schedule: &Schedule,
    l_seq: &[LiouvilleMatrix],
    bath: &BathTensors,
    dt: f64,
    steps: usize,
) -> Result<DrivenKernels> {
    if l_seq.len() < steps {
        return Err(invalid(format!("{steps} steps need as many Liouvillian steps, got {}", l_seq.len())));
    }
    if let Some(h) = schedule.horizon() {
        if h < steps {
            return Err(invalid(format!("schedule covers {h} steps, {steps} requested")));
        }
    }
    if schedule.dim() * schedule.dim() != bath.pair_dim() {
        return Err(invalid("bath tensors do not match the system dimension"));
    }
    let dt2 = dt * dt;
    let kernels = (0..steps)
        .into_par_iter()
        .map(|n| {
            let i0 = LiouvilleMatrix::from_diagonal(schedule.dim(), &bath.i0);
            let k0 = (&(&schedule.half(2 * n + 1) * &i0) * &schedule.half(2 * n)).sub(&l_seq[n]).scale(1.0 / dt2);
            let mut row = vec![k0];
            for order in 1..=bath.max_order().min(n) {
                let p = PTensor::new(schedule, n - order, order);
                row.push(p.contract(&bath.tensors[order - 1])?.scale(1.0 / dt2));
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DrivenKernels { dt, kernels })
}

/// `rho_{n+1} = L_n rho_n + dt^2 sum_m K_{n,m} rho_m`, with every stored kernel order.
pub fn driven_propagate(
    k: &DrivenKernels,
    l_seq: &[LiouvilleMatrix],
    rho0: &DensityVector,
    n_steps: usize,
) -> Result<Vec<DensityVector>> {
    if n_steps > k.steps() || n_steps > l_seq.len() {
        return Err(invalid(format!("propagation to step {n_steps} exceeds the {} stored kernel rows", k.steps())));
    }
    if rho0.len() != l_seq.first().map_or(rho0.len(), |l| l.pair_dim()) {
        return Err(invalid("initial density has the wrong dimension"));
    }
    let dt2 = C64::new(k.dt * k.dt, 0.0);
    let mut rho = vec![rho0.clone()];
    for n in 0..n_steps {
        let mut next = l_seq[n].apply(&rho[n]);
        for (lag, km) in k.kernels[n].iter().enumerate() {
            next += (km.matrix() * &rho[n - lag]) * dt2;
        }
        if next.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Numerical(format!("driven propagation diverged at step {}", n + 1)));
        }
        rho.push(next);
    }
    Ok(rho)
}

/// Two-time kernels from two-time propagators: `u[m][N] = U_{m+N, m}`.
///
/// Uses `U_{n+1,m} = L_n U_{n,m} + dt^2 sum_{j=m}^{n} K_{n,j} U_{j,m}`.
pub fn driven_ttm_extract(u: &[Vec<LiouvilleMatrix>], l_seq: &[LiouvilleMatrix], dt: f64) -> Result<DrivenKernels> {
    let steps = u.len();
    if l_seq.len() < steps {
        return Err(invalid("too few Liouvillian steps for the propagator set"));
    }
    let dt2 = dt * dt;
    let mut kernels: Vec<Vec<LiouvilleMatrix>> = Vec::with_capacity(steps);
    for n in 0..steps {
        let mut row: Vec<LiouvilleMatrix> = Vec::with_capacity(n + 1);
        for m in (0..=n).rev() {
            let lag = n - m;
            let target = u[m].get(lag + 1).ok_or_else(|| invalid(format!("missing U_{{{},{m}}}", n + 1)))?;
            let mut acc = target.sub(&(&l_seq[n] * &u[m][lag]));
            for j in (m + 1)..=n {
                acc = acc.sub(&(&row[n - j] * &u[m][j - m]).scale(dt2));
            }
            row.push(acc.scale(1.0 / dt2));
        }
        kernels.push(row);
    }
    Ok(DrivenKernels { dt, kernels })
}
