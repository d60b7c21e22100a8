use crate::bath::{BathStatistics, EtaTable, SpectralDensity};
use crate::error::invalid;
use crate::pathsum::PropagatorSeries;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Spectral density samples; masked points carry no value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralSamples {
    pub omega: Vec<f64>,
    pub j: Vec<Option<f64>>,
}

impl SpectralSamples {
    pub fn masked(&self) -> Vec<bool> {
        self.j.iter().map(|v| v.is_none()).collect()
    }
}

/// `points` uniform frequencies on `[0, 2 pi / dt)`.
pub fn default_grid(dt: f64, points: usize) -> Vec<f64> {
    let top = 2.0 * PI / dt;
    (0..points).map(|i| top * i as f64 / points as f64).collect()
}

fn grid_step(omega: &[f64]) -> f64 {
    if omega.len() < 2 {
        return 0.0;
    }
    (omega[omega.len() - 1] - omega[0]) / (omega.len() - 1) as f64
}

/// Points within `radius` grid steps of a node `w dt / 2 = n pi`.
pub fn nodal_mask(omega: &[f64], dt: f64, radius: f64) -> Vec<bool> {
    let period = 2.0 * PI / dt;
    let r = radius * grid_step(omega) + 1e-12 * period;
    omega
        .iter()
        .map(|&w| {
            let n = (w / period).round();
            (w - n * period).abs() <= r
        })
        .collect()
}

/// `(dt / 2 pi) sum_{|k| <= K} c_k e^{i w k dt}` with `c_0 = 2 Re eta_0` and `c_{-k} = conj(c_k)`.
pub fn spectral_function(eta: &EtaTable, omega: f64) -> f64 {
    let dt = eta.dt;
    let mut acc = 2.0 * eta.values[0].re;
    for (k, v) in eta.values.iter().enumerate().skip(1) {
        let (s, c) = (omega * dt * k as f64).sin_cos();
        acc += 2.0 * (v.re * c - v.im * s);
    }
    dt / (2.0 * PI) * acc
}

/// Ratio between the sampled spectral function and `J` at `w > 0`.
fn kernel(stats: BathStatistics, omega: f64, dt: f64) -> f64 {
    let s = (0.5 * omega * dt).sin();
    let base = 2.0 / PI * s * s / (omega * omega);
    let beta = stats.beta();
    match stats {
        BathStatistics::Boson { .. } => base * (1.0 + 1.0 / (0.5 * beta * omega).tanh()),
        BathStatistics::SpinEffective { .. } => base * ((0.5 * beta * omega).tanh() + 1.0),
        BathStatistics::Fermion { mu, .. } => base * (1.0 + (0.5 * beta * (omega - mu)).tanh()),
    }
}

/// Even part of [`kernel`], the ratio seen by the cosine transform of `Re eta`.
fn even_kernel(stats: BathStatistics, omega: f64, dt: f64) -> f64 {
    let s = (0.5 * omega * dt).sin();
    let base = 2.0 / PI * s * s / (omega * omega);
    let beta = stats.beta();
    match stats {
        BathStatistics::Boson { .. } => base / (0.5 * beta * omega).tanh(),
        BathStatistics::SpinEffective { .. } => base,
        BathStatistics::Fermion { mu, .. } => {
            let tp = (0.5 * beta * (omega - mu)).tanh();
            let tm = (0.5 * beta * (-omega - mu)).tanh();
            base * (1.0 + 0.5 * (tp + tm))
        }
    }
}

/// The continuum spectral function a density `J` produces, for checks against sampled data.
pub fn forward_spectral_function(jd: &SpectralDensity, stats: BathStatistics, dt: f64, omega: f64) -> Result<f64> {
    if omega <= 0.0 {
        return Err(invalid("forward spectral function is defined for positive frequencies"));
    }
    Ok(jd.eval(omega)? * kernel(stats, omega, dt))
}

fn divide_out(omega: &[f64], dt: f64, f: impl Fn(f64) -> f64, k: impl Fn(f64) -> f64) -> Result<SpectralSamples> {
    let mask = nodal_mask(omega, dt, 3.0);
    if mask.iter().all(|&m| m) {
        return Err(invalid("every grid point is nodal"));
    }
    let j = omega.iter().zip(&mask).map(|(&w, &m)| if m || w <= 0.0 { None } else { Some(f(w) / k(w)) }).collect();
    Ok(SpectralSamples { omega: omega.to_vec(), j })
}

/// `J(w)` from `eta` by Fourier synthesis and division by the bath kernel.
pub fn spectral_density_from_eta(eta: &EtaTable, stats: BathStatistics, omega: &[f64]) -> Result<SpectralSamples> {
    stats.validate()?;
    if eta.values.is_empty() {
        return Err(invalid("empty eta table"));
    }
    let dt = eta.dt;
    divide_out(omega, dt, |w| spectral_function(eta, w), |w| kernel(stats, w, dt))
}

/// Cosine synthesis `(dt / 2 pi)(2 a_0 + 2 sum_k a_k cos(w k dt))` of real coefficients.
pub fn dephasing_extract(re_eta: &[f64], dt: f64, omega: &[f64]) -> Vec<f64> {
    omega
        .iter()
        .map(|&w| {
            let mut acc = 2.0 * re_eta.first().copied().unwrap_or(0.0);
            for (k, a) in re_eta.iter().enumerate().skip(1) {
                acc += 2.0 * a * (w * dt * k as f64).cos();
            }
            dt / (2.0 * PI) * acc
        })
        .collect()
}

/// Inverse of [`dephasing_extract`] from samples on the uniform full-period grid.
pub fn cosine_coefficients(samples: &[f64], dt: f64, k_max: usize) -> Result<Vec<f64>> {
    let m = samples.len();
    if 2 * k_max >= m {
        return Err(invalid(format!("{m} samples cannot resolve {k_max} cosine coefficients")));
    }
    let dw = 2.0 * PI / dt / m as f64;
    Ok((0..=k_max)
        .map(|k| {
            let s: f64 =
                samples.iter().enumerate().map(|(i, f)| f * (2.0 * PI * (i * k) as f64 / m as f64).cos()).sum();
            let v = s * dw;
            if k == 0 {
                0.5 * v
            } else {
                v
            }
        })
        .collect())
}

/// `J(w)` from `Re eta` alone, for pure-dephasing dynamics.
pub fn spectral_density_from_dephasing(
    re_eta: &[f64],
    dt: f64,
    stats: BathStatistics,
    omega: &[f64],
) -> Result<SpectralSamples> {
    stats.validate()?;
    let f = |w: f64| dephasing_extract(re_eta, dt, &[w])[0];
    divide_out(omega, dt, f, |w| even_kernel(stats, w, dt))
}

/// `Re eta_0 ..= Re eta_{N-1}` from the coherence decay of diagonal-Hamiltonian propagators.
pub fn dephasing_eta_from_propagators(u: &PropagatorSeries, eigenvalues: &[f64]) -> Result<Vec<f64>> {
    let d = eigenvalues.len();
    let (mut best, mut weight) = (0usize, 0.0f64);
    for p in 0..d {
        for m in 0..d {
            let w = (eigenvalues[p] - eigenvalues[m]).powi(2);
            if w > weight {
                best = p * d + m;
                weight = w;
            }
        }
    }
    if weight == 0.0 {
        return Err(invalid("coupling operator needs at least two distinct eigenvalues"));
    }
    let mut s = vec![0.0];
    for prop in u.props.iter().skip(1) {
        let v = prop.get(best, best).norm();
        if !(v > 0.0) {
            return Err(Error::Data("coherence decayed to zero".into()));
        }
        s.push(-v.ln() / weight);
    }
    let n = s.len() - 1;
    let mut out = Vec::with_capacity(n);
    if n >= 1 {
        out.push(s[1]);
    }
    for k in 1..n {
        out.push(s[k + 1] - 2.0 * s[k] + s[k - 1]);
    }
    Ok(out)
}
