use super::quadrature::{self, Tolerance};
use super::spectral::SpectralDensity;
use crate::error::invalid;
use crate::{Result, C64};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BathStatistics {
    Boson { beta: f64 },
    Fermion { beta: f64, mu: f64 },
    SpinEffective { beta: f64 },
}

impl BathStatistics {
    pub fn beta(&self) -> f64 {
        match *self {
            Self::Boson { beta } | Self::SpinEffective { beta } | Self::Fermion { beta, .. } => beta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let beta = self.beta();
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(invalid(format!("inverse temperature must be positive, got {beta}")));
        }
        if let Self::Fermion { mu, .. } = self {
            if !mu.is_finite() {
                return Err(invalid("chemical potential must be finite"));
            }
        }
        Ok(())
    }
}

/// Discretized bath correlation coefficients `eta_k`, `k = 0..=k_max`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaTable {
    pub dt: f64,
    pub values: Vec<C64>,
}

impl EtaTable {
    pub fn new(dt: f64, values: Vec<C64>) -> Self {
        Self { dt, values }
    }

    pub fn zeros(dt: f64, k_max: usize) -> Self {
        Self { dt, values: vec![C64::default(); k_max + 1] }
    }

    pub fn k_max(&self) -> usize {
        self.values.len().saturating_sub(1)
    }

    /// `eta_k` for any integer lag; negative lags are conjugates.
    pub fn get(&self, k: i64) -> C64 {
        let v = self.values[k.unsigned_abs() as usize];
        if k < 0 {
            v.conj()
        } else {
            v
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct EtaOptions {
    pub tolerance: Tolerance,
    /// Lower integration limit used when `J(0+) != 0` makes the bosonic integrals diverge.
    pub ir_cutoff: f64,
    /// Overrides the spectral density's own frequency window.
    pub window: Option<f64>,
}

impl Default for EtaOptions {
    fn default() -> Self {
        Self { tolerance: Tolerance::default(), ir_cutoff: 1e-3, window: None }
    }
}

fn coth(x: f64) -> f64 {
    1.0 / x.tanh()
}

/// Integrand of `eta_k` at frequency `w > 0` on the folded half line.
///
/// `k = 0` gives the same-time coefficient.
pub fn eta_integrand(j: f64, stats: BathStatistics, omega: f64, dt: f64, k: usize) -> C64 {
    let w = omega;
    let half = 0.5 * w * dt;
    // sin^2(w dt / 2) / w^2, written to stay accurate as w -> 0
    let sinc = if half.abs() < 1e-8 { 1.0 } else { half.sin() / half };
    let s2_over_w2 = 0.25 * dt * dt * sinc * sinc;
    let beta = stats.beta();
    if k == 0 {
        let sin_over_w2 = if w * dt < 1e-8 { dt / w } else { (w * dt).sin() / (w * w) };
        match stats {
            BathStatistics::Boson { .. } | BathStatistics::SpinEffective { .. } => {
                let jeff =
                    if matches!(stats, BathStatistics::SpinEffective { .. }) { j * (0.5 * beta * w).tanh() } else { j };
                C64::new(2.0 * jeff * coth(0.5 * beta * w) * s2_over_w2, jeff * sin_over_w2) / PI
            }
            BathStatistics::Fermion { mu, .. } => {
                let tp = (0.5 * beta * (w - mu)).tanh();
                let tm = (0.5 * beta * (-w - mu)).tanh();
                C64::new(2.0 * j * (2.0 + tp + tm) * s2_over_w2, j * sin_over_w2 * (tp - tm)) / (2.0 * PI)
            }
        }
    } else {
        let tau = k as f64 * dt;
        let (sn, cs) = (w * tau).sin_cos();
        match stats {
            BathStatistics::Boson { .. } | BathStatistics::SpinEffective { .. } => {
                let jeff =
                    if matches!(stats, BathStatistics::SpinEffective { .. }) { j * (0.5 * beta * w).tanh() } else { j };
                let pre = 4.0 / PI * jeff * s2_over_w2;
                C64::new(pre * coth(0.5 * beta * w) * cs, -pre * sn)
            }
            BathStatistics::Fermion { mu, .. } => {
                let tp = (0.5 * beta * (w - mu)).tanh();
                let tm = (0.5 * beta * (-w - mu)).tanh();
                let pre = 2.0 / PI * j * s2_over_w2;
                C64::new(pre * (2.0 + tp + tm) * cs, pre * sn * (tm - tp))
            }
        }
    }
}

/// Integration breakpoints and an optional square-root substitution region `[lo, split]`.
fn layout(jd: &SpectralDensity, stats: BathStatistics, opts: &EtaOptions) -> (f64, f64, f64) {
    let hi = opts.window.unwrap_or_else(|| jd.window());
    let mut lo = jd.support_start();
    if matches!(stats, BathStatistics::Boson { .. }) && !jd.vanishes_at_zero() {
        lo = lo.max(opts.ir_cutoff);
    }
    let split = if lo == 0.0 { hi.min(1.0) } else { lo };
    (lo, split, hi)
}

fn eta_single(jd: &SpectralDensity, stats: BathStatistics, dt: f64, k: usize, opts: &EtaOptions) -> Result<C64> {
    let (lo, split, hi) = layout(jd, stats, opts);
    if !(hi > lo) {
        return Err(invalid(format!("empty frequency window [{lo}, {hi}]")));
    }
    let eval = |w: f64| -> C64 {
        match jd.eval(w) {
            Ok(j) => eta_integrand(j, stats, w, dt, k),
            Err(_) => C64::new(f64::NAN, f64::NAN),
        }
    };
    let mut total = C64::default();
    if split > lo {
        // w = u^2 removes the w^(s-1) endpoint singularity of sub-Ohmic densities
        let near = quadrature::integrate(|u: f64| eval(u * u) * (2.0 * u), &[lo.sqrt(), split.sqrt()], opts.tolerance)?;
        total += near.value;
    }
    // a few coarse panels help the adaptive scheme find narrow peaks
    let n_panels = 16;
    let bps: Vec<f64> = (0..=n_panels).map(|i| split * (hi / split).powf(i as f64 / n_panels as f64)).collect();
    let far = quadrature::integrate(eval, &bps, opts.tolerance)?;
    total += far.value;
    Ok(total)
}

/// Coefficients `eta_0..=eta_{k_max}` for a Gaussian bath.
pub fn eta_coefficients(
    jd: &SpectralDensity,
    stats: BathStatistics,
    dt: f64,
    k_max: usize,
    opts: &EtaOptions,
) -> Result<EtaTable> {
    jd.validate()?;
    stats.validate()?;
    if !(dt > 0.0) {
        return Err(invalid(format!("time step must be positive, got {dt}")));
    }
    let values = (0..=k_max).into_par_iter().map(|k| eta_single(jd, stats, dt, k, opts)).collect::<Result<Vec<_>>>()?;
    Ok(EtaTable { dt, values })
}
