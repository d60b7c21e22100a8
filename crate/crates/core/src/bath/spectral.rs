use crate::error::invalid;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Bath spectral density `J(w)` on `w >= 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SpectralDensity {
    /// `(xi pi / 2) w^s wc^(1-s) exp(-w / wc)`
    Ohmic {
        xi: f64,
        s: f64,
        omega_c: f64,
    },
    /// `amplitude * gamma * w / ((w^2 - w0^2)^2 + gamma^2 w^2)`
    BrownianPeak {
        gamma: f64,
        omega0: f64,
        amplitude: f64,
    },
    /// `amplitude * gamma / ((w - w0)^2 + gamma^2)`
    LorentzianPeak {
        gamma: f64,
        omega0: f64,
        amplitude: f64,
    },
    /// `gamma / ((1 + exp(nu (w - wc))) (1 + exp(-nu (w + wc))))`
    FermionicFlatBand {
        gamma: f64,
        nu: f64,
        omega_c: f64,
    },
    /// Linear interpolation between samples; `omega` strictly increasing.
    Tabulated {
        omega: Vec<f64>,
        j: Vec<f64>,
    },
    Sum(Vec<SpectralDensity>),
}

/// How `J` continues to negative frequencies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Extension {
    Odd,
    Even,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

fn non_negative(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be non-negative and finite, got {v}")))
    }
}

impl SpectralDensity {
    pub fn ohmic(xi: f64, s: f64, omega_c: f64) -> Result<Self> {
        let j = Self::Ohmic { xi, s, omega_c };
        j.validate()?;
        Ok(j)
    }

    /// Two Brownian peaks at `w0` and `2 w0` sharing the numerator `w0^2`.
    pub fn two_brownian(gamma: f64, omega0: f64) -> Self {
        let a = omega0 * omega0;
        Self::Sum(vec![
            Self::BrownianPeak { gamma, omega0, amplitude: a },
            Self::BrownianPeak { gamma, omega0: 2.0 * omega0, amplitude: a },
        ])
    }

    /// Two unit Lorentzians at `w0` and `3 w0`.
    pub fn two_lorentzian(gamma: f64, omega0: f64) -> Self {
        Self::Sum(vec![
            Self::LorentzianPeak { gamma, omega0, amplitude: 1.0 },
            Self::LorentzianPeak { gamma, omega0: 3.0 * omega0, amplitude: 1.0 },
        ])
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Ohmic { xi, s, omega_c } => {
                non_negative("xi", *xi)?;
                positive("s", *s)?;
                positive("omega_c", *omega_c)
            }
            Self::BrownianPeak { gamma, omega0, amplitude } | Self::LorentzianPeak { gamma, omega0, amplitude } => {
                positive("gamma", *gamma)?;
                non_negative("omega0", *omega0)?;
                non_negative("amplitude", *amplitude)
            }
            Self::FermionicFlatBand { gamma, nu, omega_c } => {
                non_negative("gamma", *gamma)?;
                positive("nu", *nu)?;
                positive("omega_c", *omega_c)
            }
            Self::Tabulated { omega, j } => {
                if omega.len() < 2 || omega.len() != j.len() {
                    return Err(invalid("tabulated density needs at least two (w, J) samples"));
                }
                if omega.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(invalid("tabulated frequencies must be strictly increasing"));
                }
                if omega[0] < 0.0 {
                    return Err(invalid("tabulated frequencies must be non-negative"));
                }
                if j.iter().any(|v| !v.is_finite()) {
                    return Err(invalid("tabulated J values must be finite"));
                }
                Ok(())
            }
            Self::Sum(parts) => {
                if parts.is_empty() {
                    return Err(invalid("sum of spectral densities is empty"));
                }
                parts.iter().try_for_each(|p| p.validate())
            }
        }
    }

    /// Value at `w >= 0`. Negative frequencies use the odd extension.
    pub fn eval(&self, omega: f64) -> Result<f64> {
        self.eval_extended(omega, Extension::Odd)
    }

    pub fn eval_extended(&self, omega: f64, ext: Extension) -> Result<f64> {
        if omega < 0.0 {
            let v = self.eval_positive(-omega)?;
            return Ok(match ext {
                Extension::Odd => -v,
                Extension::Even => v,
            });
        }
        self.eval_positive(omega)
    }

    fn eval_positive(&self, w: f64) -> Result<f64> {
        Ok(match self {
            Self::Ohmic { xi, s, omega_c } => {
                if w == 0.0 {
                    0.0
                } else {
                    0.5 * xi * PI * w.powf(*s) * omega_c.powf(1.0 - s) * (-w / omega_c).exp()
                }
            }
            Self::BrownianPeak { gamma, omega0, amplitude } => {
                let d = w * w - omega0 * omega0;
                amplitude * gamma * w / (d * d + gamma * gamma * w * w)
            }
            Self::LorentzianPeak { gamma, omega0, amplitude } => {
                let d = w - omega0;
                amplitude * gamma / (d * d + gamma * gamma)
            }
            Self::FermionicFlatBand { gamma, nu, omega_c } => {
                gamma / ((1.0 + (nu * (w - omega_c)).exp()) * (1.0 + (-nu * (w + omega_c)).exp()))
            }
            Self::Tabulated { omega, j } => {
                let (lo, hi) = (omega[0], *omega.last().unwrap());
                if w < lo || w > hi {
                    return Err(Error::Range { value: w, lo, hi });
                }
                let k = omega.partition_point(|&x| x <= w).clamp(1, omega.len() - 1);
                let t = (w - omega[k - 1]) / (omega[k] - omega[k - 1]);
                j[k - 1] + t * (j[k] - j[k - 1])
            }
            Self::Sum(parts) => {
                let mut acc = 0.0;
                for p in parts {
                    acc += p.eval_positive(w)?;
                }
                acc
            }
        })
    }

    /// Upper end of the frequency window used for bath integrals.
    pub fn window(&self) -> f64 {
        match self {
            Self::Ohmic { omega_c, .. } => 40.0 * omega_c,
            Self::BrownianPeak { gamma, omega0, .. } => 200.0 * (omega0 + gamma),
            Self::LorentzianPeak { gamma, omega0, .. } => (100.0 * (omega0 + gamma)).max(1e4),
            Self::FermionicFlatBand { nu, omega_c, .. } => omega_c + 40.0 / nu,
            Self::Tabulated { omega, .. } => *omega.last().unwrap(),
            Self::Sum(parts) => parts.iter().map(|p| p.window()).fold(0.0, f64::max),
        }
    }

    /// Lower end of the tabulated support (zero for analytic kinds).
    pub fn support_start(&self) -> f64 {
        match self {
            Self::Tabulated { omega, .. } => omega[0],
            Self::Sum(parts) => parts.iter().map(|p| p.support_start()).fold(0.0, f64::max),
            _ => 0.0,
        }
    }

    /// Whether `J(w) -> 0` as `w -> 0+`.
    pub fn vanishes_at_zero(&self) -> bool {
        match self {
            Self::Ohmic { .. } | Self::BrownianPeak { .. } => true,
            Self::LorentzianPeak { amplitude, .. } => *amplitude == 0.0,
            Self::FermionicFlatBand { gamma, .. } => *gamma == 0.0,
            Self::Tabulated { omega, j } => omega[0] == 0.0 && j[0] == 0.0,
            Self::Sum(parts) => parts.iter().all(|p| p.vanishes_at_zero()),
        }
    }
}
