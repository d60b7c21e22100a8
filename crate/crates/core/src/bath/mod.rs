//! Spectral densities, bath correlation coefficients and influence functions.

mod eta;
mod influence;
pub mod quadrature;
mod spectral;

pub use eta::{eta_coefficients, eta_integrand, BathStatistics, EtaOptions, EtaTable};
pub use influence::{influence_factor, influence_table, InfluenceTable};
pub use spectral::{Extension, SpectralDensity};
