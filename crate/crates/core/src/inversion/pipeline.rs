use super::{
    dephasing_eta_from_propagators, divide_known_bath, eta_from_influence, invert_influence_series,
    spectral_density_from_dephasing, spectral_density_from_eta, InversionOptions, OrderResidual, SpectralSamples,
};
use crate::bath::{BathStatistics, EtaTable, InfluenceTable};
use crate::error::invalid;
use crate::gqme::{propagators_from_trajectories, ttm_extract, TrajectoryEnsemble};
use crate::pathsum::PropagatorSeries;
use crate::system::{bare_full_step, bare_half_step, liouvillian_step, SystemHamiltonian};
use crate::{Result, C64};
use serde::{Deserialize, Serialize};

/// Which branch of the extraction produced the spectral density.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtractionRoute {
    Kernel,
    Dephasing,
}

/// Output of [`extract_spectral_density`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExtractionReport {
    pub route: ExtractionRoute,
    pub order: usize,
    pub singular_values: Vec<f64>,
    pub i0_offdiagonal: f64,
    pub residuals: Vec<OrderResidual>,
    pub eta: Vec<C64>,
    pub samples: SpectralSamples,
}

/// Trajectories to `J(w)` through propagators, kernels, influence functions and `eta`.
///
/// A diagonal Hamiltonian switches to the dephasing route, which reads `Re eta` off the
/// coherence decay directly.
pub fn extract_spectral_density(
    ens: &TrajectoryEnsemble,
    h: &SystemHamiltonian,
    stats: BathStatistics,
    order: usize,
    omega: &[f64],
    opts: &InversionOptions,
) -> Result<ExtractionReport> {
    let (u, sv) = propagators_from_trajectories(ens)?;
    let mut report = extract_from_propagators(&u, h, stats, order, omega, opts)?;
    report.singular_values = sv;
    Ok(report)
}

/// As [`extract_spectral_density`], starting from propagators.
pub fn extract_from_propagators(
    u: &PropagatorSeries,
    h: &SystemHamiltonian,
    stats: BathStatistics,
    order: usize,
    omega: &[f64],
    opts: &InversionOptions,
) -> Result<ExtractionReport> {
    extract_with_known_bath(u, h, stats, order, omega, opts, None)
}

/// Extraction of one bath when the others acting on the system are known.
///
/// The known influence table is divided out of the recovered one before fitting `eta`.
pub fn extract_with_known_bath(
    u: &PropagatorSeries,
    h: &SystemHamiltonian,
    stats: BathStatistics,
    order: usize,
    omega: &[f64],
    opts: &InversionOptions,
    known: Option<&InfluenceTable>,
) -> Result<ExtractionReport> {
    if order == 0 {
        return Err(invalid("extraction order must be positive"));
    }
    if u.n_max() < order + 1 {
        return Err(invalid(format!("order {order} needs propagators up to step {}", order + 1)));
    }
    if h.is_driven() {
        return Err(invalid("spectral extraction needs a time-independent Hamiltonian"));
    }
    let eig = h.coupling();
    if h.is_diagonal() {
        let trimmed = PropagatorSeries { dt: u.dt, props: u.props[..=order + 1].to_vec() };
        let mut re = dephasing_eta_from_propagators(&trimmed, eig)?;
        if let Some(known) = known {
            let eta_known = eta_from_influence(&known.truncated(order), eig)?;
            for (r, k) in re.iter_mut().zip(&eta_known.values) {
                *r -= k.re;
            }
        }
        let samples = spectral_density_from_dephasing(&re, u.dt, stats, omega)?;
        return Ok(ExtractionReport {
            route: ExtractionRoute::Dephasing,
            order,
            singular_values: Vec::new(),
            i0_offdiagonal: 0.0,
            residuals: Vec::new(),
            eta: re.into_iter().map(|v| C64::new(v, 0.0)).collect(),
            samples,
        });
    }
    let g = bare_half_step(h, u.dt)?;
    let f = bare_full_step(&g);
    let l = liouvillian_step(h, u.dt)?;
    let k = ttm_extract(u, &l);
    let rec = invert_influence_series(&k, &g, &f, &l, eig, order, opts)?;
    let table = match known {
        Some(known) => divide_known_bath(&rec.table, &known.truncated(order))?,
        None => rec.table,
    };
    let eta: EtaTable = eta_from_influence(&table, eig)?;
    let samples = spectral_density_from_eta(&eta, stats, omega)?;
    Ok(ExtractionReport {
        route: ExtractionRoute::Kernel,
        order,
        singular_values: Vec::new(),
        i0_offdiagonal: rec.i0_offdiagonal,
        residuals: rec.residuals,
        eta: eta.values,
        samples,
    })
}
