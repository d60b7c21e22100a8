//! Preset parameter sets regenerating the data behind each published panel.

use crate::config::{
    BathConfig, BathRole, Discretization, ExperimentConfig, ExtractionConfig, InitialState, KernelsConfig, Method,
    OutputConfig, PropagateConfig, SystemConfig, Task, DEFAULT_ORDER_CAP,
};
use anyhow::{bail, Result};
use memkernel_core::bath::{BathStatistics, SpectralDensity};
use memkernel_core::driven::{DriveProfile, PauliChannel, Waveform};
use std::f64::consts::PI;

pub const IDS: &[&str] = &[
    "fig2a",
    "fig2b",
    "fig2c",
    "fig3a",
    "fig3a1",
    "fig3a2",
    "fig3b",
    "fig3b1",
    "fig3b2",
    "fig3c",
    "fig3c1",
    "fig3c2",
    "driven-a",
    "driven-b",
    "structured-a",
    "structured-b",
    "structured-c",
    "ferm-jw",
];

const BETA: f64 = 5.0;
const OMEGA_C: f64 = 7.5;
const HIGH_ORDERS: [usize; 6] = [8, 12, 16, 20, 30, 40];

/// One task run of a preset, written to its own subdirectory.
#[derive(Debug)]
pub struct Job {
    pub name: String,
    pub task: Task,
    pub config: ExperimentConfig,
}

fn config(epsilon: f64, delta: f64, bath: BathConfig, discretization: Discretization) -> ExperimentConfig {
    ExperimentConfig {
        task: None,
        seed: 0,
        system: SystemConfig {
            epsilon: Some(epsilon),
            delta: Some(delta),
            hamiltonian: None,
            coupling: None,
            drive: None,
            initial: InitialState::Ground,
        },
        baths: vec![bath],
        discretization,
        propagate: PropagateConfig::default(),
        kernels: KernelsConfig::default(),
        extraction: ExtractionConfig::default(),
        output: OutputConfig::default(),
    }
}

fn bath(statistics: BathStatistics, jd: Vec<SpectralDensity>) -> BathConfig {
    BathConfig {
        statistics,
        spectral_density: jd,
        spectral_density_csv: None,
        role: BathRole::Probe,
        ir_cutoff: None,
        window: None,
    }
}

fn ohmic(xi: f64, s: f64) -> BathConfig {
    bath(BathStatistics::Boson { beta: BETA }, vec![SpectralDensity::Ohmic { xi, s, omega_c: OMEGA_C }])
}

fn grid(dt: f64, order: usize) -> Discretization {
    Discretization { dt, steps: 0, order, memory: None, r_trunc: None, crest_pad: 0, order_cap: DEFAULT_ORDER_CAP }
}

fn panel(letter: char) -> Result<(f64, f64)> {
    Ok(match letter {
        'a' => (0.1, 1.0),
        'b' => (0.5, 1.0),
        'c' => (0.5, 0.5),
        _ => bail!("unknown panel '{letter}'; known ids: {}", IDS.join(", ")),
    })
}

fn kernel_norms(xi: f64, s: f64) -> Job {
    let mut c = config(0.0, 1.0, ohmic(xi, s), grid(0.1, 12));
    c.kernels = KernelsConfig { compare_exact: true, invert: true };
    Job { name: "norms".into(), task: Task::Kernels, config: c }
}

fn truncation(xi: f64, s: f64) -> Job {
    let mut d = grid(0.1, 12);
    d.steps = 150;
    d.memory = Some(12);
    let mut c = config(0.0, 1.0, ohmic(xi, s), d);
    c.propagate = PropagateConfig { method: Method::Gqme, sweep: true, reference: Some(Method::Quapi) };
    Job { name: "dynamics".into(), task: Task::Propagate, config: c }
}

fn extraction(name: &str, statistics: BathStatistics, jd: Vec<SpectralDensity>, orders: &[usize]) -> Job {
    let top = orders.iter().copied().max().unwrap_or(0);
    let mut d = grid(0.05, top);
    d.order_cap = d.order_cap.max(top);
    let mut c = config(0.0, 1.0, bath(statistics, jd), d);
    c.extraction.orders = orders.to_vec();
    Job { name: name.into(), task: Task::ExtractJw, config: c }
}

fn driven(epsilon: f64, delta: f64, channel: PauliChannel, amplitude: f64) -> Vec<Job> {
    let drive = DriveProfile::Sine { waveforms: vec![Waveform { channel, amplitude, frequency: 1.0, phase: 0.0 }] };
    let job = |name: &str, pad: usize, reference: Option<Method>| {
        let mut d = grid(0.1, 4);
        d.steps = 100;
        d.crest_pad = pad;
        d.memory = Some(12);
        let mut c = config(epsilon, delta, ohmic(0.1, 1.0), d);
        c.system.drive = Some(drive.clone());
        c.propagate = PropagateConfig { method: Method::Gqme, sweep: false, reference };
        Job { name: name.into(), task: Task::Propagate, config: c }
    };
    vec![job("order4", 0, None), job("order4-crest6", 2, Some(Method::Quapi))]
}

/// Jobs behind a panel id.
pub fn preset(id: &str) -> Result<Vec<Job>> {
    let xi = 2.0;
    let gamma = xi * PI / 2.0;
    let omega0 = 5.0;
    let boson = BathStatistics::Boson { beta: BETA };
    let jobs = match id {
        "fig2a" | "fig2b" | "fig2c" => {
            let (xi, s) = panel(id.chars().last().unwrap_or('?'))?;
            vec![kernel_norms(xi, s)]
        }
        _ if id.starts_with("fig3") => {
            let rest: Vec<char> = id[4..].chars().collect();
            let (letter, part) = match rest.as_slice() {
                [l] => (*l, None),
                [l, p @ ('1' | '2')] => (*l, Some(*p)),
                _ => bail!("unknown reproduce id '{id}'; known ids: {}", IDS.join(", ")),
            };
            let (xi, s) = panel(letter)?;
            let mut jobs = Vec::new();
            if part != Some('2') {
                jobs.push(truncation(xi, s));
            }
            if part != Some('1') {
                let jd = vec![SpectralDensity::Ohmic { xi, s, omega_c: OMEGA_C }];
                jobs.push(extraction("spectral-density", boson, jd, &[8, 12, 16]));
            }
            jobs
        }
        "driven-a" => driven(1.0, 1.0, PauliChannel::Z, -1.0),
        "driven-b" => driven(1.0, 0.0, PauliChannel::X, 1.0),
        "structured-a" => {
            let jd = SpectralDensity::two_brownian(gamma, omega0);
            vec![extraction("spectral-density", boson, components(jd), &HIGH_ORDERS)]
        }
        "structured-b" => {
            let jd = SpectralDensity::two_lorentzian(gamma, omega0);
            vec![extraction("spectral-density", boson, components(jd), &HIGH_ORDERS)]
        }
        "structured-c" => {
            let jd = vec![
                SpectralDensity::BrownianPeak { gamma, omega0, amplitude: omega0 * omega0 },
                SpectralDensity::LorentzianPeak { gamma, omega0: 3.0 * omega0, amplitude: 1.0 },
            ];
            vec![extraction("spectral-density", boson, jd, &HIGH_ORDERS)]
        }
        "ferm-jw" => {
            let stats = BathStatistics::Fermion { beta: 50.0, mu: 0.0 };
            let jd = vec![SpectralDensity::FermionicFlatBand { gamma: 1.0, nu: 0.1, omega_c: 10.0 }];
            vec![extraction("spectral-density", stats, jd, &HIGH_ORDERS)]
        }
        _ => bail!("unknown reproduce id '{id}'; known ids: {}", IDS.join(", ")),
    };
    Ok(jobs)
}

fn components(jd: SpectralDensity) -> Vec<SpectralDensity> {
    match jd {
        SpectralDensity::Sum(parts) => parts,
        one => vec![one],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_id_builds_valid_jobs() {
        for id in IDS {
            let jobs = preset(id).unwrap();
            assert!(!jobs.is_empty(), "{id}");
            for job in &jobs {
                job.config.validate(job.task, false).unwrap_or_else(|e| panic!("{id}/{}: {e:#}", job.name));
            }
        }
    }

    #[test]
    fn panel_halves_split_the_full_panel() {
        assert_eq!(preset("fig3b").unwrap().len(), 2);
        assert_eq!(preset("fig3b1").unwrap()[0].task, Task::Propagate);
        assert_eq!(preset("fig3b2").unwrap()[0].task, Task::ExtractJw);
        assert!(preset("fig3d").is_err());
        assert!(preset("fig3a3").is_err());
    }

    #[test]
    fn structured_preset_sweeps_to_order_forty() {
        let job = &preset("structured-b").unwrap()[0];
        assert_eq!(job.config.extraction_orders(), HIGH_ORDERS.to_vec());
        assert!((job.config.baths[0].spectral_density.len()) == 2);
    }
}
