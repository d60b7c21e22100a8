//! Experiment configuration read from TOML.

use anyhow::{bail, Context, Result};
use memkernel_core::bath::{BathStatistics, EtaOptions, SpectralDensity};
use memkernel_core::driven::DriveProfile;
use memkernel_core::io::read_density_table;
use memkernel_core::linalg::CMatrix;
use memkernel_core::system::SystemHamiltonian;
use memkernel_core::C64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

pub const DEFAULT_ORDER_CAP: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Propagate,
    Kernels,
    Invert,
    ExtractJw,
    Dyck,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Self::Propagate => "propagate",
            Self::Kernels => "kernels",
            Self::Invert => "invert",
            Self::ExtractJw => "extract-jw",
            Self::Dyck => "dyck",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<Task>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub system: SystemConfig,
    #[serde(default, rename = "bath")]
    pub baths: Vec<BathConfig>,
    pub discretization: Discretization,
    #[serde(default)]
    pub propagate: PropagateConfig,
    #[serde(default)]
    pub kernels: KernelsConfig,
    #[serde(default)]
    pub extraction: ExtractionConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Either the spin-boson shorthand (`epsilon`, `delta`) or an explicit Hamiltonian.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Rows of `[re, im]` pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<Vec<Vec<[f64; 2]>>>,
    /// Eigenvalues of the coupling operator in the system basis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drive: Option<DriveProfile>,
    #[serde(default)]
    pub initial: InitialState,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialState {
    /// `|0><0|`; `(1 + z) / 2` for a qubit.
    #[default]
    Ground,
    /// `(1 - z) / 2`.
    Down,
    /// `(1 + x) / 2`.
    PlusX,
    /// Explicit density matrix as rows of `[re, im]`.
    Matrix(Vec<Vec<[f64; 2]>>),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BathRole {
    /// The bath whose spectral density is sought.
    #[default]
    Probe,
    /// A bath with known influence, divided out during extraction.
    Known,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathConfig {
    pub statistics: BathStatistics,
    /// Components summed into one spectral density.
    #[serde(default)]
    pub spectral_density: Vec<SpectralDensity>,
    /// Two-column `(omega, J)` CSV added as a tabulated component when the file is loaded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectral_density_csv: Option<PathBuf>,
    #[serde(default)]
    pub role: BathRole,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ir_cutoff: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<f64>,
}

impl BathConfig {
    /// `None` when no component is configured (a bath known only through data).
    pub fn density(&self) -> Option<SpectralDensity> {
        match self.spectral_density.as_slice() {
            [] => None,
            [one] => Some(one.clone()),
            many => Some(SpectralDensity::Sum(many.to_vec())),
        }
    }

    pub fn eta_options(&self) -> EtaOptions {
        let mut o = EtaOptions::default();
        if let Some(c) = self.ir_cutoff {
            o.ir_cutoff = c;
        }
        o.window = self.window;
        o
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Discretization {
    pub dt: f64,
    #[serde(default)]
    pub steps: usize,
    /// Kernel, inversion or enumeration order.
    #[serde(default = "default_order")]
    pub order: usize,
    /// Memory length of the sliding-window path sum.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub memory: Option<usize>,
    /// Highest full kernel order kept in propagation (defaults to `order`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_trunc: Option<usize>,
    /// Crest-only kernel orders appended after `r_trunc`.
    #[serde(default)]
    pub crest_pad: usize,
    #[serde(default = "default_cap")]
    pub order_cap: usize,
}

fn default_order() -> usize {
    8
}

fn default_cap() -> usize {
    DEFAULT_ORDER_CAP
}

impl Discretization {
    pub fn r_trunc(&self) -> usize {
        self.r_trunc.unwrap_or(self.order)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Master equation with Dyck-built kernels.
    #[default]
    Gqme,
    /// Full-memory path sum.
    Exact,
    /// Sliding-window path sum with `memory` steps.
    Quapi,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagateConfig {
    #[serde(default)]
    pub method: Method,
    /// Also propagate every truncation order `1..=r_trunc` and tabulate `<sigma_z>`.
    #[serde(default)]
    pub sweep: bool,
    /// Second method run for comparison, written as `reference.csv`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<Method>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelsConfig {
    /// Compare against kernels extracted from exact propagators.
    #[serde(default)]
    pub compare_exact: bool,
    /// Invert the built kernels back to influence functions.
    #[serde(default)]
    pub invert: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtractionConfig {
    /// Orders swept by `extract-jw`; defaults to `[discretization.order]`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub orders: Vec<usize>,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    /// Standard deviation of Gaussian noise added to synthetic trajectories.
    #[serde(default)]
    pub noise: f64,
    /// Trajectory CSV files, one per linearly independent initial state.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trajectories: Vec<PathBuf>,
    /// Kernel series read by `invert` instead of building them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernels: Option<PathBuf>,
    /// Frequency window of the reported relative error against the configured bath.
    #[serde(default = "default_error_window")]
    pub error_window: [f64; 2],
}

fn default_grid_points() -> usize {
    512
}

fn default_error_window() -> [f64; 2] {
    [0.5, 15.0]
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self {
            orders: Vec::new(),
            grid_points: default_grid_points(),
            noise: 0.0,
            trajectories: Vec::new(),
            kernels: None,
            error_window: default_error_window(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out")]
    pub dir: PathBuf,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: default_out() }
    }
}

fn complex_matrix(rows: &[Vec<[f64; 2]>], field: &str) -> Result<CMatrix> {
    let d = rows.len();
    if d == 0 || rows.iter().any(|r| r.len() != d) {
        bail!("{field}: expected a non-empty square matrix of [re, im] pairs");
    }
    Ok(CMatrix::from_fn(d, d, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
}

impl ExperimentConfig {
    /// Parse a file, resolving relative paths against its directory and loading density tables.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut c = Self::from_toml(&text).with_context(|| format!("parsing {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        c.resolve(base)?;
        Ok(c)
    }

    fn resolve(&mut self, base: &Path) -> Result<()> {
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.extraction.trajectories.iter_mut().for_each(rebase);
        if let Some(k) = self.extraction.kernels.as_mut() {
            rebase(k);
        }
        for (i, b) in self.baths.iter_mut().enumerate() {
            if let Some(mut p) = b.spectral_density_csv.take() {
                rebase(&mut p);
                let file = std::fs::File::open(&p)
                    .with_context(|| format!("bath[{i}].spectral_density_csv: {}", p.display()))?;
                let (omega, j) = read_density_table(file).with_context(|| format!("bath[{i}].spectral_density_csv"))?;
                b.spectral_density.push(SpectralDensity::Tabulated { omega, j });
            }
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// Hex SHA-256 of the canonical JSON form, excluding the output location.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = OutputConfig::default();
        let bytes = serde_json::to_vec(&c).expect("configuration serializes");
        let digest = Sha256::digest(&bytes);
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn hamiltonian(&self) -> Result<SystemHamiltonian> {
        let s = &self.system;
        let base = match (&s.hamiltonian, s.epsilon, s.delta) {
            (Some(rows), None, None) => {
                let h = complex_matrix(rows, "system.hamiltonian")?;
                let coupling = s.coupling.clone().context("system.coupling: required with system.hamiltonian")?;
                SystemHamiltonian::new(h, coupling).context("system.hamiltonian")?
            }
            (None, eps, delta) => {
                if s.coupling.as_ref().is_some_and(|c| c != &[1.0, -1.0]) {
                    bail!("system.coupling: the spin-boson shorthand couples through sigma_z");
                }
                SystemHamiltonian::spin_boson(eps.unwrap_or(0.0), delta.unwrap_or(1.0))
            }
            _ => bail!("system: give either epsilon/delta or hamiltonian, not both"),
        };
        match &s.drive {
            Some(d) => d.apply(&base).context("system.drive"),
            None => Ok(base),
        }
    }

    pub fn initial_density(&self, d: usize) -> Result<CMatrix> {
        let rho = match &self.system.initial {
            InitialState::Ground => {
                let mut m = CMatrix::zeros(d, d);
                m[(0, 0)] = C64::new(1.0, 0.0);
                m
            }
            InitialState::Down | InitialState::PlusX if d != 2 => {
                bail!("system.initial: named states other than ground need a two-level system")
            }
            InitialState::Down => {
                CMatrix::from_fn(2, 2, |i, j| C64::new(if i == 1 && j == 1 { 1.0 } else { 0.0 }, 0.0))
            }
            InitialState::PlusX => CMatrix::from_element(2, 2, C64::new(0.5, 0.0)),
            InitialState::Matrix(rows) => {
                let m = complex_matrix(rows, "system.initial")?;
                if m.nrows() != d {
                    bail!("system.initial: {}x{} matrix for a {d}-level system", m.nrows(), m.nrows());
                }
                m
            }
        };
        Ok(rho)
    }

    /// Probe bath first, then known baths.
    pub fn probe_bath(&self) -> Result<&BathConfig> {
        let probes: Vec<&BathConfig> = self.baths.iter().filter(|b| b.role == BathRole::Probe).collect();
        match probes.as_slice() {
            [one] => Ok(one),
            [] => bail!("bath: no bath has role = \"probe\""),
            _ => bail!("bath: exactly one bath may have role = \"probe\", found {}", probes.len()),
        }
    }

    pub fn extraction_orders(&self) -> Vec<usize> {
        if self.extraction.orders.is_empty() {
            vec![self.discretization.order]
        } else {
            self.extraction.orders.clone()
        }
    }

    /// Checks shared by every task; `allow_high_order` lifts the order cap.
    pub fn validate(&self, task: Task, allow_high_order: bool) -> Result<()> {
        let d = &self.discretization;
        if !(d.dt > 0.0 && d.dt.is_finite()) {
            bail!("discretization.dt: must be positive, got {}", d.dt);
        }
        let cap = d.order_cap;
        let check = |field: &str, v: usize| -> Result<()> {
            if v > cap && !allow_high_order {
                bail!("{field}: {v} exceeds the order cap {cap} (pass --allow-high-order to override)");
            }
            Ok(())
        };
        check("discretization.order", d.order)?;
        check("discretization.r_trunc", d.r_trunc())?;
        check("discretization.r_trunc + crest_pad", d.r_trunc() + d.crest_pad)?;
        if let Some(m) = d.memory {
            check("discretization.memory", m)?;
        }
        for (i, &o) in self.extraction.orders.iter().enumerate() {
            check(&format!("extraction.orders[{i}]"), o)?;
            if o == 0 {
                bail!("extraction.orders[{i}]: must be positive");
            }
        }
        if !(self.extraction.noise >= 0.0 && self.extraction.noise.is_finite()) {
            bail!("extraction.noise: must be non-negative");
        }
        if self.extraction.grid_points < 4 {
            bail!("extraction.grid_points: need at least 4 points");
        }
        let from_data = match task {
            Task::Invert => self.extraction.kernels.is_some(),
            Task::ExtractJw => !self.extraction.trajectories.is_empty(),
            _ => false,
        };
        for (i, b) in self.baths.iter().enumerate() {
            b.statistics.validate().with_context(|| format!("bath[{i}].statistics"))?;
            match b.density() {
                Some(jd) => jd.validate().with_context(|| format!("bath[{i}].spectral_density"))?,
                None if from_data && b.role == BathRole::Probe => {}
                None => bail!("bath[{i}].spectral_density: at least one component required"),
            }
        }
        if matches!(task, Task::Kernels | Task::Invert | Task::ExtractJw) && self.baths.is_empty() {
            bail!("bath: task {} needs at least one [[bath]] block", task.name());
        }
        if matches!(task, Task::Invert | Task::ExtractJw) {
            self.probe_bath()?;
        }
        if task == Task::Propagate && d.steps == 0 {
            bail!("discretization.steps: propagate needs at least one step");
        }
        if task == Task::Propagate {
            let methods =
                [("propagate.method", Some(self.propagate.method)), ("propagate.reference", self.propagate.reference)];
            for (field, method) in methods {
                match method {
                    Some(Method::Quapi) if d.memory.is_none() => {
                        bail!("discretization.memory: required by {field} = \"quapi\"")
                    }
                    Some(Method::Exact) if d.steps > cap && !allow_high_order => {
                        bail!("{field}: exact path sums over {} steps exceed the order cap {cap}", d.steps)
                    }
                    _ => {}
                }
            }
        }
        self.hamiltonian()?;
        Ok(())
    }
}
