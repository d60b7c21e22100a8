//! Task execution and artifact export.

use crate::config::{BathConfig, BathRole, ExperimentConfig, Method, Task};
use anyhow::{bail, Context, Result};
use memkernel_core::bath::{eta_coefficients, influence_table, EtaTable, InfluenceTable, SpectralDensity};
use memkernel_core::driven::{driven_kernels, driven_propagate, half_step_schedule, liouvillian_sequence, BathTensors};
use memkernel_core::dyck;
use memkernel_core::gqme::{
    build_kernels_dyck, build_kernels_dyck_report, crest_kernels, propagate_gqme, propagate_gqme_padded,
    propagators_from_trajectories, reference_initial_states, ttm_extract, KernelSeries, TrajectoryEnsemble,
};
use memkernel_core::inversion::{
    default_grid, divide_known_bath, eta_from_influence, extract_with_known_bath, invert_influence_series,
    spectral_density_from_eta, InversionOptions, OrderResidual, SpectralSamples,
};
use memkernel_core::io;
use memkernel_core::linalg::trace_distance;
use memkernel_core::pathsum::{exact_propagators, quapi_trajectory, Schedule};
use memkernel_core::system::{
    bare_full_step, bare_half_step, density_to_vector, liouvillian_step, vector_to_density, DensityVector,
    LiouvilleMatrix, SystemHamiltonian,
};
use memkernel_core::C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;
use serde_json::{json, Map, Value};
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

/// Machine-readable line printed after a task completes.
#[derive(Debug, Serialize)]
pub struct Summary {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub job: Option<String>,
    pub task: &'static str,
    pub config: String,
    pub outputs: Vec<String>,
    pub metrics: Map<String, Value>,
}

struct Artifacts {
    dir: PathBuf,
    hash: String,
    written: Vec<String>,
    metrics: Map<String, Value>,
}

impl Artifacts {
    fn new(dir: &Path, hash: String) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self { dir: dir.to_path_buf(), hash, written: Vec::new(), metrics: Map::new() })
    }

    fn path(&mut self, name: &str) -> Result<PathBuf> {
        let p = self.dir.join(name);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent)?;
        }
        self.written.push(name.to_string());
        Ok(p)
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        let p = self.path(name)?;
        Ok(BufWriter::new(File::create(&p).with_context(|| format!("creating {}", p.display()))?))
    }

    fn table(&mut self, name: &str, columns: &[&str], rows: &[Vec<f64>]) -> Result<()> {
        let hash = self.hash.clone();
        io::write_table_csv(self.create(name)?, &hash, columns, rows)?;
        Ok(())
    }

    fn trajectory(&mut self, name: &str, dt: f64, traj: &[DensityVector]) -> Result<()> {
        let hash = self.hash.clone();
        io::write_trajectory_csv(self.create(name)?, &hash, dt, traj)?;
        Ok(())
    }

    fn spectrum(&mut self, name: &str, s: &SpectralSamples) -> Result<()> {
        let hash = self.hash.clone();
        io::write_spectral_csv(self.create(name)?, &hash, s)?;
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let doc = json!({
            "generator": io::header_line(&self.hash).trim_start_matches("# "),
            "data": value,
        });
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        fs::write(self.path(name)?, text)?;
        Ok(())
    }

    fn metric(&mut self, key: &str, value: impl Into<Value>) {
        self.metrics.insert(key.to_string(), value.into());
    }

    fn finish(self, task: Task) -> Summary {
        Summary { job: None, task: task.name(), config: self.hash, outputs: self.written, metrics: self.metrics }
    }
}

/// Analytic `eta` and influence table of one bath.
fn bath_tables(b: &BathConfig, h: &SystemHamiltonian, dt: f64, k: usize) -> Result<(EtaTable, InfluenceTable)> {
    let jd = b.density().context("bath has no spectral density")?;
    let eta = eta_coefficients(&jd, b.statistics, dt, k, &b.eta_options())?;
    let table = influence_table(&eta, h.coupling(), k)?;
    Ok((eta, table))
}

/// Product of the influence tables of the selected baths; unity when none is selected.
fn combined_table(
    cfg: &ExperimentConfig,
    h: &SystemHamiltonian,
    k: usize,
    keep: impl Fn(&BathConfig) -> bool,
) -> Result<InfluenceTable> {
    let dt = cfg.discretization.dt;
    let mut total = InfluenceTable::unit(dt, h.coupling().to_vec(), k);
    for (i, b) in cfg.baths.iter().enumerate().filter(|(_, b)| keep(b)) {
        let (_, t) = bath_tables(b, h, dt, k).with_context(|| format!("bath[{i}]"))?;
        total = total.multiply(&t)?;
    }
    Ok(total)
}

fn known_table(cfg: &ExperimentConfig, h: &SystemHamiltonian, k: usize) -> Result<Option<InfluenceTable>> {
    if cfg.baths.iter().all(|b| b.role != BathRole::Known) {
        return Ok(None);
    }
    Ok(Some(combined_table(cfg, h, k, |b| b.role == BathRole::Known)?))
}

struct Bare {
    g: LiouvilleMatrix,
    f: LiouvilleMatrix,
    l: LiouvilleMatrix,
}

impl Bare {
    fn new(h: &SystemHamiltonian, dt: f64) -> Result<Self> {
        let g = bare_half_step(h, dt)?;
        Ok(Self { f: bare_full_step(&g), l: liouvillian_step(h, dt)?, g })
    }
}

fn sigma_z(v: &DensityVector) -> f64 {
    let d = (v.len() as f64).sqrt().round() as usize;
    (v[0] - v[d * d - 1]).re
}

fn times(dt: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| i as f64 * dt)
}

/// Largest pointwise `|J_est - J| / J` over unmasked samples in `window` where `J > 0`.
pub fn relative_error(s: &SpectralSamples, jd: &SpectralDensity, window: [f64; 2]) -> Result<f64> {
    let mut worst = 0.0f64;
    for (&w, v) in s.omega.iter().zip(&s.j) {
        if let (Some(v), true) = (v, w >= window[0] && w <= window[1]) {
            let want = jd.eval(w)?;
            if want > 0.0 {
                worst = worst.max((v - want).abs() / want);
            }
        }
    }
    Ok(worst)
}

fn trajectory(
    cfg: &ExperimentConfig,
    h: &SystemHamiltonian,
    method: Method,
    rho0: &DensityVector,
) -> Result<Vec<DensityVector>> {
    let d = &cfg.discretization;
    let (dt, steps) = (d.dt, d.steps);
    match method {
        Method::Gqme => {
            let (r, pad) = (d.r_trunc(), d.crest_pad);
            let table = combined_table(cfg, h, r + pad, |_| true)?;
            if h.is_driven() {
                let bath = BathTensors::build(&table, r, pad)?;
                let sched = half_step_schedule(h, dt, steps)?;
                let ls = liouvillian_sequence(h, dt, steps)?;
                let k = driven_kernels(&sched, &ls, &bath, dt, steps)?;
                Ok(driven_propagate(&k, &ls, rho0, steps)?)
            } else {
                let b = Bare::new(h, dt)?;
                let k = build_kernels_dyck(&b.g, &b.f, &b.l, &table, r)?;
                let padding = if pad > 0 { crest_kernels(&b.g, &b.f, &table, r + 1..=r + pad)? } else { Vec::new() };
                Ok(propagate_gqme_padded(&k, &padding, &b.l, rho0, steps, r)?)
            }
        }
        Method::Exact if !h.is_driven() => {
            let b = Bare::new(h, dt)?;
            let table = combined_table(cfg, h, steps.saturating_sub(1), |_| true)?;
            Ok(exact_propagators(&b.g, &b.f, &table, steps)?.trajectory(rho0))
        }
        Method::Exact | Method::Quapi => {
            let memory = if method == Method::Exact { steps } else { d.memory.context("discretization.memory")? };
            let table = combined_table(cfg, h, memory, |_| true)?;
            let sched = if h.is_driven() {
                half_step_schedule(h, dt, steps)?
            } else {
                Schedule::static_steps(&bare_half_step(h, dt)?)
            };
            Ok(quapi_trajectory(&sched, &table, memory, rho0, steps)?)
        }
    }
}

/// `<sigma_z>` for every truncation order `1..=r_trunc` of the master equation.
fn truncation_sweep(cfg: &ExperimentConfig, h: &SystemHamiltonian, rho0: &DensityVector) -> Result<Vec<Vec<f64>>> {
    let d = &cfg.discretization;
    let (dt, steps, r) = (d.dt, d.steps, d.r_trunc());
    let table = combined_table(cfg, h, r, |_| true)?;
    let curves: Vec<Vec<DensityVector>> = if h.is_driven() {
        let sched = half_step_schedule(h, dt, steps)?;
        let ls = liouvillian_sequence(h, dt, steps)?;
        (1..=r)
            .map(|order| {
                let bath = BathTensors::build(&table.truncated(order), order, 0)?;
                let k = driven_kernels(&sched, &ls, &bath, dt, steps)?;
                driven_propagate(&k, &ls, rho0, steps)
            })
            .collect::<memkernel_core::Result<_>>()?
    } else {
        let b = Bare::new(h, dt)?;
        let k = build_kernels_dyck(&b.g, &b.f, &b.l, &table, r)?;
        (1..=r).map(|order| propagate_gqme(&k, &b.l, rho0, steps, order)).collect::<memkernel_core::Result<_>>()?
    };
    Ok(times(dt, steps + 1)
        .enumerate()
        .map(|(i, t)| std::iter::once(t).chain(curves.iter().map(|c| sigma_z(&c[i]))).collect())
        .collect())
}

fn propagate(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<()> {
    let h = cfg.hamiltonian()?;
    let rho0 = density_to_vector(&cfg.initial_density(h.dim())?);
    let dt = cfg.discretization.dt;
    let main = trajectory(cfg, &h, cfg.propagate.method, &rho0)?;
    out.trajectory("trajectory.csv", dt, &main)?;
    out.metric("steps", main.len() - 1);
    out.metric("final_sigma_z", sigma_z(main.last().expect("initial state present")));
    let trace_drift =
        main.iter().map(|v| (v.iter().step_by(h.dim() + 1).sum::<C64>() - 1.0).norm()).fold(0.0, f64::max);
    out.metric("max_trace_drift", trace_drift);
    if cfg.propagate.sweep {
        let rows = truncation_sweep(cfg, &h, &rho0)?;
        let names: Vec<String> = (1..=cfg.discretization.r_trunc()).map(|r| format!("sigma_z_r{r}")).collect();
        let mut cols = vec!["t"];
        cols.extend(names.iter().map(String::as_str));
        out.table("sweep.csv", &cols, &rows)?;
    }
    if let Some(method) = cfg.propagate.reference {
        let reference = trajectory(cfg, &h, method, &rho0)?;
        out.trajectory("reference.csv", dt, &reference)?;
        let worst = main
            .iter()
            .zip(&reference)
            .map(|(a, b)| trace_distance(&vector_to_density(a), &vector_to_density(b)))
            .fold(0.0, f64::max);
        out.metric("max_trace_distance_to_reference", worst);
    }
    Ok(())
}

fn require_static(h: &SystemHamiltonian, task: Task) -> Result<()> {
    if h.is_driven() {
        bail!("system.drive: task {} needs a time-independent Hamiltonian", task.name());
    }
    Ok(())
}

fn kernels(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<()> {
    let h = cfg.hamiltonian()?;
    require_static(&h, Task::Kernels)?;
    let (dt, order) = (cfg.discretization.dt, cfg.discretization.order);
    let table = combined_table(cfg, &h, order, |_| true)?;
    let b = Bare::new(&h, dt)?;
    let (k, reports) = build_kernels_dyck_report(&b.g, &b.f, &b.l, &table, order)?;
    io::write_kernels_tagged(&out.path("kernels.bin")?, &k, Some(&out.hash))?;
    out.written.push("kernels.bin.json".into());

    let mut cols = vec!["n", "t", "tilde_i_norm", "kernel_norm", "crest_norm", "terms"];
    let mut rows: Vec<Vec<f64>> = reports
        .iter()
        .map(|r| {
            let n = r.order;
            vec![n as f64, n as f64 * dt, table.tilde_norm(n), r.kernel_norm, r.crest_norm, r.terms as f64]
        })
        .collect();
    if cfg.kernels.compare_exact {
        let u = exact_propagators(&b.g, &b.f, &table, order + 1)?;
        let ttm = ttm_extract(&u, &b.l);
        let mut worst = 0.0f64;
        for row in rows.iter_mut() {
            let n = row[0] as usize;
            row.push(ttm.kernels[n].norm());
            let diff = ttm.kernels[n].max_abs_diff(&k.kernels[n]);
            worst = worst.max(diff);
            row.push(diff);
        }
        cols.extend(["ttm_kernel_norm", "ttm_max_abs_diff"]);
        out.metric("max_kernel_diff_vs_exact", worst);
    }
    if cfg.kernels.invert {
        let rec = invert_influence_series(&k, &b.g, &b.f, &b.l, h.coupling(), order, &InversionOptions::default())?;
        let mut worst = 0.0f64;
        for row in rows.iter_mut() {
            let n = row[0] as usize;
            row.push(rec.table.tilde_norm(n));
            let diff = rec
                .table
                .tilde_block(n)
                .iter()
                .zip(table.tilde_block(n))
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            worst = worst.max(diff);
        }
        cols.push("inverted_tilde_i_norm");
        out.metric("max_inverted_tilde_diff", worst);
    }
    out.table("kernel_norms.csv", &cols, &rows)?;
    out.metric("order", order);
    out.metric("kernel_norm_last", k.kernels[order].norm());
    Ok(())
}

/// One extraction result as exported to JSON.
#[derive(Debug, Serialize)]
struct OrderReport {
    order: usize,
    route: &'static str,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    singular_values: Vec<f64>,
    i0_offdiagonal: f64,
    residuals: Vec<OrderResidual>,
    eta: Vec<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_relative_error: Option<f64>,
}

fn eta_pairs(values: &[C64]) -> Vec<[f64; 2]> {
    values.iter().map(|v| [v.re, v.im]).collect()
}

/// Analytic `I -> eta -> J` for orders beyond the diagrammatic inversion.
fn analytic_route(
    cfg: &ExperimentConfig,
    probe: &BathConfig,
    h: &SystemHamiltonian,
    order: usize,
    omega: &[f64],
) -> Result<(EtaTable, SpectralSamples)> {
    let (_, table) = bath_tables(probe, h, cfg.discretization.dt, order)
        .context("analytic route needs the probe spectral density")?;
    let eta = eta_from_influence(&table, h.coupling())?;
    let samples = spectral_density_from_eta(&eta, probe.statistics, omega)?;
    Ok((eta, samples))
}

fn score(
    report: &mut OrderReport,
    probe: &BathConfig,
    s: &SpectralSamples,
    window: [f64; 2],
    out: &mut Artifacts,
) -> Result<()> {
    if let Some(jd) = probe.density() {
        let e = relative_error(s, &jd, window)?;
        report.max_relative_error = Some(e);
        out.metric(&format!("max_relative_error_order_{}", report.order), e);
    }
    Ok(())
}

fn invert(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<()> {
    let h = cfg.hamiltonian()?;
    require_static(&h, Task::Invert)?;
    let probe = cfg.probe_bath()?;
    let order = cfg.discretization.order;
    let mut dt = cfg.discretization.dt;
    let omega = default_grid(dt, cfg.extraction.grid_points);
    let window = cfg.extraction.error_window;

    let report = if order > dyck::MAX_ORDER {
        let (eta, samples) = analytic_route(cfg, probe, &h, order, &omega)?;
        out.spectrum("jw.csv", &samples)?;
        let mut r = OrderReport {
            order,
            route: "analytic",
            singular_values: Vec::new(),
            i0_offdiagonal: 0.0,
            residuals: Vec::new(),
            eta: eta_pairs(&eta.values),
            max_relative_error: None,
        };
        score(&mut r, probe, &samples, window, out)?;
        r
    } else {
        let k: KernelSeries = match &cfg.extraction.kernels {
            Some(path) => {
                let k = io::read_kernels(path).with_context(|| format!("extraction.kernels: {}", path.display()))?;
                if (k.dt - dt).abs() > 1e-12 * dt {
                    bail!("extraction.kernels: file time step {} differs from discretization.dt {dt}", k.dt);
                }
                dt = k.dt;
                k
            }
            None => {
                let table = combined_table(cfg, &h, order, |_| true)?;
                let b = Bare::new(&h, dt)?;
                build_kernels_dyck(&b.g, &b.f, &b.l, &table, order)?
            }
        };
        let b = Bare::new(&h, dt)?;
        let rec = invert_influence_series(&k, &b.g, &b.f, &b.l, h.coupling(), order, &InversionOptions::default())?;
        let table = match known_table(cfg, &h, order)? {
            Some(known) => divide_known_bath(&rec.table, &known)?,
            None => rec.table,
        };
        let norms: Vec<Vec<f64>> = (1..=order).map(|n| vec![n as f64, n as f64 * dt, table.tilde_norm(n)]).collect();
        out.table("influence_norms.csv", &["n", "t", "tilde_i_norm"], &norms)?;
        let eta = eta_from_influence(&table, h.coupling())?;
        let samples = spectral_density_from_eta(&eta, probe.statistics, &omega)?;
        out.spectrum("jw.csv", &samples)?;
        let mut r = OrderReport {
            order,
            route: "kernel",
            singular_values: Vec::new(),
            i0_offdiagonal: rec.i0_offdiagonal,
            residuals: rec.residuals,
            eta: eta_pairs(&eta.values),
            max_relative_error: None,
        };
        score(&mut r, probe, &samples, window, out)?;
        r
    };
    if let Some(jd) = probe.density() {
        let reference = eta_coefficients(&jd, probe.statistics, dt, order, &probe.eta_options())?;
        let rows: Vec<Vec<f64>> = report
            .eta
            .iter()
            .zip(&reference.values)
            .enumerate()
            .map(|(k, (got, want))| vec![k as f64, got[0], got[1], want.re, want.im])
            .collect();
        out.table("eta.csv", &["k", "re", "im", "analytic_re", "analytic_im"], &rows)?;
    }
    out.json("report.json", &report)?;
    Ok(())
}

fn add_noise(ens: &mut TrajectoryEnsemble, sigma: f64, seed: u64) -> Result<()> {
    let normal = Normal::new(0.0, sigma)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for series in ens.series.iter_mut() {
        for v in series.iter_mut().skip(1) {
            for z in v.iter_mut() {
                *z += C64::new(normal.sample(&mut rng), normal.sample(&mut rng));
            }
        }
    }
    Ok(())
}

fn load_ensemble(paths: &[PathBuf], dt: f64) -> Result<TrajectoryEnsemble> {
    let mut series = Vec::with_capacity(paths.len());
    for (i, p) in paths.iter().enumerate() {
        let field = format!("extraction.trajectories[{i}]");
        let file = File::open(p).with_context(|| format!("{field}: {}", p.display()))?;
        let (t, rho) = io::read_trajectory_csv(file).with_context(|| field.clone())?;
        for (n, &ti) in t.iter().enumerate() {
            if (ti - n as f64 * dt).abs() > 1e-9 * dt.max(ti.abs()) {
                bail!("{field}: row {n} has t = {ti}, expected {}", n as f64 * dt);
            }
        }
        series.push(rho);
    }
    Ok(TrajectoryEnsemble { dt, series })
}

fn extract_jw(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<()> {
    let h = cfg.hamiltonian()?;
    require_static(&h, Task::ExtractJw)?;
    let probe = cfg.probe_bath()?;
    let dt = cfg.discretization.dt;
    let omega = default_grid(dt, cfg.extraction.grid_points);
    let window = cfg.extraction.error_window;
    let orders = cfg.extraction_orders();
    let top = orders.iter().copied().filter(|&o| o <= dyck::MAX_ORDER).max();

    let mut reports = Vec::with_capacity(orders.len());
    if let Some(top) = top {
        let mut ens = if cfg.extraction.trajectories.is_empty() {
            if h.dim() != 2 {
                bail!("extraction.trajectories: synthetic trajectories are generated for two-level systems only");
            }
            let table = combined_table(cfg, &h, top, |_| true)?;
            let b = Bare::new(&h, dt)?;
            let u = exact_propagators(&b.g, &b.f, &table, top + 1)?;
            TrajectoryEnsemble::from_propagators(&u, &reference_initial_states())
        } else {
            load_ensemble(&cfg.extraction.trajectories, dt)?
        };
        if cfg.extraction.noise > 0.0 {
            add_noise(&mut ens, cfg.extraction.noise, cfg.seed)?;
        }
        if cfg.extraction.trajectories.is_empty() {
            for (i, s) in ens.series.iter().enumerate() {
                out.trajectory(&format!("trajectories/rho{}.csv", i + 1), dt, s)?;
            }
        }
        let (u, sv) = propagators_from_trajectories(&ens)?;
        out.metric("min_singular_value", sv.iter().copied().fold(f64::INFINITY, f64::min));
        let known = known_table(cfg, &h, top)?;
        for &order in orders.iter().filter(|&&o| o <= dyck::MAX_ORDER) {
            let rep = extract_with_known_bath(
                &u,
                &h,
                probe.statistics,
                order,
                &omega,
                &InversionOptions::default(),
                known.as_ref(),
            )
            .with_context(|| format!("extraction at order {order}"))?;
            out.spectrum(&format!("jw_order{order}.csv"), &rep.samples)?;
            let route = match rep.route {
                memkernel_core::inversion::ExtractionRoute::Kernel => "kernel",
                memkernel_core::inversion::ExtractionRoute::Dephasing => "dephasing",
            };
            let mut r = OrderReport {
                order,
                route,
                singular_values: sv.clone(),
                i0_offdiagonal: rep.i0_offdiagonal,
                residuals: rep.residuals,
                eta: eta_pairs(&rep.eta),
                max_relative_error: None,
            };
            score(&mut r, probe, &rep.samples, window, out)?;
            reports.push(r);
        }
    }
    for &order in orders.iter().filter(|&&o| o > dyck::MAX_ORDER) {
        let (eta, samples) = analytic_route(cfg, probe, &h, order, &omega)?;
        out.spectrum(&format!("jw_order{order}.csv"), &samples)?;
        let mut r = OrderReport {
            order,
            route: "analytic",
            singular_values: Vec::new(),
            i0_offdiagonal: 0.0,
            residuals: Vec::new(),
            eta: eta_pairs(&eta.values),
            max_relative_error: None,
        };
        score(&mut r, probe, &samples, window, out)?;
        reports.push(r);
    }
    if let Some(jd) = probe.density() {
        let rows: Vec<Vec<f64>> = omega.iter().map(|&w| Ok(vec![w, jd.eval(w)?])).collect::<Result<_>>()?;
        out.table("jw_exact.csv", &["omega", "J"], &rows)?;
    }
    out.json("report.json", &reports)?;
    Ok(())
}

/// Recipes of one order as a single JSON line.
pub fn dyck_listing(order: usize, dump: bool) -> Result<Value> {
    let recipes = dyck::recipes(order)?;
    let body: Vec<Value> = if dump {
        recipes
            .iter()
            .map(|r| {
                let path = dyck::DyckPath::parse(&r.word)?;
                Ok(json!({
                    "word": r.word,
                    "crest": path.is_crest(),
                    "statistics": path.statistics(),
                    "solid": r.solid,
                    "dashed": r.dashed,
                }))
            })
            .collect::<memkernel_core::Result<_>>()?
    } else {
        recipes.iter().map(|r| Value::String(r.word.clone())).collect()
    };
    Ok(json!({
        "task": Task::Dyck.name(),
        "order": order,
        "count": recipes.len(),
        "catalan": dyck::catalan(order).to_string(),
        "recipes": body,
    }))
}

/// Run one task, writing artifacts under `dir`.
pub fn run(cfg: &ExperimentConfig, task: Task, dir: &Path) -> Result<Summary> {
    let mut out = Artifacts::new(dir, cfg.hash())?;
    match task {
        Task::Propagate => propagate(cfg, &mut out)?,
        Task::Kernels => kernels(cfg, &mut out)?,
        Task::Invert => invert(cfg, &mut out)?,
        Task::ExtractJw => extract_jw(cfg, &mut out)?,
        Task::Dyck => {
            let listing = dyck_listing(cfg.discretization.order, true)?;
            out.json("dyck.json", &listing)?;
            out.metric("count", listing["count"].clone());
        }
    }
    Ok(out.finish(task))
}
