//! Invariant checks shared by the property suite and the acceptance runner.
#![allow(dead_code)]

use memkernel_core::bath::{
    eta_coefficients, influence_table, BathStatistics, EtaOptions, EtaTable, InfluenceTable, SpectralDensity,
};
use memkernel_core::driven::{
    driven_kernels, half_step_schedule, liouvillian_sequence, BathTensors, DriveProfile, PauliChannel, Waveform,
};
use memkernel_core::gqme::{build_kernels_dyck, propagate_gqme};
use memkernel_core::inversion::{default_grid, forward_spectral_function, nodal_mask, spectral_density_from_eta};
use memkernel_core::linalg::CMatrix;
use memkernel_core::pathsum::exact_propagators;
use memkernel_core::system::{
    bare_full_step, bare_half_step, density_to_vector, liouvillian_step, pauli, trace_of, SystemHamiltonian,
};
use memkernel_core::C64;
use std::f64::consts::PI;

pub type Check = Result<(), String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

pub fn ohmic_bath(xi: f64, s: f64, wc: f64, beta: f64, dt: f64, k: usize) -> (EtaTable, InfluenceTable) {
    let j = SpectralDensity::ohmic(xi, s, wc).unwrap();
    let eta = eta_coefficients(&j, BathStatistics::Boson { beta }, dt, k, &EtaOptions::default()).unwrap();
    let table = influence_table(&eta, &[1.0, -1.0], k).unwrap();
    (eta, table)
}

pub fn bloch(theta: f64, phi: f64, r: f64) -> CMatrix {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let c = |v: f64| C64::new(v, 0.0);
    let m = pauli::x() * c(r * st * cp) + pauli::y() * c(r * st * sp) + pauli::z() * c(r * ct);
    (pauli::identity() + m) * c(0.5)
}

#[derive(Clone, Copy, Debug)]
pub struct TraceCase {
    pub eps: f64,
    pub delta: f64,
    pub xi: f64,
    pub s: f64,
    pub beta: f64,
    pub theta: f64,
    pub phi: f64,
    pub r: f64,
}

/// Truncated GQME and exact propagators keep unit trace.
pub fn trace_is_preserved(c: TraceCase) -> Check {
    let dt = 0.1;
    let h = SystemHamiltonian::spin_boson(c.eps, c.delta);
    let g = bare_half_step(&h, dt).unwrap();
    let f = bare_full_step(&g);
    let l = liouvillian_step(&h, dt).unwrap();
    let (_, table) = ohmic_bath(c.xi, c.s, 7.5, c.beta, dt, 5);
    let k = build_kernels_dyck(&g, &f, &l, &table, 5).unwrap();
    let rho0 = density_to_vector(&bloch(c.theta, c.phi, c.r));
    for truncation in [1, 3, 5] {
        let traj = propagate_gqme(&k, &l, &rho0, 20, truncation).unwrap();
        for rho in &traj {
            let err = (trace_of(rho) - 1.0).norm();
            ensure(err < 1e-10, || format!("GQME trace off by {err:e} at truncation {truncation}"))?;
        }
    }
    let u = exact_propagators(&g, &f, &table, 6).unwrap();
    for p in &u.props {
        let err = (trace_of(&p.apply(&rho0)) - 1.0).norm();
        ensure(err < 1e-10, || format!("path-sum trace off by {err:e}"))?;
    }
    Ok(())
}

/// `I_k[x, y] = conj(I_k[swap x, swap y])` for arbitrary eta and three-level couplings.
pub fn influence_respects_pair_swap(re: &[f64], im: &[f64], eigs: [f64; 3]) -> Check {
    let mut values: Vec<C64> = re.iter().zip(im).map(|(a, b)| C64::new(*a, *b)).collect();
    values[0].re = values[0].re.abs();
    let k_max = values.len() - 1;
    let eta = EtaTable::new(0.1, values);
    let t = influence_table(&eta, &eigs, k_max).unwrap();
    let d = 3;
    let swap = |x: usize| (x % d) * d + x / d;
    for x in 0..d * d {
        let err = (t.i0()[x] - t.i0()[swap(x)].conj()).norm();
        ensure(err < 1e-13, || format!("I0 asymmetric by {err:e}"))?;
    }
    for k in 1..=k_max {
        for x in 0..d * d {
            for y in 0..d * d {
                let err = (t.get(k, x, y) - t.get(k, swap(x), swap(y)).conj()).norm();
                ensure(err < 1e-13, || format!("I_{k} asymmetric by {err:e}"))?;
            }
        }
    }
    Ok(())
}

/// Without coupling only `K_0 = (F - L) / dt^2` survives.
pub fn zero_coupling_kernels_vanish(eps: f64, delta: f64, dt: f64) -> Check {
    let h = SystemHamiltonian::spin_boson(eps, delta);
    let g = bare_half_step(&h, dt).unwrap();
    let f = bare_full_step(&g);
    let l = liouvillian_step(&h, dt).unwrap();
    let (_, table) = ohmic_bath(0.0, 1.0, 7.5, 5.0, dt, 6);
    let k = build_kernels_dyck(&g, &f, &l, &table, 6).unwrap();
    let k0 = f.sub(&l).scale(1.0 / (dt * dt));
    let err = k.kernels[0].max_abs_diff(&k0);
    ensure(err < 1e-9 * (1.0 + k0.norm()), || format!("K0 differs from (F - L)/dt^2 by {err:e}"))?;
    for n in 1..=6 {
        let v = k.kernels[n].norm();
        ensure(v < 1e-12, || format!("K_{n} has norm {v:e}"))?;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug)]
pub struct ShiftCase {
    pub eps: f64,
    pub delta: f64,
    pub xi: f64,
    pub beta: f64,
    pub freq: f64,
    pub channel: usize,
}

/// Bath tensors rebuild identically and give window-independent kernels under a silent drive.
pub fn bath_tensors_are_shift_invariant(c: ShiftCase) -> Check {
    let dt = 0.1;
    let base = SystemHamiltonian::spin_boson(c.eps, c.delta);
    let ch = [PauliChannel::X, PauliChannel::Y, PauliChannel::Z][c.channel % 3];
    let w = Waveform { channel: ch, amplitude: 0.0, frequency: c.freq, phase: 0.3 };
    let h = DriveProfile::Sine { waveforms: vec![w] }.apply(&base).unwrap();
    let (_, table) = ohmic_bath(c.xi, 1.0, 7.5, c.beta, dt, 4);
    let a = BathTensors::build(&table, 3, 1).unwrap();
    let b = BathTensors::build(&table, 3, 1).unwrap();
    ensure(a.tensors == b.tensors, || "bath tensors differ between rebuilds".into())?;
    let steps = 8;
    let sched = half_step_schedule(&h, dt, steps).unwrap();
    let ls = liouvillian_sequence(&h, dt, steps).unwrap();
    let k = driven_kernels(&sched, &ls, &a, dt, steps).unwrap();
    for order in 0..=4 {
        let first = &k.kernels[order][order];
        let scale = 1.0 + first.norm();
        for n in order + 1..steps {
            let err = k.kernels[n][order].max_abs_diff(first);
            ensure(err < 1e-12 * scale, || format!("K at step {n}, order {order} drifts by {err:e}"))?;
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug)]
pub struct NodalCase {
    pub xi: f64,
    pub s: f64,
    pub wc: f64,
    pub beta: f64,
    pub dt: f64,
    pub stats: usize,
    pub mu: f64,
}

/// The sampled spectral function vanishes at `w dt / 2 = n pi` and those points are masked.
pub fn nodal_spectral_function_vanishes(c: NodalCase) -> Check {
    let j = SpectralDensity::ohmic(c.xi, c.s, c.wc).unwrap();
    let stats = match c.stats % 3 {
        0 => BathStatistics::Boson { beta: c.beta },
        1 => BathStatistics::SpinEffective { beta: c.beta },
        _ => BathStatistics::Fermion { beta: c.beta, mu: c.mu },
    };
    for n in 1..=3 {
        let w = 2.0 * PI * n as f64 / c.dt;
        let v = forward_spectral_function(&j, stats, c.dt, w).unwrap();
        ensure(v.abs() < 1e-10, || format!("spectral function {v:e} at node {n}"))?;
    }
    let grid = default_grid(c.dt, 512);
    let mask = nodal_mask(&grid, c.dt, 3.0);
    let eta = EtaTable::new(c.dt, vec![C64::new(0.1, 0.0), C64::new(0.05, -0.02)]);
    let out = spectral_density_from_eta(&eta, stats, &grid).unwrap();
    ensure(mask.iter().zip(&out.j).all(|(m, v)| *m == v.is_none()), || "mask disagrees with missing values".into())?;
    ensure(mask[0], || "zero frequency not masked".into())
}
