//! The four batch commands. Each validates the physics for every requested
//! time before computing anything and returns its tables; nothing is written
//! here.

use hidaprop::master::{evolve_density_with, DensityGrid};
use hidaprop::model::{mode_frequencies, ModeFrequencies, RESONANCE_TOL};
use hidaprop::propagator::{
    apply_kernel, system_kernel, FullKernel, BOUNDARY_TOL, CAUSTIC_TOL, GaussianWave, KernelOptions, PrefactorConvention,
};
use hidaprop::tdse::{split_operator_evolve, Hamiltonian};
use hidaprop::whitenoise::{bilinear_form, fredholm_determinant, noise_kernel, UnitWindowVector};
use hidaprop::{Error, GridSpec, GridState, QuadraticKernel, RotationAngles, SystemParams};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::config::{Command, Initial, RunConfig};
use crate::error::CliError;
use crate::table::{Cell, Table};

/// Phase accumulated per split-operator step, `Δt·max|V|/ħ`, when the step
/// count is chosen automatically.
const AUTO_PHASE_STEP: f64 = 0.02;

/// A summary table plus optional per-state tables, keyed by file suffix.
#[derive(Debug, Clone, PartialEq)]
pub struct Outputs {
    pub summary: Table,
    pub states: Vec<(String, Table)>,
}

pub fn run(cfg: &RunConfig) -> Result<Outputs, CliError> {
    match cfg.command {
        Command::Freqs => freqs(cfg),
        Command::VerifyWn => verify_wn(cfg),
        Command::Propagate => propagate(cfg),
        Command::EvolveDensity => evolve_density(cfg),
    }
}

fn kernel_options(cfg: &RunConfig) -> KernelOptions {
    let convention = if cfg.verbatim_prefactor { PrefactorConvention::Verbatim } else { PrefactorConvention::Corrected };
    KernelOptions { convention, ..Default::default() }
}

fn params_for(cfg: &RunConfig, lambda: f64, c: f64) -> Result<SystemParams, Error> {
    match cfg.omega_q {
        Some(wq) => SystemParams::new(cfg.m, cfg.omega, wq, lambda, c, cfg.hbar),
        None => SystemParams::resonant(cfg.m, cfg.omega, lambda, c, cfg.hbar),
    }
}

/// The single parameter set of the non-sweep commands, with its frequencies.
fn params(cfg: &RunConfig) -> Result<(SystemParams, ModeFrequencies), CliError> {
    let p = params_for(cfg, cfg.lambda[0], cfg.c[0])?;
    let f = mode_frequencies(&p)?;
    Ok((p, f))
}

fn freqs(cfg: &RunConfig) -> Result<Outputs, CliError> {
    let mut t = Table::new(vec![
        "m", "omega", "omega_q", "lambda", "c", "hbar", "omega1", "omega2", "phi2", "phi", "resonant", "decoupled",
    ]);
    for &lambda in &cfg.lambda {
        for &c in &cfg.c {
            // Frequencies are reported at resonance; a configured ω_q that
            // misses it is flagged rather than rejected.
            let p = SystemParams::resonant(cfg.m, cfg.omega, lambda, c, cfg.hbar)?;
            let f = mode_frequencies(&p)?;
            let wq = cfg.omega_q.unwrap_or(f.omega2);
            let resonant = ((f.omega2 - wq) / wq).abs() <= RESONANCE_TOL;
            t.push(vec![
                Cell::F(cfg.m),
                Cell::F(cfg.omega),
                Cell::F(wq),
                Cell::F(lambda),
                Cell::F(c),
                Cell::F(cfg.hbar),
                Cell::F(f.omega1),
                Cell::F(f.omega2),
                Cell::F(f.phi2),
                Cell::F(f.phi),
                Cell::B(resonant),
                Cell::B(c == 0.0),
            ]);
        }
    }
    Ok(Outputs { summary: t, states: Vec::new() })
}

fn verify_wn(cfg: &RunConfig) -> Result<Outputs, CliError> {
    let omegas = match &cfg.omega_modes {
        Some(w) => w.clone(),
        None => {
            let (_, f) = params(cfg)?;
            vec![f.omega1, f.phi2, f.phi]
        }
    };
    let mut t = Table::new(vec![
        "omega", "t", "n", "det_num", "det_exact", "det_err", "bil_num", "bil_exact", "bil_err", "status",
    ]);
    for &w in &omegas {
        for &time in &cfg.times {
            for &n in &cfg.n_list {
                let det_exact = (w * time).cos();
                let bil_exact = if w == 0.0 { 1.0 } else { (w * time).tan() / (w * time) };
                let (det_num, bil_num, mut status) = if w == 0.0 {
                    // S″ vanishes: the operator is the identity and the unit
                    // window has norm one by construction.
                    (1.0, 1.0, "ok")
                } else {
                    let k = noise_kernel(w, time, n)?;
                    match bilinear_form(&k, &UnitWindowVector::new(n)) {
                        Ok(b) => (fredholm_determinant(&k), b, "ok"),
                        Err(Error::SingularOperator(_)) => (fredholm_determinant(&k), f64::NAN, "caustic"),
                        Err(e) => return Err(e.into()),
                    }
                };
                if det_exact.abs() < CAUSTIC_TOL {
                    status = "caustic";
                }
                t.push(vec![
                    Cell::F(w),
                    Cell::F(time),
                    Cell::I(n as u64),
                    Cell::F(det_num),
                    Cell::F(det_exact),
                    Cell::F((det_num - det_exact).abs()),
                    Cell::F(bil_num),
                    Cell::F(bil_exact),
                    Cell::F((bil_num - bil_exact).abs()),
                    Cell::S(status.into()),
                ]);
            }
        }
    }
    Ok(Outputs { summary: t, states: Vec::new() })
}

fn grid(cfg: &RunConfig) -> Result<GridSpec, CliError> {
    Ok(GridSpec::cube(cfg.dims, cfg.grid_n, cfg.grid_extent)?)
}

fn pure_initial(cfg: &RunConfig, p: &SystemParams, spec: &GridSpec, center: &[f64]) -> Result<GridState, CliError> {
    let psi = match cfg.initial {
        Initial::Ground => {
            let g = GaussianWave::system_ground_state(
                p,
                [center[0], center[1]],
                [cfg.momentum[0], cfg.momentum[1]],
            )?;
            g.on_grid(spec)?
        }
        Initial::Packet | Initial::Mixture => GridState::gaussian(spec.clone(), center, &cfg.momentum, cfg.sigma, p.hbar)?,
    };
    psi.check_boundary(BOUNDARY_TOL)?;
    Ok(psi.normalized())
}

fn coord_names(dims: usize) -> &'static [&'static str] {
    if dims == 2 {
        &["x1", "x2"]
    } else {
        &["x1", "x2", "q"]
    }
}

fn auto_steps(h: &Hamiltonian, spec: &GridSpec, t: f64) -> usize {
    let vmax = spec.points().iter().map(|x| h.potential(x).abs()).fold(0.0, f64::max);
    ((t * vmax / (AUTO_PHASE_STEP * h.hbar())).ceil() as usize).max(100)
}

fn propagate(cfg: &RunConfig) -> Result<Outputs, CliError> {
    let (p, _) = params(cfg)?;
    let opts = kernel_options(cfg);
    let spec = grid(cfg)?;
    let psi0 = pure_initial(cfg, &p, &spec, &cfg.center)?;
    let kernels = cfg
        .times
        .iter()
        .map(|&t| match cfg.dims {
            2 => system_kernel(&p, t, &opts),
            _ => FullKernel::with_angles(&p, t, &RotationAngles::default(), &opts)?.to_quadratic(),
        })
        .collect::<Result<Vec<QuadraticKernel>, Error>>()?;
    let h = Hamiltonian::for_dims(&p, cfg.dims)?;

    let names = coord_names(cfg.dims);
    let mut summary = Table::new(vec![
        "t", "norm_initial", "norm_kernel", "norm_oracle", "overlap_re", "overlap_im", "l2_error", "tdse_steps",
    ]);
    let mut states = Vec::new();
    if cfg.write_states {
        let mut cols = names.to_vec();
        cols.extend(["re", "im"]);
        let mut init = Table::new(cols);
        for (i, z) in psi0.values.iter().enumerate() {
            init.push(state_row(&spec.point(i), &[*z]));
        }
        states.push(("initial".to_string(), init));
    }
    for (k, (&t, kernel)) in cfg.times.iter().zip(&kernels).enumerate() {
        let psi = apply_kernel(kernel, &psi0)?;
        let steps = cfg.tdse_steps.unwrap_or_else(|| auto_steps(&h, &spec, t));
        let oracle = split_operator_evolve(&h, &psi0, t, steps)?;
        let overlap = oracle.inner(&psi);
        summary.push(vec![
            Cell::F(t),
            Cell::F(psi0.norm()),
            Cell::F(psi.norm()),
            Cell::F(oracle.norm()),
            Cell::F(overlap.re),
            Cell::F(overlap.im),
            Cell::F(psi.l2_distance(&oracle)),
            Cell::I(steps as u64),
        ]);
        if cfg.write_states {
            let mut cols = names.to_vec();
            cols.extend(["re", "im", "oracle_re", "oracle_im"]);
            let mut tab = Table::new(cols);
            for i in 0..spec.len() {
                tab.push(state_row(&spec.point(i), &[psi.values[i], oracle.values[i]]));
            }
            states.push((format!("t{k}"), tab));
        }
    }
    Ok(Outputs { summary, states })
}

fn state_row(x: &[f64], values: &[Complex64]) -> Vec<Cell> {
    let mut row: Vec<Cell> = x.iter().map(|&v| Cell::F(v)).collect();
    for z in values {
        row.push(Cell::F(z.re));
        row.push(Cell::F(z.im));
    }
    row
}

fn initial_density(cfg: &RunConfig, p: &SystemParams, spec: &GridSpec) -> Result<DensityGrid, CliError> {
    if cfg.initial != Initial::Mixture {
        return Ok(DensityGrid::from_pure(&pure_initial(cfg, p, spec, &cfg.center)?));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let w = 1.0 / cfg.mixture_count as f64;
    let mut parts = Vec::with_capacity(cfg.mixture_count);
    for _ in 0..cfg.mixture_count {
        let c: Vec<f64> = cfg
            .center
            .iter()
            .map(|&c0| {
                let z: f64 = StandardNormal.sample(&mut rng);
                c0 + cfg.mixture_spread * z
            })
            .collect();
        parts.push((w, pure_initial(cfg, p, spec, &c)?));
    }
    Ok(DensityGrid::mixture(&parts)?)
}

fn evolve_density(cfg: &RunConfig) -> Result<Outputs, CliError> {
    let (p, _) = params(cfg)?;
    let opts = kernel_options(cfg);
    let spec = grid(cfg)?;
    for &t in &cfg.times {
        system_kernel(&p.without_bath_coupling(), t, &opts)?;
    }
    let rho0 = initial_density(cfg, &p, &spec)?;
    rho0.validate()?;
    rho0.check_boundary()?;

    let mut summary = Table::new(vec!["t", "trace_re", "trace_im", "purity", "hermiticity"]);
    let mut states = Vec::new();
    let mut push = |label: String, rho: &DensityGrid, summary: &mut Table| {
        let tr = rho.trace();
        summary.push(vec![
            Cell::F(rho.time),
            Cell::F(tr.re),
            Cell::F(tr.im),
            Cell::F(rho.purity()),
            Cell::F(rho.hermiticity_residual()),
        ]);
        if cfg.write_states {
            let mut tab = Table::new(vec!["x1", "x2", "x1p", "x2p", "re", "im"]);
            let pts = spec.points();
            for i in 0..pts.len() {
                for j in 0..pts.len() {
                    let z = rho.values[(i, j)];
                    let row = [pts[i][0], pts[i][1], pts[j][0], pts[j][1], z.re, z.im];
                    tab.push(row.iter().map(|&v| Cell::F(v)).collect());
                }
            }
            states.push((label, tab));
        }
    };
    push("initial".into(), &rho0, &mut summary);
    for (k, &t) in cfg.times.iter().enumerate() {
        let rho = evolve_density_with(&p, &rho0, t, &opts)?;
        push(format!("t{k}"), &rho, &mut summary);
    }
    Ok(Outputs { summary, states })
}
