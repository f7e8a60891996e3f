//! Liouville-space propagation of the reduced system density matrix.
//!
//! With the bath coupling set to zero before the bath mode is traced out, the
//! full kernel factorizes into a system part and a bath part. The bath part
//! traces to one, so the reduced evolution is the unitary
//! `ρ(t) = K ρ₀ K†` of the two coupled system oscillators: no
//! environment-induced decoherence survives this trace.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gaussian::{gaussian_integral, QuadraticKernel};
use crate::grid::{GridSpec, GridState};
use crate::model::{mode_frequencies, SystemParams};
use crate::par;
use crate::propagator::{
    system_kernel, FullKernel, GaussianWave, KernelOptions, ModeKernel, ModeLabel, PrefactorConvention,
    BOUNDARY_TOL,
};

/// Tolerances of the [`DensityGrid`] invariants.
pub const HERMITICITY_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-6;

/// A density matrix `ρ(x; x′)` sampled on a system grid; `values[(i, j)]` is
/// `ρ(point(i); point(j))`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub spec: GridSpec,
    pub values: DMatrix<Complex64>,
    pub time: f64,
}

impl DensityGrid {
    pub fn new(spec: GridSpec, values: DMatrix<Complex64>, time: f64) -> Result<Self> {
        let n = spec.len();
        if values.nrows() != n || values.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: values.nrows() });
        }
        Ok(DensityGrid { spec, values, time })
    }

    pub fn from_fn(spec: GridSpec, f: impl Fn(&[f64], &[f64]) -> Complex64) -> Self {
        let pts = spec.points();
        let n = pts.len();
        let values = DMatrix::from_fn(n, n, |i, j| f(&pts[i], &pts[j]));
        DensityGrid { spec, values, time: 0.0 }
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn from_pure(psi: &GridState) -> Self {
        let v = DVector::from_column_slice(&psi.values);
        DensityGrid { spec: psi.spec.clone(), values: &v * v.adjoint(), time: 0.0 }
    }

    /// `Σ w_k |ψ_k⟩⟨ψ_k|`.
    pub fn mixture(states: &[(f64, GridState)]) -> Result<Self> {
        let first = states.first().ok_or_else(|| Error::InvalidParameter("empty mixture".into()))?;
        let spec = first.1.spec.clone();
        let mut values = DMatrix::<Complex64>::zeros(spec.len(), spec.len());
        for (w, psi) in states {
            if psi.spec != spec {
                return Err(Error::InvalidParameter("mixture states live on different grids".into()));
            }
            if !(*w >= 0.0) {
                return Err(Error::InvalidParameter("mixture weights must be non-negative".into()));
            }
            values += DensityGrid::from_pure(psi).values * Complex64::new(*w, 0.0);
        }
        Ok(DensityGrid { spec, values, time: 0.0 })
    }

    /// `|ψ⟩⟨ψ|` for an analytic Gaussian sampled on `spec`.
    pub fn from_gaussian(spec: &GridSpec, psi: &GaussianWave) -> Result<Self> {
        Ok(Self::from_pure(&psi.on_grid(spec)?))
    }

    /// `Σ ρ(x; x)·ΔV`.
    pub fn trace(&self) -> Complex64 {
        self.values.diagonal().sum() * self.spec.cell_volume()
    }

    /// `Tr ρ² = Σ ρ(x; x′)ρ(x′; x)·ΔV²`.
    pub fn purity(&self) -> f64 {
        let n = self.spec.len();
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                acc += self.values[(i, j)] * self.values[(j, i)];
            }
        }
        acc.re * self.spec.cell_volume().powi(2)
    }

    /// `max |ρ(x; x′) − conj ρ(x′; x)|`.
    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.spec.len();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..=i {
                worst = worst.max((self.values[(i, j)] - self.values[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Checks Hermiticity (to 1e-12 of the peak entry) and unit trace (to 1e-6).
    pub fn validate(&self) -> Result<()> {
        let peak = self.values.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let herm = self.hermiticity_residual();
        if herm > HERMITICITY_TOL * peak.max(1.0) {
            return Err(Error::InvalidParameter(format!("density matrix is not Hermitian (residual {herm:e})")));
        }
        let tr = self.trace();
        if (tr - 1.0).norm() > TRACE_TOL {
            return Err(Error::InvalidParameter(format!("density matrix trace is {tr}, not 1")));
        }
        Ok(())
    }

    /// Fails if the boundary rows exceed the edge tolerance relative to the peak.
    pub fn check_boundary(&self) -> Result<()> {
        let n = self.spec.len();
        let peak = self.values.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let mut edge = 0.0f64;
        for i in (0..n).filter(|&i| self.spec.is_boundary(i)) {
            edge = edge.max(self.values.row(i).iter().map(|z| z.norm()).fold(0.0, f64::max));
        }
        // Boundary rows hold ψ(edge)·ψ*(centre), linear in the edge amplitude.
        let limit = BOUNDARY_TOL * peak;
        if edge > limit {
            return Err(Error::GridTooNarrow { edge, limit });
        }
        Ok(())
    }
}

/// How the bath mode is treated in the Liouville propagator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CouplingMode {
    /// The coupling C is set to zero and the bath traced out; the reduced
    /// evolution is unitary on the system.
    #[default]
    BathDecoupled,
    /// The full three-mode kernel with C kept; only `K·K*` evaluation is
    /// available, not the reduced evolution.
    Retained,
}

/// `J(x, x₀; x′, x₀′; t) = K(x, x₀; t)·K*(x′, x₀′; t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiouvillePropagator {
    pub forward: FullKernel,
    pub backward: FullKernel,
    pub coupling_mode: CouplingMode,
}

impl LiouvillePropagator {
    pub fn new(p: &SystemParams, t: f64, mode: CouplingMode) -> Result<Self> {
        let q = match mode {
            CouplingMode::BathDecoupled => p.without_bath_coupling(),
            CouplingMode::Retained => *p,
        };
        let forward = FullKernel::new(&q, t)?;
        Ok(LiouvillePropagator { backward: forward.clone(), forward, coupling_mode: mode })
    }

    pub fn params(&self) -> &SystemParams {
        &self.forward.params
    }

    /// Full-space `J` over `(x₁, x₂, q)` for both branches.
    pub fn eval(&self, x: [f64; 3], x0: [f64; 3], xp: [f64; 3], xp0: [f64; 3]) -> Complex64 {
        self.forward.eval_two_point(x, x0) * self.backward.eval_two_point(xp, xp0).conj()
    }

    /// The origin-pinned reduced kernel; see [`liouville_kernel`].
    pub fn reduced_kernel(&self, x1: f64, x2: f64, x1p: f64, x2p: f64) -> Result<Complex64> {
        if self.coupling_mode != CouplingMode::BathDecoupled {
            return Err(Error::CouplingNotTraced);
        }
        liouville_kernel(self.params(), self.forward.time, x1, x2, x1p, x2p)
    }

    /// `ρ(t) = K ρ₀ K†` on the system grid of `rho0`.
    pub fn evolve(&self, rho0: &DensityGrid) -> Result<DensityGrid> {
        if self.coupling_mode != CouplingMode::BathDecoupled {
            return Err(Error::CouplingNotTraced);
        }
        evolve_with_kernel(&system_kernel(self.params(), self.forward.time, &KernelOptions::default())?, rho0)
    }
}

/// The reduced Liouville kernel with all initial coordinates at the origin:
/// `(m/2πħ)²·Ω₁Φ₂/|sin Ω₁t·sin Φ₂t|·exp{(imΩ₁/4ħ)[(x₁−x₂)² − (x₁′−x₂′)²] cot Ω₁t
/// + (imΦ₂/4ħ)[(x₁+x₂)² − (x₁′+x₂′)²] cot Φ₂t}`, evaluated with C = 0.
pub fn liouville_kernel(p: &SystemParams, t: f64, x1: f64, x2: f64, x1p: f64, x2p: f64) -> Result<Complex64> {
    liouville_kernel_with(p, t, x1, x2, x1p, x2p, PrefactorConvention::Corrected)
}

/// [`liouville_kernel`] with a choice of prefactor; the verbatim convention
/// divides by an extra `t²`.
pub fn liouville_kernel_with(
    p: &SystemParams,
    t: f64,
    x1: f64,
    x2: f64,
    x1p: f64,
    x2p: f64,
    convention: PrefactorConvention,
) -> Result<Complex64> {
    let q = p.without_bath_coupling();
    let f = mode_frequencies(&q)?;
    let opts = KernelOptions { convention, ..Default::default() };
    // validates t and the caustic conditions for both modes
    ModeKernel::with_options(ModeLabel::Q1, q.m, f.omega1, t, q.hbar, &opts)?;
    ModeKernel::with_options(ModeLabel::BigQ2, q.m, f.phi2, t, q.hbar, &opts)?;
    let (s1, s2) = ((f.omega1 * t).sin(), (f.phi2 * t).sin());
    let tfac = match convention {
        PrefactorConvention::Corrected => 1.0,
        PrefactorConvention::Verbatim => t * t,
    };
    let pre = (q.m / (2.0 * PI * q.hbar)).powi(2) * f.omega1 * f.phi2 / (s1 * s2).abs() / tfac;
    let cot = |w: f64, s: f64| (w * t).cos() / s;
    let e1 = q.m * f.omega1 / (4.0 * q.hbar) * ((x1 - x2).powi(2) - (x1p - x2p).powi(2)) * cot(f.omega1, s1);
    let e2 = q.m * f.phi2 / (4.0 * q.hbar) * ((x1 + x2).powi(2) - (x1p + x2p).powi(2)) * cot(f.phi2, s2);
    Ok(Complex64::from_polar(pre, e1 + e2))
}

/// The two factors of the C = 0 kernel and the norm of the evolved bath state.
#[derive(Debug, Clone, PartialEq)]
pub struct TracedBath {
    /// System kernel over `(x₁, x₂, x₁₀, x₂₀)`.
    pub system: QuadraticKernel,
    /// Bath kernel over `(q, q₀)`.
    pub bath: QuadraticKernel,
    /// `∫|χ(q, t)|² dq` for the evolved bath state χ.
    pub bath_norm: f64,
}

/// Splits the C = 0 full kernel into system and bath factors and traces the
/// bath: `Tr_q[K (ρ_S ⊗ |χ⟩⟨χ|) K†] = ρ_S(t)·⟨χ(t)|χ(t)⟩`, with the last
/// factor evaluated as an exact Gaussian integral over q.
pub fn bath_trace(p: &SystemParams, t: f64, bath_state: &GaussianWave) -> Result<TracedBath> {
    if bath_state.dims() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: bath_state.dims() });
    }
    let q = p.without_bath_coupling();
    let full = FullKernel::new(&q, t)?.to_quadratic()?;
    let sys_idx = [0usize, 1, 3, 4];
    let bath_idx = [2usize, 5];
    let scale = full.form.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for &i in &sys_idx {
        for &j in &bath_idx {
            let v = full.form[(i, j)].norm();
            if v > 1e-12 * scale {
                return Err(Error::InvalidParameter(format!("kernel does not factorize (cross term {v:e})")));
            }
        }
    }
    let sub = |idx: &[usize]| DMatrix::from_fn(idx.len(), idx.len(), |a, b| full.form[(idx[a], idx[b])]);
    let f = mode_frequencies(&q)?;
    // The bath factor carries one Ω₂ prefactor, the system factor the rest.
    let bath_pre = ModeKernel::new(ModeLabel::BigQ, q.m, f.omega2, t, q.hbar)?.kernel.prefactor;
    let bath = QuadraticKernel::new(bath_pre, sub(&bath_idx), t, q.hbar)?;
    let system = QuadraticKernel::new(full.prefactor / bath_pre, sub(&sys_idx), t, q.hbar)?;
    let chi = bath_state.propagate(&bath)?;
    let form = &chi.form + chi.form.conjugate();
    let shift = &chi.shift + chi.shift.conjugate();
    let bath_norm = (gaussian_integral(&form, &shift)? * chi.norm.norm_sqr()).re;
    Ok(TracedBath { system, bath, bath_norm })
}

/// `ρ(x; x′; t) = ∫∫ J(x, x₀; x′, x₀′; t) ρ₀(x₀; x₀′) dx₀ dx₀′` with C set
/// to zero, by midpoint quadrature on `rho0`'s grid.
pub fn evolve_density(p: &SystemParams, rho0: &DensityGrid, t: f64) -> Result<DensityGrid> {
    LiouvillePropagator::new(p, t, CouplingMode::BathDecoupled)?.evolve(rho0)
}

/// [`evolve_density`] with explicit kernel options (prefactor convention,
/// caustic threshold).
pub fn evolve_density_with(p: &SystemParams, rho0: &DensityGrid, t: f64, opts: &KernelOptions) -> Result<DensityGrid> {
    evolve_with_kernel(&system_kernel(&p.without_bath_coupling(), t, opts)?, rho0)
}

fn evolve_with_kernel(kernel: &QuadraticKernel, rho0: &DensityGrid) -> Result<DensityGrid> {
    let spec = &rho0.spec;
    if kernel.dim != 2 * spec.dims() {
        return Err(Error::DimensionMismatch { expected: kernel.dim / 2, got: spec.dims() });
    }
    rho0.validate()?;
    rho0.check_boundary()?;
    let u = quadrature_matrix(kernel, spec);
    let values = complex_matmul(&complex_matmul(&u, &rho0.values), &u.adjoint());
    DensityGrid::new(spec.clone(), values, rho0.time + kernel.time)
}

/// Complex product through three real products (Gauss), which use the
/// blocked real matrix kernel.
fn complex_matmul(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let (ar, ai) = (a.map(|z| z.re), a.map(|z| z.im));
    let (br, bi) = (b.map(|z| z.re), b.map(|z| z.im));
    let k1 = &ar * &br;
    let k2 = &ai * &bi;
    let k3 = (&ar + &ai) * (&br + &bi);
    let im = k3 - &k1 - &k2;
    (k1 - k2).zip_map(&im, Complex64::new)
}

/// `U_ij = K(x_i, x_j)·ΔV`, so that `ψ(t) = U ψ₀` on the grid.
pub fn quadrature_matrix(kernel: &QuadraticKernel, spec: &GridSpec) -> DMatrix<Complex64> {
    let pts = spec.points();
    let n = pts.len();
    let dv = spec.cell_volume();
    let cols = par::map_range(n, |j| {
        let mut z = pts[j].clone();
        let d = z.len();
        z.extend_from_slice(&pts[j]);
        (0..n)
            .map(|i| {
                z[..d].copy_from_slice(&pts[i]);
                kernel.eval(&z) * dv
            })
            .collect::<Vec<_>>()
    });
    DMatrix::from_fn(n, n, |i, j| cols[j][i])
}
