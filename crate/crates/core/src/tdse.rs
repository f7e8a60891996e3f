//! Grid Schrödinger solvers used as an independent check on the kernels:
//! Strang split-operator stepping with a spectral kinetic term, and dense
//! exponentiation of the discretized Hamiltonian on small grids.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, GridState};
use crate::model::{potential, system_potential, SystemParams};

/// Largest grid accepted by [`dense_expm_evolve`].
pub const DENSE_LIMIT: usize = 4096;
/// Bound on `Δt·max|V|/ħ`.
pub const MAX_PHASE_STEP: f64 = 0.1;
/// Allowed norm drift before a run is declared unstable.
pub const NORM_DRIFT_TOL: f64 = 1e-8;
/// Input states must decay to this fraction of their peak at the grid edge.
pub const BOUNDARY_TOL: f64 = 1e-8;

/// The Hamiltonian `p²/2m + V` on a grid of matching dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Hamiltonian {
    /// One oscillator `½mΩ²x²`.
    Mode { m: f64, omega: f64, hbar: f64 },
    /// The two coupled system oscillators over `(x₁, x₂)`.
    System(SystemParams),
    /// System and bath over `(x₁, x₂, q)`.
    Full(SystemParams),
}

impl Hamiltonian {
    /// The Hamiltonian matching a grid of `dims` dimensions: a single
    /// oscillator at ω, the system, or system + bath.
    pub fn for_dims(p: &SystemParams, dims: usize) -> Result<Self> {
        match dims {
            1 => Ok(Hamiltonian::Mode { m: p.m, omega: p.omega, hbar: p.hbar }),
            2 => Ok(Hamiltonian::System(*p)),
            3 => Ok(Hamiltonian::Full(*p)),
            got => Err(Error::DimensionMismatch { expected: 3, got }),
        }
    }

    pub fn dims(&self) -> usize {
        match self {
            Hamiltonian::Mode { .. } => 1,
            Hamiltonian::System(_) => 2,
            Hamiltonian::Full(_) => 3,
        }
    }

    pub fn mass(&self) -> f64 {
        match self {
            Hamiltonian::Mode { m, .. } => *m,
            Hamiltonian::System(p) | Hamiltonian::Full(p) => p.m,
        }
    }

    pub fn hbar(&self) -> f64 {
        match self {
            Hamiltonian::Mode { hbar, .. } => *hbar,
            Hamiltonian::System(p) | Hamiltonian::Full(p) => p.hbar,
        }
    }

    pub fn potential(&self, x: &[f64]) -> f64 {
        match self {
            Hamiltonian::Mode { m, omega, .. } => 0.5 * m * omega * omega * x[0] * x[0],
            Hamiltonian::System(p) => system_potential(p, x[0], x[1]),
            Hamiltonian::Full(p) => potential(p, x[0], x[1], x[2]),
        }
    }

    fn check_grid(&self, spec: &GridSpec) -> Result<()> {
        if spec.dims() != self.dims() {
            return Err(Error::DimensionMismatch { expected: self.dims(), got: spec.dims() });
        }
        Ok(())
    }
}

/// Angular wavenumbers in FFT order for `n` points over `extent`.
fn wavenumbers(n: usize, extent: f64) -> Vec<f64> {
    (0..n)
        .map(|j| {
            let k = if j < n.div_ceil(2) { j as f64 } else { j as f64 - n as f64 };
            2.0 * PI * k / extent
        })
        .collect()
}

/// Unnormalized n-D FFT machinery over a row-major grid.
struct Spectral {
    n: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl Spectral {
    fn new(spec: &GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        Spectral {
            n: spec.n_points.clone(),
            forward: spec.n_points.iter().map(|&n| planner.plan_fft_forward(n)).collect(),
            inverse: spec.n_points.iter().map(|&n| planner.plan_fft_inverse(n)).collect(),
        }
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let d = self.n.len();
        for axis in 0..d {
            let len = self.n[axis];
            let stride: usize = self.n[axis + 1..].iter().product();
            let outer: usize = self.n[..axis].iter().product();
            let plan = if inverse { &self.inverse[axis] } else { &self.forward[axis] };
            if stride == 1 {
                plan.process(data);
                continue;
            }
            let mut line = vec![Complex64::new(0.0, 0.0); len];
            for o in 0..outer {
                for s in 0..stride {
                    let base = o * len * stride + s;
                    for (k, v) in line.iter_mut().enumerate() {
                        *v = data[base + k * stride];
                    }
                    plan.process(&mut line);
                    for (k, v) in line.iter().enumerate() {
                        data[base + k * stride] = *v;
                    }
                }
            }
        }
        if inverse {
            let scale = 1.0 / data.len() as f64;
            data.iter_mut().for_each(|v| *v *= scale);
        }
    }

    /// `ħ²|k|²/2m` at every point of the transformed grid.
    fn kinetic(spec: &GridSpec, m: f64, hbar: f64) -> Vec<f64> {
        let ks: Vec<Vec<f64>> = (0..spec.dims()).map(|d| wavenumbers(spec.n_points[d], spec.extent[d])).collect();
        (0..spec.len())
            .map(|i| {
                let idx = spec.multi_index(i);
                let k2: f64 = idx.iter().enumerate().map(|(d, &j)| ks[d][j] * ks[d][j]).sum();
                hbar * hbar * k2 / (2.0 * m)
            })
            .collect()
    }
}

/// Strang splitting `e^{−iVΔt/2ħ} e^{−iTΔt/ħ} e^{−iVΔt/2ħ}` with the kinetic
/// factor applied in Fourier space.
///
/// Errors: [`Error::StepTooLarge`] if `Δt·max|V|/ħ ≥ 0.1`,
/// [`Error::GridTooNarrow`] if `psi0` has not decayed at the boundary, and
/// [`Error::UnstableStep`] if the norm drifts by more than 1e-8.
pub fn split_operator_evolve(h: &Hamiltonian, psi0: &GridState, t: f64, n_steps: usize) -> Result<GridState> {
    let spec = &psi0.spec;
    h.check_grid(spec)?;
    if !spec.is_power_of_two() {
        return Err(Error::InvalidParameter("split-operator grids need power-of-two sizes".into()));
    }
    if n_steps == 0 || !(t >= 0.0) {
        return Err(Error::InvalidParameter("need t ≥ 0 and at least one step".into()));
    }
    psi0.check_boundary(BOUNDARY_TOL)?;
    let hbar = h.hbar();
    let dt = t / n_steps as f64;
    let v: Vec<f64> = (0..spec.len()).map(|i| h.potential(&spec.point(i))).collect();
    let vmax = v.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let ratio = dt * vmax / hbar;
    if ratio >= MAX_PHASE_STEP {
        return Err(Error::StepTooLarge(ratio));
    }
    let half_v: Vec<Complex64> = v.iter().map(|&vi| Complex64::from_polar(1.0, -vi * dt / (2.0 * hbar))).collect();
    let full_v: Vec<Complex64> = half_v.iter().map(|z| z * z).collect();
    let kin: Vec<Complex64> = Spectral::kinetic(spec, h.mass(), hbar)
        .iter()
        .map(|&e| Complex64::from_polar(1.0, -e * dt / hbar))
        .collect();
    let fft = Spectral::new(spec);
    let norm0 = psi0.norm();
    let mut psi = psi0.values.clone();
    // Adjacent half potential steps merge into one full step.
    psi.iter_mut().zip(&half_v).for_each(|(a, b)| *a *= b);
    for step in 0..n_steps {
        fft.transform(&mut psi, false);
        psi.iter_mut().zip(&kin).for_each(|(a, b)| *a *= b);
        fft.transform(&mut psi, true);
        let pv = if step + 1 == n_steps { &half_v } else { &full_v };
        psi.iter_mut().zip(pv).for_each(|(a, b)| *a *= b);
    }
    let out = GridState::new(spec.clone(), psi)?;
    let drift = (out.norm() - norm0).abs();
    if !(drift <= NORM_DRIFT_TOL * norm0.max(1.0)) {
        return Err(Error::UnstableStep(drift));
    }
    Ok(out)
}

/// Discretization of the kinetic operator for the dense solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KineticScheme {
    /// Second-order central differences with hard walls.
    #[default]
    FiniteDifference,
    /// The Fourier-space operator used by the split-operator solver.
    Spectral,
}

/// One-dimensional kinetic matrix.
fn kinetic_1d(n: usize, extent: f64, m: f64, hbar: f64, scheme: KineticScheme) -> DMatrix<f64> {
    let h = extent / n as f64;
    match scheme {
        KineticScheme::FiniteDifference => {
            let c = hbar * hbar / (2.0 * m * h * h);
            DMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
                0 => 2.0 * c,
                1 => -c,
                _ => 0.0,
            })
        }
        KineticScheme::Spectral => {
            let ks = wavenumbers(n, extent);
            let e: Vec<f64> = ks.iter().map(|k| hbar * hbar * k * k / (2.0 * m)).collect();
            DMatrix::from_fn(n, n, |i, j| {
                let dx = (i as f64 - j as f64) * h;
                e.iter().zip(&ks).map(|(ek, k)| ek * (k * dx).cos()).sum::<f64>() / n as f64
            })
        }
    }
}

/// The dense Hamiltonian matrix on `spec`.
pub fn hamiltonian_matrix(h: &Hamiltonian, spec: &GridSpec, scheme: KineticScheme) -> Result<DMatrix<f64>> {
    h.check_grid(spec)?;
    let n = spec.len();
    if n > DENSE_LIMIT {
        return Err(Error::TooLarge(n, DENSE_LIMIT));
    }
    let t1: Vec<DMatrix<f64>> = (0..spec.dims())
        .map(|d| kinetic_1d(spec.n_points[d], spec.extent[d], h.mass(), h.hbar(), scheme))
        .collect();
    let idx: Vec<Vec<usize>> = (0..n).map(|i| spec.multi_index(i)).collect();
    let mut mat = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let (a, b) = (&idx[i], &idx[j]);
            let mut acc = 0.0;
            for d in 0..a.len() {
                if (0..a.len()).all(|e| e == d || a[e] == b[e]) {
                    acc += t1[d][(a[d], b[d])];
                }
            }
            mat[(i, j)] = acc;
        }
        mat[(i, i)] += h.potential(&spec.point(i));
    }
    Ok(mat)
}

/// `ψ(t) = exp(−iHt/ħ)ψ₀` through the eigendecomposition of the dense
/// Hamiltonian. Limited to [`DENSE_LIMIT`] grid points.
pub fn dense_expm_evolve(h: &Hamiltonian, psi0: &GridState, t: f64, scheme: KineticScheme) -> Result<GridState> {
    let spec = &psi0.spec;
    let mat = hamiltonian_matrix(h, spec, scheme)?;
    let eig = SymmetricEigen::new(mat);
    let u = eig.eigenvectors.map(|v| Complex64::new(v, 0.0));
    let psi = DVector::from_column_slice(&psi0.values);
    let coeffs = u.adjoint() * psi;
    let hbar = h.hbar();
    let phased = DVector::from_fn(coeffs.len(), |k, _| {
        coeffs[k] * Complex64::from_polar(1.0, -eig.eigenvalues[k] * t / hbar)
    });
    let out = u * phased;
    GridState::new(spec.clone(), out.iter().copied().collect())
}

/// Eigenvalues of the dense Hamiltonian in ascending order.
pub fn spectrum(h: &Hamiltonian, spec: &GridSpec, scheme: KineticScheme) -> Result<Vec<f64>> {
    let mut e: Vec<f64> = SymmetricEigen::new(hamiltonian_matrix(h, spec, scheme)?).eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    Ok(e)
}

/// `⟨ψ|H|ψ⟩/⟨ψ|ψ⟩` with the spectral kinetic operator.
pub fn energy(h: &Hamiltonian, psi: &GridState) -> Result<f64> {
    let spec = &psi.spec;
    h.check_grid(spec)?;
    let norm_sq = psi.norm_sq();
    let dv = spec.cell_volume();
    let pot: f64 = (0..spec.len()).map(|i| psi.values[i].norm_sqr() * h.potential(&spec.point(i))).sum::<f64>() * dv;
    let mut hat = psi.values.clone();
    Spectral::new(spec).transform(&mut hat, false);
    let kin: f64 = Spectral::kinetic(spec, h.mass(), h.hbar())
        .iter()
        .zip(&hat)
        .map(|(e, z)| e * z.norm_sqr())
        .sum::<f64>()
        * dv
        / spec.len() as f64;
    Ok((pot + kin) / norm_sq)
}

/// A one-dimensional Gaussian packet evolved analytically in `½mΩ²x²`.
///
/// The state is `exp{(i/ħ)[α(x − x_t)² + p_t(x − x_t) + γ_t]}` with the
/// classical trajectory `(x_t, p_t)`, `α = (m/2)·Ż/Z` for
/// `Z(t) = cos Ωt + (2α₀/mΩ) sin Ωt`, and
/// `γ_t = γ₀ + (iħ/2)·ln Z + ½(p_t x_t − p₀ x₀)`, where `ln Z` follows `Z`
/// continuously around the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPacket {
    pub m: f64,
    pub omega: f64,
    pub hbar: f64,
    pub center: f64,
    pub momentum: f64,
    pub sigma: f64,
}

impl GaussianPacket {
    pub fn new(m: f64, omega: f64, hbar: f64, center: f64, momentum: f64, sigma: f64) -> Result<Self> {
        if !(m > 0.0 && omega > 0.0 && hbar > 0.0 && sigma > 0.0) {
            return Err(Error::InvalidParameter("packet needs m, Ω, ħ, σ > 0".into()));
        }
        Ok(GaussianPacket { m, omega, hbar, center, momentum, sigma })
    }

    /// Classical `(x_t, p_t)`.
    pub fn trajectory(&self, t: f64) -> (f64, f64) {
        let (s, c) = (self.omega * t).sin_cos();
        let mw = self.m * self.omega;
        (self.center * c + self.momentum / mw * s, self.momentum * c - mw * self.center * s)
    }

    /// `ψ(x, t)`; at `t = 0` this is `GridState::gaussian`'s packet.
    pub fn eval(&self, x: f64, t: f64) -> Complex64 {
        let i = Complex64::i();
        let kappa = self.hbar / (2.0 * self.m * self.omega * self.sigma * self.sigma);
        let u = self.omega * t;
        let (s, c) = u.sin_cos();
        let z = Complex64::new(c, kappa * s);
        let zdot = Complex64::new(-self.omega * s, kappa * self.omega * c);
        let alpha = 0.5 * self.m * zdot / z;
        // continuous arg Z: atan(κ tan u) shifted to agree with u at multiples of π
        let arg = if c == 0.0 { u } else { (kappa * s / c).atan() + PI * (u / PI).round() };
        let ln_z = Complex64::new(z.norm().ln(), arg);
        let (xt, pt) = self.trajectory(t);
        let gamma0 = -i * self.hbar * (2.0 * PI * self.sigma * self.sigma).powf(-0.25).ln();
        let gamma = gamma0 + 0.5 * i * self.hbar * ln_z + 0.5 * (pt * xt - self.momentum * self.center);
        let dx = x - xt;
        (i / self.hbar * (alpha * dx * dx + pt * dx + gamma)).exp()
    }
}
