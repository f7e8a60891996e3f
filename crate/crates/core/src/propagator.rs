//! Closed-form kernels: the single-mode Mehler kernel, the three normal-mode
//! kernels, the full kernel in original coordinates, and propagation of grid
//! and Gaussian states.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gaussian::{gaussian_integral, QuadraticKernel};
use crate::grid::{GridSpec, GridState};
use crate::model::{mode_frequencies, ModeFrequencies, RotationAngles, SystemParams};
use crate::par;

/// Default caustic threshold on |sin Ωt|.
pub const CAUSTIC_TOL: f64 = 1e-10;

/// Input states must decay to this fraction of their peak at the grid edge.
pub const BOUNDARY_TOL: f64 = 1e-10;

/// Normal mode a kernel belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModeLabel {
    /// The antisymmetric system mode, frequency Ω₁.
    Q1,
    /// The first system-bath mode, frequency Φ₂ on the default branch.
    BigQ2,
    /// The second system-bath mode, frequency Φ on the default branch.
    BigQ,
}

impl ModeLabel {
    pub const ALL: [ModeLabel; 3] = [ModeLabel::Q1, ModeLabel::BigQ2, ModeLabel::BigQ];

    pub fn name(self) -> &'static str {
        match self {
            ModeLabel::Q1 => "q1",
            ModeLabel::BigQ2 => "Q2",
            ModeLabel::BigQ => "Q",
        }
    }
}

/// Which prefactor to use for the oscillator kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PrefactorConvention {
    /// `√(mΩ/(2πiħ sin Ωt))`: unitary, reduces to δ(x − x₀) as t → 0.
    #[default]
    Corrected,
    /// `√(mΩ/(2πiħ t sin Ωt))`, with an extra `1/t` under the root. Kept for
    /// comparison with the printed formulas only; it is not unitary.
    Verbatim,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelOptions {
    pub convention: PrefactorConvention,
    pub caustic_tol: f64,
}

impl Default for KernelOptions {
    fn default() -> Self {
        KernelOptions { convention: PrefactorConvention::Corrected, caustic_tol: CAUSTIC_TOL }
    }
}

/// A single-mode two-point kernel `K(x, x₀; t)`; `kernel` has `dim = 2` with
/// coordinates ordered `(x, x₀)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeKernel {
    pub mode_label: ModeLabel,
    pub omega_mode: f64,
    pub kernel: QuadraticKernel,
}

impl ModeKernel {
    pub fn new(label: ModeLabel, m: f64, omega_mode: f64, t: f64, hbar: f64) -> Result<Self> {
        Self::with_options(label, m, omega_mode, t, hbar, &KernelOptions::default())
    }

    pub fn with_options(
        label: ModeLabel,
        m: f64,
        omega_mode: f64,
        t: f64,
        hbar: f64,
        opts: &KernelOptions,
    ) -> Result<Self> {
        let (prefactor, a, b) = oscillator_coefficients(label.name(), m, omega_mode, t, hbar, opts)?;
        let form = DMatrix::from_row_slice(2, 2, &[a, b, b, a]).map(|v| Complex64::new(v, 0.0));
        Ok(ModeKernel { mode_label: label, omega_mode, kernel: QuadraticKernel::new(prefactor, form, t, hbar)? })
    }

    pub fn eval(&self, x: f64, x0: f64) -> Complex64 {
        self.kernel.eval(&[x, x0])
    }
}

/// Prefactor and the real coefficients `(a, b)` of the exponent
/// `(i/ħ)(a x² + 2b x x₀ + a x₀²)` of an oscillator kernel.
///
/// The prefactor is `√(mΩ/(2πħ|sin Ωt|))·e^{−iπ/4 − iπ/2·⌊Ωt/π⌋}`: the
/// principal branch of `(i sin Ωt)^{−1/2}` inside the first half-period, with
/// a Maslov phase of `−π/2` picked up at every caustic crossed.
fn oscillator_coefficients(
    name: &str,
    m: f64,
    omega: f64,
    t: f64,
    hbar: f64,
    opts: &KernelOptions,
) -> Result<(Complex64, f64, f64)> {
    if !(m > 0.0 && hbar > 0.0 && t > 0.0 && omega >= 0.0) || !(m * omega * t * hbar).is_finite() {
        return Err(Error::InvalidParameter(format!(
            "oscillator kernel needs m, ħ, t > 0 and Ω ≥ 0 (m={m}, Ω={omega}, t={t}, ħ={hbar})"
        )));
    }
    let tfac = match opts.convention {
        PrefactorConvention::Corrected => 1.0,
        PrefactorConvention::Verbatim => t,
    };
    if omega == 0.0 {
        let modulus = (m / (2.0 * PI * hbar * t * tfac)).sqrt();
        let a = m / (2.0 * t);
        return Ok((Complex64::from_polar(modulus, -PI / 4.0), a, -a));
    }
    let phase_arg = omega * t;
    let (s, c) = phase_arg.sin_cos();
    if s.abs() < opts.caustic_tol {
        return Err(Error::Caustic { mode: name.to_string(), sin_abs: s.abs() });
    }
    let modulus = (m * omega / (2.0 * PI * hbar * s.abs() * tfac)).sqrt();
    let crossings = (phase_arg / PI).floor();
    let phase = -PI / 4.0 - PI / 2.0 * crossings;
    let scale = m * omega / (2.0 * s);
    Ok((Complex64::from_polar(modulus, phase), scale * c, -scale))
}

/// `K(x, x₀; t) = √(mΩ/(2πiħ sin Ωt))·exp[(imΩ/2ħ)((x² + x₀²) cos Ωt − 2x x₀)/sin Ωt]`.
///
/// Falls back to the free-particle kernel at Ω = 0.
pub fn mehler_kernel(m: f64, omega_mode: f64, t: f64, x_final: f64, x_initial: f64, hbar: f64) -> Result<Complex64> {
    mehler_kernel_with(m, omega_mode, t, x_final, x_initial, hbar, &KernelOptions::default())
}

pub fn mehler_kernel_with(
    m: f64,
    omega_mode: f64,
    t: f64,
    x_final: f64,
    x_initial: f64,
    hbar: f64,
    opts: &KernelOptions,
) -> Result<Complex64> {
    let (pre, a, b) = oscillator_coefficients("single", m, omega_mode, t, hbar, opts)?;
    let q = a * (x_final * x_final + x_initial * x_initial) + 2.0 * b * (x_final * x_initial);
    Ok(pre * Complex64::new(0.0, q / hbar).exp())
}

/// The three-mode kernel in original coordinates `(x₁, x₂, q)`.
///
/// Mode `k` acts on the rotated coordinate `R_k·x`, where `R_k` is row `k` of
/// the rotation matrix; evaluation is the product of the three mode kernels.
#[derive(Debug, Clone, PartialEq)]
pub struct FullKernel {
    pub params: SystemParams,
    pub freqs: ModeFrequencies,
    pub angles: RotationAngles,
    pub time: f64,
    pub factors: [ModeKernel; 3],
    pub rotation: [[f64; 3]; 3],
}

impl FullKernel {
    pub fn new(p: &SystemParams, t: f64) -> Result<Self> {
        Self::with_angles(p, t, &RotationAngles::default(), &KernelOptions::default())
    }

    pub fn with_angles(p: &SystemParams, t: f64, angles: &RotationAngles, opts: &KernelOptions) -> Result<Self> {
        let freqs = mode_frequencies(p)?;
        let omegas = freqs.for_angles(angles)?;
        let mut factors = Vec::with_capacity(3);
        for (label, &w) in ModeLabel::ALL.iter().zip(&omegas) {
            factors.push(ModeKernel::with_options(*label, p.m, w, t, p.hbar, opts)?);
        }
        let factors: [ModeKernel; 3] = factors.try_into().expect("three modes");
        Ok(FullKernel { params: *p, freqs, angles: *angles, time: t, factors, rotation: angles.matrix() })
    }

    fn rotate(&self, x: &[f64; 3]) -> [f64; 3] {
        std::array::from_fn(|i| (0..3).map(|j| self.rotation[i][j] * x[j]).sum())
    }

    /// `K_F(x; x₀; t)`.
    pub fn eval_two_point(&self, x: [f64; 3], x0: [f64; 3]) -> Complex64 {
        let (y, y0) = (self.rotate(&x), self.rotate(&x0));
        self.factors.iter().enumerate().map(|(k, f)| f.eval(y[k], y0[k])).product()
    }

    /// `K_F(x₁, x₂, q; 0, 0, 0; t)`.
    pub fn eval(&self, x1: f64, x2: f64, q: f64) -> Complex64 {
        self.eval_two_point([x1, x2, q], [0.0; 3])
    }

    /// The same kernel as one six-dimensional quadratic form over
    /// `(x₁, x₂, q, x₁₀, x₂₀, q₀)`.
    pub fn to_quadratic(&self) -> Result<QuadraticKernel> {
        let rows: Vec<Vec<f64>> = self.rotation.iter().map(|r| r.to_vec()).collect();
        let mode_kernels: Vec<&QuadraticKernel> = self.factors.iter().map(|f| &f.kernel).collect();
        assemble(&rows, &mode_kernels)
    }
}

/// Sums rank-one mode kernels: mode `k` with 2×2 form `[[a, b], [b, c]]` on
/// coordinate `r_k·x` contributes `a r rᵀ`, `b r rᵀ`, `c r rᵀ` to the blocks.
fn assemble(rows: &[Vec<f64>], modes: &[&QuadraticKernel]) -> Result<QuadraticKernel> {
    let d = rows[0].len();
    let mut form = DMatrix::<Complex64>::zeros(2 * d, 2 * d);
    let mut prefactor = Complex64::new(1.0, 0.0);
    for (r, k) in rows.iter().zip(modes) {
        prefactor *= k.prefactor;
        let (a, b, c) = (k.form[(0, 0)], k.form[(0, 1)], k.form[(1, 1)]);
        for i in 0..d {
            for j in 0..d {
                let rr = r[i] * r[j];
                form[(i, j)] += a * rr;
                form[(i, d + j)] += b * rr;
                form[(d + i, j)] += b * rr;
                form[(d + i, d + j)] += c * rr;
            }
        }
    }
    QuadraticKernel::new(prefactor, form, modes[0].time, modes[0].hbar)
}

/// `K_F(x₁, x₂, q; 0; t)` with the corrected prefactor.
pub fn full_propagator(p: &SystemParams, x1: f64, x2: f64, q: f64, t: f64) -> Result<Complex64> {
    Ok(FullKernel::new(p, t)?.eval(x1, x2, q))
}

/// Kernel of the two system oscillators over `(x₁, x₂, x₁₀, x₂₀)`.
///
/// Only defined for `C = 0`, where the system evolves independently of the
/// bath: Ω₁ on `(x₁ − x₂)/√2` and Ω₂ on `(x₁ + x₂)/√2`.
pub fn system_kernel(p: &SystemParams, t: f64, opts: &KernelOptions) -> Result<QuadraticKernel> {
    if p.c_coupling != 0.0 {
        return Err(Error::CouplingNotTraced);
    }
    let f = mode_frequencies(p)?;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let k1 = ModeKernel::with_options(ModeLabel::Q1, p.m, f.omega1, t, p.hbar, opts)?;
    let k2 = ModeKernel::with_options(ModeLabel::BigQ2, p.m, f.omega2, t, p.hbar, opts)?;
    assemble(&[vec![h, -h], vec![h, h]], &[&k1.kernel, &k2.kernel])
}

/// Composes two-point kernels: `∫ K₁(x, y) K₂(y, x₀) dy`, evaluated in
/// closed form as a Fresnel–Gaussian integral over the intermediate point.
pub fn compose(k1: &QuadraticKernel, k2: &QuadraticKernel) -> Result<QuadraticKernel> {
    if k1.dim != k2.dim {
        return Err(Error::DimensionMismatch { expected: k1.dim, got: k2.dim });
    }
    let (a1, b1, c1) = k1.two_point_blocks()?;
    let (a2, b2, c2) = k2.two_point_blocks()?;
    let d = a1.nrows();
    let hbar = k1.hbar;
    let s = &c1 + &a2;
    // ∫ exp(−½yᵀ(−2iS/ħ)y) dy, with the cross terms completed through S⁻¹.
    let form_a = &s * Complex64::new(0.0, -2.0 / hbar);
    let norm = gaussian_integral(&form_a, &DVector::zeros(d))?;
    let s_inv = s.clone().try_inverse().ok_or(Error::SingularForm(s.determinant().norm()))?;
    let a = &a1 - &b1 * &s_inv * b1.transpose();
    let b = -(&b1 * &s_inv * &b2);
    let c = &c2 - b2.transpose() * &s_inv * &b2;
    let mut form = DMatrix::<Complex64>::zeros(2 * d, 2 * d);
    form.view_mut((0, 0), (d, d)).copy_from(&a);
    form.view_mut((0, d), (d, d)).copy_from(&b);
    form.view_mut((d, 0), (d, d)).copy_from(&b.transpose());
    form.view_mut((d, d), (d, d)).copy_from(&c);
    let form = (&form + form.transpose()) * Complex64::new(0.5, 0.0);
    QuadraticKernel::new(k1.prefactor * k2.prefactor * norm, form, k1.time + k2.time, hbar)
}

/// A Gaussian wavefunction `N·exp(−½xᵀGx + bᵀx)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianWave {
    pub norm: Complex64,
    pub form: DMatrix<Complex64>,
    pub shift: DVector<Complex64>,
}

impl GaussianWave {
    /// A normalized packet `Π_d (2πσ²)^{−1/4} exp(−(x−c)²/4σ² + ip(x−c)/ħ)`,
    /// the same state as [`GridState::gaussian`].
    pub fn packet(center: &[f64], momentum: &[f64], sigma: f64, hbar: f64) -> Result<Self> {
        let d = center.len();
        if momentum.len() != d || d == 0 || !(sigma > 0.0) {
            return Err(Error::InvalidParameter("packet needs matching center/momentum and σ > 0".into()));
        }
        let g = 1.0 / (2.0 * sigma * sigma);
        let form = DMatrix::from_diagonal_element(d, d, Complex64::new(g, 0.0));
        let shift = DVector::from_fn(d, |i, _| Complex64::new(g * center[i], momentum[i] / hbar));
        let log_norm: f64 = center.iter().map(|c| -0.5 * g * c * c).sum::<f64>()
            - 0.25 * d as f64 * (2.0 * PI * sigma * sigma).ln();
        let phase: f64 = -center.iter().zip(momentum).map(|(c, p)| c * p).sum::<f64>() / hbar;
        Ok(GaussianWave { norm: Complex64::from_polar(log_norm.exp(), phase), form, shift })
    }

    /// Ground state of the two coupled system oscillators (`C = 0`),
    /// displaced to `center` and boosted by `momentum`: widths set by Ω₁ on
    /// `(x₁ − x₂)/√2` and Ω₂ on `(x₁ + x₂)/√2`. Normalized.
    pub fn system_ground_state(p: &SystemParams, center: [f64; 2], momentum: [f64; 2]) -> Result<Self> {
        let f = mode_frequencies(p)?;
        let s = p.m / p.hbar;
        let (u, v) = (0.5 * s * (f.omega1 + f.omega2), 0.5 * s * (f.omega2 - f.omega1));
        let g = [[u, v], [v, u]];
        let form = DMatrix::from_fn(2, 2, |i, j| Complex64::new(g[i][j], 0.0));
        let shift = DVector::from_fn(2, |i, _| {
            Complex64::new(g[i][0] * center[0] + g[i][1] * center[1], momentum[i] / p.hbar)
        });
        let cgc: f64 = (0..2).map(|i| (0..2).map(|j| center[i] * g[i][j] * center[j]).sum::<f64>()).sum();
        let det = u * u - v * v;
        let log_norm = 0.25 * (det / (PI * PI)).ln() - 0.5 * cgc;
        let phase = -(center[0] * momentum[0] + center[1] * momentum[1]) / p.hbar;
        Ok(GaussianWave { norm: Complex64::from_polar(log_norm.exp(), phase), form, shift })
    }

    pub fn dims(&self) -> usize {
        self.form.nrows()
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        let xv = DVector::from_fn(x.len(), |i, _| Complex64::new(x[i], 0.0));
        let quad = (xv.transpose() * &self.form * &xv)[(0, 0)];
        let lin: Complex64 = self.shift.iter().zip(x).map(|(b, &xi)| b * xi).sum();
        self.norm * (-0.5 * quad + lin).exp()
    }

    pub fn on_grid(&self, spec: &GridSpec) -> Result<GridState> {
        if spec.dims() != self.dims() {
            return Err(Error::DimensionMismatch { expected: self.dims(), got: spec.dims() });
        }
        Ok(GridState::from_fn(spec.clone(), |x| self.eval(x)))
    }

    /// Applies a two-point kernel analytically:
    /// `ψ(x) = ∫ K(x, y) ψ₀(y) dy` is again Gaussian.
    pub fn propagate(&self, kernel: &QuadraticKernel) -> Result<GaussianWave> {
        let d = self.dims();
        if kernel.dim != 2 * d {
            return Err(Error::DimensionMismatch { expected: 2 * d, got: kernel.dim });
        }
        let (a, b, c) = kernel.two_point_blocks()?;
        let i2h = Complex64::new(0.0, 2.0 / kernel.hbar);
        let form_a = &self.form - &c * i2h;
        let norm = kernel.prefactor * self.norm * gaussian_integral(&form_a, &self.shift)?;
        let inv = form_a.clone().try_inverse().ok_or(Error::SingularForm(0.0))?;
        let bt = b.transpose();
        let form = &a * (-i2h) - &b * &inv * &bt * (i2h * i2h);
        let form = (&form + form.transpose()) * Complex64::new(0.5, 0.0);
        let shift = &b * &inv * &self.shift * i2h;
        Ok(GaussianWave { norm, form, shift })
    }
}

/// `ψ(x) = ∫ K(x, x₀) ψ₀(x₀) dx₀` by the midpoint rule on `psi0`'s grid.
///
/// The diagonal blocks of the kernel become per-point phase tables and the
/// cross term `exp(2i xᵀBx₀/ħ)` factorizes into one table per pair of axes,
/// so no exponentials are evaluated in the inner loop.
pub fn apply_kernel(kernel: &QuadraticKernel, psi0: &GridState) -> Result<GridState> {
    let spec = &psi0.spec;
    let d = spec.dims();
    if kernel.dim != 2 * d {
        return Err(Error::DimensionMismatch { expected: 2 * d, got: kernel.dim });
    }
    psi0.check_boundary(BOUNDARY_TOL)?;
    let (a, b, c) = kernel.two_point_blocks()?;
    let ih = Complex64::new(0.0, 1.0 / kernel.hbar);
    let quad = |m: &DMatrix<Complex64>, x: &[f64]| -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..d {
            for j in 0..d {
                acc += m[(i, j)] * x[i] * x[j];
            }
        }
        acc
    };
    let dv = spec.cell_volume();
    let weighted: Vec<Complex64> = (0..spec.len())
        .map(|l| psi0.values[l] * (ih * quad(&c, &spec.point(l))).exp() * dv)
        .collect();
    let coords: Vec<Vec<f64>> = (0..d).map(|k| spec.coords(k)).collect();
    // cross[i][j][k_i][l_j] = exp(2i B_ij x_i x0_j / ħ)
    let cross: Vec<Vec<Vec<Vec<Complex64>>>> = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    coords[i]
                        .iter()
                        .map(|&xi| coords[j].iter().map(|&yj| (ih * b[(i, j)] * (2.0 * xi * yj)).exp()).collect())
                        .collect()
                })
                .collect()
        })
        .collect();
    let n = &spec.n_points;
    let values = par::map_range(spec.len(), |k| {
        let ki = spec.multi_index(k);
        // u_j(l_j) = Π_i cross[i][j][k_i][l_j]
        let u: Vec<Vec<Complex64>> = (0..d)
            .map(|j| {
                (0..n[j])
                    .map(|l| (0..d).map(|i| cross[i][j][ki[i]][l]).product())
                    .collect()
            })
            .collect();
        let sum = contract(&weighted, &u, n);
        sum * (ih * quad(&a, &spec.point(k))).exp() * kernel.prefactor
    });
    GridState::new(spec.clone(), values)
}

/// `Σ_l φ(l)·Π_j u_j(l_j)` for row-major φ.
fn contract(phi: &[Complex64], u: &[Vec<Complex64>], n: &[usize]) -> Complex64 {
    match n.len() {
        1 => phi.iter().zip(&u[0]).map(|(p, w)| p * w).sum(),
        _ => {
            let inner: usize = n[1..].iter().product();
            let mut acc = Complex64::new(0.0, 0.0);
            for (l0, w) in u[0].iter().enumerate() {
                acc += w * contract(&phi[l0 * inner..(l0 + 1) * inner], &u[1..], &n[1..]);
            }
            acc
        }
    }
}

/// Propagates a one-dimensional state with the single-mode kernel.
pub fn propagate_mode(m: f64, omega_mode: f64, hbar: f64, psi0: &GridState, t: f64) -> Result<GridState> {
    if psi0.spec.dims() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: psi0.spec.dims() });
    }
    let k = ModeKernel::new(ModeLabel::Q1, m, omega_mode, t, hbar)?;
    apply_kernel(&k.kernel, psi0)
}

/// Propagates a state over `(x₁, x₂, q)` with the full kernel, or over
/// `(x₁, x₂)` with the system kernel when `C = 0`.
pub fn propagate_wavepacket(p: &SystemParams, psi0: &GridState, t: f64) -> Result<GridState> {
    propagate_wavepacket_with(p, psi0, t, &KernelOptions::default())
}

/// [`propagate_wavepacket`] with explicit kernel options.
pub fn propagate_wavepacket_with(p: &SystemParams, psi0: &GridState, t: f64, opts: &KernelOptions) -> Result<GridState> {
    let kernel = match psi0.spec.dims() {
        3 => FullKernel::with_angles(p, t, &RotationAngles::default(), opts)?.to_quadratic()?,
        2 => system_kernel(p, t, opts)?,
        got => return Err(Error::DimensionMismatch { expected: 3, got }),
    };
    apply_kernel(&kernel, psi0)
}
