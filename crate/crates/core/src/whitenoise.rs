//! Discretized white-noise calculus for a single harmonic mode.
//!
//! The second functional derivative of the potential action,
//! `ħ⁻¹S″(τ, τ') = Ω²(t − max(τ, τ'))`, is sampled at midpoints of `N` uniform
//! slices. Every operator built from it has the shape `a·I + b·K·Δτ`; with the
//! slices taken in reverse order `K·Δτ = c·L·W·Lᵀ` where `L` is the lower
//! triangular matrix of ones, `W = diag(½, 1, …, 1)` and `c = Ω²Δτ²`. Since
//! `L⁻¹L⁻ᵀ` is tridiagonal, determinants and bilinear forms reduce to an
//! `O(N)` tridiagonal elimination.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::SystemParams;
use crate::par;
use crate::quadrature::gauss_hermite;

/// Determinants below this magnitude (per time slice) are treated as singular.
pub const SINGULAR_TOL: f64 = 1e-12;

/// Required decay of the λ-integrand at the cutoff, relative to its peak.
pub const LAMBDA_DECAY_TOL: f64 = 1e-12;

const MC_CHUNK: usize = 4096;

/// The kernel `Ω²(t − max(τᵢ, τⱼ))` on midpoints `τᵢ = (i + ½)Δτ`, with the
/// factor ħ already cancelled. Entries are generated on demand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseKernelMatrix {
    pub n_steps: usize,
    pub dt: f64,
    pub omega: f64,
    pub t: f64,
}

impl NoiseKernelMatrix {
    pub fn midpoint(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dt
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.omega * self.omega * (self.t - self.midpoint(i.max(j)))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n_steps, self.n_steps, |i, j| self.entry(i, j))
    }

    /// Tridiagonal elimination of `a·I + b·K·Δτ`.
    fn reduce(&self, a: Complex64, b: Complex64) -> Reduced {
        let c = self.omega * self.omega * self.dt * self.dt;
        let off = -a;
        let off_sq = off * off;
        let mut pivots = Vec::with_capacity(self.n_steps);
        for r in 0..self.n_steps {
            let diag = if r == 0 { a + b * (0.5 * c) } else { a * 2.0 + b * c };
            let p = match pivots.last() {
                None => diag,
                Some(&prev) => diag - off_sq / prev,
            };
            pivots.push(p);
        }
        Reduced { pivots, off }
    }
}

/// Pivots of the forward elimination of the tridiagonal core.
struct Reduced {
    pivots: Vec<Complex64>,
    off: Complex64,
}

impl Reduced {
    fn det(&self) -> Complex64 {
        self.pivots.iter().product()
    }

    /// `∏ √pᵣ` with principal roots. For real operators each negative pivot
    /// contributes a factor `i`, the `t → t(1 − i0)` continuation.
    fn sqrt_det(&self) -> Complex64 {
        self.pivots.iter().map(|p| p.sqrt()).product()
    }

    fn check(&self) -> Result<()> {
        let det = self.det();
        // Forward elimination accumulates round-off roughly linearly in the
        // number of pivots, so the tolerance is applied per slice.
        let tol = SINGULAR_TOL * self.pivots.len() as f64;
        if !det.is_finite() || det.norm() < tol || self.pivots.iter().any(|p| p.norm() == 0.0) {
            return Err(Error::SingularOperator(det.norm()));
        }
        Ok(())
    }

    /// `vᵀ T⁻¹ v` for the tridiagonal core `T` (Thomas algorithm on the
    /// stored pivots).
    fn quadratic_inverse(&self, v: &[Complex64]) -> Complex64 {
        let n = self.pivots.len();
        let mut y: Vec<Complex64> = Vec::with_capacity(n);
        for r in 0..n {
            let rhs = if r == 0 { v[0] } else { v[r] - self.off / self.pivots[r - 1] * y[r - 1] };
            y.push(rhs);
        }
        let mut x = vec![Complex64::new(0.0, 0.0); n];
        for r in (0..n).rev() {
            let upper = if r + 1 < n { self.off * x[r + 1] } else { Complex64::new(0.0, 0.0) };
            x[r] = (y[r] - upper) / self.pivots[r];
        }
        v.iter().zip(&x).map(|(a, b)| a * b).sum()
    }
}

/// Discretization of the unit vector `e = t^{−1/2}·χ_[0,t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitWindowVector {
    pub n_steps: usize,
    pub entries: Vec<f64>,
}

impl UnitWindowVector {
    pub fn new(n_steps: usize) -> Self {
        UnitWindowVector { n_steps, entries: vec![(1.0 / n_steps as f64).sqrt(); n_steps] }
    }
}

pub fn noise_kernel(omega_mode: f64, t: f64, n_steps: usize) -> Result<NoiseKernelMatrix> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("t must be positive, got {t}")));
    }
    if n_steps < 2 {
        return Err(Error::InvalidParameter("need at least 2 time slices".into()));
    }
    if !omega_mode.is_finite() {
        return Err(Error::InvalidParameter("mode frequency must be finite".into()));
    }
    Ok(NoiseKernelMatrix { n_steps, dt: t / n_steps as f64, omega: omega_mode, t })
}

/// `det(I − K·Δτ)`, the discretization of `det(1 − ħ⁻¹S″) → cos Ωt`.
pub fn fredholm_determinant(k: &NoiseKernelMatrix) -> f64 {
    k.reduce(Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)).det().re
}

/// Slices in reverse order, differenced: `L⁻¹·(reversed v)`.
fn differenced_reverse(v: &[f64]) -> Vec<Complex64> {
    let n = v.len();
    (0..n)
        .map(|r| {
            let cur = v[n - 1 - r];
            let prev = if r == 0 { 0.0 } else { v[n - r] };
            Complex64::new(cur - prev, 0.0)
        })
        .collect()
}

/// `eᵀ(a·I + b·K·Δτ)⁻¹e` together with the reduction used for it.
fn inverse_form(k: &NoiseKernelMatrix, a: Complex64, b: Complex64, e: &[f64]) -> Result<(Complex64, Reduced)> {
    let red = k.reduce(a, b);
    red.check()?;
    let v = differenced_reverse(e);
    let value = red.quadratic_inverse(&v);
    Ok((value, red))
}

/// `eᵀ(I − K·Δτ)⁻¹e`, converging to `tan(Ωt)/(Ωt)`.
pub fn bilinear_form(k: &NoiseKernelMatrix, e: &UnitWindowVector) -> Result<f64> {
    if e.n_steps != k.n_steps || e.entries.len() != k.n_steps {
        return Err(Error::DimensionMismatch { expected: k.n_steps, got: e.entries.len() });
    }
    let (v, _) = inverse_form(k, Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0), &e.entries)?;
    Ok(v.re)
}

/// The T-transform of `N·exp(−½⟨ω, Kω⟩)·exp(−½⟨ω, Lω⟩)` with constant `K`
/// and `L = i·ħ⁻¹S″`, as a Gaussian in a constant argument ξ:
/// `T(ξ) = det(1 + L(K+1)⁻¹)^{−1/2}·exp(−½·ξ²·t·g)` with
/// `g = ⟨e, (K + L + 1)⁻¹ e⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianTTransform {
    /// `det(1 + L(K+1)⁻¹)^{−1/2}`.
    pub det_factor: Complex64,
    /// `det(1 + L(K+1)⁻¹)`.
    pub det: Complex64,
    /// `⟨e, (K + L + 1)⁻¹ e⟩`.
    pub exponent_coeff: Complex64,
    pub t: f64,
}

impl GaussianTTransform {
    pub fn eval(&self, xi: Complex64) -> Complex64 {
        self.det_factor * (-0.5 * xi * xi * self.t * self.exponent_coeff).exp()
    }
}

pub fn t_transform(k_const: Complex64, l_kernel: &NoiseKernelMatrix) -> Result<GaussianTTransform> {
    let i = Complex64::i();
    let k1 = k_const + 1.0;
    if k1.norm() == 0.0 {
        return Err(Error::SingularOperator(0.0));
    }
    // 1 + L(K+1)⁻¹ = I + (i/(K+1))·S̃
    let det_red = l_kernel.reduce(Complex64::new(1.0, 0.0), i / k1);
    det_red.check()?;
    let e = UnitWindowVector::new(l_kernel.n_steps);
    // K + L + 1 = (K+1)·I + i·S̃
    let (g, _) = inverse_form(l_kernel, k1, i, &e.entries)?;
    Ok(GaussianTTransform {
        det_factor: 1.0 / det_red.sqrt_det(),
        det: det_red.det(),
        exponent_coeff: g,
        t: l_kernel.t,
    })
}

/// `T·I(ξ)` for constant `ξ` on `[0, t]`.
pub fn t_transform_gaussian(k_const: Complex64, l_kernel: &NoiseKernelMatrix, xi_const: f64) -> Result<Complex64> {
    Ok(t_transform(k_const, l_kernel)?.eval(Complex64::new(xi_const, 0.0)))
}

/// The single-mode propagator from the origin to `endpoint`, evaluated as
/// the Donsker-delta integral
/// `K = ∫ e^{−iλx}/(2π) · T·I(√(ħ/m)·λ) dλ` with `K = −(1+i)` and the
/// discretized noise kernel.
///
/// The λ contour is rotated onto the steepest-descent ray of the Gaussian
/// factor and integrated with an `n_quad`-point Gauss–Hermite rule.
/// `lambda_cutoff` is the radius at which the integrand must have decayed
/// by [`LAMBDA_DECAY_TOL`] relative to its peak.
pub fn propagator_lambda_integral(
    p: &SystemParams,
    omega_mode: f64,
    endpoint: f64,
    t: f64,
    n_steps: usize,
    lambda_cutoff: f64,
    n_quad: usize,
) -> Result<Complex64> {
    p.validate()?;
    if n_quad < 2 {
        return Err(Error::InvalidParameter("need at least 2 quadrature nodes".into()));
    }
    let kernel = noise_kernel(omega_mode, t, n_steps)?;
    let tt = t_transform(Complex64::new(-1.0, -1.0), &kernel)?;
    let scale = (p.hbar / p.m).sqrt();
    let integrand = |lambda: Complex64| {
        (-Complex64::i() * lambda * endpoint).exp() / (2.0 * std::f64::consts::PI) * tt.eval(scale * lambda)
    };

    // Gaussian coefficient of λ² in the exponent.
    let a = 0.5 * scale * scale * t * tt.exponent_coeff;
    let kappa = a.norm();
    if !(kappa > 0.0) || a.re < -1e-12 * kappa {
        return Err(Error::NonConvergent(format!("lambda exponent coefficient {a} has no decaying direction")));
    }
    let rot = Complex64::from_polar(1.0, -0.5 * a.arg());

    let (nodes, weights) = gauss_hermite(n_quad);
    let sqrt_kappa = kappa.sqrt();
    let mut peak = integrand(Complex64::new(0.0, 0.0)).norm();
    let mut sum = Complex64::new(0.0, 0.0);
    for (u, w) in nodes.iter().zip(&weights) {
        let s = u / sqrt_kappa;
        let f = integrand(rot * s);
        peak = peak.max(f.norm());
        sum += w * (u * u).exp() * f;
    }
    let edge = integrand(rot * lambda_cutoff).norm().max(integrand(-rot * lambda_cutoff).norm());
    if !(edge <= LAMBDA_DECAY_TOL * peak) {
        return Err(Error::NonConvergent(format!(
            "integrand at |lambda| = {lambda_cutoff} is {:e} of its peak",
            edge / peak
        )));
    }
    Ok(rot / sqrt_kappa * sum)
}

/// A piecewise-constant test function on `n` uniform slices of `[0, t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    pub t: f64,
    pub values: Vec<f64>,
}

impl StepFunction {
    pub fn new(t: f64, values: Vec<f64>) -> Result<Self> {
        if !(t > 0.0) || values.is_empty() {
            return Err(Error::InvalidParameter("step function needs t > 0 and at least one slice".into()));
        }
        Ok(StepFunction { t, values })
    }

    pub fn constant(t: f64, value: f64, n_steps: usize) -> Result<Self> {
        Self::new(t, vec![value; n_steps])
    }

    pub fn dt(&self) -> f64 {
        self.t / self.values.len() as f64
    }

    /// `∫ ξ² dτ`.
    pub fn integral_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() * self.dt()
    }
}

/// `C(ξ) = exp(−½ ∫ ξ² dτ)`, with the bilinear (not Hermitian) square so
/// that it continues analytically to complex ξ.
pub fn characteristic_functional(xi: &[Complex64], dt: f64) -> Complex64 {
    let s: Complex64 = xi.iter().map(|z| z * z).sum::<Complex64>() * dt;
    (-0.5 * s).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexMcEstimate {
    pub mean: Complex64,
    /// Standard error of the complex mean, `√(Var(re) + Var(im)) / √n`.
    pub std_error: f64,
}

/// Averages `sample(ω)` over `n_samples` discretized noise paths with
/// `ωᵢ ~ Normal(0, 1/Δτ)`. Chunk `c` draws from ChaCha8 stream `c` of `seed`,
/// so results do not depend on how chunks are scheduled.
fn noise_average<F>(n_steps: usize, dt: f64, n_samples: usize, seed: u64, sample: F) -> ComplexMcEstimate
where
    F: Fn(&[f64]) -> Complex64 + Sync + Send,
{
    let n_chunks = n_samples.div_ceil(MC_CHUNK);
    let inv_sqrt_dt = 1.0 / dt.sqrt();
    let partial = par::map_range(n_chunks, |c| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(c as u64);
        let count = MC_CHUNK.min(n_samples - c * MC_CHUNK);
        let mut omega = vec![0.0; n_steps];
        let (mut s, mut sq_re, mut sq_im) = (Complex64::new(0.0, 0.0), 0.0, 0.0);
        for _ in 0..count {
            for w in omega.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *w = z * inv_sqrt_dt;
            }
            let v = sample(&omega);
            s += v;
            sq_re += v.re * v.re;
            sq_im += v.im * v.im;
        }
        (s, sq_re, sq_im)
    });
    let (mut s, mut sq_re, mut sq_im) = (Complex64::new(0.0, 0.0), 0.0, 0.0);
    for (a, b, c) in partial {
        s += a;
        sq_re += b;
        sq_im += c;
    }
    let n = n_samples as f64;
    let mean = s / n;
    let var_re = (sq_re / n - mean.re * mean.re).max(0.0) * n / (n - 1.0);
    let var_im = (sq_im / n - mean.im * mean.im).max(0.0) * n / (n - 1.0);
    ComplexMcEstimate { mean, std_error: ((var_re + var_im) / n).sqrt() }
}

/// Monte Carlo estimate of `C(ξ) = E[exp(i⟨ω, ξ⟩)]`, returned as its real
/// part (the imaginary part vanishes in expectation).
pub fn characteristic_functional_mc(xi: &StepFunction, n_samples: usize, seed: u64) -> Result<McEstimate> {
    if n_samples < 10_000 {
        return Err(Error::InvalidParameter(format!("need at least 10^4 samples, got {n_samples}")));
    }
    let dt = xi.dt();
    let values = &xi.values;
    let est = noise_average(values.len(), dt, n_samples, seed, |omega| {
        let z: f64 = omega.iter().zip(values).map(|(w, x)| w * x).sum::<f64>() * dt;
        Complex64::new(z.cos(), 0.0)
    });
    Ok(McEstimate { mean: est.mean.re, std_error: est.std_error })
}

/// `TΦ(ξ) = E[exp(i⟨ω, ξ⟩)·Φ(ω)]` for complex step functions ξ.
pub fn t_transform_mc<F>(phi: F, xi: &[Complex64], dt: f64, n_samples: usize, seed: u64) -> ComplexMcEstimate
where
    F: Fn(&[f64]) -> Complex64 + Sync + Send,
{
    noise_average(xi.len(), dt, n_samples, seed, |omega| {
        let z: Complex64 = omega.iter().zip(xi).map(|(w, x)| x * *w).sum::<Complex64>() * dt;
        (Complex64::i() * z).exp() * phi(omega)
    })
}

/// `SΦ(ξ) = E[Φ(ω + ξ)]` for real step functions ξ.
pub fn s_transform_mc<F>(phi: F, xi: &[f64], dt: f64, n_samples: usize, seed: u64) -> ComplexMcEstimate
where
    F: Fn(&[f64]) -> Complex64 + Sync + Send,
{
    noise_average(xi.len(), dt, n_samples, seed, |omega| {
        let shifted: Vec<f64> = omega.iter().zip(xi).map(|(w, x)| w + x).collect();
        phi(&shifted)
    })
}
