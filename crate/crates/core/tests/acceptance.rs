//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::f64::consts::{FRAC_PI_4, SQRT_2};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use hidaprop::master::{evolve_density, DensityGrid};
use hidaprop::model::{bath_coefficients, coupling_coefficients, mode_frequencies, rotation_angle};
use hidaprop::propagator::{
    apply_kernel, compose, full_propagator, mehler_kernel, system_kernel, GaussianWave, KernelOptions,
    ModeKernel, ModeLabel,
};
use hidaprop::tdse::{dense_expm_evolve, split_operator_evolve, Hamiltonian, KineticScheme};
use hidaprop::whitenoise::{
    bilinear_form, characteristic_functional_mc, fredholm_determinant, noise_kernel, propagator_lambda_integral,
    StepFunction, UnitWindowVector,
};
use hidaprop::{GridSpec, GridState, SystemParams};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}

const WN_CASES: [(f64, f64); 3] = [(1.0, 1.0), (1.0, 0.5), (2.0, 0.6)];
const WN_N: [usize; 4] = [500, 1000, 2000, 4000];
const WN_BUDGET: Duration = Duration::from_secs(30);

/// Least-squares slope of log(err) against log(1/N).
fn fitted_order(ns: &[usize], errs: &[f64]) -> f64 {
    let xs: Vec<f64> = ns.iter().map(|&n| -(n as f64).ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Shared by the determinant and bilinear-form criteria: errors at
/// N = 4000 within 1e-3, monotone in N, at least first order.
fn white_noise_identity(name: &str, eval: impl Fn(f64, f64, usize) -> (f64, f64)) -> Outcome {
    let start = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for (w, t) in WN_CASES {
        let errs: Vec<f64> = WN_N
            .iter()
            .map(|&n| {
                let (num, exact) = eval(w, t, n);
                (num - exact).abs()
            })
            .collect();
        let order = fitted_order(&WN_N, &errs);
        let monotone = errs.windows(2).all(|e| e[1] < e[0]);
        ok &= errs[3] <= 1e-3 && monotone && order >= 0.9;
        parts.push(format!("(Ω={w},t={t}) err@4000={:.2e} order={order:.2}", errs[3]));
    }
    let elapsed = start.elapsed();
    ok &= elapsed < WN_BUDGET;
    check(ok, format!("{name}: {} in {:.2?}", parts.join(", "), elapsed))
}

fn criterion_1() -> Outcome {
    white_noise_identity("det(I−KΔτ) vs cos Ωt", |w, t, n| {
        (fredholm_determinant(&noise_kernel(w, t, n).unwrap()), (w * t).cos())
    })
}

fn criterion_2() -> Outcome {
    white_noise_identity("eᵀ(I−KΔτ)⁻¹e vs tan(Ωt)/Ωt", |w, t, n| {
        let k = noise_kernel(w, t, n).unwrap();
        (bilinear_form(&k, &UnitWindowVector::new(n)).unwrap(), (w * t).tan() / (w * t))
    })
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let points = [
        (0.5, 0.6, 0.4),
        (0.5, 1.4, -1.5),
        (0.5, 2.0, 1.0),
        (0.5, 2.6, 2.0),
        (1.0, 0.3, -2.0),
        (1.0, 0.7, 0.0),
        (1.0, 1.0, 1.0),
        (1.0, 1.3, -0.5),
        (2.0, 0.15, 0.5),
        (2.0, 0.35, -1.0),
        (2.0, 0.5, 1.5),
        (2.0, 0.65, 0.25),
    ];
    let p = SystemParams::new(1.0, 1.0, 1.0, 0.0, 0.0, 1.0).unwrap();
    let mut worst = 0.0f64;
    for (w, t, x) in points {
        let closed = mehler_kernel(1.0, w, t, x, 0.0, 1.0).unwrap();
        let oracle = propagator_lambda_integral(&p, w, x, t, 4000, 80.0, 128).unwrap();
        worst = worst.max(rel(closed, oracle));
    }
    let elapsed = start.elapsed();
    check(
        worst < 1e-6 && elapsed < Duration::from_secs(60),
        format!("Mehler vs λ-integral at 12 points: max rel err {worst:.2e} in {elapsed:.2?}"),
    )
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for k in 0..20 {
        let t = rng.gen_range(0.5..2.0);
        let slices = rng.gen_range(1..=8);
        let values = (0..slices).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let xi = StepFunction::new(t, values).unwrap();
        let est = characteristic_functional_mc(&xi, 100_000, 1000 + k).unwrap();
        let exact = (-0.5 * xi.integral_sq()).exp();
        worst = worst.max((est.mean - exact).abs() / est.std_error);
    }
    check(worst <= 3.0, format!("20 step functions, 1e5 samples: max |MC − exact| = {worst:.2} SE"))
}

fn criterion_5() -> Outcome {
    let p = SystemParams::resonant(1.0, SQRT_2, 1.0, 0.0, 1.0).unwrap();
    let t = 0.7;
    let spec = GridSpec::cube(2, 128, 12.0).unwrap();
    let psi0 = GridState::gaussian(spec.clone(), &[0.5, -0.3], &[0.2, 0.0], 0.5, 1.0).unwrap();
    let kernel = system_kernel(&p, t, &KernelOptions::default()).unwrap();
    let quad = apply_kernel(&kernel, &psi0).unwrap();
    let h = Hamiltonian::for_dims(&p, 2).unwrap();
    let split = split_operator_evolve(&h, &psi0, t, 4000).unwrap();
    let l2 = quad.l2_distance(&split);

    let mode = Hamiltonian::Mode { m: 1.0, omega: 1.0, hbar: 1.0 };
    let line = GridSpec::cube(1, 64, 20.0).unwrap();
    let phi0 = GridState::gaussian(line, &[0.7], &[0.3], 0.8, 1.0).unwrap();
    let a = split_operator_evolve(&mode, &phi0, 1.0, 20_000).unwrap();
    let b = dense_expm_evolve(&mode, &phi0, 1.0, KineticScheme::Spectral).unwrap();
    let dense = a.l2_distance(&b);
    check(
        l2 <= 1e-4 && dense <= 1e-8,
        format!("128² quadrature vs split-operator L² = {l2:.2e}; 64-pt split-operator vs dense expm = {dense:.2e}"),
    )
}

fn criterion_6() -> Outcome {
    let (m, w, hbar, t1, t2) = (1.0, 1.0, 1.0, 0.4, 0.4);
    let k1 = ModeKernel::new(ModeLabel::Q1, m, w, t1, hbar).unwrap().kernel;
    let k2 = ModeKernel::new(ModeLabel::Q1, m, w, t2, hbar).unwrap().kernel;
    // The intermediate integrand is a pure phase e^{iκy²+…} with κ > 0; it is
    // integrated numerically along y = y* + e^{iπ/4}s, where it decays.
    let kappa = k1.form[(1, 1)].re + k2.form[(0, 0)].re;
    let rot = Complex64::from_polar(1.0, FRAC_PI_4);
    let mut worst = 0.0f64;
    for (x, x0) in [(0.0, 0.0), (0.7, -0.3), (1.5, 1.0), (-2.0, 0.5), (0.2, 2.5)] {
        let ystar = -(k1.form[(0, 1)].re * x + k2.form[(0, 1)].re * x0) / kappa;
        let f = |y: Complex64| {
            let e1 = k1.form[(0, 0)] * x * x + 2.0 * k1.form[(0, 1)] * x * y + k1.form[(1, 1)] * y * y;
            let e2 = k2.form[(0, 0)] * y * y + 2.0 * k2.form[(0, 1)] * y * x0 + k2.form[(1, 1)] * x0 * x0;
            k1.prefactor * k2.prefactor * (Complex64::i() * (e1 + e2) / hbar).exp()
        };
        let h = 1e-3;
        let sum: Complex64 = (-12_000..=12_000).map(|k| f(ystar + rot * (k as f64 * h)) * rot * h).sum();
        let want = mehler_kernel(m, w, t1 + t2, x, x0, hbar).unwrap();
        worst = worst.max(rel(sum, want));
        worst = worst.max(rel(compose(&k1, &k2).unwrap().eval(&[x, x0]), want));
    }
    check(worst < 1e-6, format!("K(0.4)∘K(0.4) vs K(0.8) at 5 point pairs: max rel err {worst:.2e}"))
}

fn criterion_7() -> Outcome {
    let mut gamma_max = 0.0f64;
    let mut d_max = 0.0f64;
    let mut phi_gap = 0.0f64;
    for (lambda, c) in [(1.0, 0.3), (0.5, -0.2), (1.7, 0.0), (-0.8, 0.6)] {
        let p = SystemParams::resonant(1.0, 1.5, lambda, c, 1.0).unwrap();
        let f = mode_frequencies(&p).unwrap();
        for n in 0..8 {
            let a = rotation_angle(n);
            gamma_max = gamma_max.max(coupling_coefficients(&p, a).gamma.abs() / lambda.abs());
            if c != 0.0 {
                d_max = d_max.max(bath_coefficients(&p, f.omega2, a).d.abs() / c.abs());
            }
        }
        let decoupled = mode_frequencies(&p.without_bath_coupling()).unwrap();
        phi_gap = phi_gap.max((decoupled.phi - decoupled.phi2).abs() / decoupled.phi2);
    }

    let mut product_gap = 0.0f64;
    for w in [0.7, 1.0, 2.3] {
        let p = SystemParams::new(1.3, w, w, 0.0, 0.0, 0.9).unwrap();
        for t in [0.4, 1.1, 2.9] {
            for (x1, x2, q) in [(0.3, -0.4, 0.9), (1.2, 0.5, -0.7), (0.0, 0.0, 0.0)] {
                let full = full_propagator(&p, x1, x2, q, t).unwrap();
                let product = [x1, x2, q]
                    .iter()
                    .map(|&x| mehler_kernel(p.m, w, t, x, 0.0, p.hbar).unwrap())
                    .product::<Complex64>();
                product_gap = product_gap.max(rel(full, product));
            }
        }
    }
    check(
        gamma_max < 1e-12 && d_max < 1e-12 && phi_gap < 1e-12 && product_gap < 1e-12,
        format!(
            "|γ|/λ ≤ {gamma_max:.1e}, |D|/C ≤ {d_max:.1e} over 8 branches; |Φ−Φ₂|/Φ₂ = {phi_gap:.1e}; \
             λ=C=0 vs Mehler product rel {product_gap:.1e}"
        ),
    )
}

fn criterion_8() -> Outcome {
    let p = SystemParams::resonant(1.0, SQRT_2, 1.0, 0.0, 1.0).unwrap();
    // Ghost copies from the quadrature sit πħ/(b·h) away, b = mΩ/(2|sin Ωt|);
    // 56 points on [−7, 7) keep them clear of the edge for t = 0.6 and 1.2.
    let spec = GridSpec::cube(2, 56, 14.0).unwrap();
    let wave = GaussianWave::system_ground_state(&p, [0.3, 0.1], [0.0, 0.2]).unwrap();
    let rho0 = DensityGrid::from_pure(&wave.on_grid(&spec).unwrap().normalized());
    let (t1, t2) = (0.6, 0.6);
    let half = evolve_density(&p, &rho0, t1).unwrap();
    let chained = evolve_density(&p, &half, t2).unwrap();
    let direct = evolve_density(&p, &rho0, t1 + t2).unwrap();

    let mut herm = 0.0f64;
    let mut trace = 0.0f64;
    let mut purity = 0.0f64;
    for rho in [&half, &chained, &direct] {
        herm = herm.max(rho.hermiticity_residual());
        trace = trace.max((rho.trace() - 1.0).norm());
        purity = purity.max((rho.purity() - 1.0).abs());
    }
    let comp = (&chained.values - &direct.values).iter().map(|z| z.norm()).fold(0.0, f64::max);
    check(
        herm <= 1e-10 && trace <= 1e-6 && purity <= 1e-5 && comp <= 1e-5,
        format!(
            "56² Gaussian state: Hermiticity {herm:.1e}, |Tr−1| {trace:.1e}, |purity−1| {purity:.1e}, \
             |ρ(0.6∘0.6) − ρ(1.2)| {comp:.1e}"
        ),
    )
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("determinant identity", criterion_1),
        ("bilinear-form identity", criterion_2),
        ("kernel vs λ-integral", criterion_3),
        ("characteristic functional", criterion_4),
        ("cross-oracle propagation", criterion_5),
        ("semigroup", criterion_6),
        ("decoupling exactness", criterion_7),
        ("density evolution", criterion_8),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("[{tag}] criterion {} ({name}): {detail} [{:.1?}]", k + 1, start.elapsed());
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
