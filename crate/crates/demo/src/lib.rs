//! Browser bindings: a Mehler kernel curve, the white-noise determinant and
//! bilinear-form convergence, and a coupled wavepacket density.
//!
//! The plain functions return flat `f64` buffers and are tested natively; the
//! `#[wasm_bindgen]` wrappers only convert errors.

// Negated comparisons also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use hidaprop::propagator::{mehler_kernel, system_kernel, GaussianWave, KernelOptions};
use hidaprop::whitenoise::{bilinear_form, fredholm_determinant, noise_kernel, UnitWindowVector};
use hidaprop::{Error, Result, SystemParams};
use wasm_bindgen::prelude::*;

/// `[x, Re K, Im K]` triples of `K(x, x₀; t)` for `n` points on `[x_min, x_max]`
/// (m = ħ = 1).
pub fn kernel_curve(omega: f64, t: f64, x0: f64, x_min: f64, x_max: f64, n: usize) -> Result<Vec<f64>> {
    if n < 2 || !(x_max > x_min) {
        return Err(Error::InvalidParameter("need n >= 2 and x_max > x_min".into()));
    }
    let mut out = Vec::with_capacity(3 * n);
    for k in 0..n {
        let x = x_min + (x_max - x_min) * k as f64 / (n - 1) as f64;
        let z = mehler_kernel(1.0, omega, t, x, x0, 1.0)?;
        out.extend([x, z.re, z.im]);
    }
    Ok(out)
}

/// `[N, det, |det − cos Ωt|, form, |form − tan(Ωt)/Ωt|]` rows for
/// N = 8, 16, … up to `n_max`. Singular rows carry NaN for the form.
pub fn convergence(omega: f64, t: f64, n_max: usize) -> Result<Vec<f64>> {
    let exact_det = (omega * t).cos();
    let exact_form = if omega == 0.0 { 1.0 } else { (omega * t).tan() / (omega * t) };
    let mut out = Vec::new();
    let mut n = 8;
    while n <= n_max.max(8) {
        let k = noise_kernel(omega, t, n)?;
        let det = fredholm_determinant(&k);
        let form = match bilinear_form(&k, &UnitWindowVector::new(n)) {
            Ok(v) => v,
            Err(Error::SingularOperator(_)) => f64::NAN,
            Err(e) => return Err(e),
        };
        out.extend([n as f64, det, (det - exact_det).abs(), form, (form - exact_form).abs()]);
        n *= 2;
    }
    Ok(out)
}

/// `|ψ(x₁, x₂; t)|²` on an `n × n` grid over `[−half_width, half_width]²`
/// (row-major, x₂ fastest) for a displaced, boosted ground state of the
/// coupled pair (m = ħ = 1, C = 0), propagated in closed form.
pub fn packet_density(
    omega: f64,
    lambda: f64,
    t: f64,
    center: [f64; 2],
    momentum: [f64; 2],
    half_width: f64,
    n: usize,
) -> Result<Vec<f64>> {
    if n < 2 || !(half_width > 0.0) {
        return Err(Error::InvalidParameter("need n >= 2 and half_width > 0".into()));
    }
    let p = SystemParams::resonant(1.0, omega, lambda, 0.0, 1.0)?;
    let psi0 = GaussianWave::system_ground_state(&p, center, momentum)?;
    let psi = if t == 0.0 { psi0 } else { psi0.propagate(&system_kernel(&p, t, &KernelOptions::default())?)? };
    let h = 2.0 * half_width / (n - 1) as f64;
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let x = [-half_width + i as f64 * h, -half_width + j as f64 * h];
            out.push(psi.eval(&x).norm_sqr());
        }
    }
    Ok(out)
}

fn js(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen(js_name = kernelCurve)]
pub fn kernel_curve_js(omega: f64, t: f64, x0: f64, x_min: f64, x_max: f64, n: usize) -> std::result::Result<Vec<f64>, JsError> {
    kernel_curve(omega, t, x0, x_min, x_max, n).map_err(js)
}

#[wasm_bindgen(js_name = convergence)]
pub fn convergence_js(omega: f64, t: f64, n_max: usize) -> std::result::Result<Vec<f64>, JsError> {
    convergence(omega, t, n_max).map_err(js)
}

#[wasm_bindgen(js_name = packetDensity)]
#[allow(clippy::too_many_arguments)]
pub fn packet_density_js(
    omega: f64,
    lambda: f64,
    t: f64,
    x1: f64,
    x2: f64,
    p1: f64,
    p2: f64,
    half_width: f64,
    n: usize,
) -> std::result::Result<Vec<f64>, JsError> {
    packet_density(omega, lambda, t, [x1, x2], [p1, p2], half_width, n).map_err(js)
}
