//! Complex Gaussian algebra: quadratic-form kernels and the multidimensional
//! Gaussian integral with continuous branch tracking.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-14;
const SINGULAR_TOL: f64 = 1e-13;
const HOMOTOPY_STEPS: usize = 512;

/// A Gaussian kernel `prefactor · exp(i·xᵀ M x / ħ)` over `dim` coordinates.
///
/// Two-point propagators over `d` spatial coordinates are stored with
/// `dim = 2d` and the coordinate vector ordered as `(x_final, x_initial)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticKernel {
    pub dim: usize,
    pub prefactor: Complex64,
    pub form: DMatrix<Complex64>,
    pub time: f64,
    pub hbar: f64,
}

impl QuadraticKernel {
    pub fn new(prefactor: Complex64, form: DMatrix<Complex64>, time: f64, hbar: f64) -> Result<Self> {
        if !form.is_square() {
            return Err(Error::InvalidParameter("quadratic form must be square".into()));
        }
        let dim = form.nrows();
        for i in 0..dim {
            for j in 0..i {
                if (form[(i, j)] - form[(j, i)]).norm() > SYMMETRY_TOL {
                    return Err(Error::InvalidParameter(format!(
                        "quadratic form not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(QuadraticKernel { dim, prefactor, form, time, hbar })
    }

    /// `xᵀ M x`.
    #[allow(clippy::needless_range_loop)]
    pub fn quadratic(&self, x: &[f64]) -> Complex64 {
        debug_assert_eq!(x.len(), self.dim);
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..self.dim {
            let mut row = Complex64::new(0.0, 0.0);
            for j in 0..self.dim {
                row += self.form[(i, j)] * x[j];
            }
            acc += row * x[i];
        }
        acc
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        self.prefactor * (Complex64::i() * self.quadratic(x) / self.hbar).exp()
    }

    /// Pointwise product of two kernels over the same coordinates.
    pub fn product(&self, other: &QuadraticKernel) -> Result<QuadraticKernel> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        if other.hbar != self.hbar {
            return Err(Error::InvalidParameter("kernels use different hbar".into()));
        }
        Ok(QuadraticKernel {
            dim: self.dim,
            prefactor: self.prefactor * other.prefactor,
            form: &self.form + &other.form,
            time: self.time,
            hbar: self.hbar,
        })
    }

    /// Splits a two-point form into `(A, B, C)` with
    /// `zᵀMz = xᵀAx + 2xᵀBx₀ + x₀ᵀCx₀`.
    pub fn two_point_blocks(&self) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>, DMatrix<Complex64>)> {
        if !self.dim.is_multiple_of(2) {
            return Err(Error::InvalidParameter("two-point kernel needs an even dimension".into()));
        }
        let d = self.dim / 2;
        Ok((
            self.form.view((0, 0), (d, d)).into_owned(),
            self.form.view((0, d), (d, d)).into_owned(),
            self.form.view((d, d), (d, d)).into_owned(),
        ))
    }
}

/// `∫ exp(−½ xᵀ a x + bᵀ x) dx = (2π)^{d/2} det(a)^{−1/2} exp(½ bᵀ a⁻¹ b)`.
///
/// `a` must be complex symmetric with positive semidefinite real part. The
/// square root of `det(a)` follows the path `(1 − s)·I + s·a`, along which no
/// eigenvalue leaves the closed right half-plane, so the branch is the one
/// continuously connected to the real positive-definite case.
pub fn gaussian_integral(form_a: &DMatrix<Complex64>, shift_b: &DVector<Complex64>) -> Result<Complex64> {
    let d = form_a.nrows();
    if !form_a.is_square() || d == 0 {
        return Err(Error::InvalidParameter("form must be a non-empty square matrix".into()));
    }
    if shift_b.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: shift_b.len() });
    }
    for i in 0..d {
        for j in 0..i {
            if (form_a[(i, j)] - form_a[(j, i)]).norm() > SYMMETRY_TOL * (1.0 + form_a[(i, j)].norm()) {
                return Err(Error::InvalidParameter("form must be symmetric".into()));
            }
        }
    }

    let re = form_a.map(|z| z.re);
    let eig = SymmetricEigen::new(re);
    let scale = form_a.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    let min_eig = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min_eig < -1e-12 * scale {
        return Err(Error::Divergent(format!(
            "real part of the form has a negative eigenvalue {min_eig:e}"
        )));
    }

    let lu = form_a.clone().lu();
    let det = lu.determinant();
    if det.norm() < SINGULAR_TOL {
        return Err(Error::SingularForm(det.norm()));
    }
    let solved = lu
        .solve(shift_b)
        .ok_or(Error::SingularForm(det.norm()))?;
    let bilinear: Complex64 = shift_b.iter().zip(solved.iter()).map(|(b, s)| b * s).sum();

    let sqrt_det = tracked_sqrt_det(form_a);
    let norm = (2.0 * std::f64::consts::PI).powf(d as f64 / 2.0);
    Ok(norm / sqrt_det * (0.5 * bilinear).exp())
}

/// √det(a) continued along `(1 − s)·I + s·a`, `s ∈ [0, 1]`.
fn tracked_sqrt_det(a: &DMatrix<Complex64>) -> Complex64 {
    let d = a.nrows();
    let id = DMatrix::<Complex64>::identity(d, d);
    let mut root = Complex64::new(1.0, 0.0);
    for k in 1..=HOMOTOPY_STEPS {
        let s = k as f64 / HOMOTOPY_STEPS as f64;
        let m = &id * Complex64::new(1.0 - s, 0.0) + a * Complex64::new(s, 0.0);
        let r = m.determinant().sqrt();
        root = if (r - root).norm() <= (r + root).norm() { r } else { -r };
    }
    root
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn standard_normalization() {
        let a = DMatrix::<Complex64>::identity(2, 2);
        let b = DVector::zeros(2);
        assert!(rel(gaussian_integral(&a, &b).unwrap(), c(2.0 * PI, 0.0)) < 1e-14);
    }

    #[test]
    fn shifted_diagonal() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![c(2.0, 0.0), c(2.0, 0.0)]));
        let b = DVector::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0)]);
        let want = c(PI * 0.5f64.exp(), 0.0);
        assert!(rel(gaussian_integral(&a, &b).unwrap(), want) < 1e-14);
    }

    /// Fresnel case: a = i. Oracle: rotate the contour x = e^{-iπ/4} s, on
    /// which the integrand is a decaying real Gaussian, and integrate by
    /// trapezoid.
    #[test]
    fn fresnel_matches_contour_quadrature() {
        let a = DMatrix::from_element(1, 1, c(0.0, 1.0));
        let got = gaussian_integral(&a, &DVector::zeros(1)).unwrap();
        let rot = Complex64::from_polar(1.0, -PI / 4.0);
        let h = 1e-3;
        let mut sum = c(0.0, 0.0);
        for k in -20000..=20000 {
            let s = k as f64 * h;
            let x = rot * s;
            sum += (-0.5 * c(0.0, 1.0) * x * x).exp() * rot * h;
        }
        assert!(rel(got, sum) < 1e-10);
        let closed = (2.0 * PI).sqrt() * Complex64::from_polar(1.0, -PI / 4.0);
        assert!(rel(got, closed) < 1e-14);
    }

    #[test]
    fn errors() {
        let a = DMatrix::from_element(1, 1, c(-1.0, 0.3));
        assert!(matches!(gaussian_integral(&a, &DVector::zeros(1)), Err(Error::Divergent(_))));
        let a = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(gaussian_integral(&a, &DVector::zeros(2)), Err(Error::SingularForm(_))));
    }

    /// Brute-force trapezoid oracle for Re(a) positive definite.
    fn brute_force(a: &DMatrix<Complex64>, b: &DVector<Complex64>) -> Complex64 {
        let d = a.nrows();
        let (half, h) = (12.0, 0.02);
        let n = (2.0 * half / h) as i64;
        let pts: Vec<f64> = (0..=n).map(|k| -half + k as f64 * h).collect();
        let f = |x: &[f64]| {
            let mut q = c(0.0, 0.0);
            let mut lin = c(0.0, 0.0);
            for i in 0..d {
                lin += b[i] * x[i];
                for j in 0..d {
                    q += a[(i, j)] * x[i] * x[j];
                }
            }
            (-0.5 * q + lin).exp()
        };
        match d {
            1 => pts.iter().map(|&x| f(&[x])).sum::<Complex64>() * h,
            2 => {
                let mut s = c(0.0, 0.0);
                for &x in &pts {
                    for &y in &pts {
                        s += f(&[x, y]);
                    }
                }
                s * h * h
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn agrees_with_brute_force() {
        let cases: Vec<(DMatrix<Complex64>, DVector<Complex64>)> = vec![
            (DMatrix::from_element(1, 1, c(1.3, 2.1)), DVector::from_element(1, c(0.4, -0.7))),
            (DMatrix::from_element(1, 1, c(0.6, -3.0)), DVector::from_element(1, c(-0.2, 0.5))),
            (
                DMatrix::from_row_slice(2, 2, &[c(1.2, 0.5), c(0.3, -0.8), c(0.3, -0.8), c(0.9, 1.7)]),
                DVector::from_vec(vec![c(0.2, 0.1), c(-0.3, 0.4)]),
            ),
            (
                DMatrix::from_row_slice(2, 2, &[c(2.0, -4.0), c(-0.5, 1.0), c(-0.5, 1.0), c(1.0, 3.0)]),
                DVector::from_vec(vec![c(0.5, 0.0), c(0.0, -0.6)]),
            ),
        ];
        for (a, b) in cases {
            let got = gaussian_integral(&a, &b).unwrap();
            let want = brute_force(&a, &b);
            assert!(rel(got, want) < 1e-8, "{got} vs {want}");
        }
    }

    #[test]
    fn kernel_eval_and_product() {
        let form = DMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(-1.0, 0.0), c(-1.0, 0.0), c(0.5, 0.0)]);
        let k = QuadraticKernel::new(c(2.0, 0.0), form, 1.0, 1.0).unwrap();
        let x = [0.3, -0.2];
        let q = 0.5 * 0.09 + 0.5 * 0.04 + -2.0 * 0.3 * -0.2;
        assert!((k.eval(&x) - c(2.0, 0.0) * c(0.0, q).exp()).norm() < 1e-15);
        let kk = k.product(&k).unwrap();
        assert!((kk.eval(&x) - k.eval(&x) * k.eval(&x)).norm() < 1e-14);
        let bad = DMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(-1.0, 0.0), c(1.0, 0.0), c(0.5, 0.0)]);
        assert!(QuadraticKernel::new(c(1.0, 0.0), bad, 1.0, 1.0).is_err());
    }
}
