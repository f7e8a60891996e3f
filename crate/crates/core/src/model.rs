//! Physical parameters, the two decoupling rotations and the normal-mode
//! frequencies of the coupled system + bath.

use std::f64::consts::{FRAC_PI_4, SQRT_2};

use crate::error::{Error, Result};

/// Relative tolerance for the resonance assumption `Ω₂ = ω_q`.
pub const RESONANCE_TOL: f64 = 1e-9;

/// Masses, frequencies and couplings of the two system oscillators and the
/// bath oscillator. All oscillators share the mass `m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub m: f64,
    /// System angular frequency ω.
    pub omega: f64,
    /// Bath angular frequency ω_q.
    pub omega_q: f64,
    /// System–system coupling λ (energy / length²).
    pub lambda_c: f64,
    /// System–bath coupling C (energy / length²).
    pub c_coupling: f64,
    pub hbar: f64,
}

impl SystemParams {
    pub fn new(
        m: f64,
        omega: f64,
        omega_q: f64,
        lambda_c: f64,
        c_coupling: f64,
        hbar: f64,
    ) -> Result<Self> {
        let p = SystemParams { m, omega, omega_q, lambda_c, c_coupling, hbar };
        p.validate()?;
        Ok(p)
    }

    /// Parameters with the bath frequency pinned to the resonance `ω_q = Ω₂`.
    pub fn resonant(m: f64, omega: f64, lambda_c: f64, c_coupling: f64, hbar: f64) -> Result<Self> {
        let radicand = omega * omega - lambda_c / m;
        if !(radicand > 0.0) {
            return Err(Error::ImaginaryFrequency { name: "Omega2", radicand });
        }
        Self::new(m, omega, radicand.sqrt(), lambda_c, c_coupling, hbar)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("m", self.m),
            ("omega", self.omega),
            ("omega_q", self.omega_q),
            ("hbar", self.hbar),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        for (name, v) in [("lambda", self.lambda_c), ("c", self.c_coupling)] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite, got {v}")));
            }
        }
        Ok(())
    }

    /// Copy with the system–bath coupling switched off.
    pub fn without_bath_coupling(&self) -> Self {
        SystemParams { c_coupling: 0.0, ..*self }
    }
}

/// Frequencies of the three decoupled modes (q₁, Q₂, Q) plus the
/// intermediate Ω₂ of the symmetric system mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeFrequencies {
    pub omega1: f64,
    pub omega2: f64,
    pub phi2: f64,
    pub phi: f64,
}

/// Decoupling angles φ = (2n+1)π/4 and θ = (2n'+1)π/4.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationAngles {
    pub phi_angle: f64,
    pub theta_angle: f64,
    pub branch_n: u32,
    pub branch_n_theta: u32,
}

impl RotationAngles {
    pub fn from_branches(n_phi: u32, n_theta: u32) -> Self {
        RotationAngles {
            phi_angle: rotation_angle(n_phi),
            theta_angle: rotation_angle(n_theta),
            branch_n: n_phi,
            branch_n_theta: n_theta,
        }
    }

    /// Same branch for both rotations.
    pub fn branch(n: u32) -> Self {
        Self::from_branches(n, n)
    }

    /// Orthogonal matrix `R` with `(q₁, Q₂, Q) = R·(x₁, x₂, q)`.
    ///
    /// The entries are ±1/√2 (products ±½) taken from the branch numbers, so
    /// the symmetric combinations come out bitwise symmetric.
    pub fn matrix(&self) -> [[f64; 3]; 3] {
        let (s1, c1) = exact_sin_cos(self.branch_n);
        let (s2, c2) = exact_sin_cos(self.branch_n_theta);
        [
            [c1, -s1, 0.0],
            [c2 * s1, c2 * c1, -s2],
            [s2 * s1, s2 * c1, c2],
        ]
    }
}

impl Default for RotationAngles {
    fn default() -> Self {
        Self::branch(0)
    }
}

/// `(sin, cos)` of `(2n + 1)·π/4`.
fn exact_sin_cos(n: u32) -> (f64, f64) {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    match n % 4 {
        0 => (h, h),
        1 => (h, -h),
        2 => (-h, -h),
        _ => (-h, h),
    }
}

/// `(2n + 1)·π/4`, the angles at which the bilinear couplings vanish.
pub fn rotation_angle(branch_n: u32) -> f64 {
    (2.0 * branch_n as f64 + 1.0) * FRAC_PI_4
}

/// Coefficients of the system Lagrangian after the first rotation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingCoefficients {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub mu: f64,
    pub nu: f64,
}

pub fn coupling_coefficients(p: &SystemParams, phi_angle: f64) -> CouplingCoefficients {
    let (s, c) = phi_angle.sin_cos();
    let half_k = 0.5 * p.m * p.omega * p.omega;
    CouplingCoefficients {
        alpha: half_k + p.lambda_c * c * s,
        beta: half_k - p.lambda_c * c * s,
        gamma: p.lambda_c * (2.0 * phi_angle).cos(),
        mu: c - s,
        nu: c + s,
    }
}

/// Coefficients of the (q₂, q) Lagrangian after the second rotation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathCoefficients {
    pub a: f64,
    pub b: f64,
    pub d: f64,
}

pub fn bath_coefficients(p: &SystemParams, omega2: f64, theta_angle: f64) -> BathCoefficients {
    let (s, c) = theta_angle.sin_cos();
    let half_k = 0.5 * p.m * omega2 * omega2;
    let sc = SQRT_2 * p.c_coupling;
    BathCoefficients {
        a: half_k + sc * c * s,
        b: half_k - sc * c * s,
        d: sc * (2.0 * theta_angle).cos(),
    }
}

fn checked_sqrt(name: &'static str, radicand: f64) -> Result<f64> {
    if radicand > 0.0 {
        Ok(radicand.sqrt())
    } else {
        Err(Error::ImaginaryFrequency { name, radicand })
    }
}

/// Ω₁ = √(ω² + λ/m), Ω₂ = √(ω² − λ/m), Φ₂ = √(Ω₂² + √2·C/m),
/// Φ = √(Ω₂² − √2·C/m), with the resonance `Ω₂ = ω_q` enforced.
pub fn mode_frequencies(p: &SystemParams) -> Result<ModeFrequencies> {
    p.validate()?;
    let w2 = p.omega * p.omega;
    let l = p.lambda_c / p.m;
    let omega1 = checked_sqrt("Omega1", w2 + l)?;
    let omega2_sq = w2 - l;
    let omega2 = checked_sqrt("Omega2", omega2_sq)?;
    if ((omega2 - p.omega_q) / p.omega_q).abs() > RESONANCE_TOL {
        return Err(Error::ResonanceViolation { omega2, omega_q: p.omega_q });
    }
    let shift = SQRT_2 * p.c_coupling / p.m;
    let phi2 = checked_sqrt("Phi2", omega2_sq + shift)?;
    let phi = checked_sqrt("Phi", omega2_sq - shift)?;
    Ok(ModeFrequencies { omega1, omega2, phi2, phi })
}

impl ModeFrequencies {
    /// Frequencies of the modes `(q₁, Q₂, Q)` under the given rotation branches.
    ///
    /// Odd φ-branches move the bath coupling onto q₁ and do not decouple the
    /// system, so they are rejected. Φ₂ and Φ trade places when exactly one of
    /// "θ-branch odd" and "φ-branch ≡ 2 (mod 4)" holds; the latter flips the
    /// sign of the symmetric coordinate q₂.
    pub fn for_angles(&self, angles: &RotationAngles) -> Result<[f64; 3]> {
        if angles.branch_n % 2 == 1 {
            return Err(Error::InvalidParameter(format!(
                "phi branch {} couples the bath to q1; use an even branch",
                angles.branch_n
            )));
        }
        let swapped = (angles.branch_n_theta % 2 == 1) ^ (angles.branch_n % 4 == 2);
        if !swapped {
            Ok([self.omega1, self.phi2, self.phi])
        } else {
            Ok([self.omega1, self.phi, self.phi2])
        }
    }
}

/// Maps original coordinates `(x₁, x₂, q)` to normal modes `(q₁, Q₂, Q)`.
pub fn to_normal_modes(x1: f64, x2: f64, q: f64, angles: &RotationAngles) -> [f64; 3] {
    let r = angles.matrix();
    let x = [x1, x2, q];
    std::array::from_fn(|i| (0..3).map(|j| r[i][j] * x[j]).sum())
}

/// Inverse of [`to_normal_modes`].
pub fn from_normal_modes(q1: f64, big_q2: f64, big_q: f64, angles: &RotationAngles) -> [f64; 3] {
    let r = angles.matrix();
    let y = [q1, big_q2, big_q];
    std::array::from_fn(|j| (0..3).map(|i| r[i][j] * y[i]).sum())
}

/// Total potential energy of system + bath.
///
/// The couplings enter with a negative sign, which is the convention under
/// which Ω₁ belongs to the antisymmetric mode x₁ − x₂ and Φ₂ to Q₂.
pub fn potential(p: &SystemParams, x1: f64, x2: f64, q: f64) -> f64 {
    system_potential(p, x1, x2) + 0.5 * p.m * p.omega_q * p.omega_q * q * q
        - p.c_coupling * q * (x1 + x2)
}

/// Potential of the two system oscillators alone.
pub fn system_potential(p: &SystemParams, x1: f64, x2: f64) -> f64 {
    0.5 * p.m * p.omega * p.omega * (x1 * x1 + x2 * x2) - p.lambda_c * x1 * x2
}

/// Hessian of [`potential`] in `(x₁, x₂, q)`.
pub fn potential_hessian(p: &SystemParams) -> [[f64; 3]; 3] {
    let k = p.m * p.omega * p.omega;
    let c = p.c_coupling;
    [
        [k, -p.lambda_c, -c],
        [-p.lambda_c, k, -c],
        [-c, -c, p.m * p.omega_q * p.omega_q],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn params(m: f64, omega: f64, omega_q: f64, lambda_c: f64, c: f64) -> SystemParams {
        SystemParams { m, omega, omega_q, lambda_c, c_coupling: c, hbar: 1.0 }
    }

    #[test]
    fn rotation_angle_branches() {
        assert_eq!(rotation_angle(0), PI / 4.0);
        assert_relative_eq!(rotation_angle(1), 3.0 * PI / 4.0);
        assert_relative_eq!(rotation_angle(2), 5.0 * PI / 4.0);
    }

    #[test]
    fn coupling_coefficients_example() {
        let p = params(1.0, 1.0, 1.0, 2.0, 0.0);
        let k = coupling_coefficients(&p, PI / 4.0);
        assert_relative_eq!(k.alpha, 1.5, epsilon = 1e-15);
        assert_relative_eq!(k.beta, -0.5, epsilon = 1e-15);
        assert!(k.gamma.abs() < 1e-15);
        assert!(k.mu.abs() < 1e-15);
        assert_relative_eq!(k.nu, SQRT_2, epsilon = 1e-15);
    }

    #[test]
    fn uncoupled_coefficients() {
        let p = params(2.0, 1.5, 1.0, 0.0, 0.0);
        for phi in [0.1, 0.7, 2.0] {
            let k = coupling_coefficients(&p, phi);
            assert_eq!(k.alpha, 0.5 * 2.0 * 1.5 * 1.5);
            assert_eq!(k.beta, k.alpha);
            assert_eq!(k.gamma, 0.0);
            assert_relative_eq!(k.mu, phi.cos() - phi.sin());
        }
    }

    #[test]
    fn bath_coefficients_examples() {
        let p = params(1.0, 1.0, 1.0, 0.0, 1.0);
        let b = bath_coefficients(&p, 1.0, 0.0);
        assert_eq!((b.a, b.b), (0.5, 0.5));
        assert_relative_eq!(b.d, SQRT_2, epsilon = 1e-15);
        assert!(bath_coefficients(&p, 1.0, PI / 4.0).d.abs() < 1e-15);
        let p0 = params(1.0, 1.0, 1.0, 0.0, 0.0);
        let b0 = bath_coefficients(&p0, 0.8, 1.1);
        assert_relative_eq!(b0.a, 0.32, epsilon = 1e-15);
        assert_eq!(b0.a, b0.b);
        assert_eq!(b0.d, 0.0);
    }

    #[test]
    fn frequencies_examples() {
        let f = mode_frequencies(&params(1.0, 1.0, 1.0, 0.0, 0.0)).unwrap();
        assert_eq!((f.omega1, f.omega2, f.phi2, f.phi), (1.0, 1.0, 1.0, 1.0));

        let f = mode_frequencies(&params(1.0, 2.0, 1.0, 3.0, 0.0)).unwrap();
        assert_relative_eq!(f.omega1, 7f64.sqrt(), epsilon = 1e-15);
        assert_eq!((f.omega2, f.phi2, f.phi), (1.0, 1.0, 1.0));

        let p = params(2.0, 1.0, 0.5f64.sqrt(), 1.0, SQRT_2);
        match mode_frequencies(&p) {
            Err(Error::ImaginaryFrequency { name, radicand }) => {
                assert_eq!(name, "Phi");
                assert_relative_eq!(radicand, -0.5, epsilon = 1e-15);
            }
            other => panic!("expected ImaginaryFrequency, got {other:?}"),
        }
    }

    #[test]
    fn resonance_is_checked() {
        let p = params(1.0, 2.0, 1.0 + 1e-6, 3.0, 0.0);
        assert!(matches!(mode_frequencies(&p), Err(Error::ResonanceViolation { .. })));
        let p = params(1.0, 2.0, 1.0 + 1e-11, 3.0, 0.0);
        assert!(mode_frequencies(&p).is_ok());
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(SystemParams::new(0.0, 1.0, 1.0, 0.0, 0.0, 1.0).is_err());
        assert!(SystemParams::new(1.0, 1.0, 1.0, f64::NAN, 0.0, 1.0).is_err());
        assert!(SystemParams::new(1.0, 1.0, -1.0, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn symmetric_coordinate_example() {
        let a = 0.8;
        let y = to_normal_modes(a, a, 0.0, &RotationAngles::default());
        assert!(y[0].abs() < 1e-15);
        // √2·a rotated by θ = π/4 gives (a, a)
        assert_relative_eq!(y[1], a, epsilon = 1e-15);
        assert_relative_eq!(y[2], a, epsilon = 1e-15);
        assert_eq!(to_normal_modes(0.0, 0.0, 0.0, &RotationAngles::default()), [0.0; 3]);
    }

    /// The rotation must diagonalize the potential Hessian with the closed-form
    /// frequencies on the diagonal.
    #[test]
    fn rotation_diagonalizes_hessian() {
        let p = SystemParams::resonant(1.3, 1.7, 0.9, 0.35, 1.0).unwrap();
        let f = mode_frequencies(&p).unwrap();
        for (n, k) in [(0, 0), (0, 1), (2, 0), (2, 1), (4, 3), (6, 2)] {
            let angles = RotationAngles::from_branches(n, k);
            let r = angles.matrix();
            let h = potential_hessian(&p);
            let want = f.for_angles(&angles).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    let mut d = 0.0;
                    for a in 0..3 {
                        for b in 0..3 {
                            d += r[i][a] * h[a][b] * r[j][b];
                        }
                    }
                    let expect = if i == j { p.m * want[i] * want[i] } else { 0.0 };
                    assert!((d - expect).abs() < 1e-12, "({i},{j}) {d} vs {expect}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn decoupling_invariants(
            m in 0.2f64..5.0, omega in 0.5f64..3.0, lam in -2.0f64..2.0,
            phi in -3.0f64..3.0, theta in -3.0f64..3.0, c in -1.0f64..1.0, n in 0u32..50,
        ) {
            let p = params(m, omega, 1.0, lam, c);
            let k = coupling_coefficients(&p, phi);
            prop_assert!((k.alpha + k.beta - m * omega * omega).abs() <= 1e-12 * m * omega * omega);
            prop_assert!((k.mu * k.mu + k.nu * k.nu - 2.0).abs() < 1e-12);
            let b = bath_coefficients(&p, omega, theta);
            prop_assert!((b.a + b.b - m * omega * omega).abs() <= 1e-12 * m * omega * omega);
            let ang = rotation_angle(n);
            prop_assert!(coupling_coefficients(&p, ang).gamma.abs() < 1e-12 * (1.0 + lam.abs()));
            prop_assert!(bath_coefficients(&p, omega, ang).d.abs() < 1e-12 * (1.0 + c.abs()));
        }

        #[test]
        fn frequency_identities(m in 0.2f64..5.0, omega in 1.0f64..3.0, lam in -0.5f64..0.5, c in -0.3f64..0.3) {
            let p = SystemParams::resonant(m, omega, lam * m, c * m, 1.0).unwrap();
            if let Ok(f) = mode_frequencies(&p) {
                let lhs = f.omega1 * f.omega1 - f.omega2 * f.omega2;
                prop_assert!((lhs - 2.0 * p.lambda_c / m).abs() <= 1e-12 * (f.omega1 * f.omega1));
                let lhs = f.phi2 * f.phi2 - f.phi * f.phi;
                prop_assert!((lhs - 2.0 * SQRT_2 * p.c_coupling / m).abs() <= 1e-12 * (f.phi2 * f.phi2));
            }
        }

        #[test]
        fn rotations_round_trip(x1 in -10.0f64..10.0, x2 in -10.0f64..10.0, q in -10.0f64..10.0, n in 0u32..4, k in 0u32..4) {
            let ang = RotationAngles::from_branches(n, k);
            let y = to_normal_modes(x1, x2, q, &ang);
            let back = from_normal_modes(y[0], y[1], y[2], &ang);
            prop_assert!((back[0] - x1).abs() < 1e-12 && (back[1] - x2).abs() < 1e-12 && (back[2] - q).abs() < 1e-12);
            let n0 = x1 * x1 + x2 * x2 + q * q;
            let n1 = y[0] * y[0] + y[1] * y[1] + y[2] * y[2];
            prop_assert!((n0 - n1).abs() <= 1e-12 * (1.0 + n0));
        }
    }
}
