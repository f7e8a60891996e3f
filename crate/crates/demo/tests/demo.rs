use hidaprop::Error;
use hidaprop_demo::{convergence, kernel_curve, packet_density};

#[test]
fn kernel_curve_matches_closed_form() {
    let v = kernel_curve(1.0, 1.0, 0.0, -2.0, 2.0, 5).unwrap();
    assert_eq!(v.len(), 15);
    assert_eq!(v[0], -2.0);
    assert_eq!(v[12], 2.0);
    // |K| = √(mΩ/(2πħ|sin Ωt|)) everywhere
    let modulus = (1.0 / (2.0 * std::f64::consts::PI * 1f64.sin())).sqrt();
    for row in v.chunks(3) {
        assert!((row[1].hypot(row[2]) - modulus).abs() < 1e-14);
    }
    assert!(matches!(kernel_curve(1.0, std::f64::consts::PI, 0.0, -1.0, 1.0, 3), Err(Error::Caustic { .. })));
}

#[test]
fn convergence_rows_shrink() {
    let v = convergence(1.0, 1.0, 512).unwrap();
    let rows: Vec<&[f64]> = v.chunks(5).collect();
    assert_eq!(rows.len(), 7);
    assert_eq!(rows[0][0], 8.0);
    for w in rows.windows(2) {
        assert!(w[1][2] < w[0][2] && w[1][4] < w[0][4]);
    }
    assert!(rows[6][2] < 1e-5);
}

#[test]
fn packet_density_is_normalized_and_moves() {
    let n = 121;
    let hw = 6.0;
    let h = 2.0 * hw / (n - 1) as f64;
    let rho0 = packet_density(2f64.sqrt(), 1.0, 0.0, [1.0, 0.0], [0.0, 0.0], hw, n).unwrap();
    let rho1 = packet_density(2f64.sqrt(), 1.0, 1.1, [1.0, 0.0], [0.0, 0.0], hw, n).unwrap();
    for rho in [&rho0, &rho1] {
        assert!((rho.iter().sum::<f64>() * h * h - 1.0).abs() < 1e-8);
    }
    let mean_x1 = |rho: &[f64]| -> f64 {
        (0..n * n).map(|k| rho[k] * (-hw + (k / n) as f64 * h)).sum::<f64>() * h * h
    };
    assert!((mean_x1(&rho0) - 1.0).abs() < 1e-8);
    assert!(mean_x1(&rho1) < 0.9);
    assert!(packet_density(1.0, 2.0, 0.5, [0.0, 0.0], [0.0, 0.0], hw, n).is_err());
}
