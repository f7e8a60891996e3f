//! Uniform Cartesian grids and complex amplitudes sampled on them.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Uniform grid with `n_points[d]` cell-centred nodes covering
/// `[-extent[d]/2, extent[d]/2)` in each dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub n_points: Vec<usize>,
    pub extent: Vec<f64>,
}

impl GridSpec {
    pub fn new(n_points: Vec<usize>, extent: Vec<f64>) -> Result<Self> {
        if n_points.is_empty() || n_points.len() > 3 {
            return Err(Error::InvalidParameter(format!(
                "grids support 1 to 3 dimensions, got {}",
                n_points.len()
            )));
        }
        if n_points.len() != extent.len() {
            return Err(Error::DimensionMismatch { expected: n_points.len(), got: extent.len() });
        }
        if n_points.iter().any(|&n| n < 2) {
            return Err(Error::InvalidParameter("need at least 2 points per dimension".into()));
        }
        if extent.iter().any(|&l| !(l.is_finite() && l > 0.0)) {
            return Err(Error::InvalidParameter("extent must be finite and positive".into()));
        }
        Ok(GridSpec { n_points, extent })
    }

    /// Same resolution and extent in every dimension.
    pub fn cube(dims: usize, n: usize, extent: f64) -> Result<Self> {
        Self::new(vec![n; dims], vec![extent; dims])
    }

    pub fn dims(&self) -> usize {
        self.n_points.len()
    }

    pub fn len(&self) -> usize {
        self.n_points.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, d: usize) -> f64 {
        self.extent[d] / self.n_points[d] as f64
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dims()).map(|d| self.spacing(d)).product()
    }

    pub fn coords(&self, d: usize) -> Vec<f64> {
        let h = self.spacing(d);
        (0..self.n_points[d])
            .map(|k| -0.5 * self.extent[d] + (k as f64 + 0.5) * h)
            .collect()
    }

    /// Row-major multi-index of a flat index (last dimension fastest).
    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dims()];
        for d in (0..self.dims()).rev() {
            idx[d] = flat % self.n_points[d];
            flat /= self.n_points[d];
        }
        idx
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .enumerate()
            .map(|(d, &k)| -0.5 * self.extent[d] + (k as f64 + 0.5) * self.spacing(d))
            .collect()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    pub fn is_boundary(&self, flat: usize) -> bool {
        self.multi_index(flat)
            .iter()
            .zip(&self.n_points)
            .any(|(&k, &n)| k == 0 || k + 1 == n)
    }

    pub fn is_power_of_two(&self) -> bool {
        self.n_points.iter().all(|n| n.is_power_of_two())
    }
}

/// Complex amplitudes on a [`GridSpec`], stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GridState {
    pub spec: GridSpec,
    pub values: Vec<Complex64>,
}

impl GridState {
    pub fn new(spec: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::DimensionMismatch { expected: spec.len(), got: values.len() });
        }
        Ok(GridState { spec, values })
    }

    pub fn from_fn(spec: GridSpec, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let values = (0..spec.len()).map(|i| f(&spec.point(i))).collect();
        GridState { spec, values }
    }

    /// Product of normalized Gaussians
    /// `(2πσ²)^{-1/4} exp(−(x−c)²/4σ² + i p (x−c)/ħ)` in each dimension.
    pub fn gaussian(spec: GridSpec, center: &[f64], momentum: &[f64], sigma: f64, hbar: f64) -> Result<Self> {
        let dims = spec.dims();
        if center.len() != dims || momentum.len() != dims {
            return Err(Error::DimensionMismatch { expected: dims, got: center.len().min(momentum.len()) });
        }
        let norm = (2.0 * std::f64::consts::PI * sigma * sigma).powf(-0.25 * dims as f64);
        Ok(Self::from_fn(spec, |x| {
            let mut z = Complex64::new(0.0, 0.0);
            for d in 0..dims {
                let dx = x[d] - center[d];
                z += Complex64::new(-dx * dx / (4.0 * sigma * sigma), momentum[d] * dx / hbar);
            }
            norm * z.exp()
        }))
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.spec.cell_volume()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn normalized(mut self) -> Self {
        let n = self.norm();
        for z in &mut self.values {
            *z /= n;
        }
        self
    }

    /// `⟨self|other⟩` by the rectangle (periodic trapezoid) rule.
    pub fn inner(&self, other: &GridState) -> Complex64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            * self.spec.cell_volume()
    }

    pub fn l2_distance(&self, other: &GridState) -> f64 {
        (self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            * self.spec.cell_volume())
        .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn boundary_max(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .filter(|(i, _)| self.spec.is_boundary(*i))
            .map(|(_, z)| z.norm())
            .fold(0.0, f64::max)
    }

    /// Fails with [`Error::GridTooNarrow`] if the boundary amplitude exceeds
    /// `rel_limit` times the peak amplitude.
    pub fn check_boundary(&self, rel_limit: f64) -> Result<()> {
        let limit = rel_limit * self.max_abs();
        let edge = self.boundary_max();
        if edge > limit {
            return Err(Error::GridTooNarrow { edge, limit });
        }
        Ok(())
    }

    /// `⟨x_d⟩` for a normalized state.
    pub fn mean_position(&self, d: usize) -> f64 {
        let dv = self.spec.cell_volume();
        (0..self.spec.len())
            .map(|i| self.values[i].norm_sqr() * self.spec.point(i)[d])
            .sum::<f64>()
            * dv
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_layout() {
        let g = GridSpec::new(vec![4, 2], vec![8.0, 2.0]).unwrap();
        assert_eq!(g.len(), 8);
        assert_eq!(g.coords(0), vec![-3.0, -1.0, 1.0, 3.0]);
        assert_eq!(g.multi_index(5), vec![2, 1]);
        assert_eq!(g.point(5), vec![1.0, 0.5]);
        assert!(g.is_boundary(0) && g.is_boundary(5) && g.is_boundary(3));
        assert_eq!(g.cell_volume(), 2.0);
        assert!(GridSpec::new(vec![4], vec![1.0, 2.0]).is_err());
        assert!(GridSpec::new(vec![2; 4], vec![1.0; 4]).is_err());
    }

    #[test]
    fn gaussian_is_normalized() {
        let g = GridSpec::cube(2, 64, 20.0).unwrap();
        let psi = GridState::gaussian(g, &[0.5, -0.3], &[1.0, 0.2], 0.9, 1.0).unwrap();
        assert!((psi.norm_sq() - 1.0).abs() < 1e-12);
        assert!((psi.mean_position(0) - 0.5).abs() < 1e-12);
        assert!(psi.check_boundary(1e-10).is_ok());
        let narrow = GridState::gaussian(GridSpec::cube(1, 16, 2.0).unwrap(), &[0.0], &[0.0], 0.9, 1.0).unwrap();
        assert!(matches!(narrow.check_boundary(1e-10), Err(Error::GridTooNarrow { .. })));
    }
}
