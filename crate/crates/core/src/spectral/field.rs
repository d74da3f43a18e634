use rustfft::num_complex::Complex64;

use super::grid::Grid;
use crate::error::{Error, Result};

/// Relative tolerance used when validating Hermitian symmetry of user data.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Fourier coefficients of a real field on a periodic grid.
///
/// Coefficients are Fourier-series coefficients, `c_k = n^-dim sum_x f(x) e^{-i xi.x}`,
/// so `f(x) = sum_k c_k e^{i xi.x}` and `||f||^2_{L^2} = L^dim sum_k |c_k|^2`.
/// A field carries one component (scalar) or `dim` components (vector).
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: Grid,
    comps: Vec<Vec<Complex64>>,
    divergence_free: bool,
}

/// Real samples of a field at the grid points.
#[derive(Clone, Debug)]
pub struct PhysicalField {
    grid: Grid,
    comps: Vec<Vec<f64>>,
}

impl SpectralField {
    pub fn zeros(grid: &Grid, components: usize) -> Self {
        SpectralField {
            grid: grid.clone(),
            comps: vec![vec![Complex64::new(0.0, 0.0); grid.len()]; components],
            divergence_free: false,
        }
    }

    pub fn zeros_vector(grid: &Grid) -> Self {
        Self::zeros(grid, grid.dim())
    }

    /// Wraps raw coefficient arrays after checking their shape.
    pub fn from_components(grid: &Grid, comps: Vec<Vec<Complex64>>) -> Result<Self> {
        if comps.is_empty() {
            return Err(Error::Mismatch("field needs at least one component".into()));
        }
        if let Some(bad) = comps.iter().find(|c| c.len() != grid.len()) {
            return Err(Error::Mismatch(format!(
                "component has {} coefficients, grid expects {}",
                bad.len(),
                grid.len()
            )));
        }
        Ok(SpectralField {
            grid: grid.clone(),
            comps,
            divergence_free: false,
        })
    }

    pub(crate) fn from_parts(grid: &Grid, comps: Vec<Vec<Complex64>>, divergence_free: bool) -> Self {
        debug_assert!(comps.iter().all(|c| c.len() == grid.len()));
        SpectralField {
            grid: grid.clone(),
            comps,
            divergence_free,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.comps.len()
    }

    pub fn is_vector(&self) -> bool {
        self.comps.len() == self.grid.dim()
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        &self.comps[c]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [Complex64] {
        self.divergence_free = false;
        &mut self.comps[c]
    }

    pub fn comps(&self) -> &[Vec<Complex64>] {
        &self.comps
    }

    pub(crate) fn comps_mut(&mut self) -> &mut [Vec<Complex64>] {
        &mut self.comps
    }

    pub fn into_components(self) -> Vec<Vec<Complex64>> {
        self.comps
    }

    pub fn is_divergence_free(&self) -> bool {
        self.divergence_free
    }

    pub(crate) fn set_divergence_free(&mut self, flag: bool) {
        self.divergence_free = flag;
    }

    /// Coefficient of component `c` at integer wavevector `k`.
    pub fn mode(&self, k: &[i64], c: usize) -> Result<Complex64> {
        let idx = self.grid.index_of(k)?;
        Ok(self.comps[c][idx])
    }

    /// Sets the coefficient at `k` and its conjugate at `-k`, keeping the field real.
    pub fn set_mode_pair(&mut self, k: &[i64], c: usize, value: Complex64) -> Result<()> {
        let idx = self.grid.index_of(k)?;
        let m = self.grid.mirror(idx);
        if m == idx && value.im != 0.0 {
            return Err(Error::InvalidArgument(format!(
                "mode {k:?} is its own mirror and must be real"
            )));
        }
        self.divergence_free = false;
        self.comps[c][idx] = value;
        self.comps[c][m] = value.conj();
        Ok(())
    }

    /// Largest `|c(-k) - conj c(k)|` over all modes and components, with its index.
    pub fn hermitian_defect(&self) -> (usize, f64) {
        let mut worst = (0usize, 0.0f64);
        for comp in &self.comps {
            for (idx, c) in comp.iter().enumerate() {
                let d = (comp[self.grid.mirror(idx)] - c.conj()).norm();
                if d > worst.1 || d.is_nan() {
                    worst = (idx, d);
                }
            }
        }
        worst
    }

    pub fn max_modulus(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    pub fn validate_hermitian(&self) -> Result<()> {
        let (index, defect) = self.hermitian_defect();
        let scale = self.max_modulus();
        if defect.is_nan() || defect > HERMITIAN_TOL * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::NotHermitian { index, defect });
        }
        Ok(())
    }

    pub fn all_finite(&self) -> bool {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// `L^2` inner product `<f, g>` evaluated in coefficient space.
    pub fn inner(&self, other: &SpectralField) -> Result<f64> {
        self.check_compatible(other)?;
        let mut acc = 0.0;
        for (a, b) in self.comps.iter().zip(&other.comps) {
            for (x, y) in a.iter().zip(b) {
                acc += x.re * y.re + x.im * y.im;
            }
        }
        Ok(acc * self.grid.volume())
    }

    pub fn l2_norm_sq(&self) -> f64 {
        let acc: f64 = self
            .comps
            .iter()
            .flat_map(|c| c.iter())
            .map(|c| c.norm_sqr())
            .sum();
        acc * self.grid.volume()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    /// Upper bound on `max_x |f(x)|` from the coefficient moduli.
    pub fn sup_bound(&self) -> f64 {
        let mut acc = 0.0;
        for comp in &self.comps {
            let s: f64 = comp.iter().map(|c| c.norm()).sum();
            acc += s * s;
        }
        acc.sqrt()
    }

    pub fn check_compatible(&self, other: &SpectralField) -> Result<()> {
        if !self.grid.same_shape(&other.grid) {
            return Err(Error::Mismatch(format!(
                "grids differ: {:?} vs {:?}",
                self.grid, other.grid
            )));
        }
        if self.comps.len() != other.comps.len() {
            return Err(Error::Mismatch(format!(
                "component counts differ: {} vs {}",
                self.comps.len(),
                other.comps.len()
            )));
        }
        Ok(())
    }

    pub(crate) fn require_vector(&self, op: &str) -> Result<()> {
        if !self.is_vector() {
            return Err(Error::Mismatch(format!(
                "{op} needs a {}-component vector field, got {} components",
                self.grid.dim(),
                self.comps.len()
            )));
        }
        Ok(())
    }

    /// `self + s * other`, componentwise.
    pub fn axpy(&self, s: f64, other: &SpectralField) -> Result<SpectralField> {
        self.check_compatible(other)?;
        let comps = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y * s).collect())
            .collect();
        Ok(SpectralField::from_parts(
            &self.grid,
            comps,
            self.divergence_free && other.divergence_free,
        ))
    }

    pub fn scaled(&self, s: f64) -> SpectralField {
        let comps = self
            .comps
            .iter()
            .map(|a| a.iter().map(|x| x * s).collect())
            .collect();
        SpectralField::from_parts(&self.grid, comps, self.divergence_free)
    }

    /// Bitwise equality of the coefficients.
    pub fn bit_eq(&self, other: &SpectralField) -> bool {
        self.grid.same_shape(&other.grid)
            && self.comps.len() == other.comps.len()
            && self.comps.iter().zip(&other.comps).all(|(a, b)| {
                a.iter().zip(b).all(|(x, y)| {
                    x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits()
                })
            })
    }
}

impl PhysicalField {
    pub fn zeros(grid: &Grid, components: usize) -> Self {
        PhysicalField {
            grid: grid.clone(),
            comps: vec![vec![0.0; grid.len()]; components],
        }
    }

    pub fn from_components(grid: &Grid, comps: Vec<Vec<f64>>) -> Result<Self> {
        if comps.is_empty() {
            return Err(Error::Mismatch("field needs at least one component".into()));
        }
        if let Some(bad) = comps.iter().find(|c| c.len() != grid.len()) {
            return Err(Error::Mismatch(format!(
                "component has {} samples, grid expects {}",
                bad.len(),
                grid.len()
            )));
        }
        Ok(PhysicalField {
            grid: grid.clone(),
            comps,
        })
    }

    pub(crate) fn from_parts(grid: &Grid, comps: Vec<Vec<f64>>) -> Self {
        PhysicalField {
            grid: grid.clone(),
            comps,
        }
    }

    /// Samples `f(x)` at every grid point; `f` writes one value per component.
    pub fn from_fn(grid: &Grid, components: usize, mut f: impl FnMut(&[f64; 3], &mut [f64])) -> Self {
        let mut comps = vec![vec![0.0; grid.len()]; components];
        let mut buf = vec![0.0; components];
        for idx in 0..grid.len() {
            f(&grid.point(idx), &mut buf);
            for (c, v) in buf.iter().enumerate() {
                comps[c][idx] = *v;
            }
        }
        PhysicalField {
            grid: grid.clone(),
            comps,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.comps.len()
    }

    pub fn component(&self, c: usize) -> &[f64] {
        &self.comps[c]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.comps[c]
    }

    pub fn comps(&self) -> &[Vec<f64>] {
        &self.comps
    }

    pub fn into_components(self) -> Vec<Vec<f64>> {
        self.comps
    }

    /// First non-finite sample, as `(component, index)`.
    pub fn first_non_finite(&self) -> Option<(usize, usize)> {
        self.comps.iter().enumerate().find_map(|(c, comp)| {
            comp.iter()
                .position(|v| !v.is_finite())
                .map(|idx| (c, idx))
        })
    }

    /// Rectangle-rule `L^2` norm squared (exact for resolved trigonometric polynomials).
    pub fn l2_norm_sq(&self) -> f64 {
        let acc: f64 = self
            .comps
            .iter()
            .flat_map(|c| c.iter())
            .map(|v| v * v)
            .sum();
        acc * self.grid.cell_volume()
    }

    /// Pointwise maximum of the Euclidean norm across components.
    pub fn max_magnitude(&self) -> f64 {
        (0..self.grid.len())
            .map(|i| self.comps.iter().map(|c| c[i] * c[i]).sum::<f64>())
            .fold(0.0, f64::max)
            .sqrt()
    }

    pub fn max_abs_diff(&self, other: &PhysicalField) -> f64 {
        self.comps
            .iter()
            .zip(&other.comps)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }
}
