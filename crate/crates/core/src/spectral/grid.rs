use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Periodic box `[0, L)^dim` sampled on `n` points per direction.
///
/// Cloning is cheap: the wavenumber tables and FFT plans live behind an `Arc`
/// and are shared by every field built on the grid.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

struct GridInner {
    dim: usize,
    n: usize,
    box_length: f64,
    len: usize,
    /// Integer wavenumber of each 1D index, in `{-n/2+1, ..., n/2}`.
    wavenumber: Vec<i64>,
    /// `|xi|^2` per flat index.
    xi_sq: Vec<f64>,
    /// Flat index of the mode `-k`.
    mirror: Vec<u32>,
    /// True when the flat index lies inside the 2/3-rule sphere.
    retained: Vec<bool>,
    /// True when some axis sits at the Nyquist index `n/2`.
    nyquist: Vec<bool>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Grid {
    pub fn new(dim: usize, n: usize, box_length: f64) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::Grid(format!("dim must be 2 or 3, got {dim}")));
        }
        if n < 4 || n % 2 != 0 {
            return Err(Error::Grid(format!("n must be even and at least 4, got {n}")));
        }
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(Error::Grid(format!(
                "box_length must be positive and finite, got {box_length}"
            )));
        }
        let len = n.pow(dim as u32);
        if len > u32::MAX as usize {
            return Err(Error::Grid(format!("grid with {len} points is too large")));
        }

        let wavenumber: Vec<i64> = (0..n)
            .map(|i| if i <= n / 2 { i as i64 } else { i as i64 - n as i64 })
            .collect();
        let scale = 2.0 * PI / box_length;
        // keep |k| < n/3, i.e. 9|k|^2 < n^2
        let cutoff = (n * n) as i64;

        let mut xi_sq = Vec::with_capacity(len);
        let mut mirror = Vec::with_capacity(len);
        let mut retained = Vec::with_capacity(len);
        let mut nyquist = Vec::with_capacity(len);
        for idx in 0..len {
            let axes = split_index(idx, n, dim);
            let mut k_sq = 0i64;
            let mut m = 0usize;
            let mut nyq = false;
            for &a in &axes[..dim] {
                let k = wavenumber[a];
                k_sq += k * k;
                m = m * n + (n - a) % n;
                nyq |= a == n / 2;
            }
            xi_sq.push(k_sq as f64 * scale * scale);
            mirror.push(m as u32);
            retained.push(9 * k_sq < cutoff);
            nyquist.push(nyq);
        }

        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);

        Ok(Grid {
            inner: Arc::new(GridInner {
                dim,
                n,
                box_length,
                len,
                wavenumber,
                xi_sq,
                mirror,
                retained,
                nyquist,
                forward,
                inverse,
            }),
        })
    }

    /// Grid on the standard box `[0, 2pi)^dim`.
    pub fn periodic(dim: usize, n: usize) -> Result<Self> {
        Grid::new(dim, n, 2.0 * PI)
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    pub fn n(&self) -> usize {
        self.inner.n
    }

    pub fn box_length(&self) -> f64 {
        self.inner.box_length
    }

    /// Number of lattice points, `n^dim`.
    pub fn len(&self) -> usize {
        self.inner.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Box volume `L^dim`.
    pub fn volume(&self) -> f64 {
        self.inner.box_length.powi(self.inner.dim as i32)
    }

    /// Physical spacing `L / n`.
    pub fn spacing(&self) -> f64 {
        self.inner.box_length / self.inner.n as f64
    }

    /// Weight of one grid point in the rectangle rule, `L^dim / n^dim`.
    pub fn cell_volume(&self) -> f64 {
        self.volume() / self.inner.len as f64
    }

    /// Integer lattice vector of a flat index (unused axes are 0).
    pub fn wavevector_int(&self, idx: usize) -> [i64; 3] {
        let axes = split_index(idx, self.inner.n, self.inner.dim);
        let mut k = [0i64; 3];
        for d in 0..self.inner.dim {
            k[d] = self.inner.wavenumber[axes[d]];
        }
        k
    }

    /// Physical frequency `xi = 2 pi k / L` of a flat index.
    pub fn wavevector(&self, idx: usize) -> [f64; 3] {
        let k = self.wavevector_int(idx);
        let scale = 2.0 * PI / self.inner.box_length;
        [k[0] as f64 * scale, k[1] as f64 * scale, k[2] as f64 * scale]
    }

    pub fn xi_sq(&self, idx: usize) -> f64 {
        self.inner.xi_sq[idx]
    }

    pub(crate) fn xi_sq_table(&self) -> &[f64] {
        &self.inner.xi_sq
    }

    /// Flat index of `-k`.
    pub fn mirror(&self, idx: usize) -> usize {
        self.inner.mirror[idx] as usize
    }

    pub fn is_nyquist(&self, idx: usize) -> bool {
        self.inner.nyquist[idx]
    }

    /// Whether a mode survives 2/3-rule dealiasing (`|k| < n/3`).
    pub fn is_retained(&self, idx: usize) -> bool {
        self.inner.retained[idx]
    }

    /// Largest `|xi|` present on the lattice.
    pub fn max_wavenumber(&self) -> f64 {
        self.inner
            .xi_sq
            .iter()
            .copied()
            .fold(0.0_f64, f64::max)
            .sqrt()
    }

    /// Flat index of the integer wavevector `k` (components taken mod `n`).
    pub fn index_of(&self, k: &[i64]) -> Result<usize> {
        if k.len() != self.inner.dim {
            return Err(Error::InvalidArgument(format!(
                "wavevector has {} components on a {}D grid",
                k.len(),
                self.inner.dim
            )));
        }
        let n = self.inner.n as i64;
        Ok(k.iter()
            .fold(0usize, |acc, &kd| acc * n as usize + kd.rem_euclid(n) as usize))
    }

    /// Physical coordinates of a flat point index.
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let axes = split_index(idx, self.inner.n, self.inner.dim);
        let h = self.spacing();
        let mut x = [0.0; 3];
        for d in 0..self.inner.dim {
            x[d] = axes[d] as f64 * h;
        }
        x
    }

    pub(crate) fn forward_plan(&self) -> &Arc<dyn Fft<f64>> {
        &self.inner.forward
    }

    pub(crate) fn inverse_plan(&self) -> &Arc<dyn Fft<f64>> {
        &self.inner.inverse
    }

    pub fn same_shape(&self, other: &Grid) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.dim() == other.dim()
                && self.n() == other.n()
                && self.box_length() == other.box_length())
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.same_shape(other)
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.dim())
            .field("n", &self.n())
            .field("box_length", &self.box_length())
            .finish()
    }
}

/// Row-major split of a flat index; the last axis is contiguous.
fn split_index(mut idx: usize, n: usize, dim: usize) -> [usize; 3] {
    let mut axes = [0usize; 3];
    for d in (0..dim).rev() {
        axes[d] = idx % n;
        idx /= n;
    }
    axes
}
