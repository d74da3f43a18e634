//! Initial velocity fields.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;

use super::checkpoint::load_checkpoint_file;
use crate::config::{IcKind, InitialCondition};
use crate::error::{Error, Result};
use crate::spectral::field::{PhysicalField, SpectralField};
use crate::spectral::grid::Grid;
use crate::spectral::ops::{dealias_in_place, leray_in_place, sobolev_norm};
use crate::spectral::transform::forward_transform;

/// Builds the initial field on `grid`. Returns the field and its start time
/// (zero except for checkpoints).
pub fn build_ic(ic: &InitialCondition, grid: &Grid) -> Result<(SpectralField, f64)> {
    let u = match ic.kind {
        IcKind::TaylorGreen => match grid.dim() {
            2 => taylor_green_2d(grid, ic.amplitude)?,
            _ => taylor_green_3d(grid, ic.amplitude)?,
        },
        IcKind::RandomDivfree => random_divfree(
            grid,
            ic.amplitude,
            ic.spectrum_slope,
            ic.peak_wavenumber,
            ic.seed,
        )?,
        IcKind::SingleMode => single_mode(grid, &ic.wavevector, ic.component, ic.amplitude)?,
        IcKind::FromCheckpoint => {
            let path = ic
                .path
                .as_ref()
                .ok_or_else(|| Error::config("ic.path", "from_checkpoint needs a path"))?;
            let state = load_checkpoint_file(path)?;
            if !state.u.grid().same_shape(grid) {
                return Err(Error::Checkpoint(format!(
                    "checkpoint grid {:?} does not match the configured grid {:?}",
                    state.u.grid(),
                    grid
                )));
            }
            return Ok((state.u, state.t));
        }
    };
    Ok((u, 0.0))
}

fn finish(mut u: SpectralField) -> SpectralField {
    for comp in u.comps_mut() {
        comp[0] = Complex64::new(0.0, 0.0);
    }
    leray_in_place(&mut u);
    dealias_in_place(&mut u);
    u.set_divergence_free(true);
    u
}

/// `amplitude (sin x cos y, -cos x sin y)` in box-scaled coordinates.
pub fn taylor_green_2d(grid: &Grid, amplitude: f64) -> Result<SpectralField> {
    if grid.dim() != 2 {
        return Err(Error::InvalidArgument(format!(
            "2D Taylor-Green needs a 2D grid, got dim {}",
            grid.dim()
        )));
    }
    let s = 2.0 * PI / grid.box_length();
    let f = PhysicalField::from_fn(grid, 2, |p, out| {
        let (x, y) = (s * p[0], s * p[1]);
        out[0] = amplitude * x.sin() * y.cos();
        out[1] = -amplitude * x.cos() * y.sin();
    });
    Ok(finish(forward_transform(&f)?))
}

/// `amplitude (sin x cos y cos z, -cos x sin y cos z, 0)` in box-scaled coordinates.
pub fn taylor_green_3d(grid: &Grid, amplitude: f64) -> Result<SpectralField> {
    if grid.dim() != 3 {
        return Err(Error::InvalidArgument(format!(
            "3D Taylor-Green needs a 3D grid, got dim {}",
            grid.dim()
        )));
    }
    let s = 2.0 * PI / grid.box_length();
    let f = PhysicalField::from_fn(grid, 3, |p, out| {
        let (x, y, z) = (s * p[0], s * p[1], s * p[2]);
        out[0] = amplitude * x.sin() * y.cos() * z.cos();
        out[1] = -amplitude * x.cos() * y.sin() * z.cos();
        out[2] = 0.0;
    });
    Ok(finish(forward_transform(&f)?))
}

/// Gaussian coefficients shaped by `|xi|^slope exp(-(|xi|/peak)^2)`, projected,
/// dealiased and scaled to `||grad u|| = h1_norm`.
pub fn random_divfree(
    grid: &Grid,
    h1_norm: f64,
    spectrum_slope: f64,
    peak_wavenumber: f64,
    seed: u64,
) -> Result<SpectralField> {
    if !(peak_wavenumber > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "peak_wavenumber must be > 0, got {peak_wavenumber}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = grid.dim();
    let mut u = SpectralField::zeros_vector(grid);
    for idx in 1..grid.len() {
        let m = grid.mirror(idx);
        if m < idx || grid.is_nyquist(idx) || !grid.is_retained(idx) {
            continue;
        }
        let k = grid.xi_sq(idx).sqrt();
        let shape = k.powf(spectrum_slope) * (-(k / peak_wavenumber).powi(2)).exp();
        for c in 0..dim {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            let v = Complex64::new(re, im) * shape;
            let comp = &mut u.comps_mut()[c];
            if m == idx {
                comp[idx] = Complex64::new(v.re, 0.0);
            } else {
                comp[idx] = v;
                comp[m] = v.conj();
            }
        }
    }
    let u = finish(u);
    let norm = sobolev_norm(&u, 1.0, true)?;
    if norm == 0.0 {
        return if h1_norm == 0.0 {
            Ok(u)
        } else {
            Err(Error::InvalidArgument(
                "random spectrum is empty on this grid; raise peak_wavenumber".into(),
            ))
        };
    }
    let mut out = u.scaled(h1_norm / norm);
    out.set_divergence_free(true);
    Ok(out)
}

/// One Hermitian pair: `amplitude cos(xi . x)` in component `component`, projected.
pub fn single_mode(
    grid: &Grid,
    wavevector: &[i64],
    component: usize,
    amplitude: f64,
) -> Result<SpectralField> {
    if component >= grid.dim() {
        return Err(Error::InvalidArgument(format!(
            "component {component} out of range for dim {}",
            grid.dim()
        )));
    }
    let idx = grid.index_of(wavevector)?;
    if idx == 0 {
        return Err(Error::InvalidArgument("single_mode needs a nonzero wavevector".into()));
    }
    if grid.is_nyquist(idx) {
        return Err(Error::InvalidArgument(format!(
            "wavevector {wavevector:?} touches the Nyquist plane"
        )));
    }
    let mut u = SpectralField::zeros_vector(grid);
    u.set_mode_pair(wavevector, component, Complex64::new(0.5 * amplitude, 0.0))?;
    leray_in_place(&mut u);
    u.set_divergence_free(true);
    Ok(u)
}
