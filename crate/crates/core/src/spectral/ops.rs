//! Fourier-multiplier operators.
//!
//! Modes with an axis at the Nyquist index have no mirror partner with the
//! opposite frequency, so odd multipliers (derivatives) and the Leray
//! projector zero them to keep the output exactly Hermitian.

use rustfft::num_complex::Complex64;

use super::field::SpectralField;
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Leray projection `u -> u - (u.xi) xi / |xi|^2`, mode by mode.
///
/// The zero mode is passed through unchanged.
pub fn leray_project(g: &SpectralField) -> Result<SpectralField> {
    g.require_vector("leray_project")?;
    let mut out = g.clone();
    leray_in_place(&mut out);
    Ok(out)
}

pub(crate) fn leray_in_place(g: &mut SpectralField) {
    let grid = g.grid().clone();
    let dim = grid.dim();
    let comps = g.comps_mut();
    for idx in 1..grid.len() {
        if grid.is_nyquist(idx) {
            for c in comps.iter_mut() {
                c[idx] = ZERO;
            }
            continue;
        }
        let xi = grid.wavevector(idx);
        let inv = 1.0 / grid.xi_sq(idx);
        let mut dot = ZERO;
        for d in 0..dim {
            dot += comps[d][idx] * xi[d];
        }
        dot *= inv;
        for d in 0..dim {
            comps[d][idx] -= dot * xi[d];
        }
    }
    g.set_divergence_free(true);
}

/// Friedrichs cutoff: keeps modes with `|xi| < radius`.
pub fn friedrichs_truncate(g: &SpectralField, radius: f64) -> Result<SpectralField> {
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "Friedrichs radius must be positive, got {radius}"
        )));
    }
    let mut out = g.clone();
    let flag = g.is_divergence_free();
    let r2 = radius * radius;
    let grid = g.grid().clone();
    for comp in out.comps_mut() {
        for (idx, c) in comp.iter_mut().enumerate() {
            if grid.xi_sq(idx) >= r2 {
                *c = ZERO;
            }
        }
    }
    out.set_divergence_free(flag);
    Ok(out)
}

/// 2/3-rule spherical truncation in place.
pub fn dealias_in_place(g: &mut SpectralField) {
    let grid = g.grid().clone();
    let flag = g.is_divergence_free();
    for comp in g.comps_mut() {
        for (idx, c) in comp.iter_mut().enumerate() {
            if !grid.is_retained(idx) {
                *c = ZERO;
            }
        }
    }
    g.set_divergence_free(flag);
}

pub fn dealias(g: &SpectralField) -> SpectralField {
    let mut out = g.clone();
    dealias_in_place(&mut out);
    out
}

/// Whether every mode outside the 2/3 sphere is exactly zero.
pub fn is_dealiased(g: &SpectralField) -> bool {
    let grid = g.grid();
    g.comps().iter().all(|comp| {
        comp.iter()
            .enumerate()
            .all(|(idx, c)| grid.is_retained(idx) || (c.re == 0.0 && c.im == 0.0))
    })
}

/// Partial derivative `d_j` of every component: coefficients `i xi_j c`.
pub fn partial(g: &SpectralField, axis: usize) -> Result<SpectralField> {
    let grid = g.grid().clone();
    if axis >= grid.dim() {
        return Err(Error::InvalidArgument(format!(
            "axis {axis} out of range for a {}D grid",
            grid.dim()
        )));
    }
    let comps = g
        .comps()
        .iter()
        .map(|comp| {
            comp.iter()
                .enumerate()
                .map(|(idx, c)| {
                    if grid.is_nyquist(idx) {
                        ZERO
                    } else {
                        let xi = grid.wavevector(idx)[axis];
                        Complex64::new(-c.im * xi, c.re * xi)
                    }
                })
                .collect()
        })
        .collect();
    Ok(SpectralField::from_parts(&grid, comps, false))
}

/// All first derivatives: entry `j` holds `d_j g` for every component of `g`.
pub fn spectral_gradient(g: &SpectralField) -> Vec<SpectralField> {
    (0..g.grid().dim())
        .map(|axis| partial(g, axis).expect("axis in range"))
        .collect()
}

/// Laplacian, multiplier `-|xi|^2`.
pub fn laplacian(g: &SpectralField) -> SpectralField {
    let grid = g.grid().clone();
    let xi_sq = grid.xi_sq_table();
    let comps = g
        .comps()
        .iter()
        .map(|comp| comp.iter().zip(xi_sq).map(|(c, &k2)| c * -k2).collect())
        .collect();
    SpectralField::from_parts(&grid, comps, g.is_divergence_free())
}

/// Divergence `i sum_j xi_j u_j` as a scalar field.
pub fn divergence(g: &SpectralField) -> Result<SpectralField> {
    g.require_vector("divergence")?;
    let grid = g.grid().clone();
    let dim = grid.dim();
    let coeffs = (0..grid.len())
        .map(|idx| {
            if grid.is_nyquist(idx) {
                return ZERO;
            }
            let xi = grid.wavevector(idx);
            let mut s = ZERO;
            for d in 0..dim {
                s += g.component(d)[idx] * xi[d];
            }
            Complex64::new(-s.im, s.re)
        })
        .collect();
    Ok(SpectralField::from_parts(&grid, vec![coeffs], false))
}

/// Relative divergence `max |xi.u(xi)| / max |xi| |u(xi)|` over nonzero modes.
///
/// Normalising by the largest mode rather than mode by mode keeps roundoff
/// in modes that vanish by symmetry from dominating the measure.
pub fn max_relative_divergence(g: &SpectralField) -> Result<f64> {
    g.require_vector("max_relative_divergence")?;
    let grid = g.grid();
    let dim = grid.dim();
    let mut div = 0.0f64;
    let mut scale = 0.0f64;
    for idx in 1..grid.len() {
        let xi = grid.wavevector(idx);
        let mut s = ZERO;
        let mut mag = 0.0;
        for d in 0..dim {
            let c = g.component(d)[idx];
            s += c * xi[d];
            mag += c.norm_sqr();
        }
        div = div.max(s.norm());
        scale = scale.max((grid.xi_sq(idx) * mag).sqrt());
    }
    Ok(if scale > 0.0 { div / scale } else { 0.0 })
}

/// Sobolev norm with multiplier `|xi|^{2s}` (homogeneous) or `(1+|xi|^2)^s`.
///
/// Homogeneous norms give the zero mode weight 0; for `s < 0` they require
/// the zero mode to vanish.
pub fn sobolev_norm(g: &SpectralField, s: f64, homogeneous: bool) -> Result<f64> {
    let grid = g.grid();
    if homogeneous && s < 0.0 && g.comps().iter().any(|c| c[0].norm() != 0.0) {
        return Err(Error::InvalidArgument(
            "homogeneous Sobolev norm with s < 0 needs a zero mean".into(),
        ));
    }
    let xi_sq = grid.xi_sq_table();
    let mut acc = 0.0;
    for comp in g.comps() {
        for (c, &k2) in comp.iter().zip(xi_sq) {
            let m = if homogeneous {
                if k2 == 0.0 {
                    0.0
                } else if s == 1.0 {
                    k2
                } else {
                    k2.powf(s)
                }
            } else if s == 0.0 {
                1.0
            } else {
                (1.0 + k2).powf(s)
            };
            acc += m * c.norm_sqr();
        }
    }
    Ok((acc * grid.volume()).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::grid::Grid;

    fn cos_x1(grid: &Grid) -> SpectralField {
        let mut g = SpectralField::zeros_vector(grid);
        let mut k = vec![0i64; grid.dim()];
        k[0] = 1;
        g.set_mode_pair(&k, 0, Complex64::new(0.5, 0.0)).unwrap();
        g
    }

    #[test]
    fn leray_explicit_matrix() {
        let grid = Grid::periodic(3, 8).unwrap();
        let mut g = SpectralField::zeros_vector(&grid);
        g.set_mode_pair(&[1, 0, 0], 0, Complex64::new(1.0, 0.0)).unwrap();
        g.set_mode_pair(&[1, 0, 0], 1, Complex64::new(1.0, 0.0)).unwrap();
        let p = leray_project(&g).unwrap();
        assert!(p.is_divergence_free());
        assert_eq!(p.mode(&[1, 0, 0], 0).unwrap(), ZERO);
        assert_eq!(p.mode(&[1, 0, 0], 1).unwrap(), Complex64::new(1.0, 0.0));
        assert_eq!(p.mode(&[1, 0, 0], 2).unwrap(), ZERO);
    }

    #[test]
    fn leray_keeps_zero_mode() {
        let grid = Grid::periodic(2, 8).unwrap();
        let mut g = SpectralField::zeros_vector(&grid);
        g.component_mut(0)[0] = Complex64::new(2.0, 0.0);
        let p = leray_project(&g).unwrap();
        assert_eq!(p.component(0)[0], Complex64::new(2.0, 0.0));
    }

    #[test]
    fn leray_rejects_scalar() {
        let grid = Grid::periodic(2, 8).unwrap();
        assert!(leray_project(&SpectralField::zeros(&grid, 1)).is_err());
    }

    #[test]
    fn friedrichs_cases() {
        let grid = Grid::periodic(3, 8).unwrap();
        let g = cos_x1(&grid);
        assert!(friedrichs_truncate(&g, 0.0).is_err());
        assert!(friedrichs_truncate(&g, -1.0).is_err());
        assert!(friedrichs_truncate(&g, 1.5).unwrap().bit_eq(&g));
        assert!(friedrichs_truncate(&g, grid.max_wavenumber() + 1.0)
            .unwrap()
            .bit_eq(&g));
        let cut = friedrichs_truncate(&g, 0.5).unwrap();
        assert_eq!(cut.max_modulus(), 0.0);
        // the cutoff is strict: |xi| = 1 is removed by R = 1
        assert_eq!(friedrichs_truncate(&g, 1.0).unwrap().max_modulus(), 0.0);
    }

    #[test]
    fn divergence_direct_formula() {
        let grid = Grid::periodic(3, 8).unwrap();
        let g = cos_x1(&grid).scaled(2.0);
        let d = divergence(&g).unwrap();
        assert_eq!(d.mode(&[1, 0, 0], 0).unwrap(), Complex64::new(0.0, 1.0));
        assert_eq!(d.mode(&[-1, 0, 0], 0).unwrap(), Complex64::new(0.0, -1.0));
        let z = divergence(&SpectralField::zeros_vector(&grid)).unwrap();
        assert_eq!(z.max_modulus(), 0.0);
    }

    #[test]
    fn gradient_of_constant_is_zero() {
        let grid = Grid::periodic(2, 8).unwrap();
        let mut g = SpectralField::zeros(&grid, 1);
        g.component_mut(0)[0] = Complex64::new(3.0, 0.0);
        for d in spectral_gradient(&g) {
            assert_eq!(d.max_modulus(), 0.0);
        }
    }

    #[test]
    fn sobolev_single_shell() {
        let grid = Grid::periodic(3, 8).unwrap();
        let g = cos_x1(&grid);
        let l2 = g.l2_norm();
        for s in [-1.0, 0.0, 0.5, 1.0, 2.0, 3.7] {
            let h = sobolev_norm(&g, s, true).unwrap();
            assert!((h - l2).abs() <= 1e-14 * l2, "s={s}");
        }
        assert!((sobolev_norm(&g, 0.0, false).unwrap() - l2).abs() <= 1e-14 * l2);
        // (1 + 1)^1 weight on a single unit shell
        let h1 = sobolev_norm(&g, 1.0, false).unwrap();
        assert!((h1 - l2 * 2f64.sqrt()).abs() <= 1e-14 * l2);
    }

    #[test]
    fn sobolev_negative_needs_zero_mean() {
        let grid = Grid::periodic(2, 8).unwrap();
        let mut g = SpectralField::zeros(&grid, 1);
        g.component_mut(0)[0] = Complex64::new(1.0, 0.0);
        assert!(sobolev_norm(&g, -1.0, true).is_err());
        assert!(sobolev_norm(&g, 1.0, true).is_ok());
    }
}
