//! Convection and damping nonlinearities, evaluated pseudo-spectrally.
//!
//! Products are formed on the grid, transformed back, truncated by the 2/3
//! rule and Leray-projected. The logarithmic damping uses `log(e + |u|^2)`.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::field::{PhysicalField, SpectralField};
use crate::spectral::ops::{dealias_in_place, leray_in_place, spectral_gradient};
use crate::spectral::transform::{forward_real, inverse_unchecked};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DampingKind {
    None,
    Power,
    Log,
}

/// Which absorption term is active: `alpha |u|^{beta-1} u` or
/// `alpha log(e + |u|^2) |u|^2 u`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DampingSpec {
    pub kind: DampingKind,
    pub alpha: f64,
    /// Only meaningful for [`DampingKind::Power`].
    pub beta: f64,
}

impl DampingSpec {
    pub fn none() -> Self {
        DampingSpec {
            kind: DampingKind::None,
            alpha: 0.0,
            beta: 0.0,
        }
    }

    pub fn power(alpha: f64, beta: f64) -> Result<Self> {
        let spec = DampingSpec {
            kind: DampingKind::Power,
            alpha,
            beta,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn log(alpha: f64) -> Result<Self> {
        let spec = DampingSpec {
            kind: DampingKind::Log,
            alpha,
            beta: 0.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "alpha must be >= 0, got {}",
                self.alpha
            )));
        }
        if self.kind == DampingKind::Power && !(self.beta.is_finite() && self.beta > 1.0) {
            return Err(Error::InvalidArgument(format!(
                "beta must be > 1 for power damping, got {}",
                self.beta
            )));
        }
        Ok(())
    }

    /// True when the damping term vanishes identically.
    pub fn is_inactive(&self) -> bool {
        self.kind == DampingKind::None || self.alpha == 0.0
    }

    /// Scalar factor `a(rho)` with damping `= a(|v|^2) v`.
    #[inline]
    pub fn factor(&self, rho: f64) -> f64 {
        match self.kind {
            DampingKind::None => 0.0,
            DampingKind::Log => self.alpha * (E + rho).ln() * rho,
            DampingKind::Power => {
                if rho == 0.0 {
                    0.0
                } else {
                    self.alpha * rho.powf(0.5 * (self.beta - 1.0))
                }
            }
        }
    }

    /// Human-readable formula actually evaluated.
    pub fn formula(&self) -> String {
        match self.kind {
            DampingKind::None => "0".to_string(),
            DampingKind::Power => format!("{} |u|^({} - 1) u", self.alpha, self.beta),
            DampingKind::Log => format!("{} log(e + |u|^2) |u|^2 u", self.alpha),
        }
    }
}

/// Damping vector at one point.
pub fn damping_pointwise(v: &[f64], spec: &DampingSpec) -> Vec<f64> {
    let rho: f64 = v.iter().map(|x| x * x).sum();
    let a = spec.factor(rho);
    v.iter().map(|x| a * x).collect()
}

/// `<D(x) - D(y), x - y>` for the logarithmic nonlinearity `D(z) = log(e+|z|^2)|z|^2 z`.
pub fn monotonicity_gap(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "vectors must have equal length");
    let ax = log_factor(x.iter().map(|v| v * v).sum());
    let ay = log_factor(y.iter().map(|v| v * v).sum());
    x.iter()
        .zip(y)
        .map(|(&xi, &yi)| (ax * xi - ay * yi) * (xi - yi))
        .sum()
}

#[inline]
fn log_factor(rho: f64) -> f64 {
    (E + rho).ln() * rho
}

/// Physical-space samples shared by the nonlinear terms and the budgets.
pub(crate) struct Samples {
    pub u: PhysicalField,
    /// `grad[j]` holds `d_j u_i` for every component `i`.
    pub grad: Option<Vec<PhysicalField>>,
}

impl Samples {
    pub fn new(u: &SpectralField, with_gradient: bool) -> Samples {
        let phys = inverse_unchecked(u);
        let grad = with_gradient.then(|| gradient_samples(u));
        Samples { u: phys, grad }
    }

    /// `|u|^2` at every point.
    pub fn rho(&self) -> Vec<f64> {
        let comps = self.u.comps();
        (0..self.u.grid().len())
            .map(|i| comps.iter().map(|c| c[i] * c[i]).sum())
            .collect()
    }
}

/// Physical samples of every first derivative, batched through paired transforms.
pub(crate) fn gradient_samples(u: &SpectralField) -> Vec<PhysicalField> {
    let grid = u.grid();
    let ncomp = u.components();
    let grads = spectral_gradient(u);
    let refs: Vec<&[rustfft::num_complex::Complex64]> = grads
        .iter()
        .flat_map(|g| g.comps().iter().map(|c| c.as_slice()))
        .collect();
    let mut flat = crate::spectral::transform::inverse_real(grid, &refs).into_iter();
    (0..grid.dim())
        .map(|_| {
            let comps: Vec<Vec<f64>> = (0..ncomp).map(|_| flat.next().unwrap()).collect();
            PhysicalField::from_parts(grid, comps)
        })
        .collect()
}

/// Transforms real arrays, dealiases and Leray-projects the result.
fn project_back(u: &SpectralField, arrays: &[Vec<f64>]) -> SpectralField {
    let refs: Vec<&[f64]> = arrays.iter().map(|a| a.as_slice()).collect();
    let mut out = SpectralField::from_parts(u.grid(), forward_real(u.grid(), &refs), false);
    dealias_in_place(&mut out);
    leray_in_place(&mut out);
    out
}

fn convection_arrays(s: &Samples) -> Vec<Vec<f64>> {
    let grad = s.grad.as_ref().expect("gradient samples");
    let dim = s.u.grid().dim();
    let len = s.u.grid().len();
    (0..dim)
        .map(|i| {
            let mut out = vec![0.0; len];
            for (j, g) in grad.iter().enumerate() {
                let uj = s.u.component(j);
                let dju = g.component(i);
                for p in 0..len {
                    out[p] += uj[p] * dju[p];
                }
            }
            out
        })
        .collect()
}

fn damping_arrays(s: &Samples, spec: &DampingSpec) -> Result<Vec<Vec<f64>>> {
    let len = s.u.grid().len();
    let rho = s.rho();
    let mut out = vec![vec![0.0; len]; s.u.components()];
    for p in 0..len {
        let a = spec.factor(rho[p]);
        if !a.is_finite() {
            return Err(Error::BlowUp {
                t: f64::NAN,
                reason: format!("damping factor overflowed at point {p} (|u|^2 = {:e})", rho[p]),
            });
        }
        for (c, comp) in out.iter_mut().enumerate() {
            let v = a * s.u.component(c)[p];
            if !v.is_finite() {
                return Err(Error::BlowUp {
                    t: f64::NAN,
                    reason: format!("damping term is not finite at point {p} (component {c})"),
                });
            }
            comp[p] = v;
        }
    }
    Ok(out)
}

/// `P(u . grad u)`, dealiased.
pub fn convective_term(u: &SpectralField) -> Result<SpectralField> {
    u.require_vector("convective_term")?;
    let s = Samples::new(u, true);
    Ok(project_back(u, &convection_arrays(&s)))
}

/// Leray-projected, dealiased damping term.
pub fn damping_term(u: &SpectralField, spec: &DampingSpec) -> Result<SpectralField> {
    u.require_vector("damping_term")?;
    spec.validate()?;
    if spec.is_inactive() {
        let mut z = SpectralField::zeros_vector(u.grid());
        z.set_divergence_free(true);
        return Ok(z);
    }
    let s = Samples::new(u, false);
    Ok(project_back(u, &damping_arrays(&s, spec)?))
}

/// `P(u . grad u) + P(damping)` from one set of physical samples.
/// Either piece can be switched off.
pub(crate) fn combined_term(
    u: &SpectralField,
    convection: bool,
    spec: &DampingSpec,
) -> Result<SpectralField> {
    let damping = !spec.is_inactive();
    if !convection && !damping {
        let mut z = SpectralField::zeros_vector(u.grid());
        z.set_divergence_free(true);
        return Ok(z);
    }
    let s = Samples::new(u, convection);
    let mut arrays = if convection {
        convection_arrays(&s)
    } else {
        vec![vec![0.0; u.grid().len()]; u.components()]
    };
    if damping {
        for (a, d) in arrays.iter_mut().zip(damping_arrays(&s, spec)?) {
            for (x, y) in a.iter_mut().zip(d) {
                *x += y;
            }
        }
    }
    Ok(project_back(u, &arrays))
}
