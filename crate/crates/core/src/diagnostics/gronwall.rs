//! Discrete check of the integral Gronwall lemma
//! `f + int g <= A + int h f  =>  f + int g <= A exp(int h)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack for floating-point noise on top of the quadrature allowance.
pub const GRONWALL_ROUNDING: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GronwallReport {
    /// Index of the first sample where the hypothesis fails, if any.
    pub hypothesis_failure: Option<usize>,
    /// Largest `f + int g - A exp(int h)` over the samples where the hypothesis held.
    pub max_residual: f64,
    /// First sample where the conclusion fails beyond the quadrature allowance.
    pub first_violation: Option<Violation>,
    /// Number of samples on which the conclusion was checked.
    pub checked: usize,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub index: usize,
    pub t: f64,
    pub lhs: f64,
    pub bound: f64,
}

/// Checks the Gronwall conclusion on sampled data.
///
/// All integrals use the trapezoidal rule on `times`. The hypothesis is
/// tested with the same rule (its `int h f` term includes the current
/// sample). Where it holds, discrete Gronwall gives
/// `f_k + G_k <= A prod_j (1 + h_{j-1} dt_j / 2) / (1 - h_j dt_j / 2)`,
/// which differs from `A exp(H_k)` by the quadrature error; a sample is a
/// violation only when it exceeds the larger of the two bounds.
pub fn gronwall_envelope(
    a: f64,
    times: &[f64],
    f: &[f64],
    g: &[f64],
    h: &[f64],
) -> Result<GronwallReport> {
    let n = times.len();
    if f.len() != n || g.len() != n || h.len() != n {
        return Err(Error::InvalidArgument(format!(
            "sample lengths differ: times {n}, f {}, g {}, h {}",
            f.len(),
            g.len(),
            h.len()
        )));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("no samples".into()));
    }
    if let Some(k) = (1..n).find(|&k| !(times[k] > times[k - 1])) {
        return Err(Error::InvalidArgument(format!(
            "time mesh is not increasing at index {k} ({} after {})",
            times[k],
            times[k - 1]
        )));
    }
    if !(a >= 0.0) {
        return Err(Error::InvalidArgument(format!("A must be >= 0, got {a}")));
    }
    if let Some(k) = g.iter().chain(h).position(|&v| !(v >= 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "g and h must be nonnegative (offending sample {})",
            k % n
        )));
    }

    let mut big_g = 0.0;
    let mut big_h = 0.0;
    let mut hf = 0.0;
    let mut product = 1.0f64;
    let mut report = GronwallReport {
        hypothesis_failure: None,
        max_residual: f64::NEG_INFINITY,
        first_violation: None,
        checked: 0,
        pass: true,
    };

    for k in 0..n {
        if k > 0 {
            let dt = times[k] - times[k - 1];
            big_g += 0.5 * dt * (g[k - 1] + g[k]);
            big_h += 0.5 * dt * (h[k - 1] + h[k]);
            hf += 0.5 * dt * (h[k - 1] * f[k - 1] + h[k] * f[k]);
            let denom = 1.0 - 0.5 * h[k] * dt;
            product = if denom > 0.0 {
                product * (1.0 + 0.5 * h[k - 1] * dt) / denom
            } else {
                f64::INFINITY
            };
        }
        let lhs = f[k] + big_g;
        let slack = GRONWALL_ROUNDING * lhs.abs().max(a).max(f64::MIN_POSITIVE);
        if lhs > a + hf + slack {
            report.hypothesis_failure = Some(k);
            break;
        }
        let smooth = a * big_h.exp();
        report.max_residual = report.max_residual.max(lhs - smooth);
        report.checked += 1;
        let bound = a * product.max(big_h.exp());
        if lhs > bound + GRONWALL_ROUNDING * bound.max(lhs.abs()) && report.first_violation.is_none() {
            report.first_violation = Some(Violation {
                index: k,
                t: times[k],
                lhs,
                bound,
            });
            report.pass = false;
        }
    }
    Ok(report)
}
