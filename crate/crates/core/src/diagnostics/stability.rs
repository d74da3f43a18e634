//! Two-run stability: `||w(t)||^2 <= ||w(0)||^2 exp(c int ||grad u||^4)` for `w = u_a - u_b`.

use serde::{Deserialize, Serialize};

use super::budget::BudgetSeries;
use crate::error::{Error, Result};
use crate::spectral::field::SpectralField;

/// Default constant `c` in the stability exponent.
pub const DEFAULT_STABILITY_C: f64 = 0.5;

/// Uniqueness threshold on `||w||` when the runs start from the same data.
pub const UNIQUENESS_TOL: f64 = 1e-10;

/// Solver state captured at an output time.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub t: f64,
    pub u: SpectralField,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilitySample {
    pub t: f64,
    pub w_sq: f64,
    /// `int_0^t ||grad u_a||^4`.
    pub h1_fourth_integral: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub c: f64,
    pub w0_sq: f64,
    pub samples: Vec<StabilitySample>,
    /// Smallest `c` for which every sample satisfies the bound.
    pub c_min: f64,
    /// Every difference is exactly zero, bit for bit.
    pub identical: bool,
    pub pass: bool,
}

/// Compares two trajectories snapshotted at the same times. The running
/// `int ||grad u_a||^4` comes from `series_a`, matched by time.
pub fn stability_compare(
    run_a: &[Snapshot],
    run_b: &[Snapshot],
    series_a: &BudgetSeries,
    c: f64,
) -> Result<StabilityReport> {
    if run_a.is_empty() || run_a.len() != run_b.len() {
        return Err(Error::Mismatch(format!(
            "snapshot counts differ or are empty: {} vs {}",
            run_a.len(),
            run_b.len()
        )));
    }
    let mut samples = Vec::with_capacity(run_a.len());
    let mut identical = true;
    for (a, b) in run_a.iter().zip(run_b) {
        if a.t != b.t {
            return Err(Error::Mismatch(format!(
                "snapshot times differ: {} vs {}",
                a.t, b.t
            )));
        }
        if !a.u.grid().same_shape(b.u.grid()) {
            return Err(Error::Mismatch(format!(
                "grids differ: {:?} vs {:?}",
                a.u.grid(),
                b.u.grid()
            )));
        }
        identical &= a.u.bit_eq(&b.u);
        let w = a.u.axpy(-1.0, &b.u)?;
        let row = series_a
            .rows()
            .iter()
            .find(|r| r.t == a.t)
            .ok_or_else(|| Error::Mismatch(format!("no budget row at t = {}", a.t)))?;
        samples.push(StabilitySample {
            t: a.t,
            w_sq: w.l2_norm_sq(),
            h1_fourth_integral: row.h1_fourth_integral,
            bound: 0.0,
        });
    }

    let w0_sq = samples[0].w_sq;
    let i0 = samples[0].h1_fourth_integral;
    let mut c_min = f64::NEG_INFINITY;
    for s in &mut samples {
        let integral = s.h1_fourth_integral - i0;
        s.h1_fourth_integral = integral;
        s.bound = w0_sq * (c * integral).exp();
        if w0_sq > 0.0 && integral > 0.0 {
            c_min = c_min.max((s.w_sq / w0_sq).ln() / integral);
        }
    }
    let pass = if w0_sq == 0.0 {
        samples.iter().all(|s| s.w_sq.sqrt() <= UNIQUENESS_TOL)
    } else {
        samples
            .iter()
            .all(|s| s.w_sq <= s.bound * (1.0 + 1e-12))
    };
    Ok(StabilityReport {
        c,
        w0_sq,
        samples,
        c_min: if c_min.is_finite() { c_min } else { 0.0 },
        identical,
        pass,
    })
}
