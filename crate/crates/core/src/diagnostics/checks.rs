//! Discrete verification of the L^2 and H^1 energy inequalities.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use super::budget::{BudgetRow, BudgetSeries};
use super::gronwall::{gronwall_envelope, GronwallReport};
use crate::error::{Error, Result};
use crate::nonlinear::DampingKind;

/// Default relative tolerance for the budget checks.
pub const TOL_BUDGET: f64 = 1e-4;

/// Envelope rate `(e^{1/(2 alpha)} - e)_+` of the log-damping H^1 bound.
pub fn a_alpha(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "a_alpha needs alpha > 0, got {alpha}"
        )));
    }
    Ok(((0.5 / alpha).exp() - E).max(0.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct L2Report {
    pub pass: bool,
    /// Absolute tolerance, `tol * ||u0||^2`.
    pub tol: f64,
    pub initial_energy: f64,
    /// `LHS(t) - ||u0||^2` per row.
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    pub max_residual_t: f64,
    pub max_abs_residual: f64,
    /// Largest `|LHS(t_k) - LHS(t_{k-1})| / (t_k - t_{k-1})`; zero for an exact balance.
    pub balance_defect: f64,
}

/// Left side of the L^2 inequality:
/// `||u||^2 + 2 int ||grad u||^2 + 2 alpha int (damping dissipation)`.
pub fn l2_lhs(series: &BudgetSeries, row: &BudgetRow) -> f64 {
    let spec = series.damping;
    let damp = if spec.kind == DampingKind::None {
        0.0
    } else {
        2.0 * spec.alpha * row.integrals.damp_l2
    };
    row.terms.l2_sq + 2.0 * row.integrals.h1dot_sq + damp
}

pub fn check_l2_inequality(series: &BudgetSeries, tol: f64) -> Result<L2Report> {
    let first = series
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty budget series".into()))?;
    let e0 = first.terms.l2_sq;
    let abs_tol = tol * e0;
    let lhs: Vec<f64> = series.rows().iter().map(|r| l2_lhs(series, r)).collect();
    let residuals: Vec<f64> = lhs.iter().map(|v| v - e0).collect();
    let (imax, max_residual) = argmax(&residuals);
    let max_abs_residual = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let balance_defect = series
        .rows()
        .windows(2)
        .zip(lhs.windows(2))
        .map(|(r, l)| ((l[1] - l[0]) / (r[1].t - r[0].t)).abs())
        .fold(0.0, f64::max);
    Ok(L2Report {
        pass: max_residual <= abs_tol,
        tol: abs_tol,
        initial_energy: e0,
        residuals,
        max_residual,
        max_residual_t: series.rows()[imax].t,
        max_abs_residual,
        balance_defect,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum H1Form {
    /// `||grad u||^2 + int ||Lap u||^2 + alpha int (rho/(e+rho) + log(e+rho)) |grad rho|^2
    ///  <= ||grad u0||^2 e^{a_alpha t}`.
    Log,
    /// `||grad u||^2 + 2 int ||Lap u||^2 + alpha (beta-1) int |u|^{beta-3} |grad rho|^2
    ///  + 2 alpha int |u|^{beta-1} |grad u|^2 <= ||grad u0||^2 + int |u|^2 |grad u|^2`.
    Power,
    /// No damping: `||grad u||^2 + int ||Lap u||^2 <= ||grad u0||^2 + int |u|^2 |grad u|^2`.
    Classical,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct H1Report {
    pub form: H1Form,
    pub pass: bool,
    /// Absolute tolerance, `tol * ||grad u0||^2 e^{a_alpha (t_max - t0)}`.
    pub tol: f64,
    pub initial_enstrophy: f64,
    /// `LHS(t) - RHS(t)` per row.
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    pub max_residual_t: f64,
    pub max_abs_residual: f64,
    /// Log mode: the same residual with the full dissipation on the left
    /// (`2 int ||Lap u||^2` and the extra `2 alpha int log(e+rho) rho |grad u|^2`).
    pub full_dissipation_max_residual: Option<f64>,
    /// Log mode: residual against the envelope with the doubled rate `e^{2 a_alpha t}`.
    pub doubled_rate_max_residual: Option<f64>,
    /// Log mode: largest step-to-step increase of `e^{-a_alpha t} ||grad u||^2`.
    pub envelope_max_increase: Option<f64>,
    /// Log mode: Gronwall lemma with `f = ||grad u||^2`, `h = a_alpha`.
    pub gronwall: Option<GronwallReport>,
    /// Power mode: residual with `int ||Lap u||^2` in place of `2 int ||Lap u||^2`.
    pub single_viscous_max_residual: Option<f64>,
}

impl H1Report {
    /// Whether `e^{-a_alpha t} ||grad u(t)||^2` is nonincreasing within `tol`.
    pub fn envelope_monotone(&self, tol: f64) -> Option<bool> {
        self.envelope_max_increase
            .map(|inc| inc <= tol * self.initial_enstrophy)
    }
}

pub fn check_h1_inequality(series: &BudgetSeries, tol: f64) -> Result<H1Report> {
    let rows = series.rows();
    let first = series
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty budget series".into()))?;
    let spec = series.damping;
    let h0 = first.terms.h1dot_sq;
    let t0 = first.t;
    let t_end = series.last().unwrap().t;
    let alpha = spec.alpha;

    let form = match spec.kind {
        DampingKind::Log => H1Form::Log,
        DampingKind::Power => H1Form::Power,
        DampingKind::None => H1Form::Classical,
    };
    let rate = match form {
        H1Form::Log => series.a_alpha.unwrap_or(0.0),
        _ => 0.0,
    };
    let abs_tol = tol * h0 * (rate * (t_end - t0)).exp();

    let residual_of = |r: &BudgetRow| -> f64 {
        let i = &r.integrals;
        match form {
            H1Form::Log => {
                let lhs = r.terms.h1dot_sq
                    + i.h2dot_sq
                    + alpha * i.grad_sq_mod
                    + alpha * i.log_grad_sq;
                lhs - h0 * (rate * (r.t - t0)).exp()
            }
            H1Form::Power => {
                let lhs = r.terms.h1dot_sq
                    + 2.0 * i.h2dot_sq
                    + alpha * (spec.beta - 1.0) * i.grad_sq_mod
                    + 2.0 * alpha * i.weighted_grad;
                lhs - (h0 + i.forcing_rhs)
            }
            H1Form::Classical => r.terms.h1dot_sq + i.h2dot_sq - (h0 + i.forcing_rhs),
        }
    };
    let residuals: Vec<f64> = rows.iter().map(residual_of).collect();
    let (imax, max_residual) = argmax(&residuals);
    let max_abs_residual = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));

    let mut report = H1Report {
        form,
        pass: max_residual <= abs_tol,
        tol: abs_tol,
        initial_enstrophy: h0,
        residuals,
        max_residual,
        max_residual_t: rows[imax].t,
        max_abs_residual,
        full_dissipation_max_residual: None,
        doubled_rate_max_residual: None,
        envelope_max_increase: None,
        gronwall: None,
        single_viscous_max_residual: None,
    };
    if form == H1Form::Power {
        report.single_viscous_max_residual = Some(
            rows.iter()
                .zip(&report.residuals)
                .map(|(r, res)| res - r.integrals.h2dot_sq)
                .fold(f64::NEG_INFINITY, f64::max),
        );
    }

    if form == H1Form::Log {
        let full = rows
            .iter()
            .map(|r| {
                let i = &r.integrals;
                r.terms.h1dot_sq
                    + 2.0 * i.h2dot_sq
                    + alpha * i.grad_sq_mod
                    + alpha * i.log_grad_sq
                    + 2.0 * alpha * i.weighted_grad
                    - h0 * (rate * (r.t - t0)).exp()
            })
            .fold(f64::NEG_INFINITY, f64::max);
        let doubled = rows
            .iter()
            .map(|r| {
                let i = &r.integrals;
                r.terms.h1dot_sq + i.h2dot_sq + alpha * i.grad_sq_mod + alpha * i.log_grad_sq
                    - h0 * (2.0 * rate * (r.t - t0)).exp()
            })
            .fold(f64::NEG_INFINITY, f64::max);
        let scaled: Vec<f64> = rows
            .iter()
            .map(|r| (-rate * (r.t - t0)).exp() * r.terms.h1dot_sq)
            .collect();
        let increase = scaled
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max);

        let times: Vec<f64> = rows.iter().map(|r| r.t - t0).collect();
        let f: Vec<f64> = rows.iter().map(|r| r.terms.h1dot_sq).collect();
        let g: Vec<f64> = rows
            .iter()
            .map(|r| {
                r.terms.h2dot_sq + alpha * (r.terms.grad_sq_mod + r.terms.log_grad_sq)
            })
            .collect();
        let h = vec![rate; rows.len()];

        report.full_dissipation_max_residual = Some(full);
        report.doubled_rate_max_residual = Some(doubled);
        report.envelope_max_increase = Some(if rows.len() > 1 { increase } else { 0.0 });
        report.gronwall = Some(gronwall_envelope(h0, &times, &f, &g, &h)?);
    }
    Ok(report)
}

/// `int ||u||^4_{H^1-dot} dt` over the whole series.
pub fn l4_h1_diagnostic(series: &BudgetSeries) -> Result<f64> {
    series
        .last()
        .map(|r| r.h1_fourth_integral)
        .ok_or_else(|| Error::InvalidArgument("empty budget series".into()))
}

/// Increments of `int ||u||^4_{H^1-dot}` over consecutive windows of length `window`.
///
/// Each window is integrated on its own (trapezoid on the row samples, with
/// linear interpolation at window edges). Differencing the running integral
/// instead would lose every increment smaller than its rounding error, which
/// happens within a few windows on a decaying run.
pub fn l4_h1_increments(series: &BudgetSeries, window: f64) -> Result<Vec<f64>> {
    let rows = series.rows();
    if rows.is_empty() {
        return Err(Error::InvalidArgument("empty budget series".into()));
    }
    if !(window > 0.0) {
        return Err(Error::InvalidArgument(format!("window must be positive, got {window}")));
    }
    let t0 = rows[0].t;
    let t_end = rows.last().unwrap().t;
    let windows = ((t_end - t0) / window + 1e-9).floor() as usize;
    let mut out = vec![0.0; windows];
    for pair in rows.windows(2) {
        let (ta, tb) = (pair[0].t, pair[1].t);
        let (fa, fb) = (pair[0].terms.h1dot_sq.powi(2), pair[1].terms.h1dot_sq.powi(2));
        let f = |t: f64| fa + (fb - fa) * (t - ta) / (tb - ta);
        for (k, acc) in out.iter_mut().enumerate() {
            let lo = ta.max(t0 + k as f64 * window);
            let hi = tb.min(t0 + (k + 1) as f64 * window);
            if hi > lo {
                *acc += 0.5 * (hi - lo) * (f(lo) + f(hi));
            }
        }
    }
    Ok(out)
}

fn argmax(v: &[f64]) -> (usize, f64) {
    v.iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, x)| if x > best.1 { (i, x) } else { best })
}
