//! Energy-budget terms sampled along a trajectory.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use super::checks::a_alpha;
use crate::error::{Error, Result};
use crate::nonlinear::{gradient_samples, DampingKind, DampingSpec, Samples};
use crate::spectral::field::SpectralField;
use crate::spectral::ops::dealias_in_place;
use crate::spectral::transform::forward_real;

/// Instantaneous value of every norm that enters the energy inequalities.
///
/// Damping-related densities are stored without the factor `alpha`.
/// Log mode (`rho = |u|^2`):
/// `damp_l2 = ||log(e+rho) rho^2||_1`, `grad_sq_mod = ||rho/(e+rho) |grad rho|^2||_1`,
/// `weighted_grad = ||log(e+rho) rho |grad u|^2||_1`, `log_grad_sq = ||log(e+rho) |grad rho|^2||_1`.
/// Power mode: `damp_l2 = ||u||^{beta+1}_{beta+1}`, `grad_sq_mod = || |u|^{beta-3} |grad rho|^2 ||_1`,
/// `weighted_grad = || |u|^{beta-1} |grad u|^2 ||_1`, `log_grad_sq = 0`.
/// `forcing_rhs = || rho |grad u|^2 ||_1` in every mode.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BudgetTerms {
    pub l2_sq: f64,
    pub h1dot_sq: f64,
    pub h2dot_sq: f64,
    pub damp_l2: f64,
    pub grad_sq_mod: f64,
    pub weighted_grad: f64,
    pub forcing_rhs: f64,
    pub log_grad_sq: f64,
}

impl BudgetTerms {
    pub const NAMES: [&'static str; 8] = [
        "l2_sq",
        "h1dot_sq",
        "h2dot_sq",
        "damp_l2",
        "grad_sq_mod",
        "weighted_grad",
        "forcing_rhs",
        "log_grad_sq",
    ];

    pub fn to_array(&self) -> [f64; 8] {
        [
            self.l2_sq,
            self.h1dot_sq,
            self.h2dot_sq,
            self.damp_l2,
            self.grad_sq_mod,
            self.weighted_grad,
            self.forcing_rhs,
            self.log_grad_sq,
        ]
    }

    pub fn from_array(a: [f64; 8]) -> Self {
        BudgetTerms {
            l2_sq: a[0],
            h1dot_sq: a[1],
            h2dot_sq: a[2],
            damp_l2: a[3],
            grad_sq_mod: a[4],
            weighted_grad: a[5],
            forcing_rhs: a[6],
            log_grad_sq: a[7],
        }
    }

    fn trapezoid_step(&self, prev: &BudgetTerms, next: &BudgetTerms, dt: f64) -> BudgetTerms {
        let (a, p, n) = (self.to_array(), prev.to_array(), next.to_array());
        let mut out = [0.0; 8];
        for i in 0..8 {
            out[i] = a[i] + 0.5 * dt * (p[i] + n[i]);
        }
        BudgetTerms::from_array(out)
    }
}

/// One time sample: the instantaneous terms and their running time integrals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetRow {
    pub t: f64,
    pub terms: BudgetTerms,
    /// Trapezoidal `int_{t0}^t` of each entry of `terms`.
    pub integrals: BudgetTerms,
    /// Trapezoidal `int_{t0}^t ||u||^4_{H^1-dot}`.
    pub h1_fourth_integral: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowUpReport {
    pub t: f64,
    pub reason: String,
    pub last_l2_sq: f64,
    pub last_h1dot_sq: f64,
}

/// Ordered budget rows of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetSeries {
    pub damping: DampingSpec,
    /// `(e^{1/(2 alpha)} - e)_+` in log mode.
    pub a_alpha: Option<f64>,
    rows: Vec<BudgetRow>,
    pub blowup: Option<BlowUpReport>,
    /// Latest sample folded into the integrals but not yet recorded.
    #[serde(skip)]
    pending: Option<BudgetRow>,
}

impl BudgetSeries {
    pub fn new(damping: DampingSpec) -> Self {
        let a = match damping.kind {
            DampingKind::Log if damping.alpha > 0.0 => a_alpha(damping.alpha).ok(),
            _ => None,
        };
        BudgetSeries {
            damping,
            a_alpha: a,
            rows: Vec::new(),
            blowup: None,
            pending: None,
        }
    }

    pub fn rows(&self) -> &[BudgetRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn first(&self) -> Option<&BudgetRow> {
        self.rows.first()
    }

    pub fn last(&self) -> Option<&BudgetRow> {
        self.rows.last()
    }

    /// Appends a sample and advances the running integrals.
    pub fn push(&mut self, t: f64, terms: BudgetTerms) -> Result<&BudgetRow> {
        self.accumulate(t, terms)?;
        let row = self.pending.take().expect("just accumulated");
        self.rows.push(row);
        Ok(self.rows.last().unwrap())
    }

    /// Folds a sample into the running integrals without recording a row.
    /// The next [`push`](Self::push) integrates from here, so intermediate
    /// time steps refine the quadrature between output rows.
    pub fn accumulate(&mut self, t: f64, terms: BudgetTerms) -> Result<()> {
        let row = match self.pending.as_ref().or(self.rows.last()) {
            None => BudgetRow {
                t,
                terms,
                integrals: BudgetTerms::default(),
                h1_fourth_integral: 0.0,
            },
            Some(prev) => {
                if !(t > prev.t) {
                    return Err(Error::InvalidArgument(format!(
                        "budget times must increase strictly: {} after {}",
                        t, prev.t
                    )));
                }
                let dt = t - prev.t;
                BudgetRow {
                    t,
                    terms,
                    integrals: prev.integrals.trapezoid_step(&prev.terms, &terms, dt),
                    h1_fourth_integral: prev.h1_fourth_integral
                        + 0.5 * dt * (prev.terms.h1dot_sq.powi(2) + terms.h1dot_sq.powi(2)),
                }
            }
        };
        self.pending = Some(row);
        Ok(())
    }

    /// Appends a fully formed row (used when reloading saved series).
    pub fn push_row(&mut self, row: BudgetRow) -> Result<()> {
        self.pending = None;
        if let Some(prev) = self.rows.last() {
            if !(row.t > prev.t) {
                return Err(Error::InvalidArgument(format!(
                    "budget times must increase strictly: {} after {}",
                    row.t, prev.t
                )));
            }
        }
        self.rows.push(row);
        Ok(())
    }

    /// Envelope `||grad u0||^2 e^{a_alpha (t - t0)}` (log mode) at a row.
    pub fn envelope(&self, row: &BudgetRow) -> f64 {
        let Some(first) = self.rows.first() else {
            return 0.0;
        };
        let a = self.a_alpha.unwrap_or(0.0);
        let h0 = first.terms.h1dot_sq;
        if h0 == 0.0 {
            0.0
        } else {
            h0 * (a * (row.t - first.t)).exp()
        }
    }
}

/// Evaluates every budget density of `u` at time `t`.
///
/// Densities are sampled on the grid and integrated by the rectangle rule;
/// `grad |u|^2` is differentiated spectrally from the dealiased `|u|^2`.
pub fn compute_budget_row(u: &SpectralField, t: f64, spec: &DampingSpec) -> Result<BudgetTerms> {
    u.require_vector("compute_budget_row")?;
    let grid = u.grid();
    let dim = grid.dim();
    let len = grid.len();
    let vol = grid.volume();
    let w = grid.cell_volume();
    let xi_sq = grid.xi_sq_table();

    let mut l2 = 0.0;
    let mut h1 = 0.0;
    let mut h2 = 0.0;
    for comp in u.comps() {
        for (c, &k2) in comp.iter().zip(xi_sq) {
            let m = c.norm_sqr();
            l2 += m;
            h1 += k2 * m;
            h2 += k2 * k2 * m;
        }
    }

    let s = Samples::new(u, true);
    let grad = s.grad.as_ref().unwrap();
    let rho = s.rho();

    let mut rho_hat = SpectralField::from_parts(grid, forward_real(grid, &[&rho]), false);
    dealias_in_place(&mut rho_hat);
    let grad_rho = gradient_samples(&rho_hat);

    let mut damp = 0.0;
    let mut gsm = 0.0;
    let mut wg = 0.0;
    let mut forcing = 0.0;
    let mut lgs = 0.0;
    for p in 0..len {
        let r = rho[p];
        let mut gu2 = 0.0;
        for g in grad.iter() {
            for i in 0..dim {
                let v = g.component(i)[p];
                gu2 += v * v;
            }
        }
        let gr2: f64 = grad_rho.iter().map(|g| g.component(0)[p].powi(2)).sum();
        forcing += r * gu2;
        match spec.kind {
            DampingKind::None => {}
            DampingKind::Log => {
                let l = (E + r).ln();
                damp += l * r * r;
                gsm += r / (E + r) * gr2;
                wg += l * r * gu2;
                lgs += l * gr2;
            }
            DampingKind::Power => {
                let beta = spec.beta;
                let speed = r.sqrt();
                damp += speed.powf(beta + 1.0);
                if r > 0.0 || beta >= 3.0 {
                    gsm += speed.powf(beta - 3.0) * gr2;
                }
                wg += speed.powf(beta - 1.0) * gu2;
            }
        }
    }

    let terms = BudgetTerms {
        l2_sq: l2 * vol,
        h1dot_sq: h1 * vol,
        h2dot_sq: h2 * vol,
        damp_l2: damp * w,
        grad_sq_mod: gsm * w,
        weighted_grad: wg * w,
        forcing_rhs: forcing * w,
        log_grad_sq: lgs * w,
    };
    if let Some(bad) = terms.to_array().iter().position(|v| !v.is_finite()) {
        return Err(Error::BlowUp {
            t,
            reason: format!("budget term {} is not finite", BudgetTerms::NAMES[bad]),
        });
    }
    Ok(terms)
}
