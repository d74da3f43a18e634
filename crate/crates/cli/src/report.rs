//! Compact, serializable summaries of the check reports.

use logdamp_core::diagnostics::{BlowUpReport, H1Form, H1Report, L2Report};
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct L2Summary {
    pub pass: bool,
    pub tol: f64,
    pub initial_energy: f64,
    pub max_residual: f64,
    pub max_residual_t: f64,
    pub max_abs_residual: f64,
    pub balance_defect: f64,
}

impl From<&L2Report> for L2Summary {
    fn from(r: &L2Report) -> Self {
        L2Summary {
            pass: r.pass,
            tol: r.tol,
            initial_energy: r.initial_energy,
            max_residual: r.max_residual,
            max_residual_t: r.max_residual_t,
            max_abs_residual: r.max_abs_residual,
            balance_defect: r.balance_defect,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct H1Summary {
    pub form: H1Form,
    pub pass: bool,
    pub tol: f64,
    pub initial_enstrophy: f64,
    pub max_residual: f64,
    pub max_residual_t: f64,
    pub full_dissipation_max_residual: Option<f64>,
    pub doubled_rate_max_residual: Option<f64>,
    pub envelope_max_increase: Option<f64>,
    pub gronwall_pass: Option<bool>,
    pub single_viscous_max_residual: Option<f64>,
}

impl From<&H1Report> for H1Summary {
    fn from(r: &H1Report) -> Self {
        H1Summary {
            form: r.form,
            pass: r.pass,
            tol: r.tol,
            initial_enstrophy: r.initial_enstrophy,
            max_residual: r.max_residual,
            max_residual_t: r.max_residual_t,
            full_dissipation_max_residual: r.full_dissipation_max_residual,
            doubled_rate_max_residual: r.doubled_rate_max_residual,
            envelope_max_increase: r.envelope_max_increase,
            gronwall_pass: r.gronwall.as_ref().map(|g| g.pass),
            single_viscous_max_residual: r.single_viscous_max_residual,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct CheckReport {
    pub rows: usize,
    pub a_alpha: Option<f64>,
    pub l2: Option<L2Summary>,
    pub h1: Option<H1Summary>,
    pub blowup: Option<BlowUpReport>,
}

impl CheckReport {
    pub fn all_pass(&self) -> bool {
        self.l2.as_ref().is_none_or(|r| r.pass) && self.h1.as_ref().is_none_or(|r| r.pass)
    }

    pub fn print(&self) {
        if let Some(a) = self.a_alpha {
            println!("a_alpha = {a:.6}");
        }
        if let Some(r) = &self.l2 {
            println!(
                "L2 {}: max residual {:.3e} at t = {} (tol {:.3e}), balance defect {:.3e}",
                verdict(r.pass),
                r.max_residual,
                r.max_residual_t,
                r.tol,
                r.balance_defect
            );
        }
        if let Some(r) = &self.h1 {
            println!(
                "H1 {} ({:?} form): max residual {:.3e} at t = {} (tol {:.3e})",
                verdict(r.pass),
                r.form,
                r.max_residual,
                r.max_residual_t,
                r.tol
            );
            if let Some(v) = r.full_dissipation_max_residual {
                println!("  with 2 int |Lap u|^2 and the weighted gradient term: max residual {v:.3e}");
            }
            if let Some(v) = r.doubled_rate_max_residual {
                println!("  envelope with rate 2 a_alpha: max residual {v:.3e}");
            }
            if let Some(v) = r.envelope_max_increase {
                println!("  largest increase of e^(-a_alpha t) |grad u|^2: {v:.3e}");
            }
            if let Some(v) = r.single_viscous_max_residual {
                println!("  with int |Lap u|^2 counted once: max residual {v:.3e}");
            }
        }
        if let Some(b) = &self.blowup {
            println!("BLOW-UP at t = {}: {}", b.t, b.reason);
        }
    }
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}
