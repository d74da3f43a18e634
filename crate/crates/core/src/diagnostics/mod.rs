//! Energy budgets, inequality checks and stability diagnostics.

pub mod budget;
pub mod checks;
pub mod gronwall;
pub mod stability;

pub use budget::{compute_budget_row, BlowUpReport, BudgetRow, BudgetSeries, BudgetTerms};
pub use checks::{
    a_alpha, check_h1_inequality, check_l2_inequality, l4_h1_diagnostic, l4_h1_increments,
    H1Form, H1Report, L2Report, TOL_BUDGET,
};
pub use gronwall::{gronwall_envelope, GronwallReport};
pub use stability::{stability_compare, Snapshot, StabilityReport, DEFAULT_STABILITY_C};
