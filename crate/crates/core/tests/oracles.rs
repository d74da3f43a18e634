use std::f64::consts::{E, PI};

use logdamp_core::config::InitialCondition;
use logdamp_core::diagnostics::{compute_budget_row, l4_h1_diagnostic, l4_h1_increments};
use logdamp_core::integrator::{heat_flow, Integrator, RunObserver, SnapshotRecorder};
use logdamp_core::io::{checkpoint_load, checkpoint_save};
use logdamp_core::nonlinear::convective_term;
use logdamp_core::spectral::{laplacian, max_relative_divergence};
use logdamp_core::{
    run, run_from, BudgetRow, BudgetSeries, Complex64, DampingSpec, Grid, Result, SimConfig, SolverState,
    SpectralField,
};


/// Composite Simpson on [0, 2 pi].
fn simpson(f: impl Fn(f64) -> f64) -> f64 {
    let m = 20_000;
    let h = 2.0 * PI / m as f64;
    let mut s = f(0.0) + f(2.0 * PI);
    for k in 1..m {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k as f64 * h);
    }
    s * h / 3.0
}

fn cos_x1(grid: &Grid) -> SpectralField {
    let mut u = SpectralField::zeros_vector(grid);
    let k: Vec<i64> = (0..grid.dim()).map(|d| if d == 0 { 1 } else { 0 }).collect();
    u.set_mode_pair(&k, 0, Complex64::new(0.5, 0.0)).unwrap();
    u
}

#[test]
fn frozen_cosine_budget_matches_quadrature() {
    let grid = Grid::periodic(3, 32).unwrap();
    let u = cos_x1(&grid);
    let b = compute_budget_row(&u, 0.0, &DampingSpec::log(1.0).unwrap()).unwrap();
    let area = (2.0 * PI).powi(2);
    let rho = |x: f64| x.cos().powi(2);
    let lg = |x: f64| (E + rho(x)).ln();
    // grad |u|^2 = -sin 2x e1, |grad u|^2 = sin^2 x
    let oracle = [
        ("l2_sq", b.l2_sq, area * PI),
        ("h1dot_sq", b.h1dot_sq, area * PI),
        ("h2dot_sq", b.h2dot_sq, area * PI),
        ("damp_l2", b.damp_l2, area * simpson(|x| lg(x) * rho(x).powi(2))),
        ("grad_sq_mod", b.grad_sq_mod, area * simpson(|x| rho(x) / (E + rho(x)) * (2.0 * x).sin().powi(2))),
        ("weighted_grad", b.weighted_grad, area * simpson(|x| lg(x) * rho(x) * x.sin().powi(2))),
        ("forcing_rhs", b.forcing_rhs, area * simpson(|x| rho(x) * x.sin().powi(2))),
        ("log_grad_sq", b.log_grad_sq, area * simpson(|x| lg(x) * (2.0 * x).sin().powi(2))),
    ];
    for (name, got, want) in oracle {
        assert!((got - want).abs() <= 1e-10 * want, "{name}: {got} vs {want}");
    }
}

#[test]
fn frozen_field_l4_integral() {
    let grid = Grid::periodic(2, 16).unwrap();
    let u = cos_x1(&grid);
    let spec = DampingSpec::none();
    let mut s = BudgetSeries::new(spec);
    for k in 0..=10 {
        s.push(k as f64 * 0.1, compute_budget_row(&u, 0.0, &spec).unwrap()).unwrap();
    }
    let l2 = s.first().unwrap().terms.l2_sq;
    assert!((l4_h1_diagnostic(&s).unwrap() - l2 * l2).abs() < 1e-12 * l2 * l2);
    let inc = l4_h1_increments(&s, 0.5).unwrap();
    assert_eq!(inc.len(), 2);
}

#[test]
fn heat_step_matches_exact_decay() {
    let mut cfg = SimConfig::new(3, 8, DampingSpec::none(), 1.0);
    cfg.convection = false;
    let mut integ = Integrator::new(&cfg).unwrap();
    let grid = integ.grid().clone();
    let u = logdamp_core::spectral::sample::random_hermitian(&grid, 3, 9, true);
    let s = SolverState::new(u.clone(), 0.03);
    let next = integ.step(&s).unwrap();
    let exact = heat_flow(&u, 0.03);
    assert!(next.u.axpy(-1.0, &exact).unwrap().max_modulus() <= 1e-15 * u.max_modulus());
}

#[test]
fn taylor_green_2d_decays_exactly() {
    let mut cfg = SimConfig::new(2, 16, DampingSpec::none(), 0.5);
    cfg.dt = 1e-2;
    cfg.output_interval = 0.1;
    let out = run(&cfg, &mut ()).unwrap();
    let e0 = 2.0 * PI * PI;
    for r in out.series.rows() {
        let want = e0 * (-4.0 * r.t).exp();
        assert!((r.terms.l2_sq - want).abs() <= 1e-12 * e0, "t={} {}", r.t, r.terms.l2_sq);
    }
}

struct ConvectionWork(Vec<f64>);

impl RunObserver for ConvectionWork {
    fn observe(&mut self, s: &SolverState, _row: &BudgetRow) -> Result<()> {
        let c = convective_term(&s.u)?;
        self.0.push(c.inner(&laplacian(&s.u))?);
        Ok(())
    }
}

/// `h1 + 2 int h2 + 2 alpha int wg + alpha (beta-1)/2 int gsm = h1_0 + 2 int <u.grad u, Lap u>`.
fn power_identity_defect(n: usize, dt: f64) -> f64 {
    let (alpha, beta) = (1.0, 4.0);
    let mut cfg = SimConfig::new(3, n, DampingSpec::power(alpha, beta).unwrap(), 0.2);
    cfg.dt = dt;
    cfg.output_interval = dt;
    let mut work = ConvectionWork(Vec::new());
    let out = run(&cfg, &mut work).unwrap();
    let rows = out.series.rows();
    let h0 = rows[0].terms.h1dot_sq;
    let mut conv = 0.0;
    let mut worst = 0.0f64;
    for k in 1..rows.len() {
        conv += 0.5 * (rows[k].t - rows[k - 1].t) * (work.0[k] + work.0[k - 1]);
        let r = &rows[k];
        let i = &r.integrals;
        let lhs = r.terms.h1dot_sq
            + 2.0 * i.h2dot_sq
            + 2.0 * alpha * i.weighted_grad
            + 0.5 * alpha * (beta - 1.0) * i.grad_sq_mod;
        worst = worst.max((lhs - h0 - 2.0 * conv).abs() / h0);
    }
    worst
}

/// The pointwise damping densities match the spectral `<grad D, grad u>` only up to
/// resolution error, so the identity closes as the grid is refined.
#[test]
fn power_enstrophy_identity_closes_under_refinement() {
    let coarse = power_identity_defect(16, 1e-3);
    let fine = power_identity_defect(32, 1e-3);
    assert!(fine < 1e-5, "{fine}");
    assert!(coarse / fine > 10.0, "{coarse} / {fine}");
}

fn random_config() -> SimConfig {
    let mut cfg = SimConfig::new(3, 12, DampingSpec::log(0.5).unwrap(), 0.1);
    cfg.ic = InitialCondition::random_divfree(4.0, 2.0, 2.5, 17);
    cfg.dt = 5e-3;
    cfg.output_interval = 0.02;
    cfg.strict_deterministic = true;
    cfg
}

#[test]
fn random_run_stays_solenoidal_and_real() {
    let cfg = random_config();
    let mut rec = SnapshotRecorder::default();
    let out = run(&cfg, &mut rec).unwrap();
    assert!(out.blowup.is_none());
    assert!(out.max_divergence <= 1e-10, "{}", out.max_divergence);
    for s in &rec.snapshots {
        assert!(s.u.validate_hermitian().is_ok());
        assert!(max_relative_divergence(&s.u).unwrap() <= 1e-10);
    }
    assert_eq!(out.series.len(), 6);
}

#[test]
fn restart_is_bit_exact() {
    let cfg = random_config();
    let full = run(&cfg, &mut ()).unwrap();

    let mut first = cfg.clone();
    first.t_max = 0.04;
    let half = run(&first, &mut ()).unwrap();
    let mut buf = Vec::new();
    checkpoint_save(&half.state, &mut buf).unwrap();
    let restored = checkpoint_load(&mut buf.as_slice()).unwrap();
    let resumed = run_from(&cfg, restored, &mut ()).unwrap();

    assert!(resumed.state.bit_eq(&full.state));
    // budgets of the resumed run start at the restart time
    assert_eq!(resumed.series.first().unwrap().t, 0.04);
    let a = full.series.rows().last().unwrap().terms;
    let b = resumed.series.rows().last().unwrap().terms;
    assert_eq!(a, b);
}

#[test]
fn blowup_is_reported_not_raised() {
    let mut cfg = SimConfig::new(2, 8, DampingSpec::none(), 1.0);
    cfg.ic = InitialCondition::taylor_green(5.0);
    cfg.velocity_ceiling = 1.0;
    cfg.output_interval = 0.1;
    cfg.dt = 0.01;
    let out = run(&cfg, &mut ()).unwrap();
    let b = out.blowup.expect("ceiling below the initial speed");
    assert!(b.t > 0.0 && b.t <= 0.011);
    assert!(b.reason.contains("ceiling"));
    assert_eq!(out.series.len(), 1);
    assert_eq!(out.series.blowup.as_ref(), Some(&b));
}
