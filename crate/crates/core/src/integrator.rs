//! Integrating-factor Heun scheme for the projected, damped system
//! `u_t = Lap u - P(u . grad u) - P(damping(u))`.
//!
//! Diffusion is integrated exactly through `E = exp(-|xi|^2 dt)`:
//!
//! ```text
//! k1 = N(u)
//! k2 = N(E (u + dt k1))
//! u' = E (u + dt/2 k1) + dt/2 k2
//! ```

use crate::config::SimConfig;
use crate::diagnostics::budget::{compute_budget_row, BlowUpReport, BudgetRow, BudgetSeries};
use crate::diagnostics::stability::Snapshot;
use crate::error::{Error, Result};
use crate::io::ic::build_ic;
use crate::nonlinear::{combined_term, DampingKind, DampingSpec, Samples};
use crate::spectral::field::SpectralField;
use crate::spectral::grid::Grid;
use crate::spectral::ops::{dealias_in_place, friedrichs_truncate, max_relative_divergence};
use crate::spectral::transform::inverse_unchecked;

#[derive(Clone, Debug)]
pub struct SolverState {
    pub t: f64,
    pub u: SpectralField,
    pub step_count: u64,
    pub dt: f64,
}

impl SolverState {
    pub fn new(u: SpectralField, dt: f64) -> Self {
        SolverState {
            t: 0.0,
            u,
            step_count: 0,
            dt,
        }
    }

    /// Bitwise equality of time, step count, step size and coefficients.
    pub fn bit_eq(&self, other: &SolverState) -> bool {
        self.t.to_bits() == other.t.to_bits()
            && self.step_count == other.step_count
            && self.dt.to_bits() == other.dt.to_bits()
            && self.u.bit_eq(&other.u)
    }
}

/// `-P(u . grad u) - P(damping(u))`. The Laplacian is left to the integrating factor.
pub fn rhs_nonlinear(u: &SpectralField, spec: &DampingSpec) -> Result<SpectralField> {
    u.require_vector("rhs_nonlinear")?;
    Ok(combined_term(u, true, spec)?.scaled(-1.0))
}

/// Stepper bound to one configuration; caches the integrating factor per step size.
pub struct Integrator {
    config: SimConfig,
    grid: Grid,
    factor: Option<(u64, Vec<f64>)>,
}

impl Integrator {
    pub fn new(config: &SimConfig) -> Result<Self> {
        config.validate()?;
        let grid = Grid::new(config.dim, config.n, config.box_length)?;
        Ok(Integrator {
            config: config.clone(),
            grid,
            factor: None,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    fn nonlinear(&self, u: &SpectralField) -> Result<SpectralField> {
        Ok(combined_term(u, self.config.convection, &self.config.damping)?.scaled(-1.0))
    }

    fn factor(&mut self, dt: f64) -> &[f64] {
        let bits = dt.to_bits();
        if self.factor.as_ref().map(|f| f.0) != Some(bits) {
            let table = self.grid.xi_sq_table().iter().map(|k2| (-k2 * dt).exp()).collect();
            self.factor = Some((bits, table));
        }
        &self.factor.as_ref().unwrap().1
    }

    /// One step of size `state.dt`.
    pub fn step(&mut self, state: &SolverState) -> Result<SolverState> {
        let dt = state.dt;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt must be > 0, got {dt}")));
        }
        if !state.u.grid().same_shape(&self.grid) {
            return Err(Error::Mismatch("state grid differs from the configured grid".into()));
        }
        let u = &state.u;
        let k1 = self.nonlinear(u).map_err(|e| at_time(e, state.t))?;

        let e = self.factor(dt).to_vec();
        let mut stage = u.clone();
        for (sc, kc) in stage.comps_mut().iter_mut().zip(k1.comps()) {
            for ((s, k), &f) in sc.iter_mut().zip(kc).zip(&e) {
                *s = (*s + k * dt) * f;
            }
        }
        let k2 = self.nonlinear(&stage).map_err(|e| at_time(e, state.t + dt))?;

        let half = 0.5 * dt;
        let mut next = u.clone();
        for ((nc, k1c), k2c) in next.comps_mut().iter_mut().zip(k1.comps()).zip(k2.comps()) {
            for (((v, a), b), &f) in nc.iter_mut().zip(k1c).zip(k2c).zip(&e) {
                *v = (*v + a * half) * f + b * half;
            }
        }
        if let Some(r) = self.config.friedrichs_radius {
            next = friedrichs_truncate(&next, r)?;
        }
        dealias_in_place(&mut next);
        next.set_divergence_free(u.is_divergence_free());

        let t = state.t + dt;
        self.check_blowup(&next, t)?;
        Ok(SolverState {
            t,
            u: next,
            step_count: state.step_count + 1,
            dt,
        })
    }

    fn check_blowup(&self, u: &SpectralField, t: f64) -> Result<()> {
        if !u.all_finite() {
            return Err(Error::BlowUp {
                t,
                reason: "non-finite Fourier coefficient".into(),
            });
        }
        let ceiling = self.config.velocity_ceiling;
        if u.sup_bound() > ceiling {
            let umax = inverse_unchecked(u).max_magnitude();
            if umax > ceiling {
                return Err(Error::BlowUp {
                    t,
                    reason: format!("max |u| = {umax:e} exceeds the ceiling {ceiling:e}"),
                });
            }
        }
        Ok(())
    }

    /// Step size for the next step, clamped so steps land on the next output time.
    pub fn choose_dt(&self, state: &SolverState) -> Result<f64> {
        let cfg = &self.config;
        if !cfg.adaptive {
            return Ok(cfg.dt);
        }
        let s = Samples::new(&state.u, false);
        let rho = s.rho();
        let umax = rho.iter().copied().fold(0.0, f64::max).sqrt();
        let advective = if umax > 0.0 {
            self.grid.spacing() / umax
        } else {
            f64::INFINITY
        };
        let damping = if cfg.damping_dt_limit {
            let stiff = rho
                .iter()
                .map(|&r| stiffness(&cfg.damping, r))
                .fold(0.0, f64::max);
            1.0 / (1.0 + stiff)
        } else {
            f64::INFINITY
        };
        let mut dt = (cfg.cfl * advective.min(damping)).min(cfg.dt_max);
        let target = next_output_time(state.t, cfg.output_interval, cfg.t_max);
        let remaining = target - state.t;
        if remaining > 0.0 {
            if dt >= remaining * (1.0 - 1e-12) {
                dt = remaining;
            } else if 2.0 * dt > remaining {
                dt = 0.5 * remaining;
            }
        }
        Ok(dt)
    }
}

/// Pointwise stiffness of the damping term: `alpha log(e+|u|^2)|u|^2` or `alpha |u|^{beta-1}`.
fn stiffness(spec: &DampingSpec, rho: f64) -> f64 {
    match spec.kind {
        DampingKind::None => 0.0,
        _ => spec.factor(rho),
    }
}

fn at_time(e: Error, t: f64) -> Error {
    match e {
        Error::BlowUp { reason, .. } => Error::BlowUp { t, reason },
        other => other,
    }
}

/// First output time strictly after `t`, capped at `t_max`.
pub fn next_output_time(t: f64, interval: f64, t_max: f64) -> f64 {
    let k = (t / interval + 1e-9).floor() + 1.0;
    (k * interval).min(t_max)
}

/// One step of `state` under `config` (convenience wrapper over [`Integrator`]).
pub fn step(state: &SolverState, config: &SimConfig) -> Result<SolverState> {
    Integrator::new(config)?.step(state)
}

pub fn choose_dt(state: &SolverState, config: &SimConfig) -> Result<f64> {
    Integrator::new(config)?.choose_dt(state)
}

/// Receives every output sample of a run.
pub trait RunObserver: Send {
    fn observe(&mut self, _state: &SolverState, _row: &BudgetRow) -> Result<()> {
        Ok(())
    }
}

impl RunObserver for () {}

/// Keeps a copy of the state at every output time.
#[derive(Default)]
pub struct SnapshotRecorder {
    pub snapshots: Vec<Snapshot>,
}

impl RunObserver for SnapshotRecorder {
    fn observe(&mut self, state: &SolverState, _row: &BudgetRow) -> Result<()> {
        self.snapshots.push(Snapshot {
            t: state.t,
            u: state.u.clone(),
        });
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    /// Last state reached (the last finite one after a blow-up).
    pub state: SolverState,
    pub series: BudgetSeries,
    pub blowup: Option<BlowUpReport>,
    /// Largest relative divergence seen at any output time.
    pub max_divergence: f64,
}

/// Integrates from the configured initial condition to `t_max`.
pub fn run(config: &SimConfig, observer: &mut dyn RunObserver) -> Result<RunOutcome> {
    config.validate()?;
    let grid = Grid::new(config.dim, config.n, config.box_length)?;
    let in_pool = |observer: &mut dyn RunObserver| -> Result<RunOutcome> {
        let (u0, t0) = build_ic(&config.ic, &grid)?;
        let mut state = SolverState::new(u0, config.dt);
        state.t = t0;
        drive(config, state, observer)
    };
    with_threads(config.strict_deterministic, || in_pool(observer))
}

/// Continues a run from `state` (e.g. a loaded checkpoint). Budgets are
/// measured from the restart time.
pub fn run_from(
    config: &SimConfig,
    state: SolverState,
    observer: &mut dyn RunObserver,
) -> Result<RunOutcome> {
    config.validate()?;
    with_threads(config.strict_deterministic, || drive(config, state, observer))
}

fn with_threads<T: Send>(strict: bool, f: impl FnOnce() -> T + Send) -> T {
    if strict {
        match rayon::ThreadPoolBuilder::new().num_threads(1).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        }
    } else {
        f()
    }
}

fn drive(config: &SimConfig, mut state: SolverState, observer: &mut dyn RunObserver) -> Result<RunOutcome> {
    let mut integ = Integrator::new(config)?;
    if !state.u.grid().same_shape(integ.grid()) {
        return Err(Error::Mismatch(format!(
            "initial state grid {:?} differs from configured grid {:?}",
            state.u.grid(),
            integ.grid()
        )));
    }
    let mut series = BudgetSeries::new(config.damping);
    let mut max_div = 0.0f64;

    let emit = |state: &SolverState,
                series: &mut BudgetSeries,
                max_div: &mut f64,
                observer: &mut dyn RunObserver|
     -> Result<()> {
        let terms = compute_budget_row(&state.u, state.t, &config.damping)?;
        *max_div = max_div.max(max_relative_divergence(&state.u)?);
        let row = *series.push(state.t, terms)?;
        observer.observe(state, &row)
    };

    let sample = |state: &SolverState, series: &mut BudgetSeries| -> Result<()> {
        let terms = compute_budget_row(&state.u, state.t, &config.damping)?;
        series.accumulate(state.t, terms)
    };

    emit(&state, &mut series, &mut max_div, observer)?;

    let mut blowup = None;
    'outer: while state.t < config.t_max {
        let target = next_output_time(state.t, config.output_interval, config.t_max);
        if config.adaptive {
            while state.t < target {
                let mut trial = state.clone();
                trial.dt = integ.choose_dt(&state)?;
                let landing = state.t + trial.dt >= target * (1.0 - 1e-14);
                match integ.step(&trial) {
                    Ok(mut next) => {
                        if landing {
                            next.t = target;
                        }
                        state = next;
                        if state.t < target {
                            if let Err(e) = sample(&state, &mut series) {
                                blowup = Some(blowup_from(&series, e)?);
                                break 'outer;
                            }
                        }
                    }
                    Err(Error::BlowUp { t, reason }) => {
                        blowup = Some(blowup_report(&series, t, reason));
                        break 'outer;
                    }
                    Err(e) => return Err(e),
                }
            }
        } else {
            let span = target - state.t;
            let m = ((span / config.dt) - 1e-9).ceil().max(1.0) as u64;
            let h = span / m as f64;
            for i in 0..m {
                let mut trial = state.clone();
                trial.dt = h;
                match integ.step(&trial) {
                    Ok(mut next) => {
                        if i + 1 == m {
                            next.t = target;
                        } else if let Err(e) = sample(&next, &mut series) {
                            state = next;
                            blowup = Some(blowup_from(&series, e)?);
                            break 'outer;
                        }
                        state = next;
                    }
                    Err(Error::BlowUp { t, reason }) => {
                        blowup = Some(blowup_report(&series, t, reason));
                        break 'outer;
                    }
                    Err(e) => return Err(e),
                }
            }
        }
        match emit(&state, &mut series, &mut max_div, observer) {
            Ok(()) => {}
            Err(Error::BlowUp { t, reason }) => {
                blowup = Some(blowup_report(&series, t, reason));
                break;
            }
            Err(e) => return Err(e),
        }
    }

    series.blowup = blowup.clone();
    Ok(RunOutcome {
        state,
        series,
        blowup,
        max_divergence: max_div,
    })
}

fn blowup_from(series: &BudgetSeries, e: Error) -> Result<BlowUpReport> {
    match e {
        Error::BlowUp { t, reason } => Ok(blowup_report(series, t, reason)),
        e => Err(e),
    }
}

fn blowup_report(series: &BudgetSeries, t: f64, reason: String) -> BlowUpReport {
    let last = series.last();
    BlowUpReport {
        t,
        reason,
        last_l2_sq: last.map_or(f64::NAN, |r| r.terms.l2_sq),
        last_h1dot_sq: last.map_or(f64::NAN, |r| r.terms.h1dot_sq),
    }
}

/// Pure-diffusion reference: every mode multiplied by `exp(-|xi|^2 t)`.
pub fn heat_flow(u: &SpectralField, t: f64) -> SpectralField {
    let grid = u.grid().clone();
    let mut out = u.clone();
    for comp in out.comps_mut() {
        for (c, &k2) in comp.iter_mut().zip(grid.xi_sq_table()) {
            *c *= (-k2 * t).exp();
        }
    }
    out
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::InitialCondition;

    fn tg2d(grid: &Grid) -> SpectralField {
        build_ic(&InitialCondition::taylor_green(1.0), grid).unwrap().0
    }

    #[test]
    fn zero_state_stays_zero() {
        let cfg = SimConfig::new(3, 8, DampingSpec::log(1.0).unwrap(), 1.0);
        let mut integ = Integrator::new(&cfg).unwrap();
        let grid = integ.grid().clone();
        for dt in [1e-4, 0.1, 5.0] {
            let s = SolverState::new(SpectralField::zeros_vector(&grid), dt);
            let next = integ.step(&s).unwrap();
            assert_eq!(next.u.max_modulus(), 0.0);
        }
    }

    #[test]
    fn rhs_vanishes_on_zero_and_taylor_green() {
        let grid = Grid::periodic(2, 16).unwrap();
        let z = rhs_nonlinear(&SpectralField::zeros_vector(&grid), &DampingSpec::log(1.0).unwrap())
            .unwrap();
        assert_eq!(z.max_modulus(), 0.0);
        let r = rhs_nonlinear(&tg2d(&grid), &DampingSpec::none()).unwrap();
        assert!(r.max_modulus() < 1e-12, "{}", r.max_modulus());
    }

    #[test]
    fn rhs_is_divergence_free() {
        let grid = Grid::periodic(3, 12).unwrap();
        let u = crate::spectral::leray_project(&crate::spectral::sample::random_hermitian(&grid, 3, 4, true))
            .unwrap();
        for spec in [DampingSpec::log(0.3).unwrap(), DampingSpec::power(1.0, 4.0).unwrap()] {
            let r = rhs_nonlinear(&u, &spec).unwrap();
            assert!(max_relative_divergence(&r).unwrap() < 1e-10);
        }
    }

    #[test]
    fn fixed_mode_returns_configured_dt() {
        let mut cfg = SimConfig::new(2, 8, DampingSpec::none(), 1.0);
        cfg.dt = 3e-3;
        let grid = Grid::periodic(2, 8).unwrap();
        let s = SolverState::new(tg2d(&grid), 1.0);
        assert_eq!(choose_dt(&s, &cfg).unwrap(), 3e-3);
    }

    #[test]
    fn adaptive_dt_limits() {
        let mut cfg = SimConfig::new(2, 16, DampingSpec::none(), 10.0);
        cfg.adaptive = true;
        cfg.cfl = 0.5;
        cfg.dt_max = 0.2;
        cfg.output_interval = 10.0;
        let grid = Grid::periodic(2, 16).unwrap();
        let zero = SolverState::new(SpectralField::zeros_vector(&grid), 1.0);
        assert_eq!(choose_dt(&zero, &cfg).unwrap(), 0.2);

        // advective limit only: doubling u halves dt
        cfg.damping_dt_limit = false;
        cfg.dt_max = 10.0;
        cfg.output_interval = 100.0;
        cfg.t_max = 100.0;
        let u = tg2d(&grid);
        let a = choose_dt(&SolverState::new(u.clone(), 1.0), &cfg).unwrap();
        let b = choose_dt(&SolverState::new(u.scaled(2.0), 1.0), &cfg).unwrap();
        assert!((a / b - 2.0).abs() < 1e-12);
        assert!((a - 0.5 * grid.spacing()).abs() < 1e-12);
    }

    #[test]
    fn adaptive_dt_lands_on_outputs() {
        let mut cfg = SimConfig::new(2, 8, DampingSpec::none(), 1.0);
        cfg.adaptive = true;
        cfg.dt_max = 0.3;
        cfg.output_interval = 0.5;
        let grid = Grid::periodic(2, 8).unwrap();
        let mut s = SolverState::new(SpectralField::zeros_vector(&grid), 1.0);
        s.t = 0.4;
        assert!((choose_dt(&s, &cfg).unwrap() - 0.1).abs() < 1e-15);
        s.t = 0.0;
        assert!((choose_dt(&s, &cfg).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn next_output_times() {
        assert_eq!(next_output_time(0.0, 0.1, 1.0), 0.1);
        assert_eq!(next_output_time(0.3, 0.1, 1.0), 0.4);
        assert_eq!(next_output_time(0.95, 0.1, 0.97), 0.97);
    }
}
