//! Run configuration: a flat TOML document with `[damping]`, `[ic]` and
//! `[checks]` sections. Unknown keys are errors.
//!
//! ```toml
//! dim = 3
//! n = 32
//! t_max = 1.0
//!
//! [damping]
//! kind = "log"      # none | power | log
//! alpha = 0.25
//! ```

use std::f64::consts::PI;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{a_alpha, DEFAULT_STABILITY_C, TOL_BUDGET};
use crate::error::{Error, Result};
use crate::nonlinear::{DampingKind, DampingSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IcKind {
    TaylorGreen,
    RandomDivfree,
    SingleMode,
    FromCheckpoint,
}

/// Initial-condition selector and its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialCondition {
    pub kind: IcKind,
    /// Velocity scale for `taylor_green` and `single_mode`; target `||grad u0||` for `random_divfree`.
    pub amplitude: f64,
    pub spectrum_slope: f64,
    pub peak_wavenumber: f64,
    pub seed: u64,
    /// Integer wavevector for `single_mode`.
    pub wavevector: Vec<i64>,
    /// Velocity component excited by `single_mode` (0-based).
    pub component: usize,
    /// Checkpoint file for `from_checkpoint`.
    pub path: Option<PathBuf>,
}

impl InitialCondition {
    pub fn taylor_green(amplitude: f64) -> Self {
        InitialCondition {
            kind: IcKind::TaylorGreen,
            amplitude,
            spectrum_slope: 2.0,
            peak_wavenumber: 2.0,
            seed: 0,
            wavevector: Vec::new(),
            component: 0,
            path: None,
        }
    }

    pub fn random_divfree(h1_norm: f64, spectrum_slope: f64, peak_wavenumber: f64, seed: u64) -> Self {
        InitialCondition {
            kind: IcKind::RandomDivfree,
            amplitude: h1_norm,
            spectrum_slope,
            peak_wavenumber,
            seed,
            ..Self::taylor_green(0.0)
        }
    }

    pub fn single_mode(wavevector: Vec<i64>, component: usize, amplitude: f64) -> Self {
        InitialCondition {
            kind: IcKind::SingleMode,
            amplitude,
            wavevector,
            component,
            ..Self::taylor_green(0.0)
        }
    }
}

/// Fully resolved run parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dim: usize,
    pub n: usize,
    pub box_length: f64,
    pub damping: DampingSpec,
    pub t_max: f64,
    /// Fixed step, or the first step in adaptive mode.
    pub dt: f64,
    pub adaptive: bool,
    pub cfl: f64,
    pub dt_max: f64,
    /// Include the damping stiffness limit in adaptive step selection.
    pub damping_dt_limit: bool,
    /// Spacing of budget rows; steps land exactly on these times.
    pub output_interval: f64,
    pub seed: u64,
    pub ic: InitialCondition,
    /// `J_R` cutoff applied after every step.
    pub friedrichs_radius: Option<f64>,
    /// Pointwise `|u|` above which the run is declared blown up.
    pub velocity_ceiling: f64,
    /// Switches the convective term off when false.
    pub convection: bool,
    pub strict_deterministic: bool,
    pub tol_budget: f64,
    pub stability_c: f64,
}

impl SimConfig {
    /// Defaults for everything except the grid, damping and horizon.
    pub fn new(dim: usize, n: usize, damping: DampingSpec, t_max: f64) -> Self {
        SimConfig {
            dim,
            n,
            box_length: 2.0 * PI,
            damping,
            t_max,
            dt: 1e-3,
            adaptive: false,
            cfl: 0.5,
            dt_max: 1e-2,
            damping_dt_limit: true,
            output_interval: 1e-3,
            seed: 0,
            ic: InitialCondition::taylor_green(1.0),
            friedrichs_radius: None,
            velocity_ceiling: 1e6,
            convection: true,
            strict_deterministic: false,
            tol_budget: TOL_BUDGET,
            stability_c: DEFAULT_STABILITY_C,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |path: &str, msg: String| Err(Error::config(path, msg));
        if self.dim != 2 && self.dim != 3 {
            return bad("dim", format!("dim must be 2 or 3, got {}", self.dim));
        }
        if self.n < 4 || self.n % 2 != 0 {
            return bad("n", format!("n must be even and at least 4, got {}", self.n));
        }
        if !(self.box_length.is_finite() && self.box_length > 0.0) {
            return bad("box_length", "box_length must be > 0".into());
        }
        if !(self.damping.alpha.is_finite() && self.damping.alpha >= 0.0) {
            return bad("damping.alpha", "alpha must be ≥ 0".into());
        }
        if self.damping.kind == DampingKind::Power && !(self.damping.beta > 1.0) {
            return bad("damping.beta", "beta must be > 1 for power damping".into());
        }
        if !(self.t_max.is_finite() && self.t_max >= 0.0) {
            return bad("t_max", "t_max must be ≥ 0".into());
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad("dt", "dt must be > 0".into());
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return bad("cfl", "cfl must lie in (0, 1]".into());
        }
        if !(self.dt_max.is_finite() && self.dt_max > 0.0) {
            return bad("dt_max", "dt_max must be > 0".into());
        }
        if !(self.output_interval.is_finite() && self.output_interval > 0.0) {
            return bad("output_interval", "output_interval must be > 0".into());
        }
        if let Some(r) = self.friedrichs_radius {
            if !(r > 0.0) {
                return bad("friedrichs_radius", "friedrichs_radius must be > 0".into());
            }
        }
        if !(self.velocity_ceiling > 0.0) {
            return bad("velocity_ceiling", "velocity_ceiling must be > 0".into());
        }
        if !(self.tol_budget >= 0.0) {
            return bad("checks.tol_budget", "tol_budget must be ≥ 0".into());
        }
        if !(self.stability_c.is_finite()) {
            return bad("checks.stability_c", "stability_c must be finite".into());
        }
        let ic = &self.ic;
        if !(ic.amplitude.is_finite() && ic.amplitude >= 0.0) {
            return bad("ic.amplitude", "amplitude must be ≥ 0".into());
        }
        match ic.kind {
            IcKind::RandomDivfree if !(ic.peak_wavenumber > 0.0) => {
                return bad("ic.peak_wavenumber", "peak_wavenumber must be > 0".into());
            }
            IcKind::SingleMode => {
                if ic.wavevector.len() != self.dim {
                    return bad(
                        "ic.wavevector",
                        format!("wavevector needs {} entries", self.dim),
                    );
                }
                if ic.component >= self.dim {
                    return bad("ic.component", format!("component must be < {}", self.dim));
                }
            }
            IcKind::FromCheckpoint if ic.path.is_none() => {
                return bad("ic.path", "from_checkpoint needs a path".into());
            }
            _ => {}
        }
        Ok(())
    }

    /// Envelope rate for log damping, if it applies.
    pub fn a_alpha(&self) -> Option<f64> {
        match self.damping.kind {
            DampingKind::Log if self.damping.alpha > 0.0 => a_alpha(self.damping.alpha).ok(),
            _ => None,
        }
    }

    /// TOML text that parses back to this configuration.
    pub fn to_toml(&self) -> String {
        toml::to_string(&RawConfig::from(self)).expect("config serializes")
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dim: Option<usize>,
    n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    box_length: Option<f64>,
    t_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    adaptive: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cfl: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dt_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    damping_dt_limit: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    output_interval: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    friedrichs_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    velocity_ceiling: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    convection: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    strict_deterministic: Option<bool>,
    damping: RawDamping,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ic: Option<RawIc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    checks: Option<RawChecks>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDamping {
    kind: DampingKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kind: Option<IcKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    spectrum_slope: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    peak_wavenumber: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    wavevector: Option<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    component: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    path: Option<PathBuf>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChecks {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tol_budget: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    stability_c: Option<f64>,
}

impl From<&SimConfig> for RawConfig {
    fn from(c: &SimConfig) -> Self {
        RawConfig {
            dim: Some(c.dim),
            n: c.n,
            box_length: Some(c.box_length),
            t_max: c.t_max,
            dt: Some(c.dt),
            adaptive: Some(c.adaptive),
            cfl: Some(c.cfl),
            dt_max: Some(c.dt_max),
            damping_dt_limit: Some(c.damping_dt_limit),
            output_interval: Some(c.output_interval),
            seed: Some(c.seed),
            friedrichs_radius: c.friedrichs_radius,
            velocity_ceiling: Some(c.velocity_ceiling),
            convection: Some(c.convection),
            strict_deterministic: Some(c.strict_deterministic),
            damping: RawDamping {
                kind: c.damping.kind,
                alpha: Some(c.damping.alpha),
                beta: (c.damping.kind == DampingKind::Power).then_some(c.damping.beta),
            },
            ic: Some(RawIc {
                kind: Some(c.ic.kind),
                amplitude: Some(c.ic.amplitude),
                spectrum_slope: Some(c.ic.spectrum_slope),
                peak_wavenumber: Some(c.ic.peak_wavenumber),
                seed: Some(c.ic.seed),
                wavevector: (!c.ic.wavevector.is_empty()).then(|| c.ic.wavevector.clone()),
                component: Some(c.ic.component),
                path: c.ic.path.clone(),
            }),
            checks: Some(RawChecks {
                tol_budget: Some(c.tol_budget),
                stability_c: Some(c.stability_c),
            }),
        }
    }
}

/// Parses and validates a configuration document, resolving all defaults.
pub fn parse_config(text: &str) -> Result<SimConfig> {
    let table: toml::Table = toml::from_str(text).map_err(|e| Error::config("<document>", e.to_string()))?;
    parse_config_table(table)
}

/// Like [`parse_config`], after setting dotted `key = value` overrides
/// (values are parsed as TOML literals, e.g. `damping.alpha=0.3`).
pub fn parse_config_with_overrides(text: &str, overrides: &[(String, String)]) -> Result<SimConfig> {
    let mut table: toml::Table =
        toml::from_str(text).map_err(|e| Error::config("<document>", e.to_string()))?;
    for (key, value) in overrides {
        set_dotted(&mut table, key, value)?;
    }
    parse_config_table(table)
}

fn set_dotted(table: &mut toml::Table, key: &str, value: &str) -> Result<()> {
    let literal: toml::Table = toml::from_str(&format!("v = {value}"))
        .map_err(|e| Error::config(key, format!("bad override value `{value}`: {e}")))?;
    let v = literal.get("v").cloned().expect("parsed key");
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| Error::config(key, "empty key"))?;
    let mut cur = table;
    for p in parts {
        cur = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::config(key, format!("`{p}` is not a section")))?;
    }
    cur.insert(last.to_string(), v);
    Ok(())
}

fn parse_config_table(table: toml::Table) -> Result<SimConfig> {
    let raw: RawConfig = serde_path_to_error::deserialize(table).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." { "<root>".to_string() } else { path };
        Error::config(path, e.into_inner().to_string())
    })?;

    let dim = raw.dim.unwrap_or(3);
    let alpha = raw.damping.alpha.unwrap_or(0.0);
    let damping = match raw.damping.kind {
        DampingKind::None => DampingSpec::none(),
        DampingKind::Log => DampingSpec {
            kind: DampingKind::Log,
            alpha,
            beta: 0.0,
        },
        DampingKind::Power => {
            let beta = raw
                .damping
                .beta
                .ok_or_else(|| Error::config("damping.beta", "power damping requires beta"))?;
            DampingSpec {
                kind: DampingKind::Power,
                alpha,
                beta,
            }
        }
    };
    if raw.damping.kind != DampingKind::Power && raw.damping.beta.is_some() {
        return Err(Error::config("damping.beta", "beta only applies to power damping"));
    }

    let mut cfg = SimConfig::new(dim, raw.n, damping, raw.t_max);
    if let Some(v) = raw.box_length {
        cfg.box_length = v;
    }
    if let Some(v) = raw.dt {
        cfg.dt = v;
    }
    if let Some(v) = raw.adaptive {
        cfg.adaptive = v;
    }
    if let Some(v) = raw.cfl {
        cfg.cfl = v;
    }
    if let Some(v) = raw.dt_max {
        cfg.dt_max = v;
    }
    if let Some(v) = raw.damping_dt_limit {
        cfg.damping_dt_limit = v;
    }
    cfg.output_interval = raw
        .output_interval
        .unwrap_or(if cfg.adaptive { cfg.dt_max } else { cfg.dt });
    if let Some(v) = raw.seed {
        cfg.seed = v;
    }
    cfg.friedrichs_radius = raw.friedrichs_radius;
    if let Some(v) = raw.velocity_ceiling {
        cfg.velocity_ceiling = v;
    }
    if let Some(v) = raw.convection {
        cfg.convection = v;
    }
    if let Some(v) = raw.strict_deterministic {
        cfg.strict_deterministic = v;
    }
    let ric = raw.ic.unwrap_or_default();
    cfg.ic = InitialCondition {
        kind: ric.kind.unwrap_or(IcKind::TaylorGreen),
        amplitude: ric.amplitude.unwrap_or(1.0),
        spectrum_slope: ric.spectrum_slope.unwrap_or(2.0),
        peak_wavenumber: ric.peak_wavenumber.unwrap_or(2.0),
        seed: ric.seed.unwrap_or(cfg.seed),
        wavevector: ric.wavevector.unwrap_or_default(),
        component: ric.component.unwrap_or(0),
        path: ric.path,
    };
    let checks = raw.checks.unwrap_or_default();
    if let Some(v) = checks.tol_budget {
        cfg.tol_budget = v;
    }
    if let Some(v) = checks.stability_c {
        cfg.stability_c = v;
    }
    cfg.validate()?;

    let step = if cfg.adaptive { cfg.dt_max } else { cfg.dt };
    if cfg.output_interval > 10.0 * step {
        log::warn!(
            "output_interval {} exceeds 10 steps ({}); trapezoidal budgets will be coarse",
            cfg.output_interval,
            10.0 * step
        );
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
dim = 3
n = 32
t_max = 1.0

[damping]
kind = "log"
alpha = 0.25
"#;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.dim, 3);
        assert_eq!(cfg.n, 32);
        assert_eq!(cfg.box_length, 2.0 * PI);
        assert_eq!(cfg.dt, 1e-3);
        assert_eq!(cfg.output_interval, 1e-3);
        assert_eq!(cfg.ic.kind, IcKind::TaylorGreen);
        let e = std::f64::consts::E;
        assert!((cfg.a_alpha().unwrap() - (e * e - e)).abs() < 1e-12);
    }

    #[test]
    fn echo_round_trips() {
        let cfg = parse_config(MINIMAL).unwrap();
        let again = parse_config(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, again);
    }

    fn err_of(text: &str) -> (String, String) {
        match parse_config(text) {
            Err(Error::Config { path, message }) => (path, message),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn negative_alpha_rejected() {
        let (path, msg) = err_of(&MINIMAL.replace("alpha = 0.25", "alpha = -1"));
        assert_eq!(path, "damping.alpha");
        assert!(msg.contains("alpha must be ≥ 0"));
    }

    #[test]
    fn power_without_beta_rejected() {
        let (path, _) = err_of(&MINIMAL.replace("\"log\"", "\"power\""));
        assert_eq!(path, "damping.beta");
    }

    #[test]
    fn unknown_keys_rejected_with_path() {
        let (path, msg) = err_of(&MINIMAL.replace("alpha = 0.25", "alpha = 0.25\nalhpa = 1"));
        assert!(path.starts_with("damping"), "{path}");
        assert!(msg.contains("alhpa"), "{msg}");
        let (_, msg) = err_of(&format!("tmax = 2\n{MINIMAL}"));
        assert!(msg.contains("tmax"), "{msg}");
    }

    #[test]
    fn missing_required_key() {
        let (_, msg) = err_of("n = 8\n[damping]\nkind = \"none\"\n");
        assert!(msg.contains("t_max"), "{msg}");
        let (path, msg) = err_of("n = 8\nt_max = 1\n[damping]\nalpha = 1\n");
        assert!(path.contains("damping") && msg.contains("kind"), "{path}: {msg}");
    }

    #[test]
    fn out_of_range_values() {
        assert_eq!(err_of(&MINIMAL.replace("n = 32", "n = 31")).0, "n");
        assert_eq!(err_of(&format!("cfl = 1.5\n{MINIMAL}")).0, "cfl");
        assert_eq!(err_of(&format!("dim = 4\n{}", MINIMAL.replace("dim = 3\n", ""))).0, "dim");
    }

    #[test]
    fn overrides_apply() {
        let cfg = parse_config_with_overrides(
            MINIMAL,
            &[("damping.alpha".into(), "0.5".into()), ("n".into(), "16".into())],
        )
        .unwrap();
        assert_eq!(cfg.damping.alpha, 0.5);
        assert_eq!(cfg.n, 16);
        assert_eq!(cfg.a_alpha(), Some(0.0));
    }
}
