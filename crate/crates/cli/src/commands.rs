use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use logdamp_core::diagnostics::{check_h1_inequality, check_l2_inequality};
use logdamp_core::io::{
    load_for_resume, read_budget_csv, save_checkpoint_file, write_budget_csv, RunManifest,
    MANIFEST_FILE,
};
use logdamp_core::{parse_config_with_overrides, run, run_from, BudgetSeries, Grid, SimConfig};

use crate::lock::DirLock;
use crate::report::CheckReport;
use crate::Mode;

pub const BUDGET_FILE: &str = "budget.csv";
pub const REPORT_FILE: &str = "report.json";
pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const CONFIG_ECHO_FILE: &str = "config.toml";

/// Process outcome, ordered by severity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Pass = 0,
    Violation = 1,
    BlowUp = 2,
}

fn split_override(s: &str) -> anyhow::Result<(String, String)> {
    let (k, v) = s
        .split_once('=')
        .with_context(|| format!("override `{s}` must look like KEY=VALUE"))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

fn load_config(path: &Path, overrides: &[(String, String)]) -> anyhow::Result<SimConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_config_with_overrides(&text, overrides)
        .with_context(|| format!("invalid config {}", path.display()))
}

fn build_report(series: &BudgetSeries, mode: Mode, tol: f64) -> anyhow::Result<CheckReport> {
    let empty = series.is_empty();
    let l2 = if mode != Mode::H1 && !empty {
        Some((&check_l2_inequality(series, tol)?).into())
    } else {
        None
    };
    let h1 = if mode != Mode::L2 && !empty {
        Some((&check_h1_inequality(series, tol)?).into())
    } else {
        None
    };
    Ok(CheckReport {
        rows: series.len(),
        a_alpha: series.a_alpha,
        l2,
        h1,
        blowup: series.blowup.clone(),
    })
}

fn status_of(report: &CheckReport) -> Status {
    if report.blowup.is_some() {
        Status::BlowUp
    } else if report.all_pass() {
        Status::Pass
    } else {
        Status::Violation
    }
}

pub fn solve(
    config: &Path,
    output: &Path,
    strict: bool,
    resume: Option<&Path>,
    overrides: &[String],
) -> anyhow::Result<Status> {
    let overrides = overrides
        .iter()
        .map(|s| split_override(s))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let mut cfg = load_config(config, &overrides)?;
    cfg.strict_deterministic |= strict;
    let (status, report) = solve_config(&cfg, output, resume)?;
    report.print();
    println!("outputs written to {}", output.display());
    Ok(status)
}

/// Runs one configuration into `output` and writes every artifact.
pub fn solve_config(
    cfg: &SimConfig,
    output: &Path,
    resume: Option<&Path>,
) -> anyhow::Result<(Status, CheckReport)> {
    let _lock = DirLock::acquire(output)?;
    let start_time = chrono::Utc::now().to_rfc3339();
    let config_toml = cfg.to_toml();
    fs::write(output.join(CONFIG_ECHO_FILE), &config_toml)?;

    let outcome = match resume {
        Some(path) => {
            let grid = Grid::new(cfg.dim, cfg.n, cfg.box_length)?;
            let mut state = load_for_resume(path, &grid)
                .with_context(|| format!("cannot resume from {}", path.display()))?;
            if !cfg.adaptive {
                state.dt = cfg.dt;
            }
            run_from(cfg, state, &mut ())?
        }
        None => run(cfg, &mut ())?,
    };
    log::info!(
        "finished at t = {} after {} steps",
        outcome.state.t,
        outcome.state.step_count
    );

    let budget_path = output.join(BUDGET_FILE);
    let mut w = BufWriter::new(File::create(&budget_path)?);
    write_budget_csv(&outcome.series, &mut w)?;
    w.into_inner().map_err(|e| e.into_error())?.sync_all()?;

    let report = build_report(&outcome.series, Mode::Both, cfg.tol_budget)?;
    fs::write(output.join(REPORT_FILE), serde_json::to_string_pretty(&report)?)?;
    save_checkpoint_file(&outcome.state, &output.join(CHECKPOINT_FILE))?;

    let manifest = RunManifest {
        config: cfg.clone(),
        config_toml,
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        start_time,
        end_time: chrono::Utc::now().to_rfc3339(),
        blowup: outcome.blowup.is_some(),
        blowup_reason: outcome.blowup.as_ref().map(|b| b.reason.clone()),
        blowup_time: outcome.blowup.as_ref().map(|b| b.t),
        resumed_from: resume.map(Path::to_path_buf),
        l2_pass: report.l2.as_ref().map(|r| r.pass),
        h1_pass: report.h1.as_ref().map(|r| r.pass),
        outputs: [CONFIG_ECHO_FILE, BUDGET_FILE, REPORT_FILE, CHECKPOINT_FILE]
            .iter()
            .map(PathBuf::from)
            .collect(),
    };
    manifest.write_atomic(&output.join(MANIFEST_FILE))?;
    Ok((status_of(&report), report))
}

pub fn check(budget: &Path, mode: Mode, tol: Option<f64>) -> anyhow::Result<Status> {
    let dir = budget.parent().unwrap_or(Path::new("."));
    let manifest_path = dir.join(MANIFEST_FILE);
    let manifest = RunManifest::read(&manifest_path).with_context(|| {
        format!(
            "the damping parameters come from {}, which could not be read",
            manifest_path.display()
        )
    })?;
    let file = File::open(budget).with_context(|| format!("opening {}", budget.display()))?;
    let series = read_budget_csv(file, manifest.config.damping)
        .with_context(|| format!("reading {}", budget.display()))?;
    let tol = tol.unwrap_or(manifest.config.tol_budget);
    if !(tol >= 0.0) {
        bail!("--tol must be >= 0");
    }
    let report = build_report(&series, mode, tol)?;
    report.print();
    Ok(status_of(&report))
}

/// `KEY=START:STOP:STEP` expanded into the listed values (inclusive).
pub fn parse_vary(spec: &str) -> anyhow::Result<(String, Vec<f64>)> {
    let (key, range) = spec
        .split_once('=')
        .with_context(|| format!("--vary `{spec}` must look like KEY=START:STOP:STEP"))?;
    let parts: Vec<f64> = range
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("--vary range `{range}` must be three numbers"))?;
    let [start, stop, step] = parts[..] else {
        bail!("--vary range `{range}` must be START:STOP:STEP");
    };
    if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
        bail!("--vary needs step > 0 and stop >= start");
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    if count > 10_000 {
        bail!("--vary expands to {count} points");
    }
    let values = (0..count)
        .map(|k| {
            let v = start + k as f64 * step;
            // strip accumulated binary noise: 0.1 + 2 * 0.05 -> 0.2
            format!("{v:.12}").parse::<f64>().unwrap()
        })
        .collect();
    let key = match key.trim() {
        "alpha" => "damping.alpha".to_string(),
        "beta" => "damping.beta".to_string(),
        other => other.to_string(),
    };
    Ok((key, values))
}

/// Whole numbers are written as TOML integers so integer keys such as `n`
/// can be swept; float keys accept them too.
fn toml_number(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:?}")
    }
}

pub fn sweep(config: &Path, vary: &str, output: &Path, strict: bool) -> anyhow::Result<Status> {
    let (key, values) = parse_vary(vary)?;
    // validate every point before running any of them
    let configs = values
        .iter()
        .map(|v| {
            let mut cfg = load_config(config, &[(key.clone(), toml_number(*v))])?;
            cfg.strict_deterministic |= strict;
            Ok(cfg)
        })
        .collect::<anyhow::Result<Vec<_>>>()?;

    let _lock = DirLock::acquire(output)?;
    let mut worst = Status::Pass;
    let mut summary = String::from("key,value,status,l2_pass,h1_pass,l2_max_residual,h1_max_residual,blowup_t\n");
    let leaf = key.rsplit('.').next().unwrap_or(&key);
    for (v, cfg) in values.iter().zip(&configs) {
        let dir = output.join(format!("{leaf}={v}"));
        let (status, report) = solve_config(cfg, &dir, None)?;
        println!("{key} = {v}: {:?}", status);
        worst = worst.max(status);
        let opt = |x: Option<f64>| x.map_or(String::new(), |x| format!("{x:?}"));
        let optb = |x: Option<bool>| x.map_or(String::new(), |x| x.to_string());
        summary.push_str(&format!(
            "{key},{v:?},{},{},{},{},{},{}\n",
            status as u8,
            optb(report.l2.as_ref().map(|r| r.pass)),
            optb(report.h1.as_ref().map(|r| r.pass)),
            opt(report.l2.as_ref().map(|r| r.max_residual)),
            opt(report.h1.as_ref().map(|r| r.max_residual)),
            opt(report.blowup.as_ref().map(|b| b.t)),
        ));
    }
    fs::write(output.join("sweep_summary.csv"), summary)?;
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vary_expands_inclusively() {
        let (k, v) = parse_vary("alpha=0.1:0.5:0.05").unwrap();
        assert_eq!(k, "damping.alpha");
        assert_eq!(v.len(), 9);
        assert_eq!(v[2], 0.2);
        assert_eq!(*v.last().unwrap(), 0.5);
        assert!(parse_vary("alpha=0.5:0.1:0.1").is_err());
        assert!(parse_vary("alpha=0.1:0.5").is_err());
        assert!(parse_vary("alpha").is_err());
        assert_eq!(parse_vary("n=16:16:1").unwrap().1, vec![16.0]);
    }
}
