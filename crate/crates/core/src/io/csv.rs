//! Budget series as CSV.
//!
//! Columns, in order: `t`, the eight instantaneous terms of [`BudgetTerms`],
//! `int_<term>` for each of them, `int_h1dot_sq_sq`, `envelope`,
//! `l2_residual`, `h1_residual`, `blowup`. Numbers are printed in the
//! shortest form that parses back to the same binary64 value. A blow-up adds
//! a final row with `blowup = 1`, the blow-up time and `NaN` data.

use std::io::{Read, Write};

use crate::diagnostics::budget::{BlowUpReport, BudgetRow, BudgetSeries, BudgetTerms};
use crate::diagnostics::checks::{check_h1_inequality, check_l2_inequality};
use crate::error::{Error, Result};
use crate::nonlinear::DampingSpec;

pub fn budget_csv_header() -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend(BudgetTerms::NAMES.iter().map(|s| s.to_string()));
    h.extend(BudgetTerms::NAMES.iter().map(|s| format!("int_{s}")));
    for s in ["int_h1dot_sq_sq", "envelope", "l2_residual", "h1_residual", "blowup"] {
        h.push(s.to_string());
    }
    h
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Csv(format!("{other:?}")),
    }
}

pub fn write_budget_csv(series: &BudgetSeries, sink: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(budget_csv_header()).map_err(csv_err)?;
    let (l2, h1) = if series.is_empty() {
        (Vec::new(), Vec::new())
    } else {
        (
            check_l2_inequality(series, 0.0)?.residuals,
            check_h1_inequality(series, 0.0)?.residuals,
        )
    };
    for (i, row) in series.rows().iter().enumerate() {
        let mut rec = vec![num(row.t)];
        rec.extend(row.terms.to_array().iter().map(|&x| num(x)));
        rec.extend(row.integrals.to_array().iter().map(|&x| num(x)));
        rec.push(num(row.h1_fourth_integral));
        rec.push(num(series.envelope(row)));
        rec.push(num(l2[i]));
        rec.push(num(h1[i]));
        rec.push("0".into());
        w.write_record(&rec).map_err(csv_err)?;
    }
    if let Some(b) = &series.blowup {
        let mut rec = vec![num(b.t)];
        rec.extend(std::iter::repeat_n(num(f64::NAN), 20));
        rec.push("1".into());
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a file written by [`write_budget_csv`]. The damping spec is not
/// stored in the CSV and must be supplied.
pub fn read_budget_csv(source: impl Read, damping: DampingSpec) -> Result<BudgetSeries> {
    let mut r = csv::Reader::from_reader(source);
    let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(String::from).collect();
    if header != budget_csv_header() {
        return Err(Error::Csv(format!("unexpected header: {}", header.join(","))));
    }
    let mut series = BudgetSeries::new(damping);
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let vals: Vec<f64> = rec
            .iter()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| Error::Csv(format!("row {}: bad number `{s}`", line + 1)))
            })
            .collect::<Result<_>>()?;
        if vals[21] == 1.0 {
            series.blowup = Some(BlowUpReport {
                t: vals[0],
                reason: "blow-up recorded in budget file".into(),
                last_l2_sq: series.last().map_or(f64::NAN, |r| r.terms.l2_sq),
                last_h1dot_sq: series.last().map_or(f64::NAN, |r| r.terms.h1dot_sq),
            });
            continue;
        }
        if series.blowup.is_some() {
            return Err(Error::Csv(format!("row {}: data after the blow-up marker", line + 1)));
        }
        let terms: [f64; 8] = vals[1..9].try_into().unwrap();
        let integrals: [f64; 8] = vals[9..17].try_into().unwrap();
        series
            .push_row(BudgetRow {
                t: vals[0],
                terms: BudgetTerms::from_array(terms),
                integrals: BudgetTerms::from_array(integrals),
                h1_fourth_integral: vals[17],
            })
            .map_err(|e| Error::Csv(format!("row {}: {e}", line + 1)))?;
    }
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series() -> BudgetSeries {
        let mut s = BudgetSeries::new(DampingSpec::log(0.25).unwrap());
        for k in 0..5 {
            let x = 1.0 / (k as f64 + 3.0);
            s.push(k as f64 * 0.1, BudgetTerms::from_array([x, 2.0 * x, x / 7.0, 1e-300, x.sqrt(), 0.1, 1e17 * x, 0.0]))
                .unwrap();
        }
        s
    }

    #[test]
    fn empty_series_writes_header_only() {
        let mut out = Vec::new();
        write_budget_csv(&BudgetSeries::new(DampingSpec::none()), &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("t,l2_sq,h1dot_sq,h2dot_sq,damp_l2,grad_sq_mod,weighted_grad,forcing_rhs,log_grad_sq,int_l2_sq"));
        assert!(text.trim_end().ends_with("int_h1dot_sq_sq,envelope,l2_residual,h1_residual,blowup"));
    }

    #[test]
    fn round_trip_is_exact() {
        let mut s = series();
        s.blowup = Some(BlowUpReport {
            t: 0.45,
            reason: "x".into(),
            last_l2_sq: 0.0,
            last_h1dot_sq: 0.0,
        });
        let mut out = Vec::new();
        write_budget_csv(&s, &mut out).unwrap();
        let back = read_budget_csv(out.as_slice(), s.damping).unwrap();
        assert_eq!(back.rows(), s.rows());
        assert_eq!(back.blowup.as_ref().unwrap().t, 0.45);
        let last = String::from_utf8(out).unwrap().lines().last().unwrap().to_string();
        assert!(last.starts_with("0.45,NaN,") && last.ends_with(",1"), "{last}");
    }

    #[test]
    fn rejects_foreign_header() {
        assert!(read_budget_csv("a,b\n1,2\n".as_bytes(), DampingSpec::none()).is_err());
    }
}
