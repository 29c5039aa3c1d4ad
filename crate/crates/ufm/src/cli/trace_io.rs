//! CSV serialization of optimization traces. Floats are printed with 17
//! significant digits so a written trace re-reads bit exactly.

use std::path::Path;

use crate::error::{Error, Result};
use crate::optim::Trace;

/// Formats a float with 17 significant digits, the shortest width that
/// always round-trips a 64-bit value.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Header for a trace whose rows carry the given feature levels:
/// `iter,objective,grad_norm`, one `nc1_<level>,nc2of_<level>,
/// nc2etf_<level>` group per level, then `nc3`.
pub fn trace_header(levels: &[&str]) -> String {
    let mut cols = vec!["iter".to_string(), "objective".into(), "grad_norm".into()];
    for level in levels {
        cols.push(format!("nc1_{level}"));
        cols.push(format!("nc2of_{level}"));
        cols.push(format!("nc2etf_{level}"));
    }
    cols.push("nc3".into());
    cols.join(",")
}

/// Renders a trace as CSV text.
pub fn trace_to_csv(trace: &Trace) -> Result<String> {
    let first = trace.rows.first().ok_or_else(|| {
        Error::InvalidArgument("cannot serialize an empty trace".into())
    })?;
    let levels: Vec<&str> = first
        .report
        .levels
        .iter()
        .map(|l| l.level.as_str())
        .collect();
    let mut out = String::new();
    out.push_str(&trace_header(&levels));
    out.push('\n');
    for row in &trace.rows {
        if row.report.levels.len() != levels.len() {
            return Err(Error::InvalidArgument(
                "trace rows report inconsistent feature levels".into(),
            ));
        }
        let mut cols = vec![
            row.iteration.to_string(),
            fmt_float(row.objective),
            fmt_float(row.grad_norm),
        ];
        for level in &row.report.levels {
            cols.push(fmt_float(level.nc1.value));
            cols.push(fmt_float(level.nc2_of.value));
            cols.push(fmt_float(level.nc2_etf.value));
        }
        cols.push(fmt_float(row.report.nc3.value));
        out.push_str(&cols.join(","));
        out.push('\n');
    }
    Ok(out)
}

/// Writes a trace to a CSV file.
pub fn write_trace_csv(path: &Path, trace: &Trace) -> Result<()> {
    std::fs::write(path, trace_to_csv(trace)?)?;
    Ok(())
}

/// A re-read CSV trace: the header column names and one numeric record
/// per row (the iteration index parsed as the first value).
#[derive(Clone, Debug)]
pub struct ParsedTrace {
    pub columns: Vec<String>,
    pub rows: Vec<ParsedTraceRow>,
}

#[derive(Clone, Debug)]
pub struct ParsedTraceRow {
    pub iteration: u64,
    pub values: Vec<f64>,
}

/// Reads a CSV trace produced by [`write_trace_csv`].
pub fn read_trace_csv(path: &Path) -> Result<ParsedTrace> {
    let text = std::fs::read_to_string(path)?;
    parse_trace_csv(&text)
}

/// Parses CSV trace text.
pub fn parse_trace_csv(text: &str) -> Result<ParsedTrace> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::MalformedFile("trace file is empty".into()))?;
    let columns: Vec<String> = header.split(',').map(str::to_string).collect();
    if columns.first().map(String::as_str) != Some("iter") {
        return Err(Error::MalformedFile(
            "trace header must start with 'iter'".into(),
        ));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns.len() {
            return Err(Error::MalformedFile(format!(
                "trace row {} has {} fields, expected {}",
                i + 1,
                fields.len(),
                columns.len()
            )));
        }
        let iteration: u64 = fields[0].parse().map_err(|_| {
            Error::MalformedFile(format!("bad iteration index {:?}", fields[0]))
        })?;
        let values = fields[1..]
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::MalformedFile(format!("bad float {f:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(ParsedTraceRow { iteration, values });
    }
    Ok(ParsedTrace { columns, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dims::{build_label_matrix, ProblemDims};
    use crate::model::{BiasMode, Hyperparams, PlainHyper, Variant};
    use crate::optim::{gradient_descent, init_state, InitSpec, OptimConfig};

    fn small_trace() -> Trace {
        let dims = ProblemDims::new(3, 5, 2).unwrap();
        let y = build_label_matrix(&dims);
        let cfg = OptimConfig {
            step_size: 0.05,
            max_iters: 30,
            log_every: 10,
            grad_tol: 0.0,
            init: InitSpec {
                scale: 1.0,
                seed: 8,
            },
        };
        let hyper = Hyperparams::Plain(PlainHyper {
            lambda_w: 0.01,
            lambda_h: 0.01,
            bias: BiasMode::BiasFree,
        });
        let state = init_state(Variant::PlainBiasFree, &dims, &cfg.init).unwrap();
        gradient_descent(state, &y, &dims, &hyper, Variant::PlainBiasFree, &cfg)
            .unwrap()
            .1
    }

    #[test]
    fn header_layout() {
        assert_eq!(
            trace_header(&["h"]),
            "iter,objective,grad_norm,nc1_h,nc2of_h,nc2etf_h,nc3"
        );
        assert_eq!(
            trace_header(&["h1", "pre", "post"]),
            "iter,objective,grad_norm,nc1_h1,nc2of_h1,nc2etf_h1,nc1_pre,nc2of_pre,nc2etf_pre,nc1_post,nc2of_post,nc2etf_post,nc3"
        );
    }

    #[test]
    fn float_format_round_trips_exactly() {
        for &x in &[
            0.1,
            1.0 / 3.0,
            f64::MIN_POSITIVE,
            1.2342135623730951e-101,
            -273.15,
            6.02214076e23,
        ] {
            let printed = fmt_float(x);
            let back: f64 = printed.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{printed}");
        }
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let trace = small_trace();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        write_trace_csv(&path, &trace).unwrap();
        let parsed = read_trace_csv(&path).unwrap();
        assert_eq!(parsed.columns.len(), 7);
        assert_eq!(parsed.rows.len(), trace.rows.len());
        for (orig, read) in trace.rows.iter().zip(parsed.rows.iter()) {
            assert_eq!(orig.iteration as u64, read.iteration);
            assert_eq!(read.values[0].to_bits(), orig.objective.to_bits());
            assert_eq!(read.values[1].to_bits(), orig.grad_norm.to_bits());
            let level = &orig.report.levels[0];
            assert_eq!(read.values[2].to_bits(), level.nc1.value.to_bits());
            assert_eq!(read.values[3].to_bits(), level.nc2_of.value.to_bits());
            assert_eq!(read.values[4].to_bits(), level.nc2_etf.value.to_bits());
            assert_eq!(read.values[5].to_bits(), orig.report.nc3.value.to_bits());
        }
    }

    #[test]
    fn malformed_traces_are_rejected() {
        assert!(parse_trace_csv("").is_err());
        assert!(parse_trace_csv("objective,grad_norm\n1,2\n").is_err());
        assert!(parse_trace_csv("iter,objective\n0,1.0,extra\n").is_err());
        assert!(parse_trace_csv("iter,objective\nzero,1.0\n").is_err());
    }
}
