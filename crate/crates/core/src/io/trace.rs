use std::path::Path;

use super::data::fmt_real;
use crate::error::{Error, Result};
use crate::run::TraceRecord;

pub const TRACE_HEADER: &str = "iter,eff_grad_evals,fval,gnorm,step,wall_ms";

pub fn format_trace(records: &[TraceRecord]) -> Result<String> {
    if records.is_empty() {
        return Err(Error::invalid("refusing to write an empty trace"));
    }
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.iter.to_string());
        for v in [r.eff_grad_evals, r.fval, r.gnorm, r.step, r.wall_ms] {
            out.push(',');
            out.push_str(&fmt_real(v));
        }
        out.push('\n');
    }
    Ok(out)
}

/// Overwrites `path`.
pub fn write_trace(records: &[TraceRecord], path: &Path) -> Result<()> {
    std::fs::write(path, format_trace(records)?)?;
    Ok(())
}

pub fn parse_trace(text: &str) -> Result<Vec<TraceRecord>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == TRACE_HEADER => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header `{TRACE_HEADER}`"),
            })
        }
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        let bad = |message: String| Error::Parse { line: line_no, message };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(bad(format!("expected 6 fields, found {}", fields.len())));
        }
        let iter = fields[0].parse().map_err(|_| bad(format!("bad iteration `{}`", fields[0])))?;
        let mut vals = [0.0; 5];
        for (v, f) in vals.iter_mut().zip(&fields[1..]) {
            *v = f.parse().map_err(|_| bad(format!("bad number `{f}`")))?;
        }
        out.push(TraceRecord {
            iter,
            eff_grad_evals: vals[0],
            fval: vals[1],
            gnorm: vals[2],
            step: vals[3],
            wall_ms: vals[4],
        });
    }
    Ok(out)
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRecord>> {
    parse_trace(&std::fs::read_to_string(path)?)
}
