use std::fmt::Write as _;
use std::path::Path;

use crate::{Error, MetricsReport, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

pub const CSV_HEADER: &str = "method,env,aer_mean,aer_std,performance,n_eval,config_fp,seed_fp";

/// `%g`-style formatting with 6 significant digits.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let decimals = (5 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn render_report(report: &MetricsReport, format: ReportFormat) -> Result<String> {
    if report.rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut out = String::new();
    let fields = |r: &crate::MetricsRow| {
        [
            r.method.clone(),
            r.env.clone(),
            format_sig6(r.aer_mean),
            format_sig6(r.aer_std),
            format_sig6(r.performance),
            r.n_eval.to_string(),
            r.config_fp.clone(),
            r.seed_fp.clone(),
        ]
    };
    match format {
        ReportFormat::Csv => {
            out.push_str(CSV_HEADER);
            out.push('\n');
            for r in &report.rows {
                out.push_str(&fields(r).join(","));
                out.push('\n');
            }
        }
        ReportFormat::Markdown => {
            let header: Vec<&str> = CSV_HEADER.split(',').collect();
            let _ = writeln!(out, "| {} |", header.join(" | "));
            let _ = writeln!(out, "|{}", "---|".repeat(header.len()));
            for r in &report.rows {
                let _ = writeln!(out, "| {} |", fields(r).join(" | "));
            }
        }
    }
    Ok(out)
}

pub fn emit_report(report: &MetricsReport, format: ReportFormat, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = render_report(report, format)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
