//! Command implementations behind the `kahler-lab` binary.
//!
//! Each command writes its structured output to `out`, diagnostics to `err`,
//! and returns the process exit code.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::config::RunConfig;
use crate::error::Error;
use crate::flow::{self, c_omega_estimate, FlowTrace};
use crate::functionals::Reference;
use crate::potential::Potential;
use crate::verification::{format_float, run_suite, Tolerances};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

pub const TRACE_HEADER: &str =
    "t,nu,e1,dirichlet,residual,scal_min,scal_max,futaki,min_Ahat,min_Bhat";

fn load(path: &Path, err: &mut dyn Write) -> Option<RunConfig> {
    match RunConfig::load(path) {
        Ok(c) => Some(c),
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            None
        }
    }
}

fn reference(config: &RunConfig, err: &mut dyn Write) -> Option<Reference> {
    match config.reference() {
        Ok(r) => Some(r),
        Err(e) => {
            let _ = writeln!(err, "error: reference metric rejected: {e}");
            None
        }
    }
}

pub fn cmd_verify(config_path: &Path, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let Some(config) = load(config_path, err) else {
        return EXIT_CONFIG;
    };
    let report = match run_suite(&config.suite_config()) {
        Ok(r) => r,
        Err(e @ (Error::Config(_) | Error::NonAdmissibleReference { .. })) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_CONFIG;
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_FAILURE;
        }
    };
    let text = report.render();
    let _ = out.write_all(text.as_bytes());
    if let Some(path) = &config.output.report {
        if let Err(e) = fs::write(path, &text) {
            let _ = writeln!(err, "error: cannot write {}: {e}", path.display());
            return EXIT_FAILURE;
        }
    }
    if report.passed() {
        EXIT_PASS
    } else {
        EXIT_FAILURE
    }
}

/// Trace as CSV: the fixed header, then one line per record.
pub fn render_trace(trace: &FlowTrace) -> String {
    let mut text = String::from(TRACE_HEADER);
    text.push('\n');
    for record in &trace.records {
        let line: Vec<String> = record.values().iter().map(|&v| format_float(v)).collect();
        text.push_str(&line.join(","));
        text.push('\n');
    }
    text
}

/// Verdicts on a finished trace.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSummary {
    pub c_omega: f64,
    pub max_residual_deviation: f64,
    pub residual_tolerance: f64,
    pub max_nu_increase: f64,
    pub nu_monotone: bool,
    pub min_inequality_margin: f64,
    pub inequality: bool,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl FlowSummary {
    pub fn new(trace: &FlowTrace, c_omega: f64, tolerances: &Tolerances) -> Self {
        let scale = 1.0 + c_omega.abs();
        let max_nu_increase = trace.max_nu_increase();
        let min_inequality_margin = trace.min_inequality_margin(c_omega);
        Self {
            c_omega,
            max_residual_deviation: trace.max_residual_deviation(c_omega),
            residual_tolerance: tolerances.flow_residual * scale,
            max_nu_increase,
            nu_monotone: max_nu_increase <= tolerances.flow_monotonicity,
            min_inequality_margin,
            inequality: min_inequality_margin >= -tolerances.inequality,
            accepted_steps: trace.accepted_steps,
            rejected_steps: trace.rejected_steps,
        }
    }

    pub fn render(&self) -> String {
        let verdict = |ok: bool| if ok { "PASS" } else { "FAIL" };
        let residual_ok = self.max_residual_deviation <= self.residual_tolerance;
        [
            format!("c_omega,{}", format_float(self.c_omega)),
            format!(
                "max_residual_deviation,{}",
                format_float(self.max_residual_deviation)
            ),
            format!(
                "residual_tolerance,{}",
                format_float(self.residual_tolerance)
            ),
            format!("residual_constancy,{}", verdict(residual_ok)),
            format!("max_nu_increase,{}", format_float(self.max_nu_increase)),
            format!("nu_monotone,{}", verdict(self.nu_monotone)),
            format!(
                "min_inequality_margin,{}",
                format_float(self.min_inequality_margin)
            ),
            format!("inequality,{}", verdict(self.inequality)),
            format!("accepted_steps,{}", self.accepted_steps),
            format!("rejected_steps,{}", self.rejected_steps),
        ]
        .join("\n")
            + "\n"
    }
}

/// Runs the flow, writes the trace to `trace_path` and the summary to stdout
/// and to `<trace_path>.summary`.
pub fn cmd_flow(
    config_path: &Path,
    trace_path: &Path,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let Some(config) = load(config_path, err) else {
        return EXIT_CONFIG;
    };
    let Some(reference) = reference(&config, err) else {
        return EXIT_CONFIG;
    };
    let initial = match config.potential(&reference) {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_CONFIG;
        }
    };
    let flow_config = match config.flow_config(initial) {
        Ok(f) => f,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_CONFIG;
        }
    };
    let trace = match flow::run(&reference, &flow_config) {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_FAILURE;
        }
    };
    let c_omega = match c_omega_estimate(&reference) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_FAILURE;
        }
    };
    let summary = FlowSummary::new(&trace, c_omega, &config.tolerances.resolve());
    let summary_text = summary.render();
    let mut summary_path = trace_path.as_os_str().to_owned();
    summary_path.push(".summary");
    for (path, text) in [
        (trace_path, render_trace(&trace)),
        (Path::new(&summary_path), summary_text.clone()),
    ] {
        if let Err(e) = fs::write(path, text) {
            let _ = writeln!(err, "error: cannot write {}: {e}", path.display());
            return EXIT_FAILURE;
        }
    }
    let _ = out.write_all(summary_text.as_bytes());
    if summary.inequality {
        EXIT_PASS
    } else {
        EXIT_FAILURE
    }
}

/// Parses `c0,c1,...` into monomial coefficients.
pub fn parse_coefficients(text: &str) -> Result<Vec<f64>, String> {
    let values: Result<Vec<f64>, _> = text.split(',').map(|s| s.trim().parse::<f64>()).collect();
    match values {
        Ok(v) if !v.is_empty() && v.iter().all(|c| c.is_finite()) => Ok(v),
        Ok(_) => Err(format!("invalid coefficient list `{text}`")),
        Err(e) => Err(format!("invalid coefficient list `{text}`: {e}")),
    }
}

/// Prints every functional at `φ` as `quantity,value` lines.
pub fn cmd_eval(config_path: &Path, phi: &str, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let Some(config) = load(config_path, err) else {
        return EXIT_CONFIG;
    };
    let coefficients = match parse_coefficients(phi) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_CONFIG;
        }
    };
    let Some(reference) = reference(&config, err) else {
        return EXIT_CONFIG;
    };
    let result = reference
        .evaluate(&Potential::monomial(&coefficients))
        .and_then(|e| e.report())
        .and_then(|r| Ok((r, c_omega_estimate(&reference)?)));
    let (report, c_omega) = match result {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_FAILURE;
        }
    };
    let rows = [
        ("j", report.j),
        ("j_second", report.j_second),
        ("nu", report.nu),
        ("e1", report.e1),
        ("dirichlet", report.dirichlet),
        ("residual", report.residual),
        ("c_omega", c_omega),
        ("c0", report.c0),
        ("c1", report.c1),
        ("futaki", report.futaki),
    ];
    let mut text = String::from("quantity,value\n");
    for (name, value) in rows {
        text.push_str(&format!("{name},{}\n", format_float(value)));
    }
    let _ = out.write_all(text.as_bytes());
    EXIT_PASS
}
