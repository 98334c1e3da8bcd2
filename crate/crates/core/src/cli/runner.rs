//! Drivers behind the command-line verbs.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use super::config::{RunConfig, StopMode};
use super::initial::initial_state;
use super::io::{certificate_text, density_grid, read_file, read_state, trace_csv, write_file, write_state};
use crate::discretization::FieldVector;
use crate::energy::EnergyContext;
use crate::gradients::MetricKind;
use crate::optimizer::{solve_ground_state, MomentumKind, SolveOutcome, Status};
use crate::verifier::{certify, Certificate};
use crate::Error;

pub const TRACE_FILE: &str = "trace.csv";
pub const DENSITY_FILE: &str = "density.grid";
pub const STATE_FILE: &str = "state.gpstate";
pub const CERTIFICATE_FILE: &str = "certificate.txt";
pub const STATUS_FILE: &str = "status.txt";
pub const CONFIG_FILE: &str = "config.effective";
pub const COMPARISON_FILE: &str = "comparison.csv";

#[derive(Debug, Clone)]
pub struct RunReport {
    pub outcome: SolveOutcome,
    pub reference: Option<f64>,
    pub certificate: Option<Certificate>,
}

fn status_name(s: Status) -> &'static str {
    match s {
        Status::Converged => "converged",
        Status::MaxIterations => "max-iterations",
        Status::Stagnated => "stagnated",
    }
}

/// Energy of a stored state on the run's mesh.
fn stored_energy(ctx: &EnergyContext, path: &Path) -> crate::Result<f64> {
    let state = read_state(path)?;
    if state.u.len() != 2 * ctx.n_dofs() {
        return Err(Error::StateFormat(format!(
            "{}: reference state has {} unknowns, run has {}",
            path.display(),
            state.u.len(),
            2 * ctx.n_dofs()
        )));
    }
    Ok(ctx.energy(&ctx.space().normalize(&state.u)?))
}

/// Solves one configuration and writes its output files into `out`.
pub fn run(cfg: &RunConfig, out: &Path) -> crate::Result<RunReport> {
    let ctx = cfg.build_context()?;
    let u0 = initial_state(&cfg.initial, &cfg.physics, ctx.space())?;
    let reference = match (cfg.reference_energy, &cfg.reference_state) {
        (Some(e), _) => Some(e),
        (None, Some(path)) => Some(stored_energy(&ctx, path)?),
        (None, None) => None,
    };
    if cfg.stop == StopMode::Reference && reference.is_none() {
        return Err(Error::Config("stop = reference needs a reference energy".into()));
    }
    let outcome = solve_ground_state(&ctx, &cfg.solver_config(reference), &u0)?;
    let certificate = if cfg.certify {
        Some(certify(&ctx, &outcome.u, &cfg.verifier_config())?)
    } else {
        None
    };

    write_file(&out.join(CONFIG_FILE), &cfg.to_text())?;
    write_file(&out.join(TRACE_FILE), &trace_csv(&outcome.trace))?;
    write_file(&out.join(DENSITY_FILE), &density_grid(ctx.space(), &outcome.u))?;
    write_state(&out.join(STATE_FILE), ctx.space(), &outcome.u)?;
    if let Some(c) = &certificate {
        write_file(&out.join(CERTIFICATE_FILE), &certificate_text(c))?;
    }
    let mut status = String::new();
    let _ = writeln!(status, "status = {}", status_name(outcome.status));
    let _ = writeln!(status, "converged = {}", outcome.converged());
    let _ = writeln!(status, "iterations = {}", outcome.iterations());
    let _ = writeln!(status, "energy = {:.16e}", outcome.energy);
    let _ = writeln!(status, "lambda = {:.16e}", outcome.lambda);
    let _ = writeln!(status, "fallbacks = {}", outcome.fallback_count());
    if let Some(e) = reference {
        let _ = writeln!(status, "reference_energy = {e:.16e}");
    }
    write_file(&out.join(STATUS_FILE), &status)?;

    Ok(RunReport {
        outcome,
        reference,
        certificate,
    })
}

/// Settings of the reference solve: PR momentum, `a_u` metric, consecutive stop.
pub fn reference_config(base: &RunConfig) -> RunConfig {
    RunConfig {
        metric: MetricKind::Au,
        momentum: MomentumKind::Pr,
        stop: StopMode::Consecutive,
        stop_tol: Some(1e-13),
        reference_energy: None,
        reference_state: None,
        certify: false,
        output: None,
        ..base.clone()
    }
}

/// Reference state and energy for `base`, reused from `out` when a previous
/// run with the same settings left its state there.
pub fn reference(base: &RunConfig, out: &Path) -> crate::Result<(FieldVector, f64)> {
    let cfg = reference_config(base);
    let state_path = out.join(STATE_FILE);
    let cached = read_file(&out.join(CONFIG_FILE)).ok().is_some_and(|t| t == cfg.to_text()) && state_path.exists();
    if cached {
        let ctx = cfg.build_context()?;
        let state = read_state(&state_path)?;
        if state.u.len() == 2 * ctx.n_dofs() {
            let e = ctx.energy(&state.u);
            return Ok((state.u, e));
        }
    }
    let report = run(&cfg, out)?;
    if !report.outcome.converged() {
        return Err(Error::Config(format!(
            "reference solve did not converge within {} iterations",
            cfg.max_iter
        )));
    }
    Ok((report.outcome.u, report.outcome.energy))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub metric: MetricKind,
    pub momentum: MomentumKind,
    /// First iteration within the tolerance of the reference energy.
    pub iterations: Option<usize>,
    pub energy: f64,
    pub energy_error: f64,
    pub fallbacks: usize,
    pub status: Status,
}

pub fn comparison_csv(rows: &[ComparisonRow]) -> String {
    let mut s = String::from("metric,momentum,iterations,energy,energy_error,fallbacks,status\n");
    for r in rows {
        let it = r.iterations.map(|i| i.to_string()).unwrap_or_else(|| "DNF".into());
        let _ = writeln!(
            s,
            "{},{},{},{:.16e},{:.16e},{},{}",
            r.metric,
            r.momentum,
            it,
            r.energy,
            r.energy_error,
            r.fallbacks,
            status_name(r.status)
        );
    }
    s
}

/// Runs every method against a shared reference energy. Output goes to
/// `out/reference` and `out/<METRIC>-<MOMENTUM>`.
pub fn compare(base: &RunConfig, methods: &[(MetricKind, MomentumKind)], out: &Path) -> crate::Result<Vec<ComparisonRow>> {
    let (_, e_ref) = reference(base, &out.join("reference"))?;
    let tol = base.stop_tol.unwrap_or(1e-9);
    let rows: crate::Result<Vec<ComparisonRow>> = methods
        .par_iter()
        .map(|&(metric, momentum)| {
            let cfg = RunConfig {
                metric,
                momentum,
                stop: StopMode::Reference,
                stop_tol: Some(tol),
                reference_energy: Some(e_ref),
                reference_state: None,
                certify: false,
                output: None,
                ..base.clone()
            };
            let report = run(&cfg, &out.join(format!("{metric}-{momentum}")))?;
            let o = &report.outcome;
            Ok(ComparisonRow {
                metric,
                momentum,
                iterations: o.iterations_to(e_ref, tol),
                energy: o.energy,
                energy_error: o.energy - e_ref,
                fallbacks: o.fallback_count(),
                status: o.status,
            })
        })
        .collect();
    let rows = rows?;
    write_file(&out.join(COMPARISON_FILE), &comparison_csv(&rows))?;
    Ok(rows)
}

/// Certifies a stored state under the physics of `cfg`.
pub fn certify_state(cfg: &RunConfig, state: &Path) -> crate::Result<Certificate> {
    let ctx = cfg.build_context()?;
    let stored = read_state(state)?;
    let mesh = ctx.space().mesh();
    if stored.n != mesh.subdivisions() || stored.half_width != mesh.half_width() {
        return Err(Error::StateFormat(format!(
            "{}: state is for n={} L={}, config has n={} L={}",
            state.display(),
            stored.n,
            stored.half_width,
            mesh.subdivisions(),
            mesh.half_width()
        )));
    }
    let u = ctx.space().normalize(&stored.u)?;
    certify(&ctx, &u, &cfg.verifier_config())
}

/// Parses `AU:PR,H10:HS` or bare momenta (metric defaults to `a_u`).
pub fn parse_methods(list: &str) -> Result<Vec<(MetricKind, MomentumKind)>, String> {
    let mut methods = Vec::new();
    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (metric, momentum) = match item.split_once(':') {
            Some((m, k)) => (m.parse::<MetricKind>()?, k.parse::<MomentumKind>()?),
            None => (MetricKind::Au, item.parse::<MomentumKind>()?),
        };
        if methods.contains(&(metric, momentum)) {
            return Err(format!("method {metric}:{momentum} listed twice"));
        }
        methods.push((metric, momentum));
    }
    if methods.is_empty() {
        return Err("no methods given".into());
    }
    Ok(methods)
}
