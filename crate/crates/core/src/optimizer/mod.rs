//! Riemannian conjugate Sobolev-gradient iteration on the L²-unit sphere:
//!
//! ```text
//! dⁿ   = −P(∇_X E(uⁿ)) + βⁿ P(dⁿ⁻¹)
//! uⁿ⁺¹ = (uⁿ + τₙ dⁿ) / ‖uⁿ + τₙ dⁿ‖_{L²}
//! ```
//!
//! with `P` the X-orthogonal projection at `uⁿ` and `τₙ` from a golden-section
//! search on `[tau_min, tau_max]`. Momentum steps may extend the bracket past
//! `tau_max` (see [`SolverConfig::expand_bracket`]); gradient steps never do.

mod line_search;
mod momentum;

pub use line_search::{golden_section, line_search_expanding, line_search_golden, GoldenResult, StepLength, MAX_DOUBLINGS};
pub use momentum::{momentum_beta, Beta, MomentumInputs, MomentumKind};

use crate::discretization::{FeSpace, FieldVector};
use crate::energy::EnergyContext;
use crate::gradients::{riemannian_gradient, Metric, MetricKind, RieszCache, RieszSettings};
use crate::{Error, Result};

/// When to stop iterating.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    /// `E(uⁿ) − E(uⁿ⁺¹) < tol`
    Consecutive { tol: f64 },
    /// `E(uⁿ) − E_ref < tol`
    Reference { energy: f64, tol: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub metric: MetricKind,
    pub momentum: MomentumKind,
    pub tau_min: f64,
    pub tau_max: f64,
    /// Let steps with `β ≠ 0` double the bracket while the optimum sits at
    /// its upper end. Steps with `β = 0` always search `[tau_min, tau_max]`.
    pub expand_bracket: bool,
    pub golden_tol: f64,
    pub stop: StopRule,
    /// Optional stop once `‖P(∇_X E)‖_X` falls below this value.
    pub grad_tol: Option<f64>,
    pub max_iter: usize,
    /// Relative residual of the Riesz solves.
    pub linear_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            metric: MetricKind::Au,
            momentum: MomentumKind::Pr,
            tau_min: 0.001,
            tau_max: 2.0,
            expand_bracket: true,
            golden_tol: 1e-10,
            stop: StopRule::Consecutive { tol: 1e-13 },
            grad_tol: None,
            max_iter: 20_000,
            linear_tol: crate::discretization::DEFAULT_TOL,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if !(self.tau_min > 0.0 && self.tau_min < self.tau_max && self.tau_max.is_finite()) {
            return Err(format!(
                "need 0 < tau_min < tau_max, got tau_min={}, tau_max={}",
                self.tau_min, self.tau_max
            ));
        }
        let tol = match self.stop {
            StopRule::Consecutive { tol } => tol,
            StopRule::Reference { tol, .. } => tol,
        };
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(tol) || !positive(self.golden_tol) || !positive(self.linear_tol) {
            return Err("tolerances must be positive".into());
        }
        if let Some(g) = self.grad_tol {
            if !positive(g) {
                return Err("grad_tol must be positive".into());
            }
        }
        if self.max_iter == 0 {
            return Err("max_iter must be at least 1".into());
        }
        Ok(())
    }

    pub fn reference_energy(&self) -> Option<f64> {
        match self.stop {
            StopRule::Reference { energy, .. } => Some(energy),
            StopRule::Consecutive { .. } => None,
        }
    }
}

/// One row of the iteration trace. Row `k ≥ 1` describes the step from
/// `u^{k−1}` to `u^k`; row 0 holds the initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub energy: f64,
    pub energy_error: Option<f64>,
    pub tau: f64,
    pub beta: f64,
    /// `‖P(∇_X E(u^k))‖_X` at the new iterate.
    pub grad_norm: f64,
    /// The step defaulted to `β = 0`.
    pub fallback: bool,
    /// The step length sat at an end of the search bracket.
    pub bracket_boundary: bool,
    /// `⟨E′(u^{k−1}), d^{k−1}⟩ = a_{u}(u, d)` for the direction actually taken.
    pub descent: f64,
    /// `⟨E′(u^{k−1}), d⟩` for the momentum direction, before any fallback
    /// (absent on the first step).
    pub momentum_descent: Option<f64>,
    /// `(−1 + β (d^{k−2}, u^{k−1})_{L²}) ‖P(∇E(u^{k−1}))‖²_X` for the momentum direction.
    pub closed_form_descent: Option<f64>,
    /// The step that produced `d^{k−2}` ended at an interior line-search optimum.
    pub previous_step_interior: bool,
    /// Momentum scalars used for `β` (absent on the first step).
    pub momentum: Option<MomentumInputs>,
    /// `X(P(∇E(u^k)), d^{k−1} − (d^{k−1}, u^k) u^k)` at the new iterate.
    pub orthogonality: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    MaxIterations,
    /// Even a gradient step could not lower the energy.
    Stagnated,
}

#[derive(Debug, Clone)]
struct Previous {
    d: FieldVector,
    g: FieldVector,
    g_norm_sq: f64,
    descent: f64,
    interior: bool,
}

/// Iteration bundle at the current iterate.
#[derive(Debug)]
pub struct SolverState {
    u: FieldVector,
    energy: f64,
    eprime: Vec<f64>,
    metric: Metric,
    cache: RieszCache,
    g: FieldVector,
    xg: Vec<f64>,
    g_norm_sq: f64,
    prev: Option<Previous>,
    iter: usize,
    settings: RieszSettings,
}

impl SolverState {
    /// Normalizes `u0` and evaluates everything the first step needs.
    pub fn new(ctx: &EnergyContext, config: &SolverConfig, u0: &FieldVector) -> Result<Self> {
        let u = ctx.space().normalize(u0)?;
        let settings = RieszSettings::new(config.linear_tol, 2 * ctx.n_dofs());
        let mut state = Self {
            energy: 0.0,
            eprime: Vec::new(),
            metric: Metric::at(config.metric, ctx, &u, None),
            cache: RieszCache::new(),
            g: FieldVector::zeros(0),
            xg: Vec::new(),
            g_norm_sq: 0.0,
            prev: None,
            iter: 0,
            settings,
            u,
        };
        state.refresh(ctx, config.metric)?;
        Ok(state)
    }

    fn refresh(&mut self, ctx: &EnergyContext, kind: MetricKind) -> Result<()> {
        self.metric = Metric::at(kind, ctx, &self.u, Some(&self.metric));
        self.energy = ctx.energy(&self.u);
        self.eprime = ctx.eprime(&self.u);
        self.g = riemannian_gradient(ctx, &self.metric, &self.u, &mut self.cache, self.settings)?;
        self.xg = self.metric.apply(&self.g);
        self.g_norm_sq = self.g.dot(&self.xg);
        Ok(())
    }

    pub fn u(&self) -> &FieldVector {
        &self.u
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    /// Riemannian gradient at the current iterate.
    pub fn gradient(&self) -> &FieldVector {
        &self.g
    }

    pub fn gradient_norm(&self) -> f64 {
        self.g_norm_sq.max(0.0).sqrt()
    }

    pub fn iteration(&self) -> usize {
        self.iter
    }

    /// `d⁰ = −P(∇_X E(u⁰))`.
    pub fn initial_direction(&self) -> FieldVector {
        self.g.scaled(-1.0)
    }

    /// Momentum scalars at the current iterate; `None` before the first step.
    pub fn momentum_inputs(&self) -> Option<MomentumInputs> {
        self.prev.as_ref().map(|p| MomentumInputs {
            grad_norm_sq: self.g_norm_sq,
            grad_dot_prev_dir: p.d.dot(&self.xg),
            prev_descent: p.descent,
            prev_grad_norm_sq: p.g_norm_sq,
            grad_dot_prev_grad: p.g.dot(&self.xg),
        })
    }

    /// `dⁿ = −P(∇E(uⁿ)) + β P(dⁿ⁻¹)`; equals the negative gradient for `β = 0`.
    pub fn search_direction(&mut self, ctx: &EnergyContext, beta: f64) -> Result<FieldVector> {
        let mut d = self.g.scaled(-1.0);
        if beta != 0.0 {
            if let Some(p) = &self.prev {
                let ud = ctx.space().l2_inner(&self.u, &p.d);
                let (r, ur) = self.cache.get(ctx, &self.metric, &self.u, self.settings)?;
                let transported = p.d.add_scaled(-ud / ur, r);
                d = d.add_scaled(beta, &transported);
            }
        }
        Ok(d)
    }

    /// Performs one iteration. Returns `None` on stagnation.
    pub fn step(&mut self, ctx: &EnergyContext, config: &SolverConfig) -> Result<Option<IterationRecord>> {
        let inputs = self.momentum_inputs();
        let (mut beta, mut fallback) = match &inputs {
            Some(s) => {
                let b = momentum_beta(config.momentum, s);
                (b.value, b.degenerate)
            }
            None => (0.0, false),
        };
        let closed_form = |beta: f64, state: &SolverState| {
            state.prev.as_ref().map(|p| {
                let du = ctx.space().l2_inner(&p.d, &state.u);
                (-1.0 + beta * du) * state.g_norm_sq
            })
        };

        let mut d = self.search_direction(ctx, beta)?;
        let mut descent = d.dot(&self.eprime);
        let momentum_descent = inputs.is_some().then_some(descent);
        let closed_form_descent = closed_form(beta, self);
        if beta != 0.0 && !(descent < 0.0) {
            fallback = true;
            beta = 0.0;
            d = self.g.scaled(-1.0);
            descent = d.dot(&self.eprime);
        }

        let (tau, boundary, u_new) = loop {
            let ls = if beta != 0.0 && config.expand_bracket {
                line_search_expanding(ctx, &self.u, &d, config.tau_min, config.tau_max, config.golden_tol)
            } else {
                line_search_golden(ctx, &self.u, &d, config.tau_min, config.tau_max, config.golden_tol)
            };
            if !ls.no_decrease {
                let u_new = retract(ctx.space(), &self.u, &d, ls.tau)?;
                if ctx.energy(&u_new) < self.energy {
                    break (ls.tau, ls.at_boundary, u_new);
                }
            }
            if beta == 0.0 {
                return Ok(None);
            }
            fallback = true;
            beta = 0.0;
            d = self.g.scaled(-1.0);
            descent = d.dot(&self.eprime);
        };

        let previous_step_interior = self.prev.as_ref().is_some_and(|p| p.interior);
        let prev = Previous {
            d: d.clone(),
            g: std::mem::replace(&mut self.g, FieldVector::zeros(0)),
            g_norm_sq: self.g_norm_sq,
            descent,
            interior: !boundary && !fallback,
        };
        self.u = u_new;
        self.refresh(ctx, config.metric)?;
        self.iter += 1;

        let ud = ctx.space().l2_inner(&prev.d, &self.u);
        let orthogonality = prev.d.dot(&self.xg) - ud * self.u.dot(&self.xg);
        self.prev = Some(prev);

        Ok(Some(IterationRecord {
            iter: self.iter,
            energy: self.energy,
            energy_error: config.reference_energy().map(|e| self.energy - e),
            tau,
            beta,
            grad_norm: self.gradient_norm(),
            fallback,
            bracket_boundary: boundary,
            descent,
            momentum_descent,
            closed_form_descent,
            previous_step_interior,
            momentum: inputs,
            orthogonality,
        }))
    }

    fn initial_record(&self, config: &SolverConfig) -> IterationRecord {
        IterationRecord {
            iter: 0,
            energy: self.energy,
            energy_error: config.reference_energy().map(|e| self.energy - e),
            tau: 0.0,
            beta: 0.0,
            grad_norm: self.gradient_norm(),
            fallback: false,
            bracket_boundary: false,
            descent: 0.0,
            momentum_descent: None,
            closed_form_descent: None,
            previous_step_interior: false,
            momentum: None,
            orthogonality: 0.0,
        }
    }

    pub fn into_u(self) -> FieldVector {
        self.u
    }
}

/// `(u + τd) / ‖u + τd‖_{L²}`.
pub fn retract(space: &FeSpace, u: &FieldVector, d: &FieldVector, tau: f64) -> Result<FieldVector> {
    let w = u.add_scaled(tau, d);
    let nrm = space.l2_norm(&w);
    if !(nrm > 0.0 && nrm.is_finite()) {
        return Err(Error::DegenerateRetraction(nrm));
    }
    Ok(w.scaled(1.0 / nrm))
}

/// Result of a full solver run.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub u: FieldVector,
    pub energy: f64,
    pub lambda: f64,
    pub status: Status,
    pub trace: Vec<IterationRecord>,
    pub stop: StopRule,
}

impl SolveOutcome {
    pub fn iterations(&self) -> usize {
        self.trace.len() - 1
    }

    /// Whether the run met its stop rule. Stagnation counts as convergence for
    /// the consecutive-energy rule, where it means the energy has reached
    /// rounding level.
    pub fn converged(&self) -> bool {
        match self.status {
            Status::Converged => true,
            Status::MaxIterations => false,
            Status::Stagnated => matches!(self.stop, StopRule::Consecutive { .. }),
        }
    }

    /// Number of steps that defaulted to `β = 0`.
    pub fn fallback_count(&self) -> usize {
        self.trace.iter().filter(|r| r.fallback).count()
    }

    /// First iteration with `E − E_ref < tol`.
    pub fn iterations_to(&self, reference: f64, tol: f64) -> Option<usize> {
        self.trace
            .iter()
            .find(|r| r.energy - reference < tol)
            .map(|r| r.iter)
    }
}

/// Runs the iteration from `u0` until the stop rule or `max_iter`.
pub fn solve_ground_state(ctx: &EnergyContext, config: &SolverConfig, u0: &FieldVector) -> Result<SolveOutcome> {
    config.validate().map_err(Error::Config)?;
    let mut state = SolverState::new(ctx, config, u0)?;
    let mut trace = vec![state.initial_record(config)];

    let grad_done = |s: &SolverState| config.grad_tol.is_some_and(|t| s.gradient_norm() < t) || s.g_norm_sq == 0.0;
    let mut status = match config.stop {
        StopRule::Reference { energy, tol } if state.energy - energy < tol => Some(Status::Converged),
        _ if grad_done(&state) => Some(Status::Converged),
        _ => None,
    };
    while status.is_none() {
        if state.iter >= config.max_iter {
            status = Some(Status::MaxIterations);
            break;
        }
        let before = state.energy;
        match state.step(ctx, config)? {
            None => status = Some(Status::Stagnated),
            Some(rec) => {
                let done = match config.stop {
                    StopRule::Consecutive { tol } => before - rec.energy < tol,
                    StopRule::Reference { energy, tol } => rec.energy - energy < tol,
                };
                trace.push(rec);
                if done || grad_done(&state) {
                    status = Some(Status::Converged);
                }
            }
        }
    }
    let lambda = ctx.lagrange_lambda(state.u());
    Ok(SolveOutcome {
        energy: state.energy,
        lambda,
        status: status.expect("loop exits with a status"),
        trace,
        stop: config.stop,
        u: state.into_u(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{Physics, Potential};
    use num_complex::Complex64;
    use std::sync::Arc;

    fn linear_ctx(n: usize) -> EnergyContext {
        let space = Arc::new(FeSpace::new(crate::discretization::Mesh::new(1.0, n).unwrap()));
        EnergyContext::new(space, &Potential::Zero, 0.0, 0.0)
    }

    #[test]
    fn retraction_is_normalized_and_pythagorean() {
        let ctx = linear_ctx(8);
        let s = ctx.space();
        let u = s.normalize(&s.interpolate(|x, y| Complex64::new((1.0 - x * x) * (1.0 - y * y), 0.0))).unwrap();
        let v = s.interpolate(|x, _| Complex64::new(x, 0.5));
        let d = v.add_scaled(-s.l2_inner(&u, &v), &u);
        for tau in [0.0, 0.3, 1.9] {
            let r = retract(s, &u, &d, tau).unwrap();
            assert!((s.l2_norm(&r) - 1.0).abs() < 1e-12);
            let w = u.add_scaled(tau, &d);
            let lhs = s.l2_norm(&w).powi(2);
            let rhs = 1.0 + tau * tau * s.l2_norm(&d).powi(2);
            assert!((lhs - rhs).abs() < 1e-12);
        }
        let r0 = retract(s, &u, &d, 0.0).unwrap();
        assert!(r0.add_scaled(-1.0, &u).as_slice().iter().all(|x| x.abs() < 1e-15));
        assert!(retract(s, &FieldVector::zeros(u.len()), &FieldVector::zeros(u.len()), 1.0).is_err());
    }

    #[test]
    fn energy_decreases_on_small_problem() {
        let physics = Physics {
            gamma_x: 2.0,
            gamma_y: 1.9,
            omega: 1.9,
            kappa: 500.0,
            half_width: 6.0,
        };
        let ctx = EnergyContext::from_physics(&physics, 16).unwrap();
        let u0 = ctx.space().interpolate(|x, y| Complex64::new(x, y) * (-(x * x + y * y) / 2.0).exp());
        for momentum in MomentumKind::ALL {
            let cfg = SolverConfig {
                momentum,
                max_iter: 30,
                ..SolverConfig::default()
            };
            let out = solve_ground_state(&ctx, &cfg, &u0).unwrap();
            for w in out.trace.windows(2) {
                assert!(w[1].energy < w[0].energy);
            }
            if momentum == MomentumKind::Zero {
                assert_eq!(out.fallback_count(), 0);
            }
        }
    }

    #[test]
    fn invalid_config_rejected() {
        let cfg = SolverConfig {
            tau_min: 3.0,
            ..SolverConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
