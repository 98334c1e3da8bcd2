#![allow(dead_code)]

use std::io::Write;
use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rcsg::cli::initial::initial_state;
use rcsg::cli::runner::reference_config;
use rcsg::cli::RunConfig;
use rcsg::discretization::{FeSpace, FieldVector, Mesh, SparseOperator};
use rcsg::energy::{EnergyContext, Potential};
use rcsg::gradients::MetricKind;
use rcsg::optimizer::{solve_ground_state, MomentumKind, SolveOutcome, SolverConfig, StopRule};

/// Comparison runs stop once `E − E_ref` drops below this.
pub const ERROR_TOL: f64 = 1e-9;

/// Writes one uncaptured result line, so it shows up even for passing tests.
pub fn report(criterion: u32, pass: bool, summary: &str) {
    let line = format!(
        "criterion {criterion:>2} {}: {summary}\n",
        if pass { "PASS" } else { "FAIL" }
    );
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random nodal values in `[-1, 1]` for both components.
pub fn random_field(n_dofs: usize, rng: &mut ChaCha8Rng) -> FieldVector {
    FieldVector::from_stacked((0..2 * n_dofs).map(|_| rng.random_range(-1.0..1.0)).collect())
}

pub fn space(half_width: f64, n: usize) -> Arc<FeSpace> {
    Arc::new(FeSpace::new(Mesh::new(half_width, n).expect("valid mesh")))
}

/// `κ = 0`, `Ω = 0` context with the given potential.
pub fn linear_ctx(half_width: f64, n: usize, potential: &Potential) -> EnergyContext {
    EnergyContext::new(space(half_width, n), potential, 0.0, 0.0)
}

/// Dense eigenpairs of `A x = μ M x`, ascending, `M`-orthonormal.
pub struct DenseEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl DenseEigen {
    pub fn vector(&self, j: usize) -> FieldVector {
        FieldVector::from_stacked(self.vectors.column(j).iter().copied().collect())
    }
}

pub fn dense_generalized_eigen(a: &SparseOperator, m: &SparseOperator) -> DenseEigen {
    let n = a.dim();
    let ad = DMatrix::from_row_slice(n, n, &a.to_dense());
    let md = DMatrix::from_row_slice(n, n, &m.to_dense());
    let l = Cholesky::new(md).expect("mass matrix is positive definite").l();
    let la = l.solve_lower_triangular(&ad).expect("triangular solve");
    let mut c = l.solve_lower_triangular(&la.transpose()).expect("triangular solve");
    c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let y = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    let vectors = l.transpose().solve_upper_triangular(&y).expect("triangular solve");
    DenseEigen { values, vectors }
}

/// One solver run inside a [`Study`].
pub struct MethodRun {
    pub metric: MetricKind,
    pub momentum: MomentumKind,
    pub outcome: SolveOutcome,
    /// Iteration cap of the run.
    pub cap: usize,
    /// First iteration with `E − E_ref < ERROR_TOL`.
    pub iterations: Option<usize>,
}

impl MethodRun {
    pub fn label(&self) -> String {
        format!("{}:{}", self.metric, self.momentum)
    }

    pub fn count(&self) -> String {
        match self.iterations {
            Some(k) => k.to_string(),
            None => format!(">{}", self.cap),
        }
    }
}

/// Reference solve plus method runs on one coarse preset.
pub struct Study {
    pub preset: &'static str,
    pub ctx: EnergyContext,
    pub reference: SolveOutcome,
    pub runs: Vec<MethodRun>,
}

impl Study {
    pub fn run(&self, metric: MetricKind, momentum: MomentumKind) -> &MethodRun {
        self.runs
            .iter()
            .find(|r| r.metric == metric && r.momentum == momentum)
            .expect("method was run")
    }
}

const UNCAPPED: usize = 20_000;

/// Runs the reference and every method on `preset`.
///
/// Only the order of iteration counts matters, so a run whose count is
/// compared against a bound `b` is capped at `b`: not reaching the tolerance
/// within `b` iterations already settles the comparison.
pub fn study(preset: &'static str) -> Study {
    let cfg = RunConfig::preset(preset).expect("known preset");
    let ctx = cfg.build_context().expect("valid preset");
    let u0 = initial_state(&cfg.initial, &cfg.physics, ctx.space()).expect("initial state");
    let reference_cfg = reference_config(&cfg).solver_config(None);
    let reference = solve_ground_state(&ctx, &reference_cfg, &u0).expect("reference solve");
    assert!(reference.converged(), "{preset}: reference solve did not converge");
    let e_ref = reference.energy;

    let solve = |metric: MetricKind, momentum: MomentumKind, cap: usize| {
        let config = SolverConfig {
            metric,
            momentum,
            stop: StopRule::Reference {
                energy: e_ref,
                tol: ERROR_TOL,
            },
            max_iter: cap,
            ..SolverConfig::default()
        };
        let outcome = solve_ground_state(&ctx, &config, &u0).expect("solver run");
        let iterations = outcome.iterations_to(e_ref, ERROR_TOL);
        MethodRun {
            metric,
            momentum,
            outcome,
            cap,
            iterations,
        }
    };

    let pr = solve(MetricKind::Au, MomentumKind::Pr, UNCAPPED);
    let hs = solve(MetricKind::Au, MomentumKind::Hs, UNCAPPED);
    let hs_cap = hs.iterations.unwrap_or(UNCAPPED);
    let pr_count = pr.iterations.unwrap_or(UNCAPPED);
    let dy = solve(MetricKind::Au, MomentumKind::Dy, hs_cap);
    let fr = solve(MetricKind::Au, MomentumKind::Fr, hs_cap);
    let zero = solve(MetricKind::Au, MomentumKind::Zero, 2 * pr_count);
    let h10 = solve(MetricKind::H10, MomentumKind::Pr, pr_count);
    Study {
        preset,
        ctx,
        reference,
        runs: vec![pr, hs, dy, fr, zero, h10],
    }
}
