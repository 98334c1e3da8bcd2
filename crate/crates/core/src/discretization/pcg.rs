//! Jacobi-preconditioned conjugate gradients.

use thiserror::Error;

use super::SparseOperator;
use crate::linalg::{axpy, dot, norm};

/// Default relative residual tolerance of the linear solves.
pub const DEFAULT_TOL: f64 = 1e-10;

const MAX_RESTARTS: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("conjugate gradients did not converge in {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("operator is not positive definite: curvature {curvature:e} at iteration {iteration}")]
    NegativeCurvature { iteration: usize, curvature: f64 },
    #[error("non-finite value in conjugate gradients at iteration {0}")]
    NonFinite(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    /// Relative residual of the returned solution.
    pub residual: f64,
}

/// Failure of the generic iteration; negative curvature carries the offending direction.
#[derive(Debug, Clone)]
pub(crate) enum PcgFailure {
    /// `x` is the last iterate.
    NotConverged { iterations: usize, residual: f64, x: Vec<f64> },
    NegativeCurvature { iteration: usize, curvature: f64, direction: Vec<f64> },
    NonFinite(usize),
}

impl From<PcgFailure> for SolveError {
    fn from(f: PcgFailure) -> Self {
        match f {
            PcgFailure::NotConverged { iterations, residual, .. } => {
                SolveError::NotConverged { iterations, residual }
            }
            PcgFailure::NegativeCurvature { iteration, curvature, .. } => {
                SolveError::NegativeCurvature { iteration, curvature }
            }
            PcgFailure::NonFinite(k) => SolveError::NonFinite(k),
        }
    }
}

/// Linear constraint `(Mu)·x = 0` restricting the iteration to a tangent space.
pub(crate) struct Tangent<'a> {
    pub u: &'a [f64],
    pub mu: &'a [f64],
}

impl Tangent<'_> {
    /// `v - u (Mu·v) / (u·Mu)`
    fn project(&self, v: &mut [f64]) {
        let c = dot(self.mu, v) / dot(self.u, self.mu);
        axpy(-c, self.u, v);
    }

    /// Transposed projection acting on dual vectors: `r - Mu (u·r) / (u·Mu)`.
    fn project_dual(&self, r: &mut [f64]) {
        let c = dot(self.u, r) / dot(self.u, self.mu);
        axpy(-c, self.mu, r);
    }
}

pub(crate) fn jacobi(diag: &[f64]) -> Vec<f64> {
    diag.iter()
        .map(|&d| if d > 0.0 && d.is_finite() { 1.0 / d } else { 1.0 })
        .collect()
}

/// Generic preconditioned CG for `A x = b`, optionally on a tangent space.
pub(crate) fn pcg(
    apply: &dyn Fn(&[f64], &mut [f64]),
    inv_diag: &[f64],
    tangent: Option<&Tangent<'_>>,
    b: &[f64],
    x0: Vec<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolveStats), PcgFailure> {
    let dim = b.len();
    let mut rhs = b.to_vec();
    if let Some(t) = tangent {
        t.project_dual(&mut rhs);
    }
    let bnorm = norm(&rhs);
    if bnorm == 0.0 {
        return Ok((
            vec![0.0; dim],
            SolveStats {
                iterations: 0,
                residual: 0.0,
            },
        ));
    }
    let mut x = x0;
    if let Some(t) = tangent {
        t.project(&mut x);
    }
    let mut ax = vec![0.0; dim];
    let mut r = vec![0.0; dim];
    let mut z = vec![0.0; dim];
    let mut p = vec![0.0; dim];
    let mut ap = vec![0.0; dim];

    let true_residual = |x: &[f64], ax: &mut [f64], r: &mut [f64]| {
        apply(x, ax);
        for k in 0..dim {
            r[k] = rhs[k] - ax[k];
        }
        if let Some(t) = tangent {
            t.project_dual(r);
        }
        norm(r) / bnorm
    };

    let mut rel = true_residual(&x, &mut ax, &mut r);
    let mut iterations = 0;
    let mut restarts = 0;
    loop {
        // Inner CG sweep from the current true residual.
        let mut rz_old = 0.0;
        let mut first = true;
        while rel > tol {
            if iterations >= max_iter {
                return Err(PcgFailure::NotConverged {
                    iterations,
                    residual: rel,
                    x,
                });
            }
            for k in 0..dim {
                z[k] = inv_diag[k] * r[k];
            }
            if let Some(t) = tangent {
                t.project(&mut z);
            }
            let rz = dot(&r, &z);
            if first {
                p.copy_from_slice(&z);
                first = false;
            } else {
                let beta = rz / rz_old;
                for k in 0..dim {
                    p[k] = z[k] + beta * p[k];
                }
            }
            rz_old = rz;
            apply(&p, &mut ap);
            let curvature = dot(&p, &ap);
            iterations += 1;
            if !curvature.is_finite() || !rz.is_finite() {
                return Err(PcgFailure::NonFinite(iterations));
            }
            if curvature <= 0.0 {
                return Err(PcgFailure::NegativeCurvature {
                    iteration: iterations,
                    curvature: curvature / dot(&p, &p),
                    direction: p.clone(),
                });
            }
            let alpha = rz / curvature;
            axpy(alpha, &p, &mut x);
            if let Some(t) = tangent {
                t.project_dual(&mut ap);
            }
            axpy(-alpha, &ap, &mut r);
            rel = norm(&r) / bnorm;
        }
        let checked = true_residual(&x, &mut ax, &mut r);
        if checked <= tol {
            return Ok((
                x,
                SolveStats {
                    iterations,
                    residual: checked,
                },
            ));
        }
        restarts += 1;
        if restarts > MAX_RESTARTS {
            return Err(PcgFailure::NotConverged {
                iterations,
                residual: checked,
                x,
            });
        }
        rel = checked;
    }
}

/// Solves `A x = b` for symmetric positive definite `A` from a zero start.
pub fn solve_spd(
    a: &SparseOperator,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>, SolveError> {
    solve_spd_from(a, b, vec![0.0; b.len()], tol, max_iter).map(|(x, _)| x)
}

/// Solves `A x = b` starting from `x0` (warm start).
pub fn solve_spd_from(
    a: &SparseOperator,
    b: &[f64],
    x0: Vec<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolveStats), SolveError> {
    assert_eq!(a.dim(), b.len(), "operator and right-hand side differ in size");
    assert_eq!(x0.len(), b.len(), "start vector has wrong size");
    assert!(tol > 0.0, "tolerance must be positive");
    let inv = jacobi(&a.diagonal());
    pcg(&|x, y| a.matvec(x, y), &inv, None, b, x0, tol, max_iter).map_err(SolveError::from)
}
