//! First- and second-order optimality certificates.
//!
//! A state `u` on the sphere is a quasi-isolated local minimizer when it
//! solves the eigenvalue problem `E′(u) = λ M u` and the Hessian restricted
//! to the tangent space has `λ` as its simple lowest eigenvalue (eigenvector
//! `i·u`), all other eigenvalues lying strictly above `λ`.

use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::discretization::{jacobi, pcg, solve_spd, FieldVector, PcgFailure, SparseOperator, Tangent};
use crate::energy::EnergyContext;
use crate::linalg::{axpy, dot, norm};
use crate::{Error, Result};

/// Largest relative residual at which a stalled inner solve is still used.
const STALL_ACCEPT: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    LocalMinimizer,
    SaddlePoint,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::LocalMinimizer => "local-minimizer",
            Verdict::SaddlePoint => "saddle-point",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifierConfig {
    /// Number of eigenvalues of the projected Hessian.
    pub k: usize,
    /// Absolute separation required between eigenvalues and `λ`.
    pub gap_tol: f64,
    /// Largest admissible eigenvalue-problem residual for a verdict.
    pub residual_tol: f64,
    /// Minimum alignment of the lowest eigenvector with `i·u`.
    pub alignment_tol: f64,
    /// Relative residual of inner linear solves.
    pub linear_tol: f64,
    /// Relative eigen-residual `‖Hx − θMx‖ / ‖Hx‖` at convergence.
    pub eig_tol: f64,
    pub max_outer: usize,
    pub seed: u64,
}

impl Default for VerifierConfig {
    fn default() -> Self {
        Self {
            k: 7,
            gap_tol: 1e-7,
            residual_tol: 1e-6,
            alignment_tol: 0.99,
            linear_tol: 1e-12,
            eig_tol: 1e-9,
            max_outer: 500,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub lambda: f64,
    /// Dual norm of `E′(u) − λMu` induced by `a_u`.
    pub residual_norm: f64,
    /// Lowest eigenvalues of the projected Hessian, ascending.
    pub spectrum: Vec<f64>,
    /// `|(v₁, i·u)_{L²}|` with `v₁` the L²-normalized lowest eigenvector.
    pub alignment: f64,
    pub verdict: Verdict,
}

/// Eigenpairs of the Hessian restricted to the tangent space.
#[derive(Debug, Clone)]
pub struct TangentSpectrum {
    pub values: Vec<f64>,
    /// L²-orthonormal eigenvectors.
    pub vectors: Vec<FieldVector>,
    /// Relative residuals `‖Π(Hx − θMx)‖ / ‖Hx‖`.
    pub residuals: Vec<f64>,
    pub outer_iterations: usize,
}

/// `‖E′(u) − λMu‖` in the dual norm of `a_u`.
pub fn gpevp_residual(ctx: &EnergyContext, u: &FieldVector, lambda: f64, tol: f64) -> Result<f64> {
    let mut r = ctx.eprime(u);
    let mu = ctx.space().mass_apply(u.as_slice());
    axpy(-lambda, &mu, &mut r);
    if r.iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    let au = ctx.au_operator(u);
    let z = solve_spd(&au, &r, tol, 20 * r.len().max(500))?;
    Ok(dot(&r, &z).max(0.0).sqrt())
}

struct Shifted<'a> {
    h: &'a SparseOperator,
    m: &'a SparseOperator,
    u: &'a [f64],
    mu: Vec<f64>,
}

impl Shifted<'_> {
    fn project(&self, v: &mut [f64]) {
        let c = dot(&self.mu, v) / dot(self.u, &self.mu);
        axpy(-c, self.u, v);
    }

    fn project_dual(&self, r: &mut [f64]) {
        let c = dot(self.u, r) / dot(self.u, &self.mu);
        axpy(-c, &self.mu, r);
    }

    fn m_inner(&self, x: &[f64], y: &[f64]) -> f64 {
        self.m.bilinear(x, y)
    }

    fn rayleigh(&self, x: &[f64]) -> f64 {
        self.h.bilinear(x, x) / self.m.bilinear(x, x)
    }

    /// `H − σM` and its Jacobi preconditioner.
    fn shifted(&self, sigma: f64) -> (SparseOperator, Vec<f64>) {
        let shifted = self.h.add_scaled(self.m, -sigma);
        let inv = jacobi(&shifted.diagonal().iter().map(|d| d.abs()).collect::<Vec<_>>());
        (shifted, inv)
    }

    /// Solves `Π (H − σM) Π y = Πᵀ M x` on the tangent space.
    fn solve(
        &self,
        system: &(SparseOperator, Vec<f64>),
        x: &[f64],
        y0: Vec<f64>,
        tol: f64,
    ) -> std::result::Result<Vec<f64>, PcgFailure> {
        let dim = x.len();
        let (shifted, inv) = system;
        let b = self.m.apply(x);
        let t = Tangent { u: self.u, mu: &self.mu };
        pcg(&|v, out| shifted.matvec(v, out), inv, Some(&t), &b, y0, tol, 40 * dim.max(500)).map(|(y, _)| y)
    }

    /// M-orthonormalizes the columns in place; replaces dependent columns.
    fn orthonormalize(&self, cols: &mut [Vec<f64>], rng: &mut ChaCha8Rng) {
        for j in 0..cols.len() {
            for attempt in 0..4 {
                let before = self.m_inner(&cols[j], &cols[j]).sqrt();
                for _ in 0..2 {
                    for i in 0..j {
                        let c = self.m_inner(&cols[i], &cols[j]);
                        let (head, tail) = cols.split_at_mut(j);
                        axpy(-c, &head[i], &mut tail[0]);
                    }
                    self.project(&mut cols[j]);
                }
                let after = self.m_inner(&cols[j], &cols[j]).sqrt();
                if after > 1e-8 * before && after > 0.0 {
                    let s = 1.0 / after;
                    cols[j].iter_mut().for_each(|v| *v *= s);
                    break;
                }
                assert!(attempt < 3, "could not extend the search block");
                cols[j] = random_tangent(self, rng);
            }
        }
    }
}

fn random_tangent(op: &Shifted<'_>, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut v: Vec<f64> = (0..op.u.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    op.project(&mut v);
    v
}

/// Rayleigh–Ritz on M-orthonormal columns: returns ascending Ritz values and vectors.
fn rayleigh_ritz(op: &Shifted<'_>, cols: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let b = cols.len();
    let hcols: Vec<Vec<f64>> = cols.iter().map(|c| op.h.apply(c)).collect();
    let mut a = DMatrix::<f64>::zeros(b, b);
    for i in 0..b {
        for j in 0..=i {
            let v = 0.5 * (dot(&cols[i], &hcols[j]) + dot(&cols[j], &hcols[i]));
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    let eig = SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..b).collect();
    order.sort_by(|&p, &q| eig.eigenvalues[p].total_cmp(&eig.eigenvalues[q]));
    let dim = cols[0].len();
    let mut values = Vec::with_capacity(b);
    let mut vectors = Vec::with_capacity(b);
    for &c in &order {
        values.push(eig.eigenvalues[c]);
        let mut x = vec![0.0; dim];
        for (i, col) in cols.iter().enumerate() {
            axpy(eig.eigenvectors[(i, c)], col, &mut x);
        }
        vectors.push(x);
    }
    (values, vectors)
}

/// The `k` lowest eigenpairs of `⟨E″(u)v, w⟩ = μ (v, w)_{L²}` over tangent `v, w`.
///
/// Shift-and-invert block subspace iteration (block size `k + 2`) with the
/// shift just below `λ`; every solve runs on the tangent space. When an inner
/// solve meets negative curvature, or a Ritz value falls below the shift, the
/// shift is lowered and the iteration continues.
pub fn tangent_hessian_spectrum(
    ctx: &EnergyContext,
    u: &FieldVector,
    k: usize,
    cfg: &VerifierConfig,
) -> Result<TangentSpectrum> {
    assert!((1..=10).contains(&k), "k must lie in 1..=10");
    let h = ctx.hessian_operator(u);
    let m = &ctx.operators().m;
    let us = u.as_slice();
    let op = Shifted {
        h: &h,
        m,
        u: us,
        mu: m.apply(us),
    };
    let lambda = ctx.lagrange_lambda(u);
    let margin = 1e-3 * lambda.abs().max(1.0);
    let mut sigma = lambda - margin;

    let block = (k + 2).min(2 * u.len() - 1);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(block);
    cols.push(u.times_i().into_vec());
    while cols.len() < block {
        cols.push(random_tangent(&op, &mut rng));
    }
    op.orthonormalize(&mut cols, &mut rng);
    let (mut theta, mut x) = rayleigh_ritz(&op, &cols);

    let mut residuals = vec![f64::INFINITY; block];
    let mut system: Option<(f64, (SparseOperator, Vec<f64>))> = None;
    for outer in 1..=cfg.max_outer {
        if system.as_ref().is_none_or(|(s, _)| *s != sigma) {
            system = Some((sigma, op.shifted(sigma)));
        }
        let shifted = &system.as_ref().expect("set above").1;
        let mut next = Vec::with_capacity(block);
        let mut lowered = false;
        for j in 0..block {
            let gap = theta[j] - sigma;
            let y0 = if gap.abs() > 1e-14 * sigma.abs().max(1.0) {
                x[j].iter().map(|v| v / gap).collect()
            } else {
                vec![0.0; x[j].len()]
            };
            match op.solve(shifted, &x[j], y0, cfg.linear_tol) {
                Ok(y) => next.push(y),
                Err(PcgFailure::NegativeCurvature { direction, .. }) => {
                    let rho = op.rayleigh(&direction);
                    sigma = rho.min(sigma) - margin;
                    lowered = true;
                    break;
                }
                // A solve stuck at the rounding floor is still a good subspace step.
                Err(PcgFailure::NotConverged { residual, x: y, .. }) if residual <= STALL_ACCEPT => next.push(y),
                Err(PcgFailure::NotConverged { iterations, residual, .. }) => {
                    return Err(Error::Eigensolver(format!(
                        "inner solve stalled after {iterations} iterations (residual {residual:e})"
                    )))
                }
                Err(PcgFailure::NonFinite(it)) => {
                    return Err(Error::Eigensolver(format!("non-finite inner solve at iteration {it}")))
                }
            }
        }
        if lowered {
            continue;
        }
        op.orthonormalize(&mut next, &mut rng);
        let (t, v) = rayleigh_ritz(&op, &next);
        theta = t;
        x = v;
        if theta[0] < sigma {
            sigma = theta[0] - margin;
            continue;
        }
        for j in 0..block {
            let hx = h.apply(&x[j]);
            let mut r = hx.clone();
            axpy(-theta[j], &m.apply(&x[j]), &mut r);
            op.project_dual(&mut r);
            residuals[j] = norm(&r) / norm(&hx);
        }
        if residuals[..k].iter().all(|&r| r <= cfg.eig_tol) {
            return Ok(TangentSpectrum {
                values: theta[..k].to_vec(),
                vectors: x[..k].iter().cloned().map(FieldVector::from_stacked).collect(),
                residuals: residuals[..k].to_vec(),
                outer_iterations: outer,
            });
        }
    }
    Err(Error::Eigensolver(format!(
        "no convergence in {} outer iterations; residuals {:?}",
        cfg.max_outer,
        &residuals[..k]
    )))
}

/// Evaluates the optimality conditions at `u` and classifies the state.
pub fn certify(ctx: &EnergyContext, u: &FieldVector, cfg: &VerifierConfig) -> Result<Certificate> {
    let u = ctx.space().normalize(u)?;
    let lambda = ctx.lagrange_lambda(&u);
    let residual_norm = gpevp_residual(ctx, &u, lambda, cfg.linear_tol)?;
    let (spectrum, alignment) = match tangent_hessian_spectrum(ctx, &u, cfg.k, cfg) {
        Ok(s) => {
            let iu = u.times_i();
            let alignment = ctx.space().l2_inner(&s.vectors[0], &iu).abs();
            (s.values, alignment)
        }
        Err(Error::Eigensolver(_)) => (Vec::new(), 0.0),
        Err(e) => return Err(e),
    };
    let verdict = classify(lambda, residual_norm, &spectrum, alignment, cfg);
    Ok(Certificate {
        lambda,
        residual_norm,
        spectrum,
        alignment,
        verdict,
    })
}

/// Verdict from the certificate data.
pub fn classify(lambda: f64, residual: f64, spectrum: &[f64], alignment: f64, cfg: &VerifierConfig) -> Verdict {
    if !(residual <= cfg.residual_tol) || spectrum.len() < 2 {
        return Verdict::Inconclusive;
    }
    let (l1, l2) = (spectrum[0], spectrum[1]);
    if l1 < lambda - cfg.gap_tol || alignment < cfg.alignment_tol {
        Verdict::SaddlePoint
    } else if (l1 - lambda).abs() <= cfg.gap_tol && l2 > lambda + cfg.gap_tol {
        Verdict::LocalMinimizer
    } else {
        Verdict::Inconclusive
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification_rules() {
        let cfg = VerifierConfig::default();
        let v = |l1: f64, l2: f64, a: f64, r: f64| classify(10.0, r, &[l1, l2], a, &cfg);
        assert_eq!(v(10.0, 10.1, 1.0, 1e-8), Verdict::LocalMinimizer);
        assert_eq!(v(9.0, 10.0, 1.0, 1e-8), Verdict::SaddlePoint);
        assert_eq!(v(10.0, 10.1, 0.5, 1e-8), Verdict::SaddlePoint);
        assert_eq!(v(10.0, 10.0, 1.0, 1e-8), Verdict::Inconclusive);
        assert_eq!(v(10.0, 10.1, 1.0, 1e-3), Verdict::Inconclusive);
        assert_eq!(classify(10.0, 0.0, &[10.0], 1.0, &cfg), Verdict::Inconclusive);
    }

    #[test]
    fn verdict_names() {
        assert_eq!(Verdict::LocalMinimizer.to_string(), "local-minimizer");
        assert_eq!(Verdict::SaddlePoint.to_string(), "saddle-point");
    }
}
