//! The Gross–Pitaevskii energy
//!
//! ```text
//! E(u) = ½ ∫ |∇u|² + V|u|² − Ω (L₃u) ū + (κ/2)|u|⁴ ,   L₃ = −i(x ∂_y − y ∂_x),
//! ```
//!
//! its derivatives, the Lagrange multiplier and the energy-adaptive form
//! `a_u(v, w) = (∇v, ∇w) + (Vv, w) − Ω(L₃v, w) + κ(|u|²v, w)`.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::discretization::quadrature::{POINTS, WEIGHTS};
use crate::discretization::{
    assemble_operators, FeSpace, FieldVector, Mesh, OperatorSet, ScalarMatrix, SparseOperator,
};

/// Trapping potential `V(x, y) ≥ 0`.
#[derive(Clone)]
pub enum Potential {
    /// `V = ½ (γx² x² + γy² y²)`
    Harmonic { gamma_x: f64, gamma_y: f64 },
    Zero,
    Custom(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

impl Potential {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            Potential::Harmonic { gamma_x, gamma_y } => {
                0.5 * (gamma_x * gamma_x * x * x + gamma_y * gamma_y * y * y)
            }
            Potential::Zero => 0.0,
            Potential::Custom(f) => f(x, y),
        }
    }
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Potential::Harmonic { gamma_x, gamma_y } => f
                .debug_struct("Harmonic")
                .field("gamma_x", gamma_x)
                .field("gamma_y", gamma_y)
                .finish(),
            Potential::Zero => f.write_str("Zero"),
            Potential::Custom(_) => f.write_str("Custom"),
        }
    }
}

/// Physical parameters of a harmonic trap in rotation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Physics {
    pub gamma_x: f64,
    pub gamma_y: f64,
    pub omega: f64,
    pub kappa: f64,
    /// Half-width `L` of the square domain.
    pub half_width: f64,
}

impl Physics {
    pub fn potential(&self) -> Potential {
        Potential::Harmonic {
            gamma_x: self.gamma_x,
            gamma_y: self.gamma_y,
        }
    }

    /// Checks the sign constraints on the parameters.
    pub fn validate(&self) -> Result<(), String> {
        let finite = [self.gamma_x, self.gamma_y, self.omega, self.kappa, self.half_width]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err("physical parameters must be finite".into());
        }
        if self.gamma_x <= 0.0 || self.gamma_y <= 0.0 {
            return Err(format!(
                "trapping frequencies must be positive, got gamma_x={}, gamma_y={}",
                self.gamma_x, self.gamma_y
            ));
        }
        if self.kappa < 0.0 {
            return Err(format!("kappa must be non-negative, got {}", self.kappa));
        }
        if self.half_width <= 0.0 {
            return Err(format!("L must be positive, got {}", self.half_width));
        }
        Ok(())
    }
}

/// Failure of the trapping condition `V − (1+ε)/4 · Ω² r² ≥ 0` for every `ε > 0`.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("largest admissible epsilon is {epsilon:.6e}, attained at ({x:.6}, {y:.6}) where V = {potential:.6e}")]
pub struct TrappingViolation {
    pub epsilon: f64,
    pub x: f64,
    pub y: f64,
    pub potential: f64,
}

/// Returns `sup{ε : V − (1+ε)/4 · Ω² r² ≥ 0}` over all quadrature points and
/// mesh nodes (`+∞` without rotation), or a violation with its witness point.
pub fn check_trapping(potential: &Potential, omega: f64, space: &FeSpace) -> Result<f64, TrappingViolation> {
    let mut best = f64::INFINITY;
    let mut witness = (0.0, 0.0, 0.0);
    let mut visit = |x: f64, y: f64| {
        let v = potential.eval(x, y);
        if !(v >= 0.0) {
            best = f64::NEG_INFINITY;
            witness = (x, y, v);
            return;
        }
        let r2 = x * x + y * y;
        if omega == 0.0 || r2 == 0.0 {
            return;
        }
        let eps = 4.0 * v / (omega * omega * r2) - 1.0;
        if eps < best {
            best = eps;
            witness = (x, y, v);
        }
    };
    for e in space.elements() {
        for &[x, y] in &e.qp {
            visit(x, y);
        }
    }
    for &[x, y] in space.mesh().nodes() {
        visit(x, y);
    }
    if best > 0.0 {
        Ok(best)
    } else {
        Err(TrappingViolation {
            epsilon: best,
            x: witness.0,
            y: witness.1,
            potential: witness.2,
        })
    }
}

/// Immutable evaluation context: the discrete space, the assembled operators
/// and `A₀ = K + Vm + Rm`.
#[derive(Debug)]
pub struct EnergyContext {
    space: Arc<FeSpace>,
    ops: OperatorSet,
    a0: SparseOperator,
    kappa: f64,
    omega: f64,
    /// Position of every scalar slot in the four blocks of `A₀`.
    block_pos: Vec<[usize; 4]>,
}

impl EnergyContext {
    pub fn new(space: Arc<FeSpace>, potential: &Potential, omega: f64, kappa: f64) -> Self {
        let ops = assemble_operators(&space, |x, y| potential.eval(x, y), omega);
        let a0 = ops.a0();
        let block_pos = space.pattern().full_block_positions();
        Self {
            space,
            ops,
            a0,
            kappa,
            omega,
            block_pos,
        }
    }

    /// Builds the mesh and operators for a harmonic trap after validating the
    /// parameters and the trapping condition.
    pub fn from_physics(physics: &Physics, n: usize) -> crate::Result<Self> {
        physics.validate().map_err(crate::Error::Config)?;
        let mesh = Mesh::new(physics.half_width, n).map_err(|e| crate::Error::Config(e.to_string()))?;
        let space = Arc::new(FeSpace::new(mesh));
        let potential = physics.potential();
        check_trapping(&potential, physics.omega, &space)?;
        Ok(Self::new(space, &potential, physics.omega, physics.kappa))
    }

    pub fn space(&self) -> &Arc<FeSpace> {
        &self.space
    }

    pub fn operators(&self) -> &OperatorSet {
        &self.ops
    }

    pub fn a0(&self) -> &SparseOperator {
        &self.a0
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn n_dofs(&self) -> usize {
        self.space.n_dofs()
    }

    /// `uᵀ A₀ u`, evaluated so that multiplying `u` by `i` or `−1` leaves the
    /// result bit-identical.
    pub fn quadratic_form(&self, u: &FieldVector) -> f64 {
        let n = self.n_dofs();
        let (a, b) = (u.re(), u.im());
        let s = &self.ops.kv_scalar;
        let r = &self.ops.rot_scalar;
        let p = s.pattern();
        let (row_ptr, col_idx) = (p.row_ptr(), p.col_idx());
        let (mut sa, mut sb, mut rot) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let (mut ra, mut rb, mut rr) = (0.0, 0.0, 0.0);
            for k in row_ptr[i]..row_ptr[i + 1] {
                let j = col_idx[k];
                ra += s.values()[k] * a[j];
                rb += s.values()[k] * b[j];
                if j > i {
                    rr += r.values()[k] * (a[i] * b[j] - a[j] * b[i]);
                }
            }
            sa += a[i] * ra;
            sb += b[i] * rb;
            rot += rr;
        }
        (sa + sb) + 2.0 * rot
    }

    /// `E(u) = ½ uᵀA₀u + (κ/4) ∫|u|⁴`.
    pub fn energy(&self, u: &FieldVector) -> f64 {
        0.5 * self.quadratic_form(u) + 0.25 * self.kappa * self.space.l4_norm4(u)
    }

    /// `∫ (|u|² v + 2 Re(u v̄) u) φ_i` (with `hessian_term`) or `∫ |u|² v φ_i`, per dof.
    fn density_apply(&self, u: &[f64], v: &[f64], hessian_term: bool) -> Vec<f64> {
        let n = self.n_dofs();
        let mut out = vec![0.0; 2 * n];
        for e in self.space.elements() {
            let uq = self.space.qp_values(u, e);
            let vq = self.space.qp_values(v, e);
            let mut local = [[0.0; 2]; 3];
            for q in 0..6 {
                let [ua, ub] = uq[q];
                let [va, vb] = vq[q];
                let rho = ua * ua + ub * ub;
                let (mut fa, mut fb) = (rho * va, rho * vb);
                if hessian_term {
                    let s = 2.0 * (ua * va + ub * vb);
                    fa += s * ua;
                    fb += s * ub;
                }
                let w = WEIGHTS[q] * e.area;
                for (c, loc) in local.iter_mut().enumerate() {
                    let phi = w * POINTS[q][c];
                    loc[0] += phi * fa;
                    loc[1] += phi * fb;
                }
            }
            for c in 0..3 {
                if let Some(i) = e.dofs[c] {
                    out[i] += local[c][0];
                    out[n + i] += local[c][1];
                }
            }
        }
        out
    }

    /// Coefficients of `⟨E′(u), ·⟩ = A₀u + κ D(u) u`.
    pub fn eprime(&self, u: &FieldVector) -> Vec<f64> {
        let mut g = self.a0.apply(u.as_slice());
        if self.kappa != 0.0 {
            let d = self.density_apply(u.as_slice(), u.as_slice(), false);
            crate::linalg::axpy(self.kappa, &d, &mut g);
        }
        g
    }

    /// `E″(u) v = A₀v + κ D(u) v + 2κ G(u) v`.
    pub fn eprimeprime_apply(&self, u: &FieldVector, v: &FieldVector) -> Vec<f64> {
        let mut h = self.a0.apply(v.as_slice());
        if self.kappa != 0.0 {
            let d = self.density_apply(u.as_slice(), v.as_slice(), true);
            crate::linalg::axpy(self.kappa, &d, &mut h);
        }
        h
    }

    /// `λ = ⟨E′(u), u⟩`.
    pub fn lagrange_lambda(&self, u: &FieldVector) -> f64 {
        u.dot(&self.eprime(u))
    }

    /// Adds `alpha ·` a scalar matrix into the listed blocks of a copy of `A₀`.
    fn a0_plus(&self, terms: &[(&ScalarMatrix, f64, &[usize])]) -> SparseOperator {
        let mut op = self.a0.clone();
        let values = op.values_mut();
        for (m, alpha, blocks) in terms {
            for (s, pos) in self.block_pos.iter().enumerate() {
                let v = alpha * m.values()[s];
                for &blk in *blocks {
                    values[pos[blk]] += v;
                }
            }
        }
        op
    }

    /// `a_u = A₀ + κ D(u)`, symmetric positive definite under the trapping condition.
    pub fn au_operator(&self, u: &FieldVector) -> SparseOperator {
        if self.kappa == 0.0 {
            return self.a0.clone();
        }
        let d = crate::discretization::assemble_density_mass_scalar(&self.space, u);
        self.a0_plus(&[(&d, self.kappa, &[0, 3])])
    }

    /// Assembled `E″(u)`.
    pub fn hessian_operator(&self, u: &FieldVector) -> SparseOperator {
        if self.kappa == 0.0 {
            return self.a0.clone();
        }
        let uu = u.as_slice();
        let space = &self.space;
        let weighted = |f: fn(f64, f64) -> f64| {
            let mut cache: Option<(usize, [[f64; 2]; 6])> = None;
            space.assemble_weighted_mass(|t, e, q| {
                let vals = match cache {
                    Some((ct, v)) if ct == t => v,
                    _ => {
                        let v = space.qp_values(uu, e);
                        cache = Some((t, v));
                        v
                    }
                };
                f(vals[q][0], vals[q][1])
            })
        };
        // D + 2G blocks: re-re 3a² + b², im-im a² + 3b², off-diagonal 2ab.
        let g_aa = weighted(|a, b| 3.0 * a * a + b * b);
        let g_bb = weighted(|a, b| a * a + 3.0 * b * b);
        let g_ab = weighted(|a, b| 2.0 * a * b);
        let k = self.kappa;
        self.a0_plus(&[(&g_aa, k, &[0]), (&g_bb, k, &[3]), (&g_ab, k, &[1, 2])])
    }

    /// Energy along the normalized ray `τ ↦ E((u + τd)/‖u + τd‖)`.
    pub fn line_profile(&self, u: &FieldVector, d: &FieldVector) -> LineProfile {
        let (us, ds) = (u.as_slice(), d.as_slice());
        let q_uu = self.a0.bilinear(us, us);
        let q_ud = self.a0.bilinear(us, ds);
        let q_dd = self.a0.bilinear(ds, ds);
        let m_uu = self.space.l2_inner_raw(us, us);
        let m_ud = self.space.l2_inner_raw(us, ds);
        let m_dd = self.space.l2_inner_raw(ds, ds);
        let mut quartic = [0.0; 5];
        for e in self.space.elements() {
            let uq = self.space.qp_values(us, e);
            let dq = self.space.qp_values(ds, e);
            let mut local = [0.0; 5];
            for q in 0..6 {
                let [ua, ub] = uq[q];
                let [da, db] = dq[q];
                let p0 = ua * ua + ub * ub;
                let p1 = 2.0 * (ua * da + ub * db);
                let p2 = da * da + db * db;
                let w = WEIGHTS[q];
                local[0] += w * p0 * p0;
                local[1] += w * 2.0 * p0 * p1;
                local[2] += w * (p1 * p1 + 2.0 * p0 * p2);
                local[3] += w * 2.0 * p1 * p2;
                local[4] += w * p2 * p2;
            }
            for (acc, l) in quartic.iter_mut().zip(local) {
                *acc += e.area * l;
            }
        }
        LineProfile::from_parts([q_uu, 2.0 * q_ud, q_dd], [m_uu, 2.0 * m_ud, m_dd], quartic, self.kappa)
    }
}

/// Polynomial coefficients of the energy restricted to a normalized ray.
///
/// With `Q`, `S` and `P` the quadratic form, squared norm and quartic term of
/// `u + τd`, `φ(τ) = (½QS + ¼κP)/S²`. The difference `φ(τ) − φ(0)` is kept as
/// `τ(n₁ + n₂τ + n₃τ² + n₄τ³)/S²` with the constant term cancelled
/// symbolically, so step lengths resolve energy changes far below the
/// rounding level of `E` itself.
#[derive(Debug, Clone, Copy)]
pub struct LineProfile {
    quad: [f64; 3],
    mass: [f64; 3],
    quartic: [f64; 5],
    kappa: f64,
    base: f64,
    delta: [f64; 4],
}

impl LineProfile {
    pub(crate) fn from_parts(quad: [f64; 3], mass: [f64; 3], quartic: [f64; 5], kappa: f64) -> Self {
        let [q0, q1, q2] = quad;
        let [s0, s1, s2] = mass;
        let k = 0.25 * kappa;
        let base = (0.5 * q0 * s0 + k * quartic[0]) / (s0 * s0);
        let delta = [
            0.5 * (q0 * s1 + q1 * s0) + k * quartic[1] - base * 2.0 * s0 * s1,
            0.5 * (q0 * s2 + q1 * s1 + q2 * s0) + k * quartic[2] - base * (s1 * s1 + 2.0 * s0 * s2),
            0.5 * (q1 * s2 + q2 * s1) + k * quartic[3] - base * 2.0 * s1 * s2,
            0.5 * q2 * s2 + k * quartic[4] - base * s2 * s2,
        ];
        Self {
            quad,
            mass,
            quartic,
            kappa,
            base,
            delta,
        }
    }

    pub fn eval(&self, tau: f64) -> f64 {
        let poly = |c: &[f64]| c.iter().rev().fold(0.0, |acc, &ck| acc * tau + ck);
        let s2 = poly(&self.mass);
        0.5 * poly(&self.quad) / s2 + 0.25 * self.kappa * poly(&self.quartic) / (s2 * s2)
    }

    /// `φ(τ) − φ(0)`, free of cancellation against `φ(0)`.
    pub fn delta(&self, tau: f64) -> f64 {
        let s = self.norm_sq(tau);
        let n = self.delta.iter().rev().fold(0.0, |acc, &c| acc * tau + c);
        tau * n / (s * s)
    }

    /// `φ(0)`
    pub fn base(&self) -> f64 {
        self.base
    }

    /// Squared L² norm of `u + τd`.
    pub fn norm_sq(&self, tau: f64) -> f64 {
        self.mass[0] + tau * (self.mass[1] + tau * self.mass[2])
    }
}
