//! Sobolev gradients, Riesz maps and tangent-space projections on the
//! L²-unit sphere.
//!
//! For a metric `X` the Riesz representative `R_X(v)` solves
//! `(R_X(v), w)_X = (v, w)_{L²}`, and the X-orthogonal projection onto the
//! tangent space `{v : (u, v)_{L²} = 0}` is
//! `P v = v − R_X(u) (u, v)_{L²} / (u, R_X(u))_{L²}`.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::discretization::{solve_spd_from, FieldVector, SparseOperator};
use crate::energy::EnergyContext;
use crate::{Error, Result};

/// Smallest admissible `(u, R_X(u))_{L²}` in the projection formula.
pub const PROJECTION_GUARD: f64 = 1e-14;

static GENERATION: AtomicU64 = AtomicU64::new(1);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricKind {
    /// `(∇v, ∇w)_{L²}`
    H10,
    /// The energy-adaptive form `a_u` at the current iterate.
    Au,
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricKind::H10 => "H10",
            MetricKind::Au => "AU",
        })
    }
}

impl FromStr for MetricKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "h10" | "h1" | "h1_0" => Ok(MetricKind::H10),
            "au" | "a_u" => Ok(MetricKind::Au),
            _ => Err(format!("unknown metric '{s}' (expected H10 or AU)")),
        }
    }
}

/// A metric operator together with the point it was built at.
#[derive(Debug, Clone)]
pub struct Metric {
    kind: MetricKind,
    operator: Arc<SparseOperator>,
    generation: u64,
}

impl Metric {
    /// The `H¹₀` metric; independent of the iterate.
    pub fn h10(ctx: &EnergyContext) -> Self {
        Self::from_operator(MetricKind::H10, ctx.operators().h10().clone())
    }

    /// The `a_u` metric linearized at `u`.
    pub fn au(ctx: &EnergyContext, u: &FieldVector) -> Self {
        Self::from_operator(MetricKind::Au, ctx.au_operator(u))
    }

    /// Builds the metric of the given kind at `u`; for `H10` this reuses `previous` when given.
    pub fn at(kind: MetricKind, ctx: &EnergyContext, u: &FieldVector, previous: Option<&Metric>) -> Self {
        match (kind, previous) {
            (MetricKind::H10, Some(m)) if m.kind == MetricKind::H10 => m.clone(),
            (MetricKind::H10, _) => Self::h10(ctx),
            (MetricKind::Au, _) => Self::au(ctx, u),
        }
    }

    fn from_operator(kind: MetricKind, op: SparseOperator) -> Self {
        Self {
            kind,
            operator: Arc::new(op),
            generation: GENERATION.fetch_add(1, Ordering::Relaxed),
        }
    }

    pub fn kind(&self) -> MetricKind {
        self.kind
    }

    pub fn operator(&self) -> &SparseOperator {
        &self.operator
    }

    /// Identifier distinguishing metric objects built at different points.
    pub fn generation(&self) -> u64 {
        self.generation
    }

    /// Coefficients of `(v, ·)_X`.
    pub fn apply(&self, v: &FieldVector) -> Vec<f64> {
        self.operator.apply(v.as_slice())
    }

    pub fn inner(&self, v: &FieldVector, w: &FieldVector) -> f64 {
        self.operator.bilinear(v.as_slice(), w.as_slice())
    }
}

/// Linear-solve settings for Riesz maps.
#[derive(Debug, Clone, Copy)]
pub struct RieszSettings {
    pub tol: f64,
    pub max_iter: usize,
}

impl RieszSettings {
    pub fn new(tol: f64, dim: usize) -> Self {
        Self {
            tol,
            max_iter: 20 * dim.max(500),
        }
    }
}

/// Solves `X z = b` for a dual vector `b`.
pub fn solve_dual(metric: &Metric, b: &[f64], x0: Option<&[f64]>, settings: RieszSettings) -> Result<FieldVector> {
    let start = x0.map_or_else(|| vec![0.0; b.len()], <[f64]>::to_vec);
    let (x, _) = solve_spd_from(metric.operator(), b, start, settings.tol, settings.max_iter)?;
    Ok(FieldVector::from_stacked(x))
}

/// Riesz representative `R_X(v)`: solves `X R = M v`.
pub fn riesz(ctx: &EnergyContext, metric: &Metric, v: &FieldVector, settings: RieszSettings) -> Result<FieldVector> {
    let mv = ctx.space().mass_apply(v.as_slice());
    solve_dual(metric, &mv, None, settings)
}

/// Cached `R_X(u)` and `(u, R_X(u))_{L²}`, valid for one metric object and one exact `u`.
#[derive(Debug, Default, Clone)]
pub struct RieszCache {
    key: Option<(MetricKind, u64, Vec<u64>)>,
    r: Option<FieldVector>,
    ur: f64,
    /// Last solution of each metric kind, used as a warm start.
    warm: [Option<FieldVector>; 2],
}

impl RieszCache {
    pub fn new() -> Self {
        Self::default()
    }

    fn key_of(metric: &Metric, u: &FieldVector) -> (MetricKind, u64, Vec<u64>) {
        (
            metric.kind(),
            metric.generation(),
            u.as_slice().iter().map(|v| v.to_bits()).collect(),
        )
    }

    /// Returns `(R_X(u), (u, R_X(u))_{L²})`, solving only on a key mismatch.
    pub fn get(
        &mut self,
        ctx: &EnergyContext,
        metric: &Metric,
        u: &FieldVector,
        settings: RieszSettings,
    ) -> Result<(&FieldVector, f64)> {
        let key = Self::key_of(metric, u);
        if self.key.as_ref() != Some(&key) || self.r.is_none() {
            let slot = metric.kind() as usize;
            let mu = ctx.space().mass_apply(u.as_slice());
            let warm = self.warm[slot].as_ref().map(FieldVector::as_slice);
            let r = solve_dual(metric, &mu, warm, settings)?;
            let ur = ctx.space().l2_inner(u, &r);
            self.warm[slot] = Some(r.clone());
            self.r = Some(r);
            self.ur = ur;
            self.key = Some(key);
        }
        if !(self.ur > PROJECTION_GUARD) {
            return Err(Error::SingularProjection(self.ur));
        }
        Ok((self.r.as_ref().expect("cache filled above"), self.ur))
    }
}

/// X-orthogonal projection of `v` onto the tangent space at `u`.
pub fn project_tangent(
    ctx: &EnergyContext,
    metric: &Metric,
    u: &FieldVector,
    v: &FieldVector,
    cache: &mut RieszCache,
    settings: RieszSettings,
) -> Result<FieldVector> {
    let uv = ctx.space().l2_inner(u, v);
    let (r, ur) = cache.get(ctx, metric, u, settings)?;
    Ok(v.add_scaled(-uv / ur, r))
}

/// Sobolev gradient `∇_X E(u)`, the X-Riesz representative of `E′(u)`.
///
/// For `a_u` at `u` this is `u` itself. For `H¹₀` one Laplace solve gives
/// `u + K⁻¹((Vm + Rm)u + κ D(u)u)`.
pub fn sobolev_gradient(ctx: &EnergyContext, metric: &Metric, u: &FieldVector, settings: RieszSettings) -> Result<FieldVector> {
    match metric.kind() {
        MetricKind::Au => Ok(u.clone()),
        MetricKind::H10 => {
            let mut load = ctx.eprime(u);
            let ku = metric.apply(u);
            crate::linalg::axpy(-1.0, &ku, &mut load);
            let z = solve_dual(metric, &load, None, settings)?;
            Ok(u.add_scaled(1.0, &z))
        }
    }
}

/// Riemannian Sobolev gradient `P(∇_X E(u))`.
///
/// In the `a_u` metric this is `u − R(u)/(u, R(u))_{L²}` with one solve.
pub fn riemannian_gradient(
    ctx: &EnergyContext,
    metric: &Metric,
    u: &FieldVector,
    cache: &mut RieszCache,
    settings: RieszSettings,
) -> Result<FieldVector> {
    match metric.kind() {
        MetricKind::Au => {
            let (r, ur) = cache.get(ctx, metric, u, settings)?;
            Ok(u.add_scaled(-1.0 / ur, r))
        }
        MetricKind::H10 => {
            let g = sobolev_gradient(ctx, metric, u, settings)?;
            project_tangent(ctx, metric, u, &g, cache, settings)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::Physics;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ctx() -> EnergyContext {
        let physics = Physics {
            gamma_x: 2.0,
            gamma_y: 1.9,
            omega: 1.9,
            kappa: 500.0,
            half_width: 6.0,
        };
        EnergyContext::from_physics(&physics, 16).unwrap()
    }

    fn unit(ctx: &EnergyContext, rng: &mut ChaCha8Rng) -> FieldVector {
        let u = ctx.space().interpolate(|x, y| Complex64::new(x, y) * (-(x * x + y * y) / 2.0).exp());
        let noise: Vec<f64> = (0..u.as_slice().len()).map(|_| rng.random_range(-0.1..0.1)).collect();
        ctx.space()
            .normalize(&u.add_scaled(1.0, &FieldVector::from_stacked(noise)))
            .unwrap()
    }

    #[test]
    fn metric_kind_round_trip() {
        for k in [MetricKind::H10, MetricKind::Au] {
            assert_eq!(k.to_string().parse::<MetricKind>().unwrap(), k);
        }
        assert!("L2".parse::<MetricKind>().is_err());
    }

    #[test]
    fn au_sobolev_gradient_is_identity() {
        let c = ctx();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = unit(&c, &mut rng);
        let m = Metric::au(&c, &u);
        let s = RieszSettings::new(1e-10, c.n_dofs());
        assert_eq!(sobolev_gradient(&c, &m, &u, s).unwrap(), u);
    }

    #[test]
    fn riesz_of_zero_is_zero() {
        let c = ctx();
        let m = Metric::h10(&c);
        let z = FieldVector::zeros(c.n_dofs());
        let r = riesz(&c, &m, &z, RieszSettings::new(1e-10, c.n_dofs())).unwrap();
        assert!(r.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn cache_hits_only_on_exact_key() {
        let c = ctx();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = unit(&c, &mut rng);
        let m = Metric::au(&c, &u);
        let s = RieszSettings::new(1e-10, c.n_dofs());
        let mut cache = RieszCache::new();
        let (r1, _) = cache.get(&c, &m, &u, s).unwrap();
        let r1 = r1.clone();
        let (r2, _) = cache.get(&c, &m, &u, s).unwrap();
        assert_eq!(&r1, r2);
        let m2 = Metric::au(&c, &u);
        assert_ne!(m.generation(), m2.generation());
    }
}
