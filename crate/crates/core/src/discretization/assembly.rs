//! Assembly of the operators appearing in the energy and the metrics.

use super::quadrature::{POINTS, WEIGHTS};
use super::{FeSpace, FieldVector, ScalarMatrix, SparseOperator};

/// Real-pair operators of the quadratic part of the energy.
#[derive(Debug, Clone)]
pub struct OperatorSet {
    /// Mass matrix, block diagonal.
    pub m: SparseOperator,
    /// Stiffness matrix, block diagonal.
    pub k: SparseOperator,
    /// Potential-weighted mass, block diagonal.
    pub vm: SparseOperator,
    /// Rotation term `-Ω (L₃ v, w)`, coupling the re and im blocks.
    pub rm: SparseOperator,
    /// `K + Vm` scalar block.
    pub kv_scalar: ScalarMatrix,
    /// Scalar `re ← im` block of `Rm`; the `im ← re` block is its transpose.
    pub rot_scalar: ScalarMatrix,
    /// Scalar stiffness matrix (the `H¹₀` metric block).
    pub k_scalar: ScalarMatrix,
}

/// Assembles `M`, `K`, `Vm` and `Rm` for the potential `V` and angular velocity `Ω`.
pub fn assemble_operators<V>(space: &FeSpace, potential: V, omega: f64) -> OperatorSet
where
    V: Fn(f64, f64) -> f64,
{
    let m_s = space.scalar_mass().clone();
    let k_s = space.assemble_scalar(|e, local| {
        for a in 0..3 {
            for b in 0..3 {
                let (ga, gb) = (e.grads[a], e.grads[b]);
                local[a][b] = e.area * (ga[0] * gb[0] + ga[1] * gb[1]);
            }
        }
    });
    let v_s = space.assemble_weighted_mass(|_, e, q| potential(e.qp[q][0], e.qp[q][1]));

    // ∫ φ_a (x ∂_y φ_b − y ∂_x φ_b), antisymmetrised to remove rounding asymmetry.
    let d_s = space.assemble_scalar(|e, local| {
        for q in 0..6 {
            let [x, y] = e.qp[q];
            let w = WEIGHTS[q] * e.area;
            for a in 0..3 {
                for b in 0..3 {
                    let g = e.grads[b];
                    local[a][b] += w * POINTS[q][a] * (x * g[1] - y * g[0]);
                }
            }
        }
    });
    let d_s = d_s.antisymmetric_part();
    let rot = ScalarMatrix::from_values(
        d_s.pattern().clone(),
        d_s.values().iter().map(|v| -omega * v).collect(),
    );
    let rot_t = ScalarMatrix::from_values(
        d_s.pattern().clone(),
        (0..d_s.values().len())
            .map(|s| rot.values()[d_s.pattern().transpose_slot(s)])
            .collect(),
    );

    let diag = |s: &ScalarMatrix| SparseOperator::from_blocks([[Some(s), None], [None, Some(s)]], true);
    let zero = ScalarMatrix::zeros(m_s.pattern().clone());
    let rm = SparseOperator::from_blocks(
        [[Some(&zero), Some(&rot)], [Some(&rot_t), Some(&zero)]],
        true,
    );
    OperatorSet {
        m: diag(&m_s),
        k: diag(&k_s),
        vm: diag(&v_s),
        rm,
        kv_scalar: k_s.add_scaled(&v_s, 1.0),
        rot_scalar: rot,
        k_scalar: k_s,
    }
}

impl OperatorSet {
    /// `A₀ = K + Vm + Rm` with all four blocks stored.
    pub fn a0(&self) -> SparseOperator {
        let kv = &self.kv_scalar;
        let rot_t = transpose_scalar(&self.rot_scalar);
        SparseOperator::from_blocks(
            [[Some(kv), Some(&self.rot_scalar)], [Some(&rot_t), Some(kv)]],
            true,
        )
    }

    /// The `H¹₀` metric operator `K` (block diagonal).
    pub fn h10(&self) -> &SparseOperator {
        &self.k
    }
}

pub(crate) fn transpose_scalar(m: &ScalarMatrix) -> ScalarMatrix {
    let p = m.pattern();
    ScalarMatrix::from_values(
        p.clone(),
        (0..m.values().len())
            .map(|s| m.values()[p.transpose_slot(s)])
            .collect(),
    )
}

/// Scalar `∫ |u|² φ_a φ_b`.
pub(crate) fn density_mass_scalar(space: &FeSpace, u: &FieldVector) -> ScalarMatrix {
    let u = u.as_slice();
    let mut cache: Option<(usize, [[f64; 2]; 6])> = None;
    space.assemble_weighted_mass(|t, e, q| {
        let vals = match cache {
            Some((ct, v)) if ct == t => v,
            _ => {
                let v = space.qp_values(u, e);
                cache = Some((t, v));
                v
            }
        };
        let [a, b] = vals[q];
        a * a + b * b
    })
}

/// Real-pair operator `(|u|² v, w)_{L²}` (block diagonal).
pub fn assemble_density_mass(space: &FeSpace, u: &FieldVector) -> SparseOperator {
    let d = density_mass_scalar(space, u);
    SparseOperator::from_blocks([[Some(&d), None], [None, Some(&d)]], true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::Mesh;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn space(l: f64, n: usize) -> FeSpace {
        FeSpace::new(Mesh::new(l, n).unwrap())
    }

    fn random_vec(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
        (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    #[test]
    fn no_rotation_gives_zero_operator() {
        let s = space(2.0, 8);
        let ops = assemble_operators(&s, |x, y| x * x + y * y, 0.0);
        assert!(ops.rm.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_potential_scales_mass() {
        let s = space(2.0, 8);
        let ops = assemble_operators(&s, |_, _| 3.5, 1.0);
        let (vm, m) = (ops.vm.values(), ops.m.values());
        let scale = ops.m.max_abs();
        for (a, b) in vm.iter().zip(m) {
            assert!((a - 3.5 * b).abs() <= 1e-12 * 3.5 * scale);
        }
    }

    #[test]
    fn flagged_operators_are_symmetric() {
        let s = space(3.0, 12);
        let ops = assemble_operators(&s, |x, y| 0.5 * (4.0 * x * x + 3.61 * y * y), 1.9);
        for op in [&ops.m, &ops.k, &ops.vm, &ops.rm, &ops.a0()] {
            assert!(op.is_symmetric());
            assert!(op.check_symmetry());
        }
        let u = s.interpolate(|x, y| Complex64::new(x.sin(), y * x));
        assert!(assemble_density_mass(&s, &u).check_symmetry());
    }

    #[test]
    fn rotation_bilinear_form_is_symmetric() {
        let s = space(2.0, 10);
        let ops = assemble_operators(&s, |_, _| 0.0, 1.3);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let v = random_vec(&mut rng, ops.rm.dim());
            let w = random_vec(&mut rng, ops.rm.dim());
            let (a, b) = (ops.rm.bilinear(&v, &w), ops.rm.bilinear(&w, &v));
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300));
        }
    }

    #[test]
    fn rotation_sign_on_vortex() {
        // For u = (x + iy) e^{-r²/2} the angular momentum is +1, so the
        // rotation term contributes -Ω ‖u‖².
        let s = space(5.0, 64);
        let omega = 0.8;
        let ops = assemble_operators(&s, |_, _| 0.0, omega);
        let g = |x: f64, y: f64| (-(x * x + y * y) / 2.0).exp();
        let u = s.interpolate(|x, y| Complex64::new(x, y) * g(x, y));
        let ratio = ops.rm.bilinear(u.as_slice(), u.as_slice()) / s.l2_norm(&u).powi(2);
        assert!((ratio + omega).abs() < 1e-2, "{ratio}");
        let c = u.conj();
        let ratio = ops.rm.bilinear(c.as_slice(), c.as_slice()) / s.l2_norm(&c).powi(2);
        assert!((ratio - omega).abs() < 1e-2, "{ratio}");
    }

    #[test]
    fn mass_and_stiffness_definiteness() {
        let s = space(1.0, 8);
        let ops = assemble_operators(&s, |_, _| 0.0, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let v = random_vec(&mut rng, ops.m.dim());
            assert!(ops.m.bilinear(&v, &v) > 0.0);
            assert!(ops.k.bilinear(&v, &v) >= 0.0);
        }
    }

    #[test]
    fn assembly_is_bit_reproducible() {
        let s = space(3.0, 16);
        let v = |x: f64, y: f64| 0.5 * (x * x + 2.0 * y * y);
        let a = assemble_operators(&s, v, 1.1).a0();
        let b = assemble_operators(&s, v, 1.1).a0();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_field_gives_zero_density_mass() {
        let s = space(1.0, 6);
        let d = assemble_density_mass(&s, &FieldVector::zeros(s.n_dofs()));
        assert!(d.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn density_mass_matches_dense_element_oracle() {
        // |u| ≡ c on the interior of the patch means every fully interior
        // element sees c² · (local mass).
        let s = space(1.0, 8);
        let c: f64 = 0.6;
        let u = s.interpolate(|_, _| Complex64::new(0.0, c));
        let d = density_mass_scalar(&s, &u);
        let m = s.scalar_mass();
        let p = s.pattern();
        for e in s.elements() {
            if !e.dofs.iter().all(|d| d.is_some()) {
                continue;
            }
            // An interior node whose every neighbouring element is interior.
            let i = e.dofs[0].unwrap();
            let node = s.mesh().interior_nodes()[i];
            let [x, y] = s.mesh().nodes()[node];
            if x.abs() < 0.7 && y.abs() < 0.7 {
                let slot = p.slot(i, i).unwrap();
                assert!((d.values()[slot] - c * c * m.values()[slot]).abs() < 1e-15);
            }
        }
    }
}
