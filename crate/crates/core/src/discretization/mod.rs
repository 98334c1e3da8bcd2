//! P1 finite elements on `[-L, L]²` with homogeneous Dirichlet boundary.
//!
//! Complex fields are carried as real pairs; every operator acts on the
//! stacked vector `[re; im]` of length `2N`, `N` being the number of interior
//! nodes.

mod assembly;
mod field;
mod mesh;
mod pcg;
pub mod quadrature;
mod sparse;

use std::sync::Arc;

pub use assembly::{assemble_density_mass, assemble_operators, OperatorSet};
pub(crate) use assembly::density_mass_scalar as assemble_density_mass_scalar;
pub use field::FieldVector;
pub use mesh::{Mesh, MeshError};
pub use pcg::{solve_spd, solve_spd_from, SolveError, SolveStats, DEFAULT_TOL};
pub(crate) use pcg::{jacobi, pcg, PcgFailure, Tangent};
pub use sparse::{Blocks, ScalarMatrix, ScalarPattern, SparseOperator};

use quadrature::{POINTS, WEIGHTS};

/// Geometry of one triangle together with its link to the degrees of freedom.
#[derive(Debug, Clone)]
pub struct Element {
    /// Interior index of each vertex, `None` on the boundary.
    pub dofs: [Option<usize>; 3],
    pub area: f64,
    /// Gradients of the three barycentric basis functions.
    pub grads: [[f64; 2]; 3],
    /// Physical coordinates of the quadrature points.
    pub qp: [[f64; 2]; 6],
    /// Scalar-pattern slot of every local pair `(a, b)`; `usize::MAX` if either vertex is on the boundary.
    pub slots: [[usize; 3]; 3],
}

/// Builds the structured mesh (configuration-level wrapper around [`Mesh::new`]).
pub fn build_mesh(half_width: f64, n: usize) -> Result<Mesh, MeshError> {
    Mesh::new(half_width, n)
}

/// The P1 space on a mesh: per-element data, the shared sparsity pattern and
/// the scalar mass matrix used by every L² inner product.
#[derive(Debug)]
pub struct FeSpace {
    mesh: Mesh,
    elements: Vec<Element>,
    pattern: Arc<ScalarPattern>,
    mass: ScalarMatrix,
}

impl FeSpace {
    pub fn new(mesh: Mesh) -> Self {
        let n = mesh.n_interior();
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for tri in mesh.triangles() {
            for &a in tri {
                if let Some(i) = mesh.interior_index(a) {
                    for &b in tri {
                        if let Some(j) = mesh.interior_index(b) {
                            rows[i].push(j);
                        }
                    }
                }
            }
        }
        let pattern = Arc::new(ScalarPattern::from_rows(rows));

        let mut elements = Vec::with_capacity(mesh.triangles().len());
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let p = tri.map(|k| mesh.nodes()[k]);
            let area = mesh.signed_area(t);
            let two_a = 2.0 * area;
            let grads = [
                [(p[1][1] - p[2][1]) / two_a, (p[2][0] - p[1][0]) / two_a],
                [(p[2][1] - p[0][1]) / two_a, (p[0][0] - p[2][0]) / two_a],
                [(p[0][1] - p[1][1]) / two_a, (p[1][0] - p[0][0]) / two_a],
            ];
            let qp = POINTS.map(|l| {
                [
                    l[0] * p[0][0] + l[1] * p[1][0] + l[2] * p[2][0],
                    l[0] * p[0][1] + l[1] * p[1][1] + l[2] * p[2][1],
                ]
            });
            let dofs = tri.map(|k| mesh.interior_index(k));
            let mut slots = [[usize::MAX; 3]; 3];
            for a in 0..3 {
                for b in 0..3 {
                    if let (Some(i), Some(j)) = (dofs[a], dofs[b]) {
                        slots[a][b] = pattern.slot(i, j).expect("slot present by construction");
                    }
                }
            }
            elements.push(Element {
                dofs,
                area,
                grads,
                qp,
                slots,
            });
        }

        let mut space = Self {
            mass: ScalarMatrix::zeros(pattern.clone()),
            mesh,
            elements,
            pattern,
        };
        space.mass = space.assemble_scalar(|e, local| {
            for a in 0..3 {
                for b in 0..3 {
                    local[a][b] = e.area / 12.0 * if a == b { 2.0 } else { 1.0 };
                }
            }
        });
        space
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn pattern(&self) -> &Arc<ScalarPattern> {
        &self.pattern
    }

    /// Number of interior nodes `N`.
    pub fn n_dofs(&self) -> usize {
        self.mesh.n_interior()
    }

    /// Scalar mass matrix.
    pub fn scalar_mass(&self) -> &ScalarMatrix {
        &self.mass
    }

    /// Assembles a scalar matrix from 3 × 3 element contributions, visiting
    /// elements in mesh order.
    pub fn assemble_scalar<F>(&self, mut local: F) -> ScalarMatrix
    where
        F: FnMut(&Element, &mut [[f64; 3]; 3]),
    {
        let mut out = ScalarMatrix::zeros(self.pattern.clone());
        let values = out.values_mut();
        for e in &self.elements {
            let mut buf = [[0.0; 3]; 3];
            local(e, &mut buf);
            for a in 0..3 {
                for b in 0..3 {
                    let s = e.slots[a][b];
                    if s != usize::MAX {
                        values[s] += buf[a][b];
                    }
                }
            }
        }
        out
    }

    /// Assembles `∫ w φ_a φ_b` where `w(e, q)` is the weight at quadrature point `q` of element `e`.
    pub fn assemble_weighted_mass<F>(&self, mut weight: F) -> ScalarMatrix
    where
        F: FnMut(usize, &Element, usize) -> f64,
    {
        let mut out = ScalarMatrix::zeros(self.pattern.clone());
        let values = out.values_mut();
        for (t, e) in self.elements.iter().enumerate() {
            let mut local = [[0.0; 3]; 3];
            for q in 0..6 {
                let w = WEIGHTS[q] * e.area * weight(t, e, q);
                let l = POINTS[q];
                for a in 0..3 {
                    for b in 0..3 {
                        local[a][b] += w * l[a] * l[b];
                    }
                }
            }
            for a in 0..3 {
                for b in 0..3 {
                    let s = e.slots[a][b];
                    if s != usize::MAX {
                        values[s] += local[a][b];
                    }
                }
            }
        }
        out
    }

    /// Vertex values `(re, im)` of `u` on an element (zero on the boundary).
    #[inline]
    pub fn vertex_values(&self, u: &[f64], e: &Element) -> [[f64; 2]; 3] {
        let n = self.n_dofs();
        e.dofs
            .map(|d| d.map_or([0.0, 0.0], |i| [u[i], u[n + i]]))
    }

    /// Values `(re, im)` of `u` at the six quadrature points of an element.
    #[inline]
    pub fn qp_values(&self, u: &[f64], e: &Element) -> [[f64; 2]; 6] {
        let v = self.vertex_values(u, e);
        POINTS.map(|l| {
            [
                l[0] * v[0][0] + l[1] * v[1][0] + l[2] * v[2][0],
                l[0] * v[0][1] + l[1] * v[1][1] + l[2] * v[2][1],
            ]
        })
    }

    /// `(u, v)_{L²} = Re ∫ u v̄`.
    pub fn l2_inner(&self, u: &FieldVector, v: &FieldVector) -> f64 {
        self.l2_inner_raw(u.as_slice(), v.as_slice())
    }

    pub(crate) fn l2_inner_raw(&self, u: &[f64], v: &[f64]) -> f64 {
        let n = self.n_dofs();
        let mut mv = vec![0.0; n];
        self.mass.matvec(&v[..n], &mut mv);
        let re = crate::linalg::dot(&u[..n], &mv);
        self.mass.matvec(&v[n..], &mut mv);
        let im = crate::linalg::dot(&u[n..], &mv);
        re + im
    }

    pub fn l2_norm(&self, u: &FieldVector) -> f64 {
        self.l2_inner(u, u).sqrt()
    }

    /// Stacked `M u`.
    pub fn mass_apply(&self, u: &[f64]) -> Vec<f64> {
        let n = self.n_dofs();
        let mut out = vec![0.0; 2 * n];
        let (re, im) = out.split_at_mut(n);
        self.mass.matvec(&u[..n], re);
        self.mass.matvec(&u[n..], im);
        out
    }

    /// `∫ |u|⁴`, exact for P1 fields under the degree-4 rule.
    pub fn l4_norm4(&self, u: &FieldVector) -> f64 {
        let u = u.as_slice();
        let mut total = 0.0;
        for e in &self.elements {
            let vals = self.qp_values(u, e);
            let mut local = 0.0;
            for (q, [a, b]) in vals.iter().enumerate() {
                let rho = a * a + b * b;
                local += WEIGHTS[q] * rho * rho;
            }
            total += e.area * local;
        }
        total
    }

    /// Nodal interpolation of `f` on the interior nodes.
    pub fn interpolate<F>(&self, f: F) -> FieldVector
    where
        F: Fn(f64, f64) -> num_complex::Complex64,
    {
        let n = self.n_dofs();
        let mut re = vec![0.0; n];
        let mut im = vec![0.0; n];
        for (i, &node) in self.mesh.interior_nodes().iter().enumerate() {
            let [x, y] = self.mesh.nodes()[node];
            let z = f(x, y);
            re[i] = z.re;
            im[i] = z.im;
        }
        FieldVector::from_parts(&re, &im)
    }

    /// `u / ‖u‖_{L²}`; fails on a vanishing vector.
    pub fn normalize(&self, u: &FieldVector) -> crate::Result<FieldVector> {
        let nrm = self.l2_norm(u);
        if !(nrm.is_finite() && nrm > 0.0) {
            return Err(crate::Error::DegenerateRetraction(nrm));
        }
        Ok(u.scaled(1.0 / nrm))
    }

    /// Nodal `|u|²` on the full `(n+1)²` grid, zero on the boundary.
    pub fn density_on_grid(&self, u: &FieldVector) -> Vec<f64> {
        let mut out = vec![0.0; self.mesh.nodes().len()];
        for (i, &node) in self.mesh.interior_nodes().iter().enumerate() {
            let (a, b) = (u.re()[i], u.im()[i]);
            out[node] = a * a + b * b;
        }
        out
    }
}
