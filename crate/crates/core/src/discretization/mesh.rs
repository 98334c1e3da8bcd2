//! Structured triangulation of the square `[-L, L]²`.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MeshError {
    #[error("mesh needs at least 4 subdivisions per axis, got {0}")]
    TooCoarse(usize),
    #[error("domain half-width must be positive and finite, got {0}")]
    BadHalfWidth(f64),
}

/// Uniform triangulation of `[-L, L]²` with `n` cells per axis.
///
/// Nodes are numbered row-major (`k = j * (n + 1) + i`, x fastest). Every
/// square cell is split along the diagonal from its lower-left to its
/// upper-right corner, giving two counter-clockwise triangles. Boundary nodes
/// carry no degrees of freedom; interior nodes are numbered in the same
/// row-major order.
#[derive(Debug, Clone)]
pub struct Mesh {
    half_width: f64,
    n: usize,
    nodes: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    interior_index: Vec<Option<usize>>,
    interior_nodes: Vec<usize>,
}

impl Mesh {
    pub fn new(half_width: f64, n: usize) -> Result<Self, MeshError> {
        if n < 4 {
            return Err(MeshError::TooCoarse(n));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(MeshError::BadHalfWidth(half_width));
        }
        let h = 2.0 * half_width / n as f64;
        let side = n + 1;
        let mut nodes = Vec::with_capacity(side * side);
        let mut interior_index = Vec::with_capacity(side * side);
        let mut interior_nodes = Vec::with_capacity((n - 1) * (n - 1));
        for j in 0..side {
            for i in 0..side {
                let x = -half_width + i as f64 * h;
                let y = -half_width + j as f64 * h;
                nodes.push([x, y]);
                if i > 0 && i < n && j > 0 && j < n {
                    interior_index.push(Some(interior_nodes.len()));
                    interior_nodes.push(j * side + i);
                } else {
                    interior_index.push(None);
                }
            }
        }
        let mut triangles = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let v00 = j * side + i;
                let v10 = v00 + 1;
                let v01 = v00 + side;
                let v11 = v01 + 1;
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            }
        }
        Ok(Self {
            half_width,
            n,
            nodes,
            triangles,
            interior_index,
            interior_nodes,
        })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Cells per axis.
    pub fn subdivisions(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    /// Interior (degree-of-freedom) index of a mesh node, `None` on the boundary.
    pub fn interior_index(&self, node: usize) -> Option<usize> {
        self.interior_index[node]
    }

    /// Mesh node of every interior degree of freedom, in dof order.
    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior_nodes
    }

    pub fn n_interior(&self) -> usize {
        self.interior_nodes.len()
    }

    /// Signed area of a triangle (positive for counter-clockwise orientation).
    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let [xa, ya] = self.nodes[a];
        let [xb, yb] = self.nodes[b];
        let [xc, yc] = self.nodes[c];
        0.5 * ((xb - xa) * (yc - ya) - (xc - xa) * (yb - ya))
    }

    /// Mesh node nearest to `(x, y)`.
    pub fn nearest_node(&self, x: f64, y: f64) -> usize {
        let h = self.h();
        let side = self.n + 1;
        let i = (((x + self.half_width) / h).round().max(0.0) as usize).min(self.n);
        let j = (((y + self.half_width) / h).round().max(0.0) as usize).min(self.n);
        j * side + i
    }
}
