//! Weak Laplace-Beltrami stiffness and lumped mass matrices on vertex
//! functions, stored sparsely by row.

use nalgebra::{DMatrix, Vector3};

use super::{Boundary, Dim, Faces};
use crate::{Error, Result};

/// Stiffness `S` (positive semidefinite weak Laplace-Beltrami, `S 1 = 0`)
/// and diagonal lumped mass `M` whose entries sum to the total surface
/// measure.
#[derive(Debug, Clone)]
pub struct LaplaceOperators {
    rows: Vec<Vec<(usize, f64)>>,
    mass: Vec<f64>,
}

impl LaplaceOperators {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn stiffness_row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// `y = S x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(j, w)| w * x[j]).sum())
            .collect()
    }

    /// `x^T S x`, the Dirichlet energy of the vertex function.
    pub fn dirichlet(&self, x: &[f64]) -> f64 {
        self.apply(x).iter().zip(x).map(|(sx, xi)| sx * xi).sum()
    }

    pub fn stiffness_dense(&self) -> DMatrix<f64> {
        let n = self.rows.len();
        let mut m = DMatrix::zeros(n, n);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, w) in row {
                m[(i, j)] += w;
            }
        }
        m
    }
}

pub fn laplace_operators(b: &Boundary) -> Result<LaplaceOperators> {
    let n = b.vertex_count();
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let add = |i: usize, j: usize, w: f64, rows: &mut Vec<Vec<(usize, f64)>>| {
        if let Some(slot) = rows[i].iter_mut().find(|(k, _)| *k == j) {
            slot.1 += w;
        } else {
            rows[i].push((j, w));
        }
    };

    match (&b.faces, b.dim) {
        (Faces::Triangles(tris), Dim::Three) => {
            for t in tris {
                let p = [b.vertices[t[0]], b.vertices[t[1]], b.vertices[t[2]]];
                for k in 0..3 {
                    let u = p[(k + 1) % 3] - p[k];
                    let w = p[(k + 2) % 3] - p[k];
                    let cross = u.cross(&w).norm();
                    if cross <= 0.0 {
                        return Err(Error::NonManifold(format!(
                            "zero-area corner in face with vertices {:?}",
                            t
                        )));
                    }
                    let cot = 0.5 * u.dot(&w) / cross;
                    let (i, j) = (t[(k + 1) % 3], t[(k + 2) % 3]);
                    add(i, j, -cot, &mut rows);
                    add(j, i, -cot, &mut rows);
                    add(i, i, cot, &mut rows);
                    add(j, j, cot, &mut rows);
                }
            }
        }
        (Faces::Edges(edges), Dim::Two) => {
            for e in edges {
                let l = (b.vertices[e[1]] - b.vertices[e[0]]).norm();
                let w = 1.0 / l;
                add(e[0], e[1], -w, &mut rows);
                add(e[1], e[0], -w, &mut rows);
                add(e[0], e[0], w, &mut rows);
                add(e[1], e[1], w, &mut rows);
            }
        }
        _ => unreachable!(),
    }

    for row in &mut rows {
        row.sort_by_key(|&(j, _)| j);
    }
    Ok(LaplaceOperators {
        rows,
        mass: b.vertex_areas.clone(),
    })
}

/// Area-weighted tangential gradient of a vertex function, averaged from the
/// exact per-face gradients of its piecewise-linear interpolant.
pub fn vertex_gradient(b: &Boundary, f: &[f64]) -> Vec<Vector3<f64>> {
    let n = b.vertex_count();
    let mut grad = vec![Vector3::zeros(); n];
    let mut wsum = vec![0.0_f64; n];
    match &b.faces {
        Faces::Triangles(tris) => {
            for (fi, t) in tris.iter().enumerate() {
                let p = [b.vertices[t[0]], b.vertices[t[1]], b.vertices[t[2]]];
                let nrm = b.face_normals[fi];
                let a2 = 2.0 * b.face_areas[fi];
                // grad phi_k = n x e_k / (2A) with e_k the opposite edge.
                let mut g = Vector3::zeros();
                for k in 0..3 {
                    let e = p[(k + 2) % 3] - p[(k + 1) % 3];
                    g += f[t[k]] * nrm.cross(&e) / a2;
                }
                for &v in t {
                    grad[v] += b.face_areas[fi] * g;
                    wsum[v] += b.face_areas[fi];
                }
            }
        }
        Faces::Edges(edges) => {
            for (ei, e) in edges.iter().enumerate() {
                let t = (b.vertices[e[1]] - b.vertices[e[0]]) / b.face_areas[ei];
                let g = (f[e[1]] - f[e[0]]) / b.face_areas[ei] * t;
                for &v in e {
                    grad[v] += b.face_areas[ei] * g;
                    wsum[v] += b.face_areas[ei];
                }
            }
        }
    }
    for i in 0..n {
        grad[i] /= wsum[i];
        // Project onto the tangent plane of the vertex normal.
        let along = grad[i].dot(&b.normals[i]);
        grad[i] -= along * b.normals[i];
    }
    grad
}
