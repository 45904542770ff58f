//! Discrete closed boundaries in the plane and in space, with cached
//! first- and second-order geometry.
//!
//! A [`Boundary`] is an oriented polygon loop collection (`Dim::Two`) or an
//! oriented closed triangle mesh (`Dim::Three`). The outward normal always
//! points out of the enclosed set `E`; on inner boundaries (holes) the face
//! orientation is reversed so that the signed enclosed volume stays positive
//! and the mean curvature carries the sign of the enclosed set, negative on
//! concave (hole) boundaries.
//!
//! Boundaries are immutable after construction: every operator takes `&self`
//! and derived shapes are new values, so concurrent reads are safe.

mod build;
mod curvature;
mod jet;
mod laplace;
pub mod io;
pub mod shapes;

pub use laplace::LaplaceOperators;
pub use shapes::{PerturbationMode, ShapeSpec, tessellate};

use nalgebra::Vector3;

use crate::{Error, Result};

/// Ambient dimension of the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Dim {
    Two,
    Three,
}

impl Dim {
    pub fn n(self) -> usize {
        match self {
            Dim::Two => 2,
            Dim::Three => 3,
        }
    }
}

/// Connectivity of a boundary: edges of polygon loops or oriented triangles.
#[derive(Debug, Clone)]
pub enum Faces {
    /// Directed polygon edges `[from, to]`, loop by loop.
    Edges(Vec<[usize; 2]>),
    /// Oriented triangles, outward normal by the right-hand rule.
    Triangles(Vec<[usize; 3]>),
}

impl Faces {
    pub fn len(&self) -> usize {
        match self {
            Faces::Edges(e) => e.len(),
            Faces::Triangles(t) => t.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A discrete closed boundary with per-vertex geometric caches.
///
/// Invariants established at construction:
/// - closed and orientable (each mesh edge shared by exactly two triangles
///   with opposite orientation; each planar loop closed),
/// - consistent outward orientation (signed enclosed volume > 0),
/// - no degenerate faces (measure above a configurable floor),
/// - unit vertex normals.
#[derive(Debug, Clone)]
pub struct Boundary {
    pub(crate) dim: Dim,
    /// Vertex positions; `z = 0` identically for `Dim::Two`.
    pub(crate) vertices: Vec<Vector3<f64>>,
    pub(crate) faces: Faces,
    /// Outward unit normal per vertex.
    pub(crate) normals: Vec<Vector3<f64>>,
    /// Mean curvature per vertex (sum of principal curvatures).
    pub(crate) mean_curv: Vec<f64>,
    /// Squared norm of the second fundamental form per vertex.
    pub(crate) b_squared: Vec<f64>,
    /// Principal curvatures `[k1, k2]` per vertex (`k2 = 0` in the plane).
    pub(crate) principal: Vec<[f64; 2]>,
    /// Vertex measure weights (mixed Voronoi areas / half edge lengths).
    pub(crate) vertex_areas: Vec<f64>,
    /// Face measures (triangle areas / edge lengths).
    pub(crate) face_areas: Vec<f64>,
    /// Outward unit normal per face.
    pub(crate) face_normals: Vec<Vector3<f64>>,
    /// Connected-component label per vertex, labels `0..component_count`.
    pub(crate) component: Vec<usize>,
    pub(crate) component_count: usize,
    /// Vertex ids whose curvature stencil was degenerate (fit fell back to
    /// the isotropic value).
    pub(crate) degenerate_stencils: Vec<usize>,
    pub(crate) max_edge: f64,
    pub(crate) min_edge: f64,
}

impl Boundary {
    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn vertices(&self) -> &[Vector3<f64>] {
        &self.vertices
    }

    pub fn faces(&self) -> &Faces {
        &self.faces
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        match &self.faces {
            Faces::Triangles(t) => t,
            Faces::Edges(_) => &[],
        }
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        match &self.faces {
            Faces::Edges(e) => e,
            Faces::Triangles(_) => &[],
        }
    }

    pub fn normals(&self) -> &[Vector3<f64>] {
        &self.normals
    }

    /// Per-vertex mean curvature `H` (sum of principal curvatures, positive
    /// on convex boundaries with outward normal).
    pub fn mean_curvature(&self) -> &[f64] {
        &self.mean_curv
    }

    /// Per-vertex `|B|^2`, the squared norm of the second fundamental form.
    pub fn b_squared(&self) -> &[f64] {
        &self.b_squared
    }

    /// Per-vertex principal curvatures, `k1 >= k2`; `k2 = 0` in the plane.
    pub fn principal_curvatures(&self) -> &[[f64; 2]] {
        &self.principal
    }

    pub fn vertex_areas(&self) -> &[f64] {
        &self.vertex_areas
    }

    pub fn face_areas(&self) -> &[f64] {
        &self.face_areas
    }

    pub fn face_normals(&self) -> &[Vector3<f64>] {
        &self.face_normals
    }

    /// Connected-component label per vertex.
    pub fn component_labels(&self) -> &[usize] {
        &self.component
    }

    pub fn component_count(&self) -> usize {
        self.component_count
    }

    /// Vertices whose one-ring was too degenerate for the curvature fit.
    pub fn degenerate_stencils(&self) -> &[usize] {
        &self.degenerate_stencils
    }

    /// Longest face edge; the resolution scale `h` of the mesh.
    pub fn max_edge_length(&self) -> f64 {
        self.max_edge
    }

    pub fn min_edge_length(&self) -> f64 {
        self.min_edge
    }

    /// Total surface measure: the perimeter `P(E)`.
    pub fn perimeter(&self) -> f64 {
        self.face_areas.iter().sum()
    }

    /// Signed enclosed volume by the divergence theorem; positive for a
    /// valid outward orientation.
    pub fn volume(&self) -> f64 {
        signed_volume(self.dim, &self.vertices, &self.faces)
    }

    /// Volume centroid of the enclosed set.
    pub fn volume_centroid(&self) -> Vector3<f64> {
        match &self.faces {
            Faces::Triangles(tris) => {
                let mut vol = 0.0;
                let mut c = Vector3::zeros();
                for t in tris {
                    let (a, b, d) = (self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]);
                    let v = a.dot(&b.cross(&d)) / 6.0;
                    vol += v;
                    c += v * (a + b + d) / 4.0;
                }
                c / vol
            }
            Faces::Edges(edges) => {
                let mut area = 0.0;
                let mut c = Vector3::zeros();
                for e in edges {
                    let (a, b) = (self.vertices[e[0]], self.vertices[e[1]]);
                    let v = (a.x * b.y - b.x * a.y) / 2.0;
                    area += v;
                    c += v * (a + b) / 3.0;
                }
                c / area
            }
        }
    }

    /// New boundary with vertices mapped by `f`; all caches are rebuilt.
    pub fn mapped<F: Fn(Vector3<f64>) -> Vector3<f64>>(&self, f: F) -> Result<Boundary> {
        let verts: Vec<_> = self.vertices.iter().map(|&v| f(v)).collect();
        match &self.faces {
            Faces::Triangles(t) => Boundary::from_triangles(verts, t.clone()),
            Faces::Edges(_) => Boundary::from_loops_raw(verts, self.edges().to_vec()),
        }
    }

    /// Dilation about `center` by factor `s > 0`.
    pub fn dilated_about(&self, center: Vector3<f64>, s: f64) -> Result<Boundary> {
        self.mapped(|v| center + s * (v - center))
    }

    /// Exact rescale about the volume centroid to the target enclosed volume.
    pub fn rescaled_to_volume(&self, target: f64) -> Result<Boundary> {
        let v = self.volume();
        let s = (target / v).powf(1.0 / self.dim.n() as f64);
        self.dilated_about(self.volume_centroid(), s)
    }

    /// Vertices moved by the given displacements; connectivity unchanged.
    pub fn displaced(&self, disp: &[Vector3<f64>]) -> Result<Boundary> {
        assert_eq!(disp.len(), self.vertex_count());
        let verts: Vec<_> = self
            .vertices
            .iter()
            .zip(disp)
            .map(|(&v, &d)| v + d)
            .collect();
        match &self.faces {
            Faces::Triangles(t) => Boundary::from_triangles(verts, t.clone()),
            Faces::Edges(_) => Boundary::from_loops_raw(verts, self.edges().to_vec()),
        }
    }

    /// One-ring vertex neighborhoods.
    pub fn vertex_neighbors(&self) -> Vec<Vec<usize>> {
        let n = self.vertex_count();
        let mut nbr = vec![Vec::new(); n];
        let push = |a: usize, b: usize, nbr: &mut Vec<Vec<usize>>| {
            if !nbr[a].contains(&b) {
                nbr[a].push(b);
            }
        };
        match &self.faces {
            Faces::Triangles(tris) => {
                for t in tris {
                    for k in 0..3 {
                        push(t[k], t[(k + 1) % 3], &mut nbr);
                        push(t[(k + 1) % 3], t[k], &mut nbr);
                    }
                }
            }
            Faces::Edges(edges) => {
                for e in edges {
                    push(e[0], e[1], &mut nbr);
                    push(e[1], e[0], &mut nbr);
                }
            }
        }
        nbr
    }

    /// Faces incident to each vertex.
    pub fn vertex_faces(&self) -> Vec<Vec<usize>> {
        let n = self.vertex_count();
        let mut vf = vec![Vec::new(); n];
        match &self.faces {
            Faces::Triangles(tris) => {
                for (fi, t) in tris.iter().enumerate() {
                    for &v in t {
                        vf[v].push(fi);
                    }
                }
            }
            Faces::Edges(edges) => {
                for (fi, e) in edges.iter().enumerate() {
                    for &v in e {
                        vf[v].push(fi);
                    }
                }
            }
        }
        vf
    }

    /// Minimum face quality: `2 r_in / r_circ` for triangles (1 on
    /// equilateral), `min edge / mean edge` uniformity for loops.
    pub fn min_face_quality(&self) -> f64 {
        match &self.faces {
            Faces::Triangles(tris) => tris
                .iter()
                .map(|t| {
                    triangle_quality(self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]])
                })
                .fold(f64::INFINITY, f64::min),
            Faces::Edges(_) => {
                let mean = self.perimeter() / self.face_count() as f64;
                self.face_areas
                    .iter()
                    .map(|l| l / mean)
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }
}

/// Quality `2 r_in / r_circ` of a triangle, 1 for equilateral, 0 degenerate.
pub fn triangle_quality(a: Vector3<f64>, b: Vector3<f64>, c: Vector3<f64>) -> f64 {
    let la = (b - c).norm();
    let lb = (c - a).norm();
    let lc = (a - b).norm();
    let area = 0.5 * (b - a).cross(&(c - a)).norm();
    if area <= 0.0 {
        return 0.0;
    }
    let s = 0.5 * (la + lb + lc);
    let r_in = area / s;
    let r_circ = la * lb * lc / (4.0 * area);
    2.0 * r_in / r_circ
}

pub(crate) fn signed_volume(dim: Dim, vertices: &[Vector3<f64>], faces: &Faces) -> f64 {
    match (dim, faces) {
        (Dim::Three, Faces::Triangles(tris)) => tris
            .iter()
            .map(|t| vertices[t[0]].dot(&vertices[t[1]].cross(&vertices[t[2]])) / 6.0)
            .sum(),
        (Dim::Two, Faces::Edges(edges)) => edges
            .iter()
            .map(|e| (vertices[e[0]].x * vertices[e[1]].y - vertices[e[1]].x * vertices[e[0]].y) / 2.0)
            .sum(),
        _ => unreachable!("dimension/connectivity mismatch"),
    }
}

/// Largest pairwise vertex distance.
pub fn diameter(b: &Boundary) -> f64 {
    let v = &b.vertices;
    let mut d2: f64 = 0.0;
    for i in 0..v.len() {
        for j in (i + 1)..v.len() {
            d2 = d2.max((v[i] - v[j]).norm_squared());
        }
    }
    d2.sqrt()
}

/// Symmetric Hausdorff distance between the vertex sets of two boundaries.
pub fn hausdorff_distance(a: &Boundary, b: &Boundary) -> f64 {
    fn one_sided(p: &[Vector3<f64>], q: &[Vector3<f64>]) -> f64 {
        p.iter()
            .map(|x| {
                q.iter()
                    .map(|y| (x - y).norm_squared())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0_f64, f64::max)
    }
    one_sided(&a.vertices, &b.vertices)
        .max(one_sided(&b.vertices, &a.vertices))
        .sqrt()
}

/// Discrete residuals of the identities `Lap x = -H nu` and
/// `Lap nu = -|B|^2 nu + grad_tau H` on a triangle mesh, together with the
/// norms of the reference terms for relative comparison.
#[derive(Debug, Clone, serde::Serialize)]
pub struct GeometricResiduals {
    /// `|| Lap x + H nu ||_{L^2}`
    pub r1: f64,
    /// `|| H nu ||_{L^2}`
    pub scale1: f64,
    /// `|| Lap nu + |B|^2 nu - grad_tau H ||_{L^2}`
    pub r2: f64,
    /// `|| |B|^2 nu ||_{L^2}`
    pub scale2: f64,
}

/// Evaluate the vector geometric identities relating the Laplace-Beltrami
/// operator, the normal field, the curvatures and the position field.
/// Triangle meshes only.
///
/// The pointwise fields (normal, `H`, `|B|^2`, `grad H`) are taken from
/// two-ring cubic jet fits of the exact vertex positions; the cached
/// one-ring estimators carry rough `O(h^2)` noise that a discrete Laplacian
/// amplifies to `O(1)`, which would mask the identity.
pub fn geometric_identity_residuals(b: &Boundary) -> Result<GeometricResiduals> {
    if b.dim != Dim::Three {
        return Err(Error::Unsupported(
            "geometric identity residuals are defined on triangle meshes".into(),
        ));
    }
    let ops = laplace::laplace_operators(b)?;
    let n = b.vertex_count();

    // Two-ring jet fields per vertex; fall back to the cached estimators on
    // degenerate stencils.
    let nbrs = b.vertex_neighbors();
    let fields: Vec<jet::JetFields> = crate::par::map_indexed(n, |i| {
        let mut ring: Vec<usize> = vec![i];
        for &j in &nbrs[i] {
            if !ring.contains(&j) {
                ring.push(j);
            }
            for &k in &nbrs[j] {
                if !ring.contains(&k) {
                    ring.push(k);
                }
            }
        }
        let pts: Vec<Vector3<f64>> = ring.iter().map(|&j| b.vertices[j]).collect();
        jet::fit_jet(b.vertices[i], b.normals[i], &pts).unwrap_or(jet::JetFields {
            normal: b.normals[i],
            mean_curvature: b.mean_curv[i],
            b_squared: b.b_squared[i],
            grad_h: Vector3::zeros(),
        })
    });

    // Lap f per vertex = -(S f)_i / a_i, componentwise on vector fields.
    let lap_field = |field: &dyn Fn(usize) -> Vector3<f64>| -> Vec<Vector3<f64>> {
        let mut out = vec![Vector3::zeros(); n];
        for i in 0..n {
            let mut acc = Vector3::zeros();
            for &(j, w) in ops.stiffness_row(i) {
                acc += w * field(j);
            }
            out[i] = -acc / b.vertex_areas[i];
        }
        out
    };

    let lap_x = lap_field(&|j| b.vertices[j]);
    let lap_nu = lap_field(&|j| fields[j].normal);

    let mut r1 = 0.0;
    let mut s1 = 0.0;
    let mut r2 = 0.0;
    let mut s2 = 0.0;
    for i in 0..n {
        let a = b.vertex_areas[i];
        let hn = fields[i].mean_curvature * fields[i].normal;
        let bn = fields[i].b_squared * fields[i].normal;
        r1 += a * (lap_x[i] + hn).norm_squared();
        s1 += a * hn.norm_squared();
        r2 += a * (lap_nu[i] + bn - fields[i].grad_h).norm_squared();
        s2 += a * bn.norm_squared();
    }
    Ok(GeometricResiduals {
        r1: r1.sqrt(),
        scale1: s1.sqrt(),
        r2: r2.sqrt(),
        scale2: s2.sqrt(),
    })
}

/// Assemble the weak Laplace-Beltrami stiffness matrix and the lumped mass
/// matrix on vertex functions.
pub fn laplace_operators(b: &Boundary) -> Result<LaplaceOperators> {
    laplace::laplace_operators(b)
}
