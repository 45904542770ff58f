//! Newtonian potential, its normal derivative, the nonlocal energy and the
//! boundary kernel matrix, all through boundary-only integrals.
//!
//! The volume integrals are reduced to the boundary by divergence
//! identities. With `r = |x - y|`:
//!
//! - space: `int_E r^-1 dy = (1/2) int_bd r^-1 (y-x).nu(y) dA`, and the
//!   doubly reduced nonlocal energy
//!   `NL = -(c3/2) int_bd int_bd r nu(x).nu(y) dA dA`, a smooth kernel;
//! - plane: `int_E log(1/r) dy = (1/2) int_bd log(1/r) (y-x).nu(y) ds
//!   + |E|/2`, and
//!   `NL = (1/(4 pi)) int int h(r) nu.nu ds ds + |E|^2/(4 pi)` with
//!   `h(r) = (r^2/4)(2 log r - 1)`.
//!
//! Both reductions are validated against the radial ball/disk solutions in
//! the tests. On a straight edge or flat facet the factor `(y-x).nu(y)` is
//! the constant plane offset of `x`, which vanishes identically on the
//! facets incident to a vertex; the remaining weak singularities are handled
//! by Duffy corner transforms (facets) and exact log moments (edges).

use nalgebra::{DMatrix, Vector3};

use crate::geometry::{Boundary, Dim, Faces};
use crate::quad::{
    adaptive_tri_quad, duffy_corner_integral, duffy_corner_moments, point_triangle_distance,
    segment_log_moments, tri_midedge_rule, GAUSS8,
};
use crate::{par, Error, Result};

/// Newtonian kernel constants: `G(x,y) = c_n r^{2-n}` for `n >= 3` and
/// `c_2 log(1/r)` in the plane.
#[derive(Debug, Clone, Copy)]
pub struct KernelParams {
    pub dim: Dim,
    /// `1/(n (n-2) omega_n)` for `n = 3` (i.e. `1/(4 pi)`), `1/(2 pi)` in
    /// the plane.
    pub constant: f64,
}

impl KernelParams {
    pub fn for_dim(dim: Dim) -> Self {
        use std::f64::consts::PI;
        let constant = match dim {
            Dim::Two => 1.0 / (2.0 * PI),
            Dim::Three => 1.0 / (4.0 * PI),
        };
        KernelParams { dim, constant }
    }
}

// Subdivision control for near-singular panels.
const NEAR_RATIO: f64 = 0.6;
const MAX_DEPTH: u32 = 10;

/// Newtonian potential `v_E(x)` at an arbitrary point (inside, outside or on
/// the boundary).
pub fn potential_at(b: &Boundary, x: Vector3<f64>) -> f64 {
    potential_at_impl(b, x, None)
}

/// Potential at every vertex.
pub fn vertex_potentials(b: &Boundary) -> Vec<f64> {
    par::map_indexed(b.vertex_count(), |i| {
        potential_at_impl(b, b.vertices()[i], Some(i))
    })
}

fn potential_at_impl(b: &Boundary, x: Vector3<f64>, at_vertex: Option<usize>) -> f64 {
    let kp = KernelParams::for_dim(b.dim());
    match b.faces() {
        Faces::Triangles(tris) => {
            let mut acc = 0.0;
            for (fi, t) in tris.iter().enumerate() {
                if let Some(vi) = at_vertex {
                    if t.contains(&vi) {
                        continue; // plane offset vanishes identically
                    }
                }
                let nrm = b.face_normals()[fi];
                let offset = (b.vertices()[t[0]] - x).dot(&nrm);
                let scale = b.face_areas()[fi].sqrt();
                if offset.abs() < 1e-14 * scale.max(1.0) {
                    continue;
                }
                let mut integral = 0.0;
                let mut f = |y: Vector3<f64>, w: f64| integral += w / (y - x).norm();
                adaptive_tri_quad(
                    x,
                    b.vertices()[t[0]],
                    b.vertices()[t[1]],
                    b.vertices()[t[2]],
                    NEAR_RATIO,
                    MAX_DEPTH,
                    &mut f,
                );
                acc += offset * integral;
            }
            kp.constant * 0.5 * acc
        }
        Faces::Edges(edges) => {
            let mut acc = 0.0;
            for (ei, e) in edges.iter().enumerate() {
                let nrm = b.face_normals()[ei];
                let offset = (b.vertices()[e[0]] - x).dot(&nrm);
                if offset == 0.0 {
                    continue;
                }
                let (i0, _) = segment_log_moments(b.vertices()[e[0]], b.vertices()[e[1]], x);
                acc += offset * i0;
            }
            kp.constant * (0.5 * acc + 0.5 * b.volume())
        }
    }
}

/// Gradient of the potential, `grad v(x) = -int_bd G(x,y) nu(y) dA(y)`,
/// at a point off the boundary (or anywhere in the plane case).
pub fn potential_gradient_at(b: &Boundary, x: Vector3<f64>) -> Vector3<f64> {
    gradient_impl(b, x, None)
}

/// Gradient of the potential at mesh vertex `i`; the incident facets are
/// integrated with the Duffy corner transform.
pub fn potential_gradient_at_vertex(b: &Boundary, i: usize) -> Vector3<f64> {
    gradient_impl(b, b.vertices()[i], Some(i))
}

fn gradient_impl(b: &Boundary, x: Vector3<f64>, at_vertex: Option<usize>) -> Vector3<f64> {
    let kp = KernelParams::for_dim(b.dim());
    match b.faces() {
        Faces::Triangles(tris) => {
            let mut acc = Vector3::zeros();
            for (fi, t) in tris.iter().enumerate() {
                let verts = b.vertices();
                let incident = at_vertex.map_or(false, |vi| t.contains(&vi));
                let integral = if incident {
                    let vi = at_vertex.unwrap();
                    let others: Vec<Vector3<f64>> =
                        t.iter().filter(|&&v| v != vi).map(|&v| verts[v]).collect();
                    duffy_corner_integral(x, others[0], others[1])
                } else {
                    let mut val = 0.0;
                    let mut f = |y: Vector3<f64>, w: f64| val += w / (y - x).norm();
                    adaptive_tri_quad(
                        x,
                        verts[t[0]],
                        verts[t[1]],
                        verts[t[2]],
                        NEAR_RATIO,
                        MAX_DEPTH,
                        &mut f,
                    );
                    val
                };
                acc += integral * b.face_normals()[fi];
            }
            -kp.constant * acc
        }
        Faces::Edges(edges) => {
            let mut acc = Vector3::zeros();
            for (ei, e) in edges.iter().enumerate() {
                let (i0, _) = segment_log_moments(b.vertices()[e[0]], b.vertices()[e[1]], x);
                acc += i0 * b.face_normals()[ei];
            }
            -kp.constant * acc
        }
    }
}

/// Per-vertex normal derivative of the potential.
pub fn normal_derivative(b: &Boundary) -> Vec<f64> {
    par::map_indexed(b.vertex_count(), |i| {
        potential_gradient_at_vertex(b, i).dot(&b.normals()[i])
    })
}

/// Potential trace and normal derivative on the boundary vertices.
#[derive(Debug, Clone, serde::Serialize)]
pub struct PotentialField {
    pub values: Vec<f64>,
    pub normal_derivative: Vec<f64>,
}

impl PotentialField {
    /// Compute both traces and enforce the comparison bounds: in space the
    /// potential is positive and dominated (within 2%) by the center value
    /// `r_eq^2 / 2` of the volume-equivalent ball.
    pub fn compute(b: &Boundary) -> Result<PotentialField> {
        let values = vertex_potentials(b);
        let dnv = normal_derivative(b);
        if b.dim() == Dim::Three {
            let r_eq = (3.0 * b.volume() / (4.0 * std::f64::consts::PI)).powf(1.0 / 3.0);
            let cap = 1.02 * r_eq * r_eq / 2.0;
            for (i, &v) in values.iter().enumerate() {
                if v <= 0.0 {
                    return Err(Error::NumericalAssertion(format!(
                        "potential not positive at vertex {i}: {v:.3e}"
                    )));
                }
                if v > cap {
                    return Err(Error::NumericalAssertion(format!(
                        "potential {v:.6} at vertex {i} exceeds equivalent-ball bound {cap:.6}"
                    )));
                }
            }
        }
        Ok(PotentialField {
            values,
            normal_derivative: dnv,
        })
    }
}

/// Nonlocal (Coulombic self-interaction) energy `NL(E)` by the doubly
/// reduced boundary integral.
pub fn nonlocal_energy(b: &Boundary) -> f64 {
    nonlocal_energy_quadrature(b, false)
}

/// Same reduction with a one-point-per-face rule; coarser but much cheaper,
/// used inside flow loops on fine meshes.
pub fn nonlocal_energy_centroid(b: &Boundary) -> f64 {
    nonlocal_energy_quadrature(b, true)
}

fn nonlocal_energy_quadrature(b: &Boundary, centroid_rule: bool) -> f64 {
    let kp = KernelParams::for_dim(b.dim());
    match b.faces() {
        Faces::Triangles(tris) => {
            // Quadrature points with normal-weighted weights.
            let mut pts: Vec<(Vector3<f64>, Vector3<f64>)> = Vec::with_capacity(tris.len() * 3);
            for (fi, t) in tris.iter().enumerate() {
                let (p0, p1, p2) =
                    (b.vertices()[t[0]], b.vertices()[t[1]], b.vertices()[t[2]]);
                if centroid_rule {
                    pts.push(((p0 + p1 + p2) / 3.0, b.face_areas()[fi] * b.face_normals()[fi]));
                    continue;
                }
                for (p, w) in tri_midedge_rule(p0, p1, p2) {
                    pts.push((p, w * b.face_normals()[fi]));
                }
            }
            let total = par::sum_indexed(pts.len(), |i| {
                let (xi, ni) = pts[i];
                let mut acc = 0.0;
                for &(xj, nj) in &pts {
                    acc += (xi - xj).norm() * ni.dot(&nj);
                }
                acc
            });
            -kp.constant / 2.0 * total
        }
        Faces::Edges(edges) => {
            let mut pts: Vec<(Vector3<f64>, Vector3<f64>)> = Vec::with_capacity(edges.len() * 8);
            for (ei, e) in edges.iter().enumerate() {
                let (p, q) = (b.vertices()[e[0]], b.vertices()[e[1]]);
                let len = b.face_areas()[ei];
                if centroid_rule {
                    pts.push(((p + q) / 2.0, len * b.face_normals()[ei]));
                    continue;
                }
                for &(t, w) in GAUSS8.iter() {
                    pts.push((p + t * (q - p), w * len * b.face_normals()[ei]));
                }
            }
            let h = |r: f64| {
                if r < 1e-300 {
                    0.0
                } else {
                    r * r / 4.0 * (2.0 * r.ln() - 1.0)
                }
            };
            let total = par::sum_indexed(pts.len(), |i| {
                let (xi, ni) = pts[i];
                let mut acc = 0.0;
                for &(xj, nj) in &pts {
                    acc += h((xi - xj).norm()) * ni.dot(&nj);
                }
                acc
            });
            let area = b.volume();
            use std::f64::consts::PI;
            total / (4.0 * PI) + area * area / (4.0 * PI)
        }
    }
}

/// Options for the dense boundary kernel matrix.
#[derive(Debug, Clone, Copy)]
pub struct KernelOptions {
    /// Dense assembly is refused above this vertex count.
    pub vertex_cap: usize,
}

impl Default for KernelOptions {
    fn default() -> Self {
        KernelOptions { vertex_cap: 8192 }
    }
}

/// Galerkin kernel matrix over nodal hat functions,
/// `K[i][j] = c_n int int phi_i(x) phi_j(y) G_kernel(x,y) dA dA`
/// with `G_kernel = r^-1` in space and `log(1/r)` in the plane.
pub fn kernel_matrix(b: &Boundary) -> Result<DMatrix<f64>> {
    kernel_matrix_with(b, KernelOptions::default())
}

pub fn kernel_matrix_with(b: &Boundary, opts: KernelOptions) -> Result<DMatrix<f64>> {
    let n = b.vertex_count();
    if n > opts.vertex_cap {
        return Err(Error::VertexCap {
            n,
            cap: opts.vertex_cap,
        });
    }
    let raw = match b.faces() {
        Faces::Triangles(_) => assemble_tri_kernel(b),
        Faces::Edges(_) => assemble_edge_kernel(b),
    };
    // Exact symmetrization of the ordered-pair assembly.
    let k = (&raw + raw.transpose()) * 0.5;
    Ok(k)
}

fn assemble_tri_kernel(b: &Boundary) -> DMatrix<f64> {
    let tris = b.triangles();
    let n = b.vertex_count();
    let verts = b.vertices();
    let kp = KernelParams::for_dim(Dim::Three);

    // Per outer face, collect contributions (i, j, value).
    let blocks: Vec<Vec<(usize, usize, f64)>> = par::map_indexed(tris.len(), |fo| {
        let to = tris[fo];
        let (a, bb, c) = (verts[to[0]], verts[to[1]], verts[to[2]]);
        let diam_o = (a - bb).norm().max((bb - c).norm()).max((c - a).norm());
        let mut out: Vec<(usize, usize, f64)> = Vec::new();
        for (xq, wq) in tri_midedge_rule(a, bb, c) {
            // Hat values of the outer face at the midedge point.
            let bary_o = barycentric(xq, a, bb, c);
            for (fi, ti) in tris.iter().enumerate() {
                let (p0, p1, p2) = (verts[ti[0]], verts[ti[1]], verts[ti[2]]);
                let inner: [f64; 3] = if fi == fo {
                    self_face_moments(xq, p0, p1, p2)
                } else {
                    let diam_i =
                        (p0 - p1).norm().max((p1 - p2).norm()).max((p2 - p0).norm());
                    let dist = point_triangle_distance(xq, p0, p1, p2);
                    if dist > 1.5 * diam_i.max(diam_o) {
                        let mut m = [0.0; 3];
                        for (y, w) in tri_midedge_rule(p0, p1, p2) {
                            let g = w / (y - xq).norm();
                            let by = barycentric(y, p0, p1, p2);
                            for k in 0..3 {
                                m[k] += g * by[k];
                            }
                        }
                        m
                    } else {
                        let mut m = [0.0; 3];
                        let mut f = |y: Vector3<f64>, w: f64| {
                            let g = w / (y - xq).norm();
                            let by = barycentric(y, p0, p1, p2);
                            for k in 0..3 {
                                m[k] += g * by[k];
                            }
                        };
                        adaptive_tri_quad(xq, p0, p1, p2, NEAR_RATIO, MAX_DEPTH, &mut f);
                        m
                    }
                };
                for io in 0..3 {
                    let wi = wq * bary_o[io];
                    if wi == 0.0 {
                        continue;
                    }
                    for ji in 0..3 {
                        out.push((to[io], ti[ji], kp.constant * wi * inner[ji]));
                    }
                }
            }
        }
        out
    });

    let mut k = DMatrix::zeros(n, n);
    for block in blocks {
        for (i, j, v) in block {
            k[(i, j)] += v;
        }
    }
    k
}

// Moments of the three hats of face (p0,p1,p2) against 1/|y - xq| with xq
// inside the face: split at xq into corner-singular triangles and apply the
// Duffy transform on each.
fn self_face_moments(
    xq: Vector3<f64>,
    p0: Vector3<f64>,
    p1: Vector3<f64>,
    p2: Vector3<f64>,
) -> [f64; 3] {
    let corners = [p0, p1, p2];
    let bq = barycentric(xq, p0, p1, p2);
    let mut m = [0.0; 3];
    for k in 0..3 {
        let (pa, pb) = (corners[k], corners[(k + 1) % 3]);
        if (pa - xq).cross(&(pb - xq)).norm() < 1e-30 {
            continue; // xq on this edge: degenerate sliver, zero area
        }
        let dm = duffy_corner_moments(xq, pa, pb);
        // dm = moments of hats at (xq, pa, pb); original hats are linear, so
        // phi_j = phi_j(xq) hat_xq + phi_j(pa) hat_pa + phi_j(pb) hat_pb.
        for j in 0..3 {
            let phi_at = |corner: usize| -> f64 {
                match corner {
                    0 => bq[j],
                    1 => if (k % 3) == j { 1.0 } else { 0.0 },
                    _ => if ((k + 1) % 3) == j { 1.0 } else { 0.0 },
                }
            };
            m[j] += dm[0] * phi_at(0) + dm[1] * phi_at(1) + dm[2] * phi_at(2);
        }
    }
    m
}

fn barycentric(p: Vector3<f64>, a: Vector3<f64>, b: Vector3<f64>, c: Vector3<f64>) -> [f64; 3] {
    let v0 = b - a;
    let v1 = c - a;
    let v2 = p - a;
    let d00 = v0.dot(&v0);
    let d01 = v0.dot(&v1);
    let d11 = v1.dot(&v1);
    let d20 = v2.dot(&v0);
    let d21 = v2.dot(&v1);
    let denom = d00 * d11 - d01 * d01;
    let v = (d11 * d20 - d01 * d21) / denom;
    let w = (d00 * d21 - d01 * d20) / denom;
    [1.0 - v - w, v, w]
}

fn assemble_edge_kernel(b: &Boundary) -> DMatrix<f64> {
    let edges = b.edges();
    let n = b.vertex_count();
    let verts = b.vertices();
    let kp = KernelParams::for_dim(Dim::Two);

    let blocks: Vec<Vec<(usize, usize, f64)>> = par::map_indexed(edges.len(), |eo| {
        let e = edges[eo];
        let (p, q) = (verts[e[0]], verts[e[1]]);
        let len = b.face_areas()[eo];
        let mut out = Vec::new();
        // Near (shared-vertex or self) pairs get a finer outer rule; the
        // inner integral is exact either way.
        for (ei, e2) in edges.iter().enumerate() {
            let (p2, q2) = (verts[e2[0]], verts[e2[1]]);
            let near = ei == eo
                || e2.contains(&e[0])
                || e2.contains(&e[1])
                || (0.5 * (p2 + q2) - 0.5 * (p + q)).norm() < 2.0 * len;
            let panels = if near { 4 } else { 1 };
            for panel in 0..panels {
                for &(t, w) in GAUSS8.iter() {
                    let s = (panel as f64 + t) / panels as f64;
                    let x = p + s * (q - p);
                    let wq = w * len / panels as f64;
                    let (i0, i1) = segment_log_moments(p2, q2, x);
                    let inner = [i0 - i1, i1];
                    let outer = [1.0 - s, s];
                    for io in 0..2 {
                        for ji in 0..2 {
                            out.push((
                                e[io],
                                e2[ji],
                                kp.constant * wq * outer[io] * inner[ji],
                            ));
                        }
                    }
                }
            }
        }
        out
    });

    let mut k = DMatrix::zeros(n, n);
    for block in blocks {
        for (i, j, v) in block {
            k[(i, j)] += v;
        }
    }
    k
}

/// Radial potential of the unit-radius ball/disk scaled to radius `r_ball`:
/// the closed-form solution of `-Lap v = chi_B` used as an oracle.
pub fn radial_ball_potential(dim: Dim, r_ball: f64, r: f64) -> f64 {
    let s = r / r_ball;
    match dim {
        Dim::Three => {
            let unit = if s <= 1.0 { 0.5 - s * s / 6.0 } else { 1.0 / (3.0 * s) };
            unit * r_ball * r_ball
        }
        Dim::Two => {
            let unit = if s <= 1.0 {
                (1.0 - s * s) / 4.0
            } else {
                0.5 * (1.0 / s).ln()
            };
            // The log kernel is not scale-homogeneous:
            // v_{rB}(r s) = r^2 v_B(s) + (r^2 / 2) log(1/r).
            unit * r_ball * r_ball + 0.5 * r_ball * r_ball * (1.0 / r_ball).ln()
        }
    }
}
