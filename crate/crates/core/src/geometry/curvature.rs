//! Per-vertex geometric caches: normals, measure weights and curvatures.
//!
//! Triangle meshes use the cotangent mean-curvature normal with mixed
//! Voronoi vertex areas. The principal curvatures take their trace from the
//! cotangent operator and their traceless part from a least-squares shape
//! operator fit on the one-ring, so that `H = k1 + k2`,
//! `|B|^2 = k1^2 + k2^2` and `(k1 - k2)^2 = 2 |B|^2 - H^2` hold exactly by
//! construction.
//!
//! Polygon loops use the turning angle divided by the average adjacent edge
//! length, which is exact on circles in the refinement limit.

use nalgebra::{Matrix3, Vector3};

use super::{Boundary, Faces};

pub(crate) fn build_surface_caches(b: &mut Boundary) {
    let tris = match &b.faces {
        Faces::Triangles(t) => t.clone(),
        _ => unreachable!(),
    };
    let n = b.vertices.len();

    // Angle-weighted vertex normals.
    let mut normals = vec![Vector3::zeros(); n];
    for (fi, t) in tris.iter().enumerate() {
        for k in 0..3 {
            let p = b.vertices[t[k]];
            let u = (b.vertices[t[(k + 1) % 3]] - p).normalize();
            let w = (b.vertices[t[(k + 2) % 3]] - p).normalize();
            let angle = u.dot(&w).clamp(-1.0, 1.0).acos();
            normals[t[k]] += angle * b.face_normals[fi];
        }
    }
    for nu in &mut normals {
        *nu = nu.normalize();
    }

    // Mixed Voronoi areas and the cotangent mean-curvature vector
    // K_i = (1/(2 A_i)) sum_j (cot a_ij + cot b_ij) (x_i - x_j).
    let mut areas = vec![0.0_f64; n];
    let mut kvec = vec![Vector3::zeros(); n];
    for t in &tris {
        let p = [b.vertices[t[0]], b.vertices[t[1]], b.vertices[t[2]]];
        let area = 0.5 * (p[1] - p[0]).cross(&(p[2] - p[0])).norm();
        let mut cot = [0.0_f64; 3];
        let mut obtuse = None;
        for k in 0..3 {
            let u = p[(k + 1) % 3] - p[k];
            let w = p[(k + 2) % 3] - p[k];
            let cross = u.cross(&w).norm();
            cot[k] = u.dot(&w) / cross.max(1e-300);
            if u.dot(&w) < 0.0 {
                obtuse = Some(k);
            }
        }
        for k in 0..3 {
            match obtuse {
                None => {
                    // Voronoi: (|e_kj|^2 cot(angle opposite) summed) / 8.
                    let lj = (p[k] - p[(k + 2) % 3]).norm_squared();
                    let li = (p[k] - p[(k + 1) % 3]).norm_squared();
                    areas[t[k]] += (li * cot[(k + 2) % 3] + lj * cot[(k + 1) % 3]) / 8.0;
                }
                Some(o) => {
                    areas[t[k]] += if k == o { area / 2.0 } else { area / 4.0 };
                }
            }
            // Cotangent weight of edge (k, k+1) is cot of the angle at k+2.
            let (i, j) = (t[k], t[(k + 1) % 3]);
            let w = 0.5 * cot[(k + 2) % 3];
            kvec[i] += w * (b.vertices[i] - b.vertices[j]);
            kvec[j] += w * (b.vertices[j] - b.vertices[i]);
        }
    }

    let mut mean_curv = vec![0.0_f64; n];
    for i in 0..n {
        kvec[i] /= areas[i];
        mean_curv[i] = kvec[i].dot(&normals[i]);
    }

    // One-ring shape operator fit for the curvature anisotropy.
    let nbrs = neighbor_lists(n, &tris);
    let mut b_squared = vec![0.0_f64; n];
    let mut principal = vec![[0.0_f64; 2]; n];
    let mut degenerate = Vec::new();
    for i in 0..n {
        let split = match fit_curvature_split(b.vertices[i], normals[i], &nbrs[i], &b.vertices) {
            Some(d) => d,
            None => {
                degenerate.push(i);
                0.0
            }
        };
        let h = mean_curv[i];
        let k1 = 0.5 * (h + split);
        let k2 = 0.5 * (h - split);
        principal[i] = [k1.max(k2), k1.min(k2)];
        b_squared[i] = k1 * k1 + k2 * k2;
    }

    b.normals = normals;
    b.vertex_areas = areas;
    b.mean_curv = mean_curv;
    b.b_squared = b_squared;
    b.principal = principal;
    b.degenerate_stencils = degenerate;
}

fn neighbor_lists(n: usize, tris: &[[usize; 3]]) -> Vec<Vec<usize>> {
    let mut nbr = vec![Vec::new(); n];
    for t in tris {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            if !nbr[a].contains(&b) {
                nbr[a].push(b);
            }
            if !nbr[b].contains(&a) {
                nbr[b].push(a);
            }
        }
    }
    nbr
}

/// Fit normal-section curvature samples `k(theta) = a c^2 + 2b cs + c s^2`
/// over the one-ring and return the principal curvature gap `k1 - k2 >= 0`,
/// or `None` when the stencil does not determine the form.
pub(crate) fn fit_curvature_split(
    x: Vector3<f64>,
    nu: Vector3<f64>,
    nbrs: &[usize],
    verts: &[Vector3<f64>],
) -> Option<f64> {
    let e1 = orthonormal_to(nu);
    let e2 = nu.cross(&e1);
    let mut ata = Matrix3::zeros();
    let mut atb = Vector3::zeros();
    let mut samples = 0usize;
    for &j in nbrs {
        let d = verts[j] - x;
        let t = d - d.dot(&nu) * nu;
        let tn = t.norm();
        if tn < 1e-14 {
            continue;
        }
        let (c, s) = (t.dot(&e1) / tn, t.dot(&e2) / tn);
        let kappa = -2.0 * nu.dot(&d) / d.norm_squared();
        let row = Vector3::new(c * c, 2.0 * c * s, s * s);
        ata += row * row.transpose();
        atb += kappa * row;
        samples += 1;
    }
    if samples < 3 {
        return None;
    }
    let sol = ata.lu().solve(&atb)?;
    let (a, bb, c) = (sol.x, sol.y, sol.z);
    let disc = ((a - c) * (a - c) + 4.0 * bb * bb).max(0.0).sqrt();
    if !disc.is_finite() {
        return None;
    }
    Some(disc)
}

/// Deterministic unit vector orthogonal to `v`.
pub(crate) fn orthonormal_to(v: Vector3<f64>) -> Vector3<f64> {
    let pick = if v.x.abs() <= v.y.abs() && v.x.abs() <= v.z.abs() {
        Vector3::x()
    } else if v.y.abs() <= v.z.abs() {
        Vector3::y()
    } else {
        Vector3::z()
    };
    (pick - v.dot(&pick) * v).normalize()
}

pub(crate) fn build_curve_caches(b: &mut Boundary) {
    let edges = match &b.faces {
        Faces::Edges(e) => e.clone(),
        _ => unreachable!(),
    };
    let n = b.vertices.len();
    let mut incoming = vec![usize::MAX; n];
    let mut outgoing = vec![usize::MAX; n];
    for (ei, e) in edges.iter().enumerate() {
        outgoing[e[0]] = ei;
        incoming[e[1]] = ei;
    }

    let mut normals = vec![Vector3::zeros(); n];
    let mut areas = vec![0.0_f64; n];
    let mut mean_curv = vec![0.0_f64; n];
    for i in 0..n {
        let e_in = edges[incoming[i]];
        let e_out = edges[outgoing[i]];
        let t_in = (b.vertices[i] - b.vertices[e_in[0]]).normalize();
        let t_out = (b.vertices[e_out[1]] - b.vertices[i]).normalize();
        // Outward normal of a CCW loop is the tangent rotated by -90 deg.
        let n_in = Vector3::new(t_in.y, -t_in.x, 0.0);
        let n_out = Vector3::new(t_out.y, -t_out.x, 0.0);
        let nu = n_in + n_out;
        normals[i] = if nu.norm() < 1e-14 { n_out } else { nu.normalize() };

        let l_in = b.face_areas[incoming[i]];
        let l_out = b.face_areas[outgoing[i]];
        areas[i] = 0.5 * (l_in + l_out);

        let turn = (t_in.x * t_out.y - t_in.y * t_out.x).atan2(t_in.dot(&t_out));
        mean_curv[i] = turn / areas[i];
    }

    let principal: Vec<[f64; 2]> = mean_curv.iter().map(|&h| [h, 0.0]).collect();
    let b_squared: Vec<f64> = mean_curv.iter().map(|&h| h * h).collect();

    b.normals = normals;
    b.vertex_areas = areas;
    b.mean_curv = mean_curv;
    b.b_squared = b_squared;
    b.principal = principal;
    b.degenerate_stencils = Vec::new();
}
