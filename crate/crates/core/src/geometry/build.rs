//! Boundary construction and validation.

use std::collections::HashMap;

use nalgebra::Vector3;

use super::{curvature, signed_volume, Boundary, Dim, Faces};
use crate::{Error, Result};

/// Validation thresholds used at ingestion.
#[derive(Debug, Clone, Copy)]
pub struct BuildOptions {
    /// Faces with measure below `floor_rel * max face measure` are rejected.
    pub degenerate_floor_rel: f64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            degenerate_floor_rel: 1e-12,
        }
    }
}

impl Boundary {
    /// Build a boundary from an oriented closed triangle mesh.
    pub fn from_triangles(vertices: Vec<Vector3<f64>>, tris: Vec<[usize; 3]>) -> Result<Boundary> {
        Boundary::from_triangles_with(vertices, tris, BuildOptions::default())
    }

    pub fn from_triangles_with(
        vertices: Vec<Vector3<f64>>,
        tris: Vec<[usize; 3]>,
        opts: BuildOptions,
    ) -> Result<Boundary> {
        if vertices.len() < 4 || tris.is_empty() {
            return Err(Error::InvalidShape("mesh too small".into()));
        }
        for t in &tris {
            for &v in t {
                if v >= vertices.len() {
                    return Err(Error::Parse(format!("triangle index {v} out of range")));
                }
            }
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(Error::NonManifold("triangle with repeated vertex".into()));
            }
        }

        // Closed + orientable: every undirected edge carried by exactly two
        // triangles, once per direction.
        let mut edge_use: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
        for t in &tris {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                let entry = edge_use.entry(key).or_insert((0, 0));
                if a < b {
                    entry.0 += 1;
                } else {
                    entry.1 += 1;
                }
            }
        }
        for (&(a, b), &(fwd, rev)) in &edge_use {
            if fwd != 1 || rev != 1 {
                return Err(Error::NonManifold(format!(
                    "edge ({a},{b}) used {}x forward / {}x reverse; need exactly 1/1",
                    fwd, rev
                )));
            }
        }

        let mut used = vec![false; vertices.len()];
        for t in &tris {
            for &v in t {
                used[v] = true;
            }
        }
        if used.iter().any(|u| !u) {
            return Err(Error::NonManifold("isolated vertex".into()));
        }

        let face_areas: Vec<f64> = tris
            .iter()
            .map(|t| {
                0.5 * (vertices[t[1]] - vertices[t[0]])
                    .cross(&(vertices[t[2]] - vertices[t[0]]))
                    .norm()
            })
            .collect();
        check_degenerate(&face_areas, opts)?;

        let faces = Faces::Triangles(tris);
        let vol = signed_volume(Dim::Three, &vertices, &faces);
        if vol <= 0.0 {
            return Err(Error::Orientation(format!(
                "signed enclosed volume {vol:.3e} is not positive"
            )));
        }

        let tris = match &faces {
            Faces::Triangles(t) => t.clone(),
            _ => unreachable!(),
        };
        let face_normals: Vec<Vector3<f64>> = tris
            .iter()
            .map(|t| {
                (vertices[t[1]] - vertices[t[0]])
                    .cross(&(vertices[t[2]] - vertices[t[0]]))
                    .normalize()
            })
            .collect();

        let (component, component_count) = components(vertices.len(), &faces);
        let (max_edge, min_edge) = edge_extremes(&vertices, &faces);

        let mut b = Boundary {
            dim: Dim::Three,
            vertices,
            faces,
            normals: Vec::new(),
            mean_curv: Vec::new(),
            b_squared: Vec::new(),
            principal: Vec::new(),
            vertex_areas: Vec::new(),
            face_areas,
            face_normals,
            component,
            component_count,
            degenerate_stencils: Vec::new(),
            max_edge,
            min_edge,
        };
        curvature::build_surface_caches(&mut b);
        Ok(b)
    }

    /// Build a planar boundary from vertex loops, each listed in order
    /// (counterclockwise for outer loops, clockwise for holes).
    pub fn from_loops(loops: Vec<Vec<[f64; 2]>>) -> Result<Boundary> {
        let mut vertices = Vec::new();
        let mut edges = Vec::new();
        for lp in &loops {
            if lp.len() < 3 {
                return Err(Error::InvalidShape("loop with fewer than 3 vertices".into()));
            }
            let base = vertices.len();
            for p in lp {
                vertices.push(Vector3::new(p[0], p[1], 0.0));
            }
            for k in 0..lp.len() {
                edges.push([base + k, base + (k + 1) % lp.len()]);
            }
        }
        Boundary::from_loops_raw(vertices, edges)
    }

    pub(crate) fn from_loops_raw(
        vertices: Vec<Vector3<f64>>,
        edges: Vec<[usize; 2]>,
    ) -> Result<Boundary> {
        if vertices.len() < 3 || edges.len() < 3 {
            return Err(Error::InvalidShape("polygon too small".into()));
        }
        if vertices.iter().any(|v| v.z != 0.0) {
            return Err(Error::InvalidShape("planar boundary with nonzero z".into()));
        }
        // Each vertex must have exactly one outgoing and one incoming edge:
        // disjoint closed loops, no chains or branches.
        let n = vertices.len();
        let mut outc = vec![0usize; n];
        let mut inc = vec![0usize; n];
        for e in &edges {
            if e[0] >= n || e[1] >= n || e[0] == e[1] {
                return Err(Error::Parse("bad edge index".into()));
            }
            outc[e[0]] += 1;
            inc[e[1]] += 1;
        }
        if outc.iter().any(|&c| c != 1) || inc.iter().any(|&c| c != 1) {
            return Err(Error::NonManifold(
                "planar boundary must be a disjoint union of closed loops".into(),
            ));
        }

        let face_areas: Vec<f64> = edges
            .iter()
            .map(|e| (vertices[e[1]] - vertices[e[0]]).norm())
            .collect();
        check_degenerate(&face_areas, BuildOptions::default())?;

        let faces = Faces::Edges(edges);
        let vol = signed_volume(Dim::Two, &vertices, &faces);
        if vol <= 0.0 {
            return Err(Error::Orientation(format!(
                "signed enclosed area {vol:.3e} is not positive"
            )));
        }

        let face_normals: Vec<Vector3<f64>> = match &faces {
            Faces::Edges(edges) => edges
                .iter()
                .map(|e| {
                    let t = (vertices[e[1]] - vertices[e[0]]).normalize();
                    Vector3::new(t.y, -t.x, 0.0)
                })
                .collect(),
            _ => unreachable!(),
        };

        let (component, component_count) = components(vertices.len(), &faces);
        let (max_edge, min_edge) = edge_extremes(&vertices, &faces);

        let mut b = Boundary {
            dim: Dim::Two,
            vertices,
            faces,
            normals: Vec::new(),
            mean_curv: Vec::new(),
            b_squared: Vec::new(),
            principal: Vec::new(),
            vertex_areas: Vec::new(),
            face_areas,
            face_normals,
            component,
            component_count,
            degenerate_stencils: Vec::new(),
            max_edge,
            min_edge,
        };
        curvature::build_curve_caches(&mut b);
        Ok(b)
    }
}

fn check_degenerate(face_areas: &[f64], opts: BuildOptions) -> Result<()> {
    let max = face_areas.iter().cloned().fold(0.0_f64, f64::max);
    let floor = opts.degenerate_floor_rel * max;
    for (i, &a) in face_areas.iter().enumerate() {
        if a <= floor {
            return Err(Error::DegenerateFace { face: i, area: a, floor });
        }
    }
    Ok(())
}

fn edge_extremes(vertices: &[Vector3<f64>], faces: &Faces) -> (f64, f64) {
    let mut max = 0.0_f64;
    let mut min = f64::INFINITY;
    let mut take = |a: usize, b: usize| {
        let l = (vertices[a] - vertices[b]).norm();
        max = max.max(l);
        min = min.min(l);
    };
    match faces {
        Faces::Triangles(tris) => {
            for t in tris {
                take(t[0], t[1]);
                take(t[1], t[2]);
                take(t[2], t[0]);
            }
        }
        Faces::Edges(edges) => {
            for e in edges {
                take(e[0], e[1]);
            }
        }
    }
    (max, min)
}

/// Union-find component labeling over face connectivity.
fn components(nverts: usize, faces: &Faces) -> (Vec<usize>, usize) {
    let mut parent: Vec<usize> = (0..nverts).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let union = |a: usize, b: usize, parent: &mut Vec<usize>| {
        let (ra, rb) = (find(parent, a), find(parent, b));
        if ra != rb {
            parent[ra] = rb;
        }
    };
    match faces {
        Faces::Triangles(tris) => {
            for t in tris {
                union(t[0], t[1], &mut parent);
                union(t[1], t[2], &mut parent);
            }
        }
        Faces::Edges(edges) => {
            for e in edges {
                union(e[0], e[1], &mut parent);
            }
        }
    }
    let mut label_of_root: HashMap<usize, usize> = HashMap::new();
    let mut labels = vec![0usize; nverts];
    let mut next = 0usize;
    for v in 0..nverts {
        let r = find(&mut parent, v);
        let l = *label_of_root.entry(r).or_insert_with(|| {
            let l = next;
            next += 1;
            l
        });
        labels[v] = l;
    }
    (labels, next)
}
