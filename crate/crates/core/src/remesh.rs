//! Isotropic remeshing: split long edges, collapse short ones, flip for
//! valence, smooth tangentially, rescale the volume exactly. The target
//! edge length is the current mean. A result that fails validation is
//! discarded and the original boundary returned with a warning.

use std::collections::HashMap;

use nalgebra::Vector3;

use crate::geometry::{Boundary, Dim, Faces};
use crate::Result;

#[derive(Debug, Clone, serde::Serialize)]
pub struct RemeshReport {
    pub changed: bool,
    pub warning: Option<String>,
    /// Relative change of the area-weighted L2 norm of the mean curvature.
    pub curvature_l2_change: f64,
    /// Largest relative volume drift observed before a rescale.
    pub max_volume_drift: f64,
    pub splits: usize,
    pub collapses: usize,
    pub flips: usize,
}

fn curvature_l2(b: &Boundary) -> f64 {
    b.mean_curvature()
        .iter()
        .zip(b.vertex_areas())
        .map(|(h, a)| h * h * a)
        .sum::<f64>()
        .sqrt()
}

/// Remesh toward uniform edge lengths; the enclosed volume is restored by an
/// exact rescale after every pass.
pub fn remesh(b: &Boundary) -> Result<(Boundary, RemeshReport)> {
    match b.dim() {
        Dim::Three => remesh_surface(b),
        Dim::Two => remesh_curve(b),
    }
}

fn remesh_surface(b: &Boundary) -> Result<(Boundary, RemeshReport)> {
    let target_volume = b.volume();
    let curv_before = curvature_l2(b);
    let mean_edge = mean_edge_length(b.vertices(), b.triangles());

    let mut current = b.clone();
    let mut report = RemeshReport {
        changed: false,
        warning: None,
        curvature_l2_change: 0.0,
        max_volume_drift: 0.0,
        splits: 0,
        collapses: 0,
        flips: 0,
    };

    let commit = |verts: &Vec<Vector3<f64>>,
                      tris: &Vec<[usize; 3]>,
                      current: &mut Boundary,
                      report: &mut RemeshReport|
     -> bool {
        match Boundary::from_triangles(verts.clone(), tris.clone()) {
            Ok(nb) => {
                let drift = (nb.volume() / target_volume - 1.0).abs();
                report.max_volume_drift = report.max_volume_drift.max(drift);
                match nb.rescaled_to_volume(target_volume) {
                    Ok(nb) => {
                        *current = nb;
                        true
                    }
                    Err(e) => {
                        report.warning = Some(format!("rescale failed: {e}"));
                        false
                    }
                }
            }
            Err(e) => {
                report.warning = Some(format!("pass produced invalid mesh: {e}"));
                false
            }
        }
    };

    for _round in 0..3 {
        let mut verts: Vec<Vector3<f64>> = current.vertices().to_vec();
        let mut tris: Vec<[usize; 3]> = current.triangles().to_vec();

        let splits = split_pass(&mut verts, &mut tris, 4.0 / 3.0 * mean_edge);
        report.splits += splits;
        if splits > 0 {
            if !commit(&verts, &tris, &mut current, &mut report) {
                return Ok((b.clone(), report));
            }
            verts = current.vertices().to_vec();
            tris = current.triangles().to_vec();
            report.changed = true;
        }

        let collapses = collapse_pass(&mut verts, &mut tris, 0.8 * mean_edge);
        report.collapses += collapses;
        if collapses > 0 {
            if !commit(&verts, &tris, &mut current, &mut report) {
                return Ok((b.clone(), report));
            }
            verts = current.vertices().to_vec();
            tris = current.triangles().to_vec();
            report.changed = true;
        }

        let flips = flip_pass(&verts, &mut tris);
        report.flips += flips;
        if flips > 0 {
            if !commit(&verts, &tris, &mut current, &mut report) {
                return Ok((b.clone(), report));
            }
            tris = current.triangles().to_vec();
            report.changed = true;
        }

        // Tangential smoothing on the committed boundary.
        for _ in 0..3 {
            let smoothed = smooth_tangential(&current, 0.6);
            if !commit(&smoothed, &tris, &mut current, &mut report) {
                return Ok((b.clone(), report));
            }
        }
        report.changed = true;
    }

    let curv_after = curvature_l2(&current);
    report.curvature_l2_change = (curv_after - curv_before).abs() / curv_before.max(1e-300);
    Ok((current, report))
}

fn mean_edge_length(verts: &[Vector3<f64>], tris: &[[usize; 3]]) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for t in tris {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            if a < b {
                sum += (verts[a] - verts[b]).norm();
                count += 1;
            }
        }
    }
    sum / count as f64
}

fn edge_faces(tris: &[[usize; 3]]) -> HashMap<(usize, usize), Vec<usize>> {
    let mut map: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (fi, t) in tris.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            map.entry((a.min(b), a.max(b))).or_default().push(fi);
        }
    }
    map
}

fn split_pass(verts: &mut Vec<Vector3<f64>>, tris: &mut Vec<[usize; 3]>, threshold: f64) -> usize {
    let map = edge_faces(tris);
    let mut candidates: Vec<((usize, usize), f64)> = map
        .keys()
        .map(|&(a, b)| ((a, b), (verts[a] - verts[b]).norm()))
        .filter(|&(_, l)| l > threshold)
        .collect();
    candidates.sort_by(|x, y| y.1.partial_cmp(&x.1).unwrap().then(x.0.cmp(&y.0)));

    let mut face_used = vec![false; tris.len()];
    let mut splits = Vec::new();
    for ((a, b), _) in candidates {
        let faces = &map[&(a, b)];
        if faces.iter().any(|&f| face_used[f]) {
            continue;
        }
        for &f in faces {
            face_used[f] = true;
        }
        splits.push((a, b, faces.clone()));
    }

    let mut removed: Vec<usize> = Vec::new();
    for (a, b, faces) in &splits {
        let m = verts.len();
        verts.push((verts[*a] + verts[*b]) / 2.0);
        for &f in faces {
            let t = tris[f];
            // Rotate so the split edge is (t[0], t[1]).
            let rot = (0..3)
                .find(|&k| {
                    (t[k] == *a && t[(k + 1) % 3] == *b) || (t[k] == *b && t[(k + 1) % 3] == *a)
                })
                .unwrap();
            let (i, j, k) = (t[rot], t[(rot + 1) % 3], t[(rot + 2) % 3]);
            tris.push([i, m, k]);
            tris.push([m, j, k]);
            removed.push(f);
        }
    }
    removed.sort_unstable();
    for &f in removed.iter().rev() {
        tris.swap_remove(f);
    }
    splits.len()
}

fn collapse_pass(verts: &mut Vec<Vector3<f64>>, tris: &mut Vec<[usize; 3]>, threshold: f64) -> usize {
    let n = verts.len();
    let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); n];
    for t in tris.iter() {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            if !neighbors[a].contains(&b) {
                neighbors[a].push(b);
            }
            if !neighbors[b].contains(&a) {
                neighbors[b].push(a);
            }
        }
    }
    let map = edge_faces(tris);
    let mut candidates: Vec<((usize, usize), f64)> = map
        .keys()
        .map(|&(a, b)| ((a, b), (verts[a] - verts[b]).norm()))
        .filter(|&(_, l)| l < threshold)
        .collect();
    candidates.sort_by(|x, y| x.1.partial_cmp(&y.1).unwrap().then(x.0.cmp(&y.0)));

    let mut touched = vec![false; n];
    let mut remap: Vec<usize> = (0..n).collect();
    let mut collapses = 0usize;
    for ((a, b), _) in candidates {
        if touched[a] || touched[b] {
            continue;
        }
        // Link condition: shared neighbors must be exactly the two faces'
        // opposite vertices.
        let shared: Vec<usize> = neighbors[a]
            .iter()
            .filter(|x| neighbors[b].contains(x))
            .cloned()
            .collect();
        if shared.len() != 2 {
            continue;
        }
        // Keep minimum valence 3 after the merge.
        if neighbors[a].len() + neighbors[b].len() - 4 < 3 {
            continue;
        }
        for &x in neighbors[a].iter().chain(&neighbors[b]) {
            touched[x] = true;
        }
        touched[a] = true;
        touched[b] = true;
        verts[a] = (verts[a] + verts[b]) / 2.0;
        remap[b] = a;
        collapses += 1;
    }
    if collapses == 0 {
        return 0;
    }

    for t in tris.iter_mut() {
        for v in t.iter_mut() {
            *v = remap[*v];
        }
    }
    tris.retain(|t| t[0] != t[1] && t[1] != t[2] && t[0] != t[2]);

    // Compact unused vertices.
    let mut used = vec![false; verts.len()];
    for t in tris.iter() {
        for &v in t {
            used[v] = true;
        }
    }
    let mut new_index = vec![usize::MAX; verts.len()];
    let mut next = 0usize;
    for (i, &u) in used.iter().enumerate() {
        if u {
            new_index[i] = next;
            next += 1;
        }
    }
    let mut new_verts = Vec::with_capacity(next);
    for (i, &u) in used.iter().enumerate() {
        if u {
            new_verts.push(verts[i]);
        }
    }
    for t in tris.iter_mut() {
        for v in t.iter_mut() {
            *v = new_index[*v];
        }
    }
    *verts = new_verts;
    collapses
}

fn flip_pass(verts: &[Vector3<f64>], tris: &mut Vec<[usize; 3]>) -> usize {
    let n = verts.len();
    let mut valence = vec![0usize; n];
    let map = edge_faces(tris);
    for &(a, b) in map.keys() {
        valence[a] += 1;
        valence[b] += 1;
    }
    let mut edges: Vec<(usize, usize)> = map.keys().cloned().collect();
    edges.sort_unstable();

    let mut face_used = vec![false; tris.len()];
    let mut flips = 0usize;
    for (a, b) in edges {
        let faces = &map[&(a, b)];
        if faces.len() != 2 || faces.iter().any(|&f| face_used[f]) {
            continue;
        }
        let (f0, f1) = (faces[0], faces[1]);
        let opp = |t: &[usize; 3]| *t.iter().find(|&&v| v != a && v != b).unwrap();
        let k = opp(&tris[f0]);
        let l = opp(&tris[f1]);
        if k == l || map.contains_key(&(k.min(l), k.max(l))) {
            continue;
        }
        let dev = |v: usize, delta: i64| -> i64 {
            ((valence[v] as i64 + delta) - 6).abs()
        };
        let before = dev(a, 0) + dev(b, 0) + dev(k, 0) + dev(l, 0);
        let after = dev(a, -1) + dev(b, -1) + dev(k, 1) + dev(l, 1);
        if after >= before {
            continue;
        }
        // Orientation-consistent replacement of the diagonal.
        let t0 = tris[f0];
        let rot = (0..3)
            .find(|&r| {
                (t0[r] == a && t0[(r + 1) % 3] == b) || (t0[r] == b && t0[(r + 1) % 3] == a)
            })
            .unwrap();
        let (i, j) = (t0[rot], t0[(rot + 1) % 3]);
        let new0 = [i, l, k];
        let new1 = [l, j, k];
        // Reject flips that produce degenerate or folded triangles.
        let area = |t: &[usize; 3]| {
            (verts[t[1]] - verts[t[0]])
                .cross(&(verts[t[2]] - verts[t[0]]))
        };
        let old_n = (area(&tris[f0]) + area(&tris[f1])).normalize();
        let (a0, a1) = (area(&new0), area(&new1));
        if a0.norm() < 1e-14 || a1.norm() < 1e-14 {
            continue;
        }
        if a0.normalize().dot(&old_n) < 0.2 || a1.normalize().dot(&old_n) < 0.2 {
            continue;
        }
        tris[f0] = new0;
        tris[f1] = new1;
        face_used[f0] = true;
        face_used[f1] = true;
        valence[a] -= 1;
        valence[b] -= 1;
        valence[k] += 1;
        valence[l] += 1;
        flips += 1;
    }
    flips
}

fn smooth_tangential(b: &Boundary, lambda: f64) -> Vec<Vector3<f64>> {
    let nbrs = b.vertex_neighbors();
    let mut out = b.vertices().to_vec();
    for i in 0..b.vertex_count() {
        let mut centroid = Vector3::zeros();
        let mut wsum = 0.0;
        for &j in &nbrs[i] {
            let w = b.vertex_areas()[j];
            centroid += w * b.vertices()[j];
            wsum += w;
        }
        if wsum <= 0.0 {
            continue;
        }
        centroid /= wsum;
        let mut d = lambda * (centroid - b.vertices()[i]);
        d -= d.dot(&b.normals()[i]) * b.normals()[i];
        out[i] += d;
    }
    out
}

fn remesh_curve(b: &Boundary) -> Result<(Boundary, RemeshReport)> {
    let target_volume = b.volume();
    let curv_before = curvature_l2(b);
    let mean = b.perimeter() / b.face_count() as f64;

    // Extract loops in traversal order.
    let edges = match b.faces() {
        Faces::Edges(e) => e.clone(),
        _ => unreachable!(),
    };
    let mut next = vec![usize::MAX; b.vertex_count()];
    for e in &edges {
        next[e[0]] = e[1];
    }
    let mut seen = vec![false; b.vertex_count()];
    let mut loops: Vec<Vec<Vector3<f64>>> = Vec::new();
    for start in 0..b.vertex_count() {
        if seen[start] {
            continue;
        }
        let mut lp = Vec::new();
        let mut v = start;
        loop {
            seen[v] = true;
            lp.push(b.vertices()[v]);
            v = next[v];
            if v == start {
                break;
            }
        }
        loops.push(lp);
    }

    let mut splits = 0usize;
    let mut collapses = 0usize;
    for lp in &mut loops {
        // Split long edges.
        let mut out = Vec::with_capacity(lp.len() * 2);
        for k in 0..lp.len() {
            let (p, q) = (lp[k], lp[(k + 1) % lp.len()]);
            out.push(p);
            if (q - p).norm() > 4.0 / 3.0 * mean {
                out.push((p + q) / 2.0);
                splits += 1;
            }
        }
        // Collapse short edges (keep at least 8 vertices).
        let mut kept: Vec<Vector3<f64>> = Vec::with_capacity(out.len());
        let mut skip = false;
        for k in 0..out.len() {
            if skip {
                skip = false;
                continue;
            }
            let (p, q) = (out[k], out[(k + 1) % out.len()]);
            if (q - p).norm() < 0.8 * mean && kept.len() + (out.len() - k) > 8 && k + 1 < out.len()
            {
                kept.push((p + q) / 2.0);
                skip = true;
                collapses += 1;
            } else {
                kept.push(p);
            }
        }
        *lp = kept;
    }

    let loops2d: Vec<Vec<[f64; 2]>> = loops
        .iter()
        .map(|lp| lp.iter().map(|p| [p.x, p.y]).collect())
        .collect();
    let mut report = RemeshReport {
        changed: splits + collapses > 0,
        warning: None,
        curvature_l2_change: 0.0,
        max_volume_drift: 0.0,
        splits,
        collapses,
        flips: 0,
    };
    let rebuilt = match Boundary::from_loops(loops2d) {
        Ok(nb) => nb,
        Err(e) => {
            report.warning = Some(format!("pass produced invalid loops: {e}"));
            return Ok((b.clone(), report));
        }
    };
    report.max_volume_drift = (rebuilt.volume() / target_volume - 1.0).abs();
    let rebuilt = rebuilt.rescaled_to_volume(target_volume)?;
    report.curvature_l2_change =
        (curvature_l2(&rebuilt) - curv_before).abs() / curv_before.max(1e-300);
    Ok((rebuilt, report))
}
