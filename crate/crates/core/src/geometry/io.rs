//! Mesh ingestion and dumps: ASCII OFF triangle meshes and CSV vertex loops.

use std::io::{BufRead, Write};
use std::path::Path;

use nalgebra::Vector3;

use super::{Boundary, Faces};
use crate::{Error, Result};

/// Read an ASCII OFF triangle mesh.
pub fn read_off(path: &Path) -> Result<Boundary> {
    let file = std::fs::File::open(path)?;
    let mut lines = std::io::BufReader::new(file)
        .lines()
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .map(|l| l.trim().to_string())
        .filter(|l| !l.is_empty() && !l.starts_with('#'));

    let header = lines.next().ok_or_else(|| Error::Parse("empty OFF file".into()))?;
    let counts_line = if header == "OFF" {
        lines.next().ok_or_else(|| Error::Parse("missing OFF counts".into()))?
    } else {
        header
    };
    let counts: Vec<usize> = counts_line
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad OFF count `{t}`"))))
        .collect::<Result<_>>()?;
    if counts.len() < 2 {
        return Err(Error::Parse("OFF counts line needs vertices and faces".into()));
    }
    let (nv, nf) = (counts[0], counts[1]);

    let mut verts = Vec::with_capacity(nv);
    for _ in 0..nv {
        let line = lines.next().ok_or_else(|| Error::Parse("truncated OFF vertices".into()))?;
        let xyz: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad coordinate `{t}`"))))
            .collect::<Result<_>>()?;
        if xyz.len() != 3 {
            return Err(Error::Parse("OFF vertex needs 3 coordinates".into()));
        }
        verts.push(Vector3::new(xyz[0], xyz[1], xyz[2]));
    }
    let mut tris = Vec::with_capacity(nf);
    for _ in 0..nf {
        let line = lines.next().ok_or_else(|| Error::Parse("truncated OFF faces".into()))?;
        let ids: Vec<usize> = line
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad face index `{t}`"))))
            .collect::<Result<_>>()?;
        if ids.first() != Some(&3) || ids.len() != 4 {
            return Err(Error::Unsupported("only triangle OFF faces are supported".into()));
        }
        tris.push([ids[1], ids[2], ids[3]]);
    }
    Boundary::from_triangles(verts, tris)
}

/// Write an ASCII OFF triangle mesh.
pub fn write_off(b: &Boundary, path: &Path) -> Result<()> {
    let tris = match &b.faces {
        Faces::Triangles(t) => t,
        Faces::Edges(_) => {
            return Err(Error::Unsupported("OFF output needs a triangle mesh".into()))
        }
    };
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "OFF")?;
    writeln!(out, "{} {} 0", b.vertices.len(), tris.len())?;
    for v in &b.vertices {
        writeln!(out, "{} {} {}", v.x, v.y, v.z)?;
    }
    for t in tris {
        writeln!(out, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    Ok(())
}

/// Read planar vertex loops from CSV: one `x,y` pair per line, loops
/// separated by blank lines, orientation as stored.
pub fn read_loops_csv(path: &Path) -> Result<Boundary> {
    let text = std::fs::read_to_string(path)?;
    let mut loops: Vec<Vec<[f64; 2]>> = Vec::new();
    let mut current: Vec<[f64; 2]> = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            if !current.is_empty() {
                loops.push(std::mem::take(&mut current));
            }
            continue;
        }
        let parts: Vec<&str> = line.split(',').map(|t| t.trim()).collect();
        if parts.len() != 2 {
            return Err(Error::Parse(format!("expected `x,y`, got `{line}`")));
        }
        let x = parts[0].parse().map_err(|_| Error::Parse(format!("bad number `{}`", parts[0])))?;
        let y = parts[1].parse().map_err(|_| Error::Parse(format!("bad number `{}`", parts[1])))?;
        current.push([x, y]);
    }
    if !current.is_empty() {
        loops.push(current);
    }
    if loops.is_empty() {
        return Err(Error::Parse("no loops in CSV".into()));
    }
    Boundary::from_loops(loops)
}

/// Write planar vertex loops as CSV (blank line between loops).
pub fn write_loops_csv(b: &Boundary, path: &Path) -> Result<()> {
    let edges = match &b.faces {
        Faces::Edges(e) => e.clone(),
        Faces::Triangles(_) => {
            return Err(Error::Unsupported("CSV loop output needs a planar boundary".into()))
        }
    };
    let mut next = vec![usize::MAX; b.vertices.len()];
    for e in &edges {
        next[e[0]] = e[1];
    }
    let mut seen = vec![false; b.vertices.len()];
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    let mut first_loop = true;
    for start in 0..b.vertices.len() {
        if seen[start] {
            continue;
        }
        if !first_loop {
            writeln!(out)?;
        }
        first_loop = false;
        let mut v = start;
        loop {
            seen[v] = true;
            writeln!(out, "{},{}", b.vertices[v].x, b.vertices[v].y)?;
            v = next[v];
            if v == start {
                break;
            }
        }
    }
    Ok(())
}
