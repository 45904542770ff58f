//! Analytic shape descriptions and their tessellations.
//!
//! Shapes double as exact oracles: the tessellators place vertices exactly on
//! the analytic surface, so enclosed volumes converge at second order in the
//! edge length.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{Boundary, Dim};
use crate::{Error, Result};

/// One radial perturbation mode: a real spherical harmonic `(l, m)` in space
/// or a Fourier mode `k` in the plane (`k > 0` cosine, `k < 0` sine of `|k|`).
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum PerturbationMode {
    Harmonic { l: u32, m: i32, amp: f64 },
    Fourier { k: i32, amp: f64 },
}

/// Analytic shape with a tessellation resolution.
///
/// `resolution` is the icosphere subdivision level in space (level 3 has 642
/// vertices per sphere, level 4 has 2562) and sets `16 * 2^level` polygon
/// vertices per circle in the plane.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ShapeSpec {
    Ball {
        dim: usize,
        center: [f64; 3],
        radius: f64,
        resolution: u32,
    },
    BallUnion {
        dim: usize,
        balls: Vec<BallSpec>,
        resolution: u32,
    },
    Annulus {
        dim: usize,
        outer: f64,
        inner: f64,
        resolution: u32,
    },
    PerturbedBall {
        dim: usize,
        radius: f64,
        modes: Vec<PerturbationMode>,
        resolution: u32,
    },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct BallSpec {
    pub center: [f64; 3],
    pub radius: f64,
}

impl ShapeSpec {
    pub fn dim(&self) -> Result<Dim> {
        let d = match self {
            ShapeSpec::Ball { dim, .. }
            | ShapeSpec::BallUnion { dim, .. }
            | ShapeSpec::Annulus { dim, .. }
            | ShapeSpec::PerturbedBall { dim, .. } => *dim,
        };
        match d {
            2 => Ok(Dim::Two),
            3 => Ok(Dim::Three),
            _ => Err(Error::Unsupported(format!("dimension {d}"))),
        }
    }

    /// Exact enclosed volume of the analytic shape.
    pub fn analytic_volume(&self) -> Result<f64> {
        use std::f64::consts::PI;
        let ball = |dim: Dim, r: f64| match dim {
            Dim::Two => PI * r * r,
            Dim::Three => 4.0 / 3.0 * PI * r * r * r,
        };
        let dim = self.dim()?;
        Ok(match self {
            ShapeSpec::Ball { radius, .. } => ball(dim, *radius),
            ShapeSpec::BallUnion { balls, .. } => {
                balls.iter().map(|b| ball(dim, b.radius)).sum()
            }
            ShapeSpec::Annulus { outer, inner, .. } => ball(dim, *outer) - ball(dim, *inner),
            // No closed form in general; exposed only for exact shapes.
            ShapeSpec::PerturbedBall { .. } => {
                return Err(Error::Unsupported(
                    "analytic volume of a perturbed ball".into(),
                ))
            }
        })
    }

    fn validate(&self) -> Result<()> {
        match self {
            ShapeSpec::Ball { radius, .. } => {
                if *radius <= 0.0 {
                    return Err(Error::InvalidShape("ball radius must be positive".into()));
                }
            }
            ShapeSpec::BallUnion { dim, balls, .. } => {
                if balls.is_empty() {
                    return Err(Error::InvalidShape("empty ball union".into()));
                }
                for b in balls {
                    if b.radius <= 0.0 {
                        return Err(Error::InvalidShape("ball radius must be positive".into()));
                    }
                }
                for i in 0..balls.len() {
                    for j in (i + 1)..balls.len() {
                        let ci = Vector3::from(balls[i].center);
                        let cj = Vector3::from(balls[j].center);
                        let d = (ci - cj).norm();
                        let touch = balls[i].radius + balls[j].radius;
                        let tol = 1e-12 * touch;
                        if d < touch - tol {
                            return Err(Error::InvalidShape(format!(
                                "balls {i} and {j} overlap: centers {d:.6} apart, radii sum {touch:.6}"
                            )));
                        }
                        if d <= touch + tol && *dim == 2 {
                            return Err(Error::Unsupported(
                                "tangent balls cannot be represented as disjoint polygon loops"
                                    .into(),
                            ));
                        }
                    }
                }
            }
            ShapeSpec::Annulus { outer, inner, .. } => {
                if !(*inner > 0.0 && inner < outer) {
                    return Err(Error::InvalidShape(
                        "annulus radii must satisfy 0 < inner < outer".into(),
                    ));
                }
            }
            ShapeSpec::PerturbedBall { radius, .. } => {
                if *radius <= 0.0 {
                    return Err(Error::InvalidShape("ball radius must be positive".into()));
                }
            }
        }
        Ok(())
    }
}

/// Tessellate an analytic shape into a discrete boundary.
pub fn tessellate(spec: &ShapeSpec) -> Result<Boundary> {
    spec.validate()?;
    let dim = spec.dim()?;
    match (spec, dim) {
        (ShapeSpec::Ball { center, radius, resolution, .. }, Dim::Three) => {
            let (v, t) = icosphere(*resolution);
            let c = Vector3::from(*center);
            Boundary::from_triangles(v.into_iter().map(|p| c + *radius * p).collect(), t)
        }
        (ShapeSpec::Ball { center, radius, resolution, .. }, Dim::Two) => {
            let c = Vector3::from(*center);
            Boundary::from_loops_vec(vec![circle_loop(c, *radius, *resolution, false)])
        }
        (ShapeSpec::BallUnion { balls, resolution, .. }, Dim::Three) => {
            let mut verts = Vec::new();
            let mut tris = Vec::new();
            for b in balls {
                let (v, t) = icosphere(*resolution);
                let base = verts.len();
                let c = Vector3::from(b.center);
                verts.extend(v.into_iter().map(|p| c + b.radius * p));
                tris.extend(t.into_iter().map(|f| [f[0] + base, f[1] + base, f[2] + base]));
            }
            Boundary::from_triangles(verts, tris)
        }
        (ShapeSpec::BallUnion { balls, resolution, .. }, Dim::Two) => {
            let loops = balls
                .iter()
                .map(|b| circle_loop(Vector3::from(b.center), b.radius, *resolution, false))
                .collect();
            Boundary::from_loops_vec(loops)
        }
        (ShapeSpec::Annulus { outer, inner, resolution, .. }, Dim::Three) => {
            let (vo, to) = icosphere(*resolution);
            let (vi, ti) = icosphere(*resolution);
            let mut verts: Vec<Vector3<f64>> = vo.into_iter().map(|p| *outer * p).collect();
            let mut tris = to;
            let base = verts.len();
            verts.extend(vi.into_iter().map(|p| *inner * p));
            // Inner sphere with reversed orientation: its normal points into
            // the hole, outward of the enclosed shell.
            tris.extend(ti.into_iter().map(|f| [f[0] + base, f[2] + base, f[1] + base]));
            Boundary::from_triangles(verts, tris)
        }
        (ShapeSpec::Annulus { outer, inner, resolution, .. }, Dim::Two) => {
            Boundary::from_loops_vec(vec![
                circle_loop(Vector3::zeros(), *outer, *resolution, false),
                circle_loop(Vector3::zeros(), *inner, *resolution, true),
            ])
        }
        (ShapeSpec::PerturbedBall { radius, modes, resolution, .. }, Dim::Three) => {
            let (v, t) = icosphere(*resolution);
            let mut verts = Vec::with_capacity(v.len());
            for dir in v {
                let mut factor = 1.0;
                for mode in modes {
                    match mode {
                        PerturbationMode::Harmonic { l, m, amp } => {
                            factor += amp * real_spherical_harmonic(*l, *m, dir);
                        }
                        PerturbationMode::Fourier { .. } => {
                            return Err(Error::InvalidShape(
                                "Fourier modes are planar; use harmonic (l, m) modes in space"
                                    .into(),
                            ))
                        }
                    }
                }
                if factor <= 1e-6 {
                    return Err(Error::InvalidShape(
                        "perturbation amplitude too large: radial graph nonpositive".into(),
                    ));
                }
                verts.push(radius * factor * dir);
            }
            Boundary::from_triangles(verts, t)
        }
        (ShapeSpec::PerturbedBall { radius, modes, resolution, .. }, Dim::Two) => {
            let m = circle_vertex_count(*resolution);
            let mut lp = Vec::with_capacity(m);
            for i in 0..m {
                let theta = std::f64::consts::TAU * i as f64 / m as f64;
                let mut factor = 1.0;
                for mode in modes {
                    match mode {
                        PerturbationMode::Fourier { k, amp } => {
                            factor += amp
                                * if *k >= 0 {
                                    (*k as f64 * theta).cos()
                                } else {
                                    ((-k) as f64 * theta).sin()
                                };
                        }
                        PerturbationMode::Harmonic { .. } => {
                            return Err(Error::InvalidShape(
                                "harmonic (l, m) modes are spatial; use Fourier k modes in the plane"
                                    .into(),
                            ))
                        }
                    }
                }
                if factor <= 1e-6 {
                    return Err(Error::InvalidShape(
                        "perturbation amplitude too large: radial graph nonpositive".into(),
                    ));
                }
                let r = radius * factor;
                lp.push([r * theta.cos(), r * theta.sin()]);
            }
            Boundary::from_loops_vec(vec![lp])
        }
    }
}

impl Boundary {
    fn from_loops_vec(loops: Vec<Vec<[f64; 2]>>) -> Result<Boundary> {
        Boundary::from_loops(loops)
    }
}

pub(crate) fn circle_vertex_count(resolution: u32) -> usize {
    16usize << resolution.min(12)
}

fn circle_loop(center: Vector3<f64>, r: f64, resolution: u32, clockwise: bool) -> Vec<[f64; 2]> {
    let m = circle_vertex_count(resolution);
    let mut lp = Vec::with_capacity(m);
    for i in 0..m {
        let theta = std::f64::consts::TAU * i as f64 / m as f64;
        let theta = if clockwise { -theta } else { theta };
        lp.push([center.x + r * theta.cos(), center.y + r * theta.sin()]);
    }
    lp
}

/// Unit icosphere: subdivided icosahedron with vertices projected onto the
/// sphere. Level `l` has `10 * 4^l + 2` vertices.
pub fn icosphere(level: u32) -> (Vec<Vector3<f64>>, Vec<[usize; 3]>) {
    let phi = (1.0 + 5.0_f64.sqrt()) / 2.0;
    let mut verts: Vec<Vector3<f64>> = vec![
        Vector3::new(-1.0, phi, 0.0),
        Vector3::new(1.0, phi, 0.0),
        Vector3::new(-1.0, -phi, 0.0),
        Vector3::new(1.0, -phi, 0.0),
        Vector3::new(0.0, -1.0, phi),
        Vector3::new(0.0, 1.0, phi),
        Vector3::new(0.0, -1.0, -phi),
        Vector3::new(0.0, 1.0, -phi),
        Vector3::new(phi, 0.0, -1.0),
        Vector3::new(phi, 0.0, 1.0),
        Vector3::new(-phi, 0.0, -1.0),
        Vector3::new(-phi, 0.0, 1.0),
    ]
    .into_iter()
    .map(|v| v.normalize())
    .collect();

    let mut tris: Vec<[usize; 3]> = vec![
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ];

    for _ in 0..level {
        let mut midpoint: std::collections::HashMap<(usize, usize), usize> =
            std::collections::HashMap::new();
        let mut next = Vec::with_capacity(tris.len() * 4);
        for t in &tris {
            let mut mid = [0usize; 3];
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                mid[k] = *midpoint.entry(key).or_insert_with(|| {
                    let p = (verts[a] + verts[b]).normalize();
                    verts.push(p);
                    verts.len() - 1
                });
            }
            next.push([t[0], mid[0], mid[2]]);
            next.push([t[1], mid[1], mid[0]]);
            next.push([t[2], mid[2], mid[1]]);
            next.push([mid[0], mid[1], mid[2]]);
        }
        tris = next;
    }
    (verts, tris)
}

/// Real orthonormal spherical harmonic `Y_{l m}` evaluated at a unit vector.
///
/// Normalized so that the squared integral over the unit sphere is 1;
/// `m > 0` are cosine modes, `m < 0` sine modes.
pub fn real_spherical_harmonic(l: u32, m: i32, dir: Vector3<f64>) -> f64 {
    use std::f64::consts::PI;
    let l = l as i64;
    let ma = m.unsigned_abs() as i64;
    assert!(ma <= l, "|m| must not exceed l");
    let ct = dir.z.clamp(-1.0, 1.0);
    let phi = dir.y.atan2(dir.x);
    let p = associated_legendre(l, ma, ct);
    let mut norm = ((2 * l + 1) as f64 / (4.0 * PI)).sqrt();
    if ma > 0 {
        let mut ratio = 1.0;
        for k in (l - ma + 1)..=(l + ma) {
            ratio *= k as f64;
        }
        norm *= (2.0 / ratio).sqrt();
    }
    let angular = if m > 0 {
        (ma as f64 * phi).cos()
    } else if m < 0 {
        (ma as f64 * phi).sin()
    } else {
        1.0
    };
    norm * p * angular
}

/// Associated Legendre function `P_l^m(x)` with the Condon-Shortley phase.
fn associated_legendre(l: i64, m: i64, x: f64) -> f64 {
    let somx2 = ((1.0 - x) * (1.0 + x)).max(0.0).sqrt();
    let mut pmm = 1.0;
    let mut fact = 1.0;
    for _ in 0..m {
        pmm *= -fact * somx2;
        fact += 2.0;
    }
    if l == m {
        return pmm;
    }
    let mut pmmp1 = x * (2 * m + 1) as f64 * pmm;
    if l == m + 1 {
        return pmmp1;
    }
    let mut pll = 0.0;
    for ll in (m + 2)..=l {
        pll = ((2 * ll - 1) as f64 * x * pmmp1 - (ll + m - 1) as f64 * pmm) / (ll - m) as f64;
        pmm = pmmp1;
        pmmp1 = pll;
    }
    pll
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn icosphere_counts() {
        for level in 0..4 {
            let (v, t) = icosphere(level);
            assert_eq!(v.len(), 10 * 4usize.pow(level) + 2);
            assert_eq!(t.len(), 20 * 4usize.pow(level));
        }
    }

    #[test]
    fn harmonics_orthonormal_on_grid() {
        // Lebedev-free check: product Gauss grid in (cos theta, phi).
        let nt = 64;
        let np = 128;
        let modes: Vec<(u32, i32)> = vec![(0, 0), (1, 0), (1, 1), (2, 0), (2, -1), (3, 2)];
        for &(l1, m1) in &modes {
            for &(l2, m2) in &modes {
                let mut acc = 0.0;
                for i in 0..nt {
                    let theta = PI * (i as f64 + 0.5) / nt as f64;
                    for j in 0..np {
                        let phi = std::f64::consts::TAU * j as f64 / np as f64;
                        let dir = Vector3::new(
                            theta.sin() * phi.cos(),
                            theta.sin() * phi.sin(),
                            theta.cos(),
                        );
                        let w = theta.sin() * (PI / nt as f64) * (std::f64::consts::TAU / np as f64);
                        acc += w
                            * real_spherical_harmonic(l1, m1, dir)
                            * real_spherical_harmonic(l2, m2, dir);
                    }
                }
                let expect = if (l1, m1) == (l2, m2) { 1.0 } else { 0.0 };
                assert!(
                    (acc - expect).abs() < 2e-3,
                    "({l1},{m1}) x ({l2},{m2}): {acc}"
                );
            }
        }
    }
}
