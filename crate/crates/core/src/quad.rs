//! Quadrature primitives: triangle rules with distance-driven subdivision,
//! Duffy corner transforms for the weakly singular Newtonian kernel, exact
//! log-moment integrals on segments, and exact face/ball clipping.

use nalgebra::{Vector2, Vector3};

/// Degree-2 midedge rule on a triangle: points and weights summing to the
/// triangle area.
pub fn tri_midedge_rule(
    a: Vector3<f64>,
    b: Vector3<f64>,
    c: Vector3<f64>,
) -> [(Vector3<f64>, f64); 3] {
    let area = 0.5 * (b - a).cross(&(c - a)).norm();
    let w = area / 3.0;
    [
        ((a + b) / 2.0, w),
        ((b + c) / 2.0, w),
        ((c + a) / 2.0, w),
    ]
}

/// 16-point Gauss-Legendre nodes/weights on [0, 1].
pub const GAUSS16: [(f64, f64); 16] = [
    (0.0052995325041750, 0.0135762297058770),
    (0.0277124884633837, 0.0311267619693239),
    (0.0671843988060841, 0.0475792558412464),
    (0.1222977958224985, 0.0623144856277669),
    (0.1910618777986781, 0.0747979944082884),
    (0.2709916111713863, 0.0845782596975013),
    (0.3591982246103705, 0.0913017075224618),
    (0.4524937450811813, 0.0947253052275343),
    (0.5475062549188187, 0.0947253052275343),
    (0.6408017753896295, 0.0913017075224618),
    (0.7290083888286137, 0.0845782596975013),
    (0.8089381222013219, 0.0747979944082884),
    (0.8777022041775015, 0.0623144856277669),
    (0.9328156011939159, 0.0475792558412464),
    (0.9722875115366163, 0.0311267619693239),
    (0.9947004674958250, 0.0135762297058770),
];

/// 8-point Gauss-Legendre nodes/weights on [0, 1].
pub const GAUSS8: [(f64, f64); 8] = [
    (0.0198550717512319, 0.0506142681451881),
    (0.1016667612931866, 0.1111905172266872),
    (0.2372337950418355, 0.1568533229389436),
    (0.4082826787521751, 0.1813418916891810),
    (0.5917173212478249, 0.1813418916891810),
    (0.7627662049581645, 0.1568533229389436),
    (0.8983332387068134, 0.1111905172266872),
    (0.9801449282487681, 0.0506142681451881),
];

/// Moments of the corner-singular Newtonian kernel over a flat triangle:
///
/// `int_T phi(y) / |y - c| dA(y)` for the three linear hat functions of the
/// triangle `(c, p, q)`, where `c` is the singular corner. The Duffy
/// substitution `y = c + u ((1-v)(p-c) + v(q-c))` cancels the singularity
/// exactly and leaves a smooth 1D integral in `v`.
///
/// Returns `[I_c, I_p, I_q]` (moment of the hat at each corner).
pub fn duffy_corner_moments(c: Vector3<f64>, p: Vector3<f64>, q: Vector3<f64>) -> [f64; 3] {
    let area2 = (p - c).cross(&(q - c)).norm();
    let mut m0 = 0.0; // int dv / |w(v)|
    let mut m1 = 0.0; // int (1-v) dv / |w(v)|
    let mut m2 = 0.0; // int v dv / |w(v)|
    for &(v, w) in GAUSS16.iter() {
        let dir = (1.0 - v) * (p - c) + v * (q - c);
        let inv = w / dir.norm();
        m0 += inv;
        m1 += (1.0 - v) * inv;
        m2 += v * inv;
    }
    // u-integrals are exact: int_0^1 (1-u) du = int_0^1 u du = 1/2,
    // int_0^1 u * (1-v or v) ... the hats are phi_c = 1-u, phi_p = u(1-v),
    // phi_q = u v, and dA = area2 * u du dv while |y-c| = u |w(v)|.
    [area2 * m0 / 2.0, area2 * m1 / 2.0, area2 * m2 / 2.0]
}

/// `int_T 1 / |y - c| dA(y)` for a flat triangle with `c` one of its corners.
pub fn duffy_corner_integral(c: Vector3<f64>, p: Vector3<f64>, q: Vector3<f64>) -> f64 {
    let m = duffy_corner_moments(c, p, q);
    m[0] + m[1] + m[2]
}

/// Exact distance from a point to a (filled) triangle.
pub fn point_triangle_distance(
    x: Vector3<f64>,
    a: Vector3<f64>,
    b: Vector3<f64>,
    c: Vector3<f64>,
) -> f64 {
    let ab = b - a;
    let ac = c - a;
    let ap = x - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return ap.norm();
    }
    let bp = x - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return bp.norm();
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (ap - v * ab).norm();
    }
    let cp = x - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return cp.norm();
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (ap - w * ac).norm();
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (bp - w * (c - b)).norm();
    }
    let n = ab.cross(&ac);
    (ap.dot(&n) / n.norm()).abs()
}

/// Integrate a smooth-away-from-`x` integrand over a triangle, splitting the
/// panel in four while its diameter exceeds `ratio` times its distance to
/// `x`. `f(point, weight)` accumulates externally.
pub fn adaptive_tri_quad<F: FnMut(Vector3<f64>, f64)>(
    x: Vector3<f64>,
    a: Vector3<f64>,
    b: Vector3<f64>,
    c: Vector3<f64>,
    ratio: f64,
    max_depth: u32,
    f: &mut F,
) {
    let diam = (a - b).norm().max((b - c).norm()).max((c - a).norm());
    let dist = point_triangle_distance(x, a, b, c);
    if max_depth == 0 || diam <= ratio * dist {
        for (p, w) in tri_midedge_rule(a, b, c) {
            f(p, w);
        }
        return;
    }
    let ab = (a + b) / 2.0;
    let bc = (b + c) / 2.0;
    let ca = (c + a) / 2.0;
    adaptive_tri_quad(x, a, ab, ca, ratio, max_depth - 1, f);
    adaptive_tri_quad(x, ab, b, bc, ratio, max_depth - 1, f);
    adaptive_tri_quad(x, ca, bc, c, ratio, max_depth - 1, f);
    adaptive_tri_quad(x, ab, bc, ca, ratio, max_depth - 1, f);
}

/// Exact moments of the log kernel on a straight segment:
///
/// `I_k = int_0^L (s/L)^k log(1/|x - y(s)|) ds`, `k = 0, 1`,
///
/// where `y(s)` walks the segment `[p, q]` by arclength. Valid for any `x`,
/// including points on the segment (the singularity is integrable and the
/// antiderivatives extend continuously).
pub fn segment_log_moments(p: Vector3<f64>, q: Vector3<f64>, x: Vector3<f64>) -> (f64, f64) {
    let d = q - p;
    let len = d.norm();
    let t = d / len;
    let a = (x - p).dot(&t);
    let b2 = ((x - p) - a * t).norm_squared();
    let b = b2.sqrt();

    // Antiderivative of log(u^2 + b^2) in u.
    let f0 = |u: f64| -> f64 {
        if b > 1e-150 {
            u * (u * u + b2).ln() - 2.0 * u + 2.0 * b * (u / b).atan()
        } else if u == 0.0 {
            0.0
        } else {
            2.0 * (u * u.abs().ln() - u)
        }
    };
    // Antiderivative of u log(u^2 + b^2) in u.
    let f1 = |u: f64| -> f64 {
        let r2 = u * u + b2;
        if r2 <= 0.0 {
            0.0
        } else {
            0.5 * (r2 * r2.ln() - u * u)
        }
    };

    let (u0, u1) = (-a, len - a);
    let int_log = f0(u1) - f0(u0); // int_0^L log((s-a)^2+b^2) ds
    let int_slog = (f1(u1) - f1(u0)) + a * int_log; // int_0^L s log(...) ds

    // log(1/|x-y|) = -0.5 log((s-a)^2 + b^2).
    (-0.5 * int_log, -0.5 * int_slog / len)
}

/// Area of the intersection of a (planar, CCW) polygon with a disk.
///
/// Signed triangle-fan decomposition from the disk center with exact
/// circular-segment bookkeeping; the polygon need not be convex.
pub fn polygon_disk_area(poly: &[Vector2<f64>], center: Vector2<f64>, r: f64) -> f64 {
    let mut area = 0.0;
    let n = poly.len();
    for i in 0..n {
        area += fan_piece(poly[i] - center, poly[(i + 1) % n] - center, r);
    }
    area
}

// Signed area of triangle (0, a, b) intersected with the disk of radius r
// centered at the origin.
fn fan_piece(a: Vector2<f64>, b: Vector2<f64>, r: f64) -> f64 {
    let cross = a.x * b.y - a.y * b.x;
    if cross == 0.0 {
        return 0.0;
    }
    let inside = |p: &Vector2<f64>| p.norm_squared() <= r * r;
    let tri = 0.5 * cross;
    let sector = |p: Vector2<f64>, q: Vector2<f64>| -> f64 {
        let ang = (p.x * q.y - p.y * q.x).atan2(p.dot(&q));
        0.5 * r * r * ang
    };
    match (inside(&a), inside(&b)) {
        (true, true) => tri,
        (true, false) => {
            let t = ray_exit(a, b, r);
            let p = a + t * (b - a);
            0.5 * (a.x * p.y - a.y * p.x) + sector(p, b)
        }
        (false, true) => {
            let t = ray_exit(b, a, r);
            let p = b + t * (a - b);
            sector(a, p) + 0.5 * (p.x * b.y - p.y * b.x)
        }
        (false, false) => {
            // Segment may clip the disk in an interior chord.
            match chord(a, b, r) {
                Some((p, q)) => {
                    sector(a, p) + 0.5 * (p.x * q.y - p.y * q.x) + sector(q, b)
                }
                None => sector(a, b),
            }
        }
    }
}

// Parameter t in [0,1] where the segment from inside point `a` to outside
// point `b` crosses the circle |p| = r.
fn ray_exit(a: Vector2<f64>, b: Vector2<f64>, r: f64) -> f64 {
    let d = b - a;
    let aa = d.norm_squared();
    let bb = 2.0 * a.dot(&d);
    let cc = a.norm_squared() - r * r;
    let disc = (bb * bb - 4.0 * aa * cc).max(0.0).sqrt();
    ((-bb + disc) / (2.0 * aa)).clamp(0.0, 1.0)
}

// Entry/exit points when the open segment (a, b), both endpoints outside,
// crosses the disk.
fn chord(a: Vector2<f64>, b: Vector2<f64>, r: f64) -> Option<(Vector2<f64>, Vector2<f64>)> {
    let d = b - a;
    let aa = d.norm_squared();
    let bb = 2.0 * a.dot(&d);
    let cc = a.norm_squared() - r * r;
    let disc = bb * bb - 4.0 * aa * cc;
    if disc <= 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let t1 = (-bb - sq) / (2.0 * aa);
    let t2 = (-bb + sq) / (2.0 * aa);
    if t1 >= 1.0 || t2 <= 0.0 {
        return None;
    }
    Some((a + t1.max(0.0) * d, a + t2.min(1.0) * d))
}

/// Area of a 3D triangle clipped to a ball: the planar cross-section of the
/// ball is a disk in the triangle's plane.
pub fn triangle_ball_area(
    a: Vector3<f64>,
    b: Vector3<f64>,
    c: Vector3<f64>,
    center: Vector3<f64>,
    r: f64,
) -> f64 {
    let n = (b - a).cross(&(c - a));
    let nn = n.norm();
    if nn == 0.0 {
        return 0.0;
    }
    let n = n / nn;
    let d = (center - a).dot(&n);
    if d.abs() >= r {
        return 0.0;
    }
    let rc = (r * r - d * d).sqrt();
    let o = center - d * n;
    // In-plane coordinates around o.
    let e1 = (b - a).normalize();
    let e2 = n.cross(&e1);
    let project = |p: Vector3<f64>| Vector2::new((p - o).dot(&e1), (p - o).dot(&e2));
    let poly = [project(a), project(b), project(c)];
    polygon_disk_area(&poly, Vector2::zeros(), rc).abs()
}

/// Length of a 3D segment clipped to a ball.
pub fn segment_ball_length(p: Vector3<f64>, q: Vector3<f64>, center: Vector3<f64>, r: f64) -> f64 {
    let d = q - p;
    let len2 = d.norm_squared();
    let a = p - center;
    let bb = 2.0 * a.dot(&d);
    let cc = a.norm_squared() - r * r;
    let disc = bb * bb - 4.0 * len2 * cc;
    if disc <= 0.0 {
        return 0.0;
    }
    let sq = disc.sqrt();
    let t1 = ((-bb - sq) / (2.0 * len2)).clamp(0.0, 1.0);
    let t2 = ((-bb + sq) / (2.0 * len2)).clamp(0.0, 1.0);
    (t2 - t1) * len2.sqrt()
}
