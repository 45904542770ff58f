//! Standalone geometric diagnostics: Allard-type excess, perimeter-density
//! monotonicity profiles, the diameter/total-curvature comparison, Willmore
//! energy, umbilicity deficit, asphericity and the connectivity census.

use nalgebra::Vector3;

use crate::geometry::{diameter, Boundary, Dim, Faces};
use crate::quad::{segment_ball_length, triangle_ball_area};
use crate::{Error, Result};

/// Localized perimeter `P(E, B_r(x))`: the exact measure of the boundary
/// clipped to the ambient ball.
pub fn local_perimeter(b: &Boundary, x: Vector3<f64>, r: f64) -> f64 {
    match b.faces() {
        Faces::Triangles(tris) => tris
            .iter()
            .map(|t| {
                triangle_ball_area(
                    b.vertices()[t[0]],
                    b.vertices()[t[1]],
                    b.vertices()[t[2]],
                    x,
                    r,
                )
            })
            .sum(),
        Faces::Edges(edges) => edges
            .iter()
            .map(|e| segment_ball_length(b.vertices()[e[0]], b.vertices()[e[1]], x, r))
            .sum(),
    }
}

/// Flatness excess
/// `sigma(E, x, r) = |P(E, B_r(x)) - omega_{n-1} r^{n-1}| / r^{n-1}`,
/// with `omega_{n-1}` the volume of the unit `(n-1)`-ball.
pub fn excess(b: &Boundary, x: Vector3<f64>, r: f64) -> Result<f64> {
    let h = b.max_edge_length();
    if r <= 2.0 * h {
        return Err(Error::RadiusTooSmall { r, h });
    }
    let flat = match b.dim() {
        Dim::Three => std::f64::consts::PI * r * r,
        Dim::Two => 2.0 * r,
    };
    let rn = r.powi(b.dim().n() as i32 - 1);
    Ok((local_perimeter(b, x, r) - flat).abs() / rn)
}

/// Perimeter-density profile `s -> P(E, B_s(x)) s^{1-n} e^{c0 s}` over the
/// given radii, with a nondecreasing flag (1% slack per step).
#[derive(Debug, Clone, serde::Serialize)]
pub struct MonotonicityProfile {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub nondecreasing: bool,
}

/// The profile is nondecreasing when `c0` dominates the mean curvature;
/// the bound `|H| <= c0` is checked first and violations are reported with
/// their vertex ids.
pub fn monotonicity_profile(
    b: &Boundary,
    x: Vector3<f64>,
    c0: f64,
    radii: &[f64],
) -> Result<MonotonicityProfile> {
    let violating: Vec<usize> = b
        .mean_curvature()
        .iter()
        .enumerate()
        .filter(|(_, h)| h.abs() > c0 * (1.0 + 1e-9) + 1e-12)
        .map(|(i, _)| i)
        .collect();
    if !violating.is_empty() {
        return Err(Error::CurvatureBound {
            bound: c0,
            violating,
        });
    }
    let n = b.dim().n() as i32;
    let values: Vec<f64> = radii
        .iter()
        .map(|&s| local_perimeter(b, x, s) * s.powi(1 - n) * (c0 * s).exp())
        .collect();
    let nondecreasing = values
        .windows(2)
        .all(|w| w[1] >= w[0] * (1.0 - 0.01));
    Ok(MonotonicityProfile {
        radii: radii.to_vec(),
        values,
        nondecreasing,
    })
}

/// Diameter versus total-curvature comparison `diam <= int H^{n-2} dA`
/// (2% slack).
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct ToppingCheck {
    pub diameter: f64,
    pub curvature_integral: f64,
    pub pass: bool,
}

pub fn topping_check(b: &Boundary) -> ToppingCheck {
    let d = diameter(b);
    let integral: f64 = match b.dim() {
        Dim::Three => b
            .mean_curvature()
            .iter()
            .zip(b.vertex_areas())
            .map(|(h, a)| h * a)
            .sum(),
        // H^0 = 1: the integral is the perimeter.
        Dim::Two => b.perimeter(),
    };
    ToppingCheck {
        diameter: d,
        curvature_integral: integral,
        pass: d <= integral * 1.02,
    }
}

/// Asphericity `min_y int |nu(x) - (x-y)/|x-y||^2 dA`, minimized over the
/// center by a deterministic Nelder-Mead search started at the volume
/// centroid. Returns the minimum and its center.
pub fn asphericity(b: &Boundary) -> (f64, Vector3<f64>) {
    asphericity_of(b, None)
}

fn asphericity_of(b: &Boundary, component: Option<usize>) -> (f64, Vector3<f64>) {
    let cost = |y: Vector3<f64>| -> f64 {
        let mut acc = 0.0;
        for i in 0..b.vertex_count() {
            if let Some(c) = component {
                if b.component_labels()[i] != c {
                    continue;
                }
            }
            let d = b.vertices()[i] - y;
            let dn = d.norm();
            if dn < 1e-30 {
                return f64::INFINITY;
            }
            acc += b.vertex_areas()[i] * (b.normals()[i] - d / dn).norm_squared();
        }
        acc
    };
    let start = match component {
        None => b.volume_centroid(),
        Some(c) => {
            // Area centroid of the component.
            let mut num = Vector3::zeros();
            let mut den = 0.0;
            for i in 0..b.vertex_count() {
                if b.component_labels()[i] == c {
                    num += b.vertex_areas()[i] * b.vertices()[i];
                    den += b.vertex_areas()[i];
                }
            }
            num / den
        }
    };
    let dim = b.dim().n();
    let scale = 0.1 * (diameter(b) / 2.0).max(1e-6);
    let y = nelder_mead(cost, start, dim, scale, 1e-8, 600);
    (cost(y), y)
}

// Deterministic Nelder-Mead over 2 or 3 coordinates.
fn nelder_mead<F: Fn(Vector3<f64>) -> f64>(
    f: F,
    start: Vector3<f64>,
    dim: usize,
    scale: f64,
    tol: f64,
    max_iter: usize,
) -> Vector3<f64> {
    let mut simplex: Vec<Vector3<f64>> = vec![start];
    for k in 0..dim {
        let mut p = start;
        p[k] += scale;
        simplex.push(p);
    }
    let mut vals: Vec<f64> = simplex.iter().map(|&p| f(p)).collect();

    for _ in 0..max_iter {
        // Sort by value.
        let mut idx: Vec<usize> = (0..simplex.len()).collect();
        idx.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap());
        let simplex_sorted: Vec<Vector3<f64>> = idx.iter().map(|&i| simplex[i]).collect();
        let vals_sorted: Vec<f64> = idx.iter().map(|&i| vals[i]).collect();
        simplex = simplex_sorted;
        vals = vals_sorted;

        let best = vals[0];
        let worst = vals[vals.len() - 1];
        let spread = simplex
            .iter()
            .map(|p| (p - simplex[0]).norm())
            .fold(0.0_f64, f64::max);
        if spread < tol && (worst - best).abs() < tol * best.abs().max(1e-12) {
            break;
        }

        let centroid: Vector3<f64> =
            simplex[..simplex.len() - 1].iter().sum::<Vector3<f64>>()
                / (simplex.len() - 1) as f64;
        let xr = centroid + (centroid - simplex[simplex.len() - 1]);
        let fr = f(xr);
        if fr < vals[0] {
            let xe = centroid + 2.0 * (centroid - simplex[simplex.len() - 1]);
            let fe = f(xe);
            let last = simplex.len() - 1;
            if fe < fr {
                simplex[last] = xe;
                vals[last] = fe;
            } else {
                simplex[last] = xr;
                vals[last] = fr;
            }
        } else if fr < vals[vals.len() - 2] {
            let last = simplex.len() - 1;
            simplex[last] = xr;
            vals[last] = fr;
        } else {
            let xc = centroid + 0.5 * (simplex[simplex.len() - 1] - centroid);
            let fc = f(xc);
            let last = simplex.len() - 1;
            if fc < vals[last] {
                simplex[last] = xc;
                vals[last] = fc;
            } else {
                // Shrink toward the best point.
                for k in 1..simplex.len() {
                    simplex[k] = simplex[0] + 0.5 * (simplex[k] - simplex[0]);
                    vals[k] = f(simplex[k]);
                }
            }
        }
    }
    let mut best = 0;
    for k in 1..simplex.len() {
        if vals[k] < vals[best] {
            best = k;
        }
    }
    simplex[best]
}

/// Per-component and total census: areas, bending energies, umbilicity
/// deficits, asphericities and Euler characteristics.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ComponentCensus {
    pub area: f64,
    /// `int |B|^2 dA` over the component (triangle meshes only).
    pub willmore: Option<f64>,
    /// `int (k1 - k2)^2 dA` over the component (triangle meshes only).
    pub deficit: Option<f64>,
    pub asphericity: f64,
    /// `V - E + F` (triangle meshes only; reported, not used in logic).
    pub euler_characteristic: Option<i64>,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct Census {
    pub component_count: usize,
    pub components: Vec<ComponentCensus>,
    pub willmore_total: Option<f64>,
    pub deficit_total: Option<f64>,
    /// Asphericity of the whole boundary (single best center).
    pub asphericity: f64,
}

pub fn shape_census(b: &Boundary) -> Result<Census> {
    let nc = b.component_count();
    let labels = b.component_labels();
    let is_mesh = matches!(b.faces(), Faces::Triangles(_));

    // Pointwise consistency of the stored curvature triple:
    // (k1 - k2)^2 = 2 |B|^2 - H^2 must hold exactly.
    for i in 0..b.vertex_count() {
        let [k1, k2] = b.principal_curvatures()[i];
        let lhs = (k1 - k2) * (k1 - k2);
        let rhs = 2.0 * b.b_squared()[i] - b.mean_curvature()[i] * b.mean_curvature()[i];
        let scale = b.b_squared()[i].abs().max(1.0);
        if (lhs - rhs).abs() > 1e-8 * scale {
            return Err(Error::NumericalAssertion(format!(
                "curvature identity violated at vertex {i}: {lhs} vs {rhs}"
            )));
        }
        // Weak pointwise bending bound |B|^2 >= H^2 / 2.
        if b.b_squared()[i] < 0.5 * b.mean_curvature()[i].powi(2) - 1e-12 * scale {
            return Err(Error::NumericalAssertion(format!(
                "bending bound violated at vertex {i}"
            )));
        }
    }

    let mut comps = Vec::with_capacity(nc);
    for c in 0..nc {
        let mut area = 0.0;
        let mut willmore = 0.0;
        let mut deficit = 0.0;
        let mut verts = 0i64;
        for i in 0..b.vertex_count() {
            if labels[i] != c {
                continue;
            }
            verts += 1;
            let a = b.vertex_areas()[i];
            area += a;
            willmore += a * b.b_squared()[i];
            let [k1, k2] = b.principal_curvatures()[i];
            deficit += a * (k1 - k2) * (k1 - k2);
        }
        let euler = if is_mesh {
            let mut faces = 0i64;
            for t in b.triangles() {
                if labels[t[0]] == c {
                    faces += 1;
                }
            }
            // Closed triangle mesh: E = 3F/2.
            Some(verts - 3 * faces / 2 + faces)
        } else {
            None
        };
        let (asph, _) = asphericity_of(b, Some(c));
        comps.push(ComponentCensus {
            area,
            willmore: is_mesh.then_some(willmore),
            deficit: is_mesh.then_some(deficit),
            asphericity: asph,
            euler_characteristic: euler,
        });
    }

    let willmore_total = is_mesh.then(|| comps.iter().filter_map(|c| c.willmore).sum());
    let deficit_total = is_mesh.then(|| comps.iter().filter_map(|c| c.deficit).sum());
    let (asph, _) = asphericity_of(b, None);
    Ok(Census {
        component_count: nc,
        components: comps,
        willmore_total,
        deficit_total,
        asphericity: asph,
    })
}

/// Options for the aggregated diagnostics report.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DiagnosticsOptions {
    /// Number of evenly strided boundary vertices probed for the excess.
    pub probe_count: usize,
    /// Excess radius as a fraction of the half-diameter.
    pub excess_radius_factor: f64,
    /// Radii for the monotonicity profile, relative to the half-diameter.
    pub monotonicity_radii: Vec<f64>,
    /// Curvature bound; defaults to `max |H|` of the boundary.
    pub curvature_bound: Option<f64>,
}

impl Default for DiagnosticsOptions {
    fn default() -> Self {
        DiagnosticsOptions {
            probe_count: 4,
            excess_radius_factor: 0.5,
            monotonicity_radii: vec![0.3, 0.5, 0.7, 0.9, 1.1, 1.3, 1.5],
            curvature_bound: None,
        }
    }
}

/// Aggregated diagnostics of a boundary.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DiagnosticsReport {
    pub diameter: f64,
    pub topping: ToppingCheck,
    pub willmore: Option<f64>,
    pub deficit: Option<f64>,
    pub asphericity: f64,
    pub component_count: usize,
    pub components: Vec<ComponentCensus>,
    /// Excess at the probe vertices.
    pub excess_probes: Vec<f64>,
    pub monotonicity: MonotonicityProfile,
    pub curvature_bound: f64,
}

pub fn diagnose(b: &Boundary, opts: &DiagnosticsOptions) -> Result<DiagnosticsReport> {
    let census = shape_census(b)?;
    let topping = topping_check(b);
    let diam = diameter(b);

    let r = (opts.excess_radius_factor * diam / 2.0).max(2.2 * b.max_edge_length());
    let stride = (b.vertex_count() / opts.probe_count.max(1)).max(1);
    let mut excess_probes = Vec::new();
    for i in (0..b.vertex_count()).step_by(stride).take(opts.probe_count) {
        excess_probes.push(excess(b, b.vertices()[i], r)?);
    }

    let c0 = opts.curvature_bound.unwrap_or_else(|| {
        b.mean_curvature().iter().fold(0.0_f64, |m, h| m.max(h.abs()))
    });
    let radii: Vec<f64> = opts
        .monotonicity_radii
        .iter()
        .map(|f| (f * diam / 2.0).max(2.2 * b.max_edge_length()))
        .collect();
    let monotonicity = monotonicity_profile(b, b.vertices()[0], c0, &radii)?;

    Ok(DiagnosticsReport {
        diameter: diam,
        topping,
        willmore: census.willmore_total,
        deficit: census.deficit_total,
        asphericity: census.asphericity,
        component_count: census.component_count,
        components: census.components,
        excess_probes,
        monotonicity,
        curvature_bound: c0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nelder_mead_minimizes_shifted_quadratic() {
        let target = Vector3::new(0.3, -0.7, 1.1);
        let f = |p: Vector3<f64>| (p - target).norm_squared() + 2.0;
        let got = nelder_mead(f, Vector3::zeros(), 3, 0.5, 1e-10, 500);
        assert!((got - target).norm() < 1e-5, "{got:?}");
    }
}
