//! Two-ring cubic jet fits: smooth pointwise normal/curvature fields used by
//! the geometric identity diagnostics. Fitting the exact vertex positions
//! gives fields with O(h^3) error, so discrete differential operators applied
//! to them remain convergent.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2, Vector3};

use super::curvature::orthonormal_to;

/// Pointwise fields from a cubic height fit over the two-ring.
#[derive(Debug, Clone, Copy)]
pub struct JetFields {
    pub normal: Vector3<f64>,
    pub mean_curvature: f64,
    pub b_squared: f64,
    /// Tangential gradient of the mean curvature in ambient coordinates.
    pub grad_h: Vector3<f64>,
}

/// Fit `w = q(u, v)` (full cubic, 10 coefficients) over the given points in
/// the frame `(e1, e2, n0)` at `origin` and evaluate the graph fields.
pub fn fit_jet(
    origin: Vector3<f64>,
    n0: Vector3<f64>,
    points: &[Vector3<f64>],
) -> Option<JetFields> {
    if points.len() < 12 {
        return None;
    }
    let e1 = orthonormal_to(n0);
    let e2 = n0.cross(&e1);

    let rows = points.len();
    let mut a = DMatrix::zeros(rows, 10);
    let mut rhs = DVector::zeros(rows);
    for (r, p) in points.iter().enumerate() {
        let d = p - origin;
        let (u, v, w) = (d.dot(&e1), d.dot(&e2), d.dot(&n0));
        let basis = [
            1.0,
            u,
            v,
            u * u,
            u * v,
            v * v,
            u * u * u,
            u * u * v,
            u * v * v,
            v * v * v,
        ];
        for c in 0..10 {
            a[(r, c)] = basis[c];
        }
        rhs[r] = w;
    }
    let ata = a.transpose() * &a;
    let atb = a.transpose() * rhs;
    let coeff = ata.lu().solve(&atb)?;

    // Graph quantities at (0, 0).
    let eval = |u: f64, v: f64| graph_fields(&coeff, u, v);
    let (normal_loc, h, b2) = eval(0.0, 0.0);
    // The gradient of H from the fitted polynomial itself (the cubic is
    // analytic; a small central difference on it is exact to rounding).
    let delta = 1e-5;
    let hu = (eval(delta, 0.0).1 - eval(-delta, 0.0).1) / (2.0 * delta);
    let hv = (eval(0.0, delta).1 - eval(0.0, -delta).1) / (2.0 * delta);
    // Tangential gradient of H on the graph: raise indices with the inverse
    // metric at the origin.
    let qu = coeff[1];
    let qv = coeff[2];
    let g = Matrix2::new(1.0 + qu * qu, qu * qv, qu * qv, 1.0 + qv * qv);
    let grad2 = g.try_inverse()? * Vector2::new(hu, hv);
    // Ambient tangent vectors of the graph parameterization.
    let tu = e1 + qu * n0;
    let tv = e2 + qv * n0;
    let grad_h = grad2.x * tu + grad2.y * tv;

    let normal = (normal_loc.x * e1 + normal_loc.y * e2 + normal_loc.z * n0).normalize();
    Some(JetFields {
        normal,
        mean_curvature: h,
        b_squared: b2,
        grad_h,
    })
}

// Normal (local frame), mean curvature and |B|^2 of the graph of the cubic
// at parameter (u, v), with curvature signs for the upward (outward) normal
// of a convex cap opening downward.
fn graph_fields(c: &DVector<f64>, u: f64, v: f64) -> (Vector3<f64>, f64, f64) {
    let qu = c[1] + 2.0 * c[3] * u + c[4] * v + 3.0 * c[6] * u * u + 2.0 * c[7] * u * v + c[8] * v * v;
    let qv = c[2] + c[4] * u + 2.0 * c[5] * v + c[7] * u * u + 2.0 * c[8] * u * v + 3.0 * c[9] * v * v;
    let quu = 2.0 * c[3] + 6.0 * c[6] * u + 2.0 * c[7] * v;
    let quv = c[4] + 2.0 * c[7] * u + 2.0 * c[8] * v;
    let qvv = 2.0 * c[5] + 2.0 * c[8] * u + 6.0 * c[9] * v;

    let w2 = 1.0 + qu * qu + qv * qv;
    let w = w2.sqrt();
    let normal = Vector3::new(-qu, -qv, 1.0) / w;

    // Shape operator S = G^{-1} (-Hess q) / W for the outward (upward)
    // normal of a convex set below its tangent plane.
    let gmat = Matrix2::new(1.0 + qu * qu, qu * qv, qu * qv, 1.0 + qv * qv);
    let hess = Matrix2::new(quu, quv, quv, qvv);
    let s = gmat.try_inverse().unwrap_or_else(Matrix2::identity) * (-hess) / w;
    let h = s.trace();
    let b2 = (s * s).trace();
    (normal, h, b2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jet_fit_recovers_sphere_fields() {
        // Points on the unit sphere around the north pole.
        let origin = Vector3::z();
        let mut pts = vec![origin];
        for ring in 1..=2 {
            let theta = 0.15 * ring as f64;
            for k in 0..8 {
                let phi = std::f64::consts::TAU * k as f64 / 8.0 + 0.05 * ring as f64;
                pts.push(Vector3::new(
                    theta.sin() * phi.cos(),
                    theta.sin() * phi.sin(),
                    theta.cos(),
                ));
            }
        }
        let jet = fit_jet(origin, Vector3::z(), &pts).unwrap();
        assert!((jet.normal - Vector3::z()).norm() < 1e-6, "{:?}", jet.normal);
        assert!((jet.mean_curvature - 2.0).abs() < 1e-4, "H = {}", jet.mean_curvature);
        assert!((jet.b_squared - 2.0).abs() < 1e-3, "B2 = {}", jet.b_squared);
        assert!(jet.grad_h.norm() < 1e-3, "grad H = {:?}", jet.grad_h);
    }
}
