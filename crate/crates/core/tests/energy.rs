//! Energy: multiplier, residual, dilation identity and multiplier bounds
//! against the ball closed forms.

use std::f64::consts::PI;

use nalgebra::{Rotation3, Vector3};

use nliso::energy::{
    evaluate, lagrange_identity_residual, lambda_bound_gap, scaling_derivative,
};
use nliso::geometry::{tessellate, PerturbationMode, ShapeSpec};
use nliso::{Boundary, Error};

fn ball3(res: u32) -> ShapeSpec {
    ShapeSpec::Ball { dim: 3, center: [0.0; 3], radius: 1.0, resolution: res }
}

fn ellipsoid(ax: f64, res: u32) -> Boundary {
    let b = tessellate(&ball3(res)).unwrap();
    let verts: Vec<Vector3<f64>> = b
        .vertices()
        .iter()
        .map(|p| Vector3::new(ax * p.x, p.y, p.z))
        .collect();
    Boundary::from_triangles(verts, b.triangles().to_vec()).unwrap()
}

#[test]
fn ball_multiplier_and_residual() {
    let b = tessellate(&ball3(4)).unwrap();
    let rep = evaluate(&b, 0.5).unwrap();
    let expect = 2.0 + 2.0 * 0.5 / 3.0;
    assert!((rep.lambda - expect).abs() / expect < 0.01, "lambda {}", rep.lambda);
    assert!(rep.residual_linf <= 0.05, "res linf {}", rep.residual_linf);
    // J is exactly the stored combination.
    assert_eq!(rep.total, rep.perimeter + rep.gamma * rep.nonlocal);
    // L-infinity dominates the normalized L2.
    assert!(rep.residual_linf >= rep.residual_l2 / rep.perimeter.sqrt());
}

#[test]
fn ball_dilation_identity_closed_form() {
    let b = tessellate(&ball3(4)).unwrap();
    let rep = evaluate(&b, 1.0).unwrap();
    // n lambda |E| and (n-1) P + (n+2) gamma NL are both 32 pi / 3.
    let lhs = 3.0 * rep.lambda * rep.volume;
    let rhs = 2.0 * rep.perimeter + 5.0 * rep.nonlocal;
    let expect = 32.0 * PI / 3.0;
    assert!((lhs - expect).abs() / expect < 0.01, "lhs {lhs}");
    assert!((rhs - expect).abs() / expect < 0.01, "rhs {rhs}");
}

#[test]
fn ellipsoid_residual_is_large() {
    let b = ellipsoid(2.0, 3);
    let rep = evaluate(&b, 0.0).unwrap();
    assert!(rep.residual_l2 > 0.3, "res l2 {}", rep.residual_l2);
}

#[test]
fn residual_has_zero_mean() {
    let b = ellipsoid(1.5, 2);
    let rep = evaluate(&b, 0.7).unwrap();
    let mean: f64 = rep
        .residual
        .iter()
        .zip(b.vertex_areas())
        .map(|(r, a)| r * a)
        .sum::<f64>()
        / b.perimeter();
    assert!(mean.abs() < 1e-12, "mean {mean}");
}

#[test]
fn lambda_is_affine_in_gamma() {
    let b = ellipsoid(1.3, 2);
    let r0 = evaluate(&b, 0.0).unwrap();
    let r1 = evaluate(&b, 1.0).unwrap();
    let r_half = evaluate(&b, 0.5).unwrap();
    // Slope 2 <v>.
    let slope = r1.lambda - r0.lambda;
    assert!((slope - 2.0 * r0.mean_potential).abs() < 1e-10);
    let interp = 0.5 * (r0.lambda + r1.lambda);
    assert!((r_half.lambda - interp).abs() < 1e-10);
}

#[test]
fn scaling_derivative_ball() {
    let b = tessellate(&ball3(2)).unwrap();
    let sd = scaling_derivative(&b, 1.0).unwrap();
    assert!(
        (sd.formula - sd.finite_difference).abs() / sd.formula.abs() < 1e-3,
        "{} vs {}",
        sd.formula,
        sd.finite_difference
    );
    // Against the closed form at this resolution's discrete P and NL: the
    // continuum target 32 pi / 3 is matched at finer meshes; here the
    // identity itself is the claim.
    let fine = tessellate(&ball3(4)).unwrap();
    let sd_fine = scaling_derivative(&fine, 1.0).unwrap();
    let expect = 32.0 * PI / 3.0;
    assert!(
        (sd_fine.formula - expect).abs() / expect < 0.005,
        "formula {}",
        sd_fine.formula
    );
    assert!(
        (sd_fine.formula - sd_fine.finite_difference).abs() / sd_fine.formula < 1e-3,
        "{} vs {}",
        sd_fine.formula,
        sd_fine.finite_difference
    );
}

#[test]
fn scaling_derivative_perturbed_ball_and_pure_perimeter() {
    let spec = ShapeSpec::PerturbedBall {
        dim: 3,
        radius: 1.0,
        modes: vec![
            PerturbationMode::Harmonic { l: 2, m: 0, amp: 0.1 },
            PerturbationMode::Harmonic { l: 3, m: 2, amp: 0.07 },
        ],
        resolution: 2,
    };
    let b = tessellate(&spec).unwrap();
    let sd = scaling_derivative(&b, 0.3).unwrap();
    assert!(
        (sd.formula - sd.finite_difference).abs() / sd.formula.abs() < 2e-3,
        "{} vs {}",
        sd.formula,
        sd.finite_difference
    );
    // gamma = 0: the dilation derivative of the perimeter alone.
    let sd0 = scaling_derivative(&b, 0.0).unwrap();
    assert!((sd0.formula - 2.0 * b.perimeter()).abs() < 1e-12);
    assert!((sd0.formula - sd0.finite_difference).abs() / sd0.formula < 1e-6);
}

#[test]
fn scaling_derivative_rejects_planar() {
    let b = tessellate(&ShapeSpec::Ball { dim: 2, center: [0.0; 3], radius: 1.0, resolution: 3 })
        .unwrap();
    assert!(matches!(
        scaling_derivative(&b, 1.0),
        Err(Error::Unsupported(_))
    ));
}

#[test]
fn lagrange_identity_on_ball() {
    let b = tessellate(&ball3(4)).unwrap();
    for gamma in [0.0, 1.0, 5.0] {
        let rep = evaluate(&b, gamma).unwrap();
        let res = lagrange_identity_residual(&b, gamma).unwrap();
        assert!(
            res.abs() <= 0.01 * rep.total,
            "gamma {gamma}: residual {res} vs 1% J = {}",
            0.01 * rep.total
        );
    }
}

#[test]
fn lagrange_identity_informational_on_ellipsoid() {
    let b = ellipsoid(2.0, 2);
    // No assertion on the value; just well-defined.
    let res = lagrange_identity_residual(&b, 1.0).unwrap();
    assert!(res.is_finite());
}

#[test]
fn lambda_bound_gap_ball() {
    let b = tessellate(&ball3(4)).unwrap();
    let rep = evaluate(&b, 1.0).unwrap();
    let gap = lambda_bound_gap(&rep);
    // |8/3 - 2| = 2/3.
    assert!((gap.gap - 2.0 / 3.0).abs() / (2.0 / 3.0) < 0.02, "gap {}", gap.gap);
    assert!((gap.ratio - 2.0 / 3.0).abs() / (2.0 / 3.0) < 0.02);

    let rep0 = evaluate(&b, 0.0).unwrap();
    assert!(lambda_bound_gap(&rep0).gap <= 1e-2);

    let rep01 = evaluate(&b, 0.1).unwrap();
    let ratio = lambda_bound_gap(&rep01).ratio;
    assert!((ratio - 2.0 / 3.0).abs() / (2.0 / 3.0) < 0.05, "ratio {ratio}");
}

#[test]
fn report_rigid_motion_invariance() {
    let spec = ShapeSpec::PerturbedBall {
        dim: 3,
        radius: 1.0,
        modes: vec![PerturbationMode::Harmonic { l: 2, m: 1, amp: 0.1 }],
        resolution: 2,
    };
    let b = tessellate(&spec).unwrap();
    let rep = evaluate(&b, 0.4).unwrap();
    let rot = Rotation3::from_axis_angle(
        &nalgebra::Unit::new_normalize(Vector3::new(0.3, -1.0, 0.5)),
        1.0,
    );
    let shift = Vector3::new(5.0, -2.0, 1.0);
    let moved = b.mapped(|p| rot * p + shift).unwrap();
    let rep2 = evaluate(&moved, 0.4).unwrap();
    for (a, c) in [
        (rep.perimeter, rep2.perimeter),
        (rep.nonlocal, rep2.nonlocal),
        (rep.total, rep2.total),
        (rep.lambda, rep2.lambda),
        (rep.residual_l2, rep2.residual_l2),
        (rep.residual_linf, rep2.residual_linf),
    ] {
        assert!((a - c).abs() / a.abs().max(1e-12) < 1e-9, "{a} vs {c}");
    }
}

#[test]
fn negative_gamma_rejected() {
    let b = tessellate(&ball3(1)).unwrap();
    assert!(evaluate(&b, -0.1).is_err());
}

#[test]
fn report_serializes() {
    let b = tessellate(&ball3(1)).unwrap();
    let rep = evaluate(&b, 1.0).unwrap();
    let js = serde_json::to_string(&rep).unwrap();
    assert!(js.contains("\"lambda\""));
}
