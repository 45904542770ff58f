//! Stability: assembled quadratic form against the ball/disk closed forms,
//! constrained spectra, the disconnected-boundary instability test and the
//! support-function identity.

use std::f64::consts::PI;

use nliso::geometry::{tessellate, PerturbationMode, ShapeSpec};
use nliso::stability::{
    assemble, ball_mode_eigenvalue, project_zero_average, quadratic_form, spectrum,
    two_component_test, Verdict,
};
use nliso::{Dim, Error};

fn ball3(res: u32) -> ShapeSpec {
    ShapeSpec::Ball { dim: 3, center: [0.0; 3], radius: 1.0, resolution: res }
}

fn ball2(res: u32) -> ShapeSpec {
    ShapeSpec::Ball { dim: 2, center: [0.0; 3], radius: 1.0, resolution: res }
}

fn two_spheres(res: u32) -> ShapeSpec {
    ShapeSpec::BallUnion {
        dim: 3,
        balls: vec![
            nliso::geometry::shapes::BallSpec { center: [0.0, 0.0, 0.0], radius: 1.0 },
            nliso::geometry::shapes::BallSpec { center: [2.5, 0.0, 0.0], radius: 1.0 },
        ],
        resolution: res,
    }
}

#[test]
fn ball_mode_closed_forms() {
    // Translation null mode at every coupling.
    for gamma in [0.0, 0.3, 1.0, 7.0] {
        assert_eq!(ball_mode_eigenvalue(Dim::Three, 1, gamma).unwrap(), 0.0);
        assert_eq!(ball_mode_eigenvalue(Dim::Two, 1, gamma).unwrap(), 0.0);
    }
    let mu = ball_mode_eigenvalue(Dim::Three, 2, 1.0).unwrap();
    assert!((mu - 56.0 / 15.0).abs() < 1e-14);
    assert_eq!(ball_mode_eigenvalue(Dim::Three, 2, 0.0).unwrap(), 4.0);
    let mu2 = ball_mode_eigenvalue(Dim::Two, 2, 1.0).unwrap();
    assert!((mu2 - 2.5).abs() < 1e-14);
    assert!(matches!(
        ball_mode_eigenvalue(Dim::Three, 0, 1.0),
        Err(Error::Unsupported(_))
    ));
}

#[test]
fn assembled_rayleigh_quotients_match_oracle() {
    let b = tessellate(&ball3(3)).unwrap();
    let areas = b.vertex_areas().to_vec();
    let mass_of = |phi: &[f64]| -> f64 {
        phi.iter().zip(&areas).map(|(p, a)| p * p * a).sum()
    };

    // gamma = 0, degree-1 harmonic: near-null translation mode.
    let sv0 = assemble(&b, 0.0).unwrap();
    let z: Vec<f64> = b.vertices().iter().map(|p| p.z).collect();
    let z = project_zero_average(&sv0, &z);
    let q = quadratic_form(&sv0, &z).unwrap();
    let rq = q / mass_of(&z);
    assert!(rq.abs() <= 0.1, "translation Rayleigh {rq}");

    // gamma = 1, degree-2 harmonic: 4 - 4/15.
    let sv1 = sv0.at_gamma(1.0);
    let y2: Vec<f64> = b
        .vertices()
        .iter()
        .map(|p| p.z * p.z - 0.5 * (p.x * p.x + p.y * p.y))
        .collect();
    let y2 = project_zero_average(&sv1, &y2);
    let q2 = quadratic_form(&sv1, &y2).unwrap();
    let rq2 = q2 / mass_of(&y2);
    let expect = 4.0 - 4.0 / 15.0;
    assert!((rq2 - expect).abs() / expect < 0.03, "{rq2} vs {expect}");
}

#[test]
fn circle_mode_rayleigh_quotient() {
    let b = tessellate(&ball2(5)).unwrap();
    let sv = assemble(&b, 1.0).unwrap();
    let phi: Vec<f64> = b
        .vertices()
        .iter()
        .map(|p| (2.0 * p.y.atan2(p.x)).cos())
        .collect();
    let phi = project_zero_average(&sv, &phi);
    let mass: f64 = phi
        .iter()
        .zip(b.vertex_areas())
        .map(|(p, a)| p * p * a)
        .sum();
    let rq = quadratic_form(&sv, &phi).unwrap() / mass;
    assert!((rq - 2.5).abs() / 2.5 < 0.02, "k=2 Rayleigh {rq}");
}

#[test]
fn sphere_spectrum_matches_ball_modes() {
    let b = tessellate(&ball3(3)).unwrap();
    let sv = assemble(&b, 0.5).unwrap();
    for gamma in [0.0, 0.5, 1.0] {
        let rep = spectrum(&sv.at_gamma(gamma), 15).unwrap();
        // Translation block.
        for k in 0..3 {
            assert!(
                rep.eigenvalues[k].abs() <= 0.1,
                "gamma {gamma}: translation mode {k} = {}",
                rep.eigenvalues[k]
            );
        }
        // Degree-2 block (multiplicity 5) and degree-3 block (multiplicity 7).
        let mu2 = ball_mode_eigenvalue(Dim::Three, 2, gamma).unwrap();
        for k in 3..8 {
            assert!(
                (rep.eigenvalues[k] - mu2).abs() / mu2 < 0.03,
                "gamma {gamma}: mu2[{k}] = {} vs {mu2}",
                rep.eigenvalues[k]
            );
        }
        let mu3 = ball_mode_eigenvalue(Dim::Three, 3, gamma).unwrap();
        for k in 8..15 {
            assert!(
                (rep.eigenvalues[k] - mu3).abs() / mu3 < 0.03,
                "gamma {gamma}: mu3[{k}] = {} vs {mu3}",
                rep.eigenvalues[k]
            );
        }
        assert!(rep.verdict != Verdict::Unstable, "gamma {gamma}");
    }
}

#[test]
fn circle_spectrum_matches_fourier_modes() {
    let b = tessellate(&ball2(5)).unwrap();
    let sv = assemble(&b, 0.0).unwrap();
    let rep = spectrum(&sv, 4).unwrap();
    // k = 1 pair near zero, k = 2 pair near 3.
    assert!(rep.eigenvalues[0].abs() <= 0.05, "{}", rep.eigenvalues[0]);
    assert!(rep.eigenvalues[1].abs() <= 0.05);
    assert!((rep.eigenvalues[2] - 3.0).abs() / 3.0 < 0.02, "{}", rep.eigenvalues[2]);
    assert!((rep.eigenvalues[3] - 3.0).abs() / 3.0 < 0.02);
}

#[test]
fn spectrum_eigenfunctions_satisfy_eigen_relation() {
    let b = tessellate(&ball3(2)).unwrap();
    let sv = assemble(&b, 0.5).unwrap();
    let rep = spectrum(&sv, 6).unwrap();
    for (k, phi) in rep.eigenfunctions.iter().enumerate() {
        // Constraint.
        let dot: f64 = sv
            .constraint()
            .iter()
            .zip(phi)
            .map(|(a, p)| a * p)
            .sum();
        assert!(dot.abs() < 1e-8, "constraint {dot}");
        // Q phi = mu M phi against the quadratic form.
        let mass: f64 = phi
            .iter()
            .zip(sv.mass())
            .map(|(p, m)| p * p * m)
            .sum();
        let q = quadratic_form(&sv, phi).unwrap();
        assert!(
            (q - rep.eigenvalues[k] * mass).abs() < 1e-8 * mass.max(1.0),
            "mode {k}: {q} vs {}",
            rep.eigenvalues[k] * mass
        );
    }
}

#[test]
fn two_spheres_unstable_mode() {
    let b = tessellate(&two_spheres(2)).unwrap();
    // gamma -> 0 limit: -int |B|^2 = -16 pi for two unit spheres.
    let q0 = two_component_test(&b, 0.0).unwrap();
    let expect = -16.0 * PI;
    assert!((q0 - expect).abs() / expect.abs() < 0.02, "{q0} vs {expect}");

    // Small coupling: still deeply negative.
    let q = two_component_test(&b, 0.05).unwrap();
    assert!(q < -40.0, "Q = {q}");

    // Full spectrum agrees: mu_1 < -1 and the verdict is unstable.
    let sv = assemble(&b, 0.05).unwrap();
    let rep = spectrum(&sv, 3).unwrap();
    assert!(rep.eigenvalues[0] < -1.0, "mu1 = {}", rep.eigenvalues[0]);
    assert_eq!(rep.verdict, Verdict::Unstable);
}

#[test]
fn unequal_spheres_closed_form() {
    let spec = ShapeSpec::BallUnion {
        dim: 3,
        balls: vec![
            nliso::geometry::shapes::BallSpec { center: [0.0, 0.0, 0.0], radius: 1.0 },
            nliso::geometry::shapes::BallSpec { center: [2.0, 0.0, 0.0], radius: 0.5 },
        ],
        resolution: 2,
    };
    let b = tessellate(&spec).unwrap();
    // alpha = area(S_1)/area(S_{0.5}) = 4; |B|^2 = 2/r^2.
    // Q = -(2 * 4 pi + alpha^2 * 8 * pi) = -136 pi.
    let q = two_component_test(&b, 0.0).unwrap();
    let expect = -136.0 * PI;
    assert!((q - expect).abs() / expect.abs() < 0.02, "{q} vs {expect}");
}

#[test]
fn two_component_test_needs_components() {
    let b = tessellate(&ball3(1)).unwrap();
    assert!(matches!(
        two_component_test(&b, 0.1),
        Err(Error::Unsupported(_))
    ));
}

#[test]
fn quadratic_form_rejects_constraint_violation() {
    let b = tessellate(&ball3(1)).unwrap();
    let sv = assemble(&b, 0.0).unwrap();
    let ones = vec![1.0; b.vertex_count()];
    assert!(matches!(
        quadratic_form(&sv, &ones),
        Err(Error::ConstraintViolated { .. })
    ));
}

#[test]
fn support_function_identity_at_gamma_zero() {
    // phi = x . nu - sigma with the discrete zero-average shift; the
    // integrated curvature identity gives
    // Q[phi] = int (sigma |B|^2 - H) phi at gamma = 0.
    let spec = ShapeSpec::PerturbedBall {
        dim: 3,
        radius: 1.0,
        modes: vec![PerturbationMode::Harmonic { l: 2, m: 0, amp: 0.12 }],
        resolution: 3,
    };
    let b = tessellate(&spec).unwrap();
    let sv = assemble(&b, 0.0).unwrap();
    let raw: Vec<f64> = (0..b.vertex_count())
        .map(|i| b.vertices()[i].dot(&b.normals()[i]))
        .collect();
    let phi = project_zero_average(&sv, &raw);
    // The discrete sigma matches 3|E|/P to a few percent.
    let sigma: f64 = raw
        .iter()
        .zip(b.vertex_areas())
        .map(|(r, a)| r * a)
        .sum::<f64>()
        / b.perimeter();
    let sigma_analytic = 3.0 * b.volume() / b.perimeter();
    assert!((sigma - sigma_analytic).abs() / sigma_analytic < 0.03);

    let lhs = quadratic_form(&sv, &phi).unwrap();
    let rhs: f64 = (0..b.vertex_count())
        .map(|i| {
            let a = b.vertex_areas()[i];
            (sigma * b.b_squared()[i] - b.mean_curvature()[i]) * phi[i] * a
        })
        .sum();
    let scale = phi
        .iter()
        .zip(b.vertex_areas())
        .map(|(p, a)| p * p * a)
        .sum::<f64>();
    assert!(
        (lhs - rhs).abs() <= 0.03 * scale.max(lhs.abs()).max(rhs.abs()),
        "{lhs} vs {rhs} (scale {scale})"
    );
}

#[test]
fn gamma_dependence_is_affine() {
    let b = tessellate(&ball3(2)).unwrap();
    let sv = assemble(&b, 0.0).unwrap();
    let phi: Vec<f64> = b.vertices().iter().map(|p| p.x * p.y).collect();
    let phi = project_zero_average(&sv, &phi);
    let q0 = quadratic_form(&sv, &phi).unwrap();
    let q1 = quadratic_form(&sv.at_gamma(1.0), &phi).unwrap();
    let q_half = quadratic_form(&sv.at_gamma(0.5), &phi).unwrap();
    assert!((q_half - 0.5 * (q0 + q1)).abs() < 1e-10 * q1.abs().max(1.0));
}

#[test]
fn translation_fields_are_near_null_at_critical_shapes() {
    let b = tessellate(&ball3(3)).unwrap();
    let sv = assemble(&b, 0.5).unwrap();
    let q = sv.form_matrix();
    let mut diags: Vec<f64> = (0..sv.len()).map(|i| q[(i, i)].abs()).collect();
    diags.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let scale = diags[diags.len() / 2];
    for e in [nalgebra::Vector3::x(), nalgebra::Vector3::y(), nalgebra::Vector3::z()] {
        let phi: Vec<f64> = (0..b.vertex_count())
            .map(|i| b.normals()[i].dot(&e))
            .collect();
        let phi = project_zero_average(&sv, &phi);
        let val = quadratic_form(&sv, &phi).unwrap();
        let mass: f64 = phi
            .iter()
            .zip(sv.mass())
            .map(|(p, m)| p * p * m)
            .sum();
        assert!(
            val.abs() <= 0.05 * scale * mass.max(1.0),
            "translation Q = {val}, scale {scale}"
        );
    }
}

#[test]
fn assembly_vertex_cap() {
    let b = tessellate(&ball3(5)).unwrap();
    assert!(matches!(
        assemble(&b, 0.0),
        Err(Error::VertexCap { .. })
    ));
}
