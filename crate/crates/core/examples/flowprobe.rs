//! Development probe for flow convergence and the critical shell solver.

use nliso::energy::evaluate;
use nliso::flow::{annulus_critical, find_critical, AnnulusCriticality, FlowOptions};
use nliso::geometry::{tessellate, PerturbationMode, ShapeSpec};

fn main() {
    let t0 = std::time::Instant::now();
    let spec = ShapeSpec::PerturbedBall {
        dim: 3,
        radius: 1.0,
        modes: vec![PerturbationMode::Harmonic { l: 2, m: 0, amp: 0.15 }],
        resolution: 3,
    };
    let b = tessellate(&spec).unwrap();
    let opts = FlowOptions::default();
    let res = find_critical(&b, 0.1, &opts).unwrap();
    println!(
        "flow level3 gamma=0.1: converged={} stop={:?} steps={} time={:.1?}",
        res.converged,
        res.stop,
        res.trace.records.len(),
        t0.elapsed()
    );
    println!(
        "  res_linf/lambda={:.2e} asphericity={:.2e} ball_dev={:.2e} identity={:.3e} (1%J={:.3e}) remeshes={}",
        res.final_report.residual_linf / res.final_report.lambda,
        res.asphericity,
        res.ball_deviation,
        res.identity_residual.unwrap(),
        0.01 * res.final_report.total,
        res.remeshes
    );
    let willmore: f64 = res
        .boundary
        .b_squared()
        .iter()
        .zip(res.boundary.vertex_areas())
        .map(|(b2, a)| b2 * a)
        .sum();
    println!(
        "  willmore={:.4} vs 8pi={:.4} rel={:.2e}",
        willmore,
        8.0 * std::f64::consts::PI,
        (willmore - 8.0 * std::f64::consts::PI).abs() / (8.0 * std::f64::consts::PI)
    );
    // Energy monotone?
    let mono = res
        .trace
        .records
        .windows(2)
        .all(|w| w[1].total <= w[0].total * (1.0 + 1e-12));
    println!("  J monotone: {mono}");

    // Annulus solver.
    for gamma in [0.01, 40.0, 100.0] {
        let t1 = std::time::Instant::now();
        match annulus_critical(gamma, 4.0 * std::f64::consts::PI / 3.0).unwrap() {
            AnnulusCriticality::Critical(c) => {
                println!(
                    "gamma={gamma}: R={:.6} rho={:.6} lambda={:.4} residual={:.2e} ({:.1?})",
                    c.outer_r, c.inner_r, c.lambda, c.condition_residual, t1.elapsed()
                );
                // Tessellated cross-check.
                for res_level in [3u32, 4] {
                    let spec = ShapeSpec::Annulus {
                        dim: 3,
                        outer: c.outer_r,
                        inner: c.inner_r,
                        resolution: res_level,
                    };
                    match tessellate(&spec) {
                        Ok(mesh) => {
                            let rep = evaluate(&mesh, gamma).unwrap();
                            println!(
                                "  level {res_level}: euler res linf/lambda = {:.3e} (lambda={:.3})",
                                rep.residual_linf / rep.lambda,
                                rep.lambda
                            );
                        }
                        Err(e) => println!("  level {res_level}: tessellation failed: {e}"),
                    }
                }
            }
            AnnulusCriticality::NoRootInRange { min_abs_condition, .. } => {
                println!("gamma={gamma}: no root (min |f| = {min_abs_condition:.3})");
            }
        }
    }
}
