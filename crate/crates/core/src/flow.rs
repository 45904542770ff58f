//! Volume-constrained gradient flow toward critical sets, and the
//! closed-form radial solver for critical spherical shells.
//!
//! The flow moves vertices by `-tau (H + 2 gamma v - lambda) nu`. The
//! residual has zero area-weighted mean, so the enclosed volume is preserved
//! to first order; an exact rescale about the volume centroid removes the
//! remaining drift after every step. Steps that increase the energy are
//! retried with half the step size.

use nalgebra::Vector3;

use crate::diagnostics::asphericity;
use crate::energy::{evaluate, lagrange_identity_residual_of, EnergyReport};
use crate::geometry::{Boundary, Dim};
use crate::remesh::{remesh, RemeshReport};
use crate::{Error, Result};

/// Quadrature rule for the nonlocal energy inside the flow loop.
///
/// `Midedge` matches the standalone energy evaluation exactly; `Centroid`
/// is a coarser consistent rule (one point per face pair) that makes
/// fine-mesh flows affordable. The final report always uses the standard
/// evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NlRule {
    Midedge,
    Centroid,
}

/// Flow controls.
#[derive(Debug, Clone, serde::Serialize)]
pub struct FlowOptions {
    /// Step size per squared edge length: `tau0 = cfl * h_min^2`, the
    /// explicit stability scale of curvature flow.
    pub cfl: f64,
    /// Displacement cap: `tau * max|residual| <= cap * h_min`.
    pub displacement_cap: f64,
    pub max_steps: usize,
    /// Stop when `residual_linf / lambda` falls below this.
    pub tolerance: f64,
    /// Step-halving retries per step before declaring a stall.
    pub max_halvings: usize,
    /// Step growth after an accepted step; the energy check lets the step
    /// ride above the nominal stability scale, up to `ceiling` times it.
    pub grow: f64,
    pub ceiling: f64,
    /// Remesh when the minimum face quality drops below this (triangle
    /// meshes), or when the edge-length spread exceeds `edge_spread`.
    pub remesh_quality: f64,
    pub edge_spread: f64,
    pub remesh_enabled: bool,
    /// Abort when quality collapses below this even after remeshing.
    pub quality_floor: f64,
    pub nl_rule: NlRule,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            cfl: 0.25,
            displacement_cap: 0.3,
            max_steps: 2000,
            tolerance: 1e-2,
            max_halvings: 8,
            grow: 1.4,
            ceiling: 8.0,
            remesh_quality: 0.3,
            edge_spread: 4.0,
            remesh_enabled: true,
            quality_floor: 0.05,
            nl_rule: NlRule::Midedge,
        }
    }
}

impl FlowOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0) || !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(Error::InvalidShape(
                "flow options need cfl > 0 and tolerance in (0, 1)".into(),
            ));
        }
        Ok(())
    }
}

/// One accepted step of the trace.
#[derive(Debug, Clone, serde::Serialize)]
pub struct FlowStepRecord {
    pub step: usize,
    pub total: f64,
    pub perimeter: f64,
    pub nonlocal: f64,
    pub lambda: f64,
    pub residual_l2: f64,
    pub residual_linf: f64,
    /// Relative volume drift removed by the exact rescale.
    pub volume_drift: f64,
    pub min_quality: f64,
    pub step_size: f64,
}

#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct FlowTrace {
    pub records: Vec<FlowStepRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    ResidualTolerance,
    MaxSteps,
    Stalled { step: usize },
    QualityCollapse { step: usize },
}

/// Flow outcome with the final shape, trace and convergence metrics.
#[derive(Debug, Clone, serde::Serialize)]
pub struct FlowResult {
    #[serde(skip)]
    pub boundary: Boundary,
    pub trace: FlowTrace,
    pub converged: bool,
    pub stop: StopReason,
    pub final_report: EnergyReport,
    /// `n lambda |E| - [(n-1) P + (n+2) gamma NL]` at the final shape
    /// (triangle meshes only).
    pub identity_residual: Option<f64>,
    /// Largest deviation `||x| - r|` of a vertex from the best-fit ball
    /// (center = volume centroid, radius from the enclosed volume).
    pub ball_deviation: f64,
    pub asphericity: f64,
    pub remeshes: usize,
}

// Per-step state used for descent: perimeter, nonlocal (by the selected
// rule), residual field and multiplier. At gamma = 0 the potential drops out
// of the dynamics exactly and is skipped.
struct FlowEval {
    total: f64,
    perimeter: f64,
    nonlocal: f64,
    lambda: f64,
    residual: Vec<f64>,
    residual_l2: f64,
    residual_linf: f64,
}

fn flow_evaluate(b: &Boundary, gamma: f64, rule: NlRule) -> FlowEval {
    let perimeter = b.perimeter();
    let nonlocal = match rule {
        NlRule::Midedge => crate::potential::nonlocal_energy(b),
        NlRule::Centroid => crate::potential::nonlocal_energy_centroid(b),
    };
    let v: Vec<f64> = if gamma > 0.0 {
        crate::potential::vertex_potentials(b)
    } else {
        vec![0.0; b.vertex_count()]
    };
    let areas = b.vertex_areas();
    let lambda = b
        .mean_curvature()
        .iter()
        .zip(&v)
        .zip(areas)
        .map(|((h, vi), a)| (h + 2.0 * gamma * vi) * a)
        .sum::<f64>()
        / perimeter;
    let residual: Vec<f64> = b
        .mean_curvature()
        .iter()
        .zip(&v)
        .map(|(h, vi)| h + 2.0 * gamma * vi - lambda)
        .collect();
    let residual_l2 = residual
        .iter()
        .zip(areas)
        .map(|(r, a)| r * r * a)
        .sum::<f64>()
        .sqrt();
    let residual_linf = residual.iter().fold(0.0_f64, |m, r| m.max(r.abs()));
    FlowEval {
        total: perimeter + gamma * nonlocal,
        perimeter,
        nonlocal,
        lambda,
        residual,
        residual_l2,
        residual_linf,
    }
}

fn record_of(step: usize, ev: &FlowEval, b: &Boundary, drift: f64, tau: f64) -> FlowStepRecord {
    FlowStepRecord {
        step,
        total: ev.total,
        perimeter: ev.perimeter,
        nonlocal: ev.nonlocal,
        lambda: ev.lambda,
        residual_l2: ev.residual_l2,
        residual_linf: ev.residual_linf,
        volume_drift: drift,
        min_quality: b.min_face_quality(),
        step_size: tau,
    }
}

fn displaced_rescaled(
    b: &Boundary,
    ev: &FlowEval,
    tau: f64,
    target_volume: f64,
) -> Result<(Boundary, f64)> {
    let disp: Vec<Vector3<f64>> = (0..b.vertex_count())
        .map(|i| -tau * ev.residual[i] * b.normals()[i])
        .collect();
    let moved = b.displaced(&disp)?;
    let drift = (moved.volume() / target_volume - 1.0).abs();
    let rescaled = moved.rescaled_to_volume(target_volume)?;
    Ok((rescaled, drift))
}

/// One descent step: move by the residual, rescale the volume exactly, and
/// halve the step until the energy does not increase.
pub fn step(b: &Boundary, gamma: f64, opts: &FlowOptions) -> Result<(Boundary, FlowStepRecord)> {
    opts.validate()?;
    let target = b.volume();
    let ev = flow_evaluate(b, gamma, opts.nl_rule);
    let mut tau = initial_tau(b, &ev, opts);
    for halving in 0..=opts.max_halvings {
        let (cand, drift) = displaced_rescaled(b, &ev, tau, target)?;
        let ev_new = flow_evaluate(&cand, gamma, opts.nl_rule);
        if ev_new.total <= ev.total * (1.0 + 1e-12) {
            let rec = record_of(1, &ev_new, &cand, drift, tau);
            return Ok((cand, rec));
        }
        if halving == opts.max_halvings {
            break;
        }
        tau /= 2.0;
    }
    Err(Error::FlowStalled {
        step: 1,
        halvings: opts.max_halvings,
    })
}

fn initial_tau(b: &Boundary, ev: &FlowEval, opts: &FlowOptions) -> f64 {
    let h = b.min_edge_length();
    let tau_cfl = opts.cfl * h * h;
    let rmax = ev.residual_linf.max(1e-12);
    tau_cfl.min(opts.displacement_cap * h / rmax)
}

/// Run the flow until the relative residual meets the tolerance.
pub fn find_critical(b0: &Boundary, gamma: f64, opts: &FlowOptions) -> Result<FlowResult> {
    opts.validate()?;
    let target = b0.volume();
    let mut b = b0.clone();
    let mut ev = flow_evaluate(&b, gamma, opts.nl_rule);
    let mut trace = FlowTrace::default();
    trace.records.push(record_of(0, &ev, &b, 0.0, 0.0));
    let mut tau = initial_tau(&b, &ev, opts);
    let mut remeshes = 0usize;

    let mut stop = StopReason::MaxSteps;
    let mut converged = ev.residual_linf / ev.lambda.abs() <= opts.tolerance;
    if converged {
        stop = StopReason::ResidualTolerance;
    } else {
        for step_idx in 1..=opts.max_steps {
            // Mesh health.
            let quality = b.min_face_quality();
            let spread = b.max_edge_length() / b.min_edge_length();
            if opts.remesh_enabled
                && (quality < opts.remesh_quality || spread > opts.edge_spread)
            {
                let (nb, report) = remesh(&b)?;
                let RemeshReport { changed, .. } = report;
                if changed {
                    remeshes += 1;
                    b = nb.rescaled_to_volume(target)?;
                    ev = flow_evaluate(&b, gamma, opts.nl_rule);
                }
            }
            if b.min_face_quality() < opts.quality_floor {
                stop = StopReason::QualityCollapse { step: step_idx };
                break;
            }

            // The displacement cap limits the step; the energy check lets it
            // ride above the nominal explicit-stability scale.
            let h = b.min_edge_length();
            let ceiling = (opts.ceiling * opts.cfl * h * h)
                .min(opts.displacement_cap * h / ev.residual_linf.max(1e-12));
            tau = tau.min(ceiling);
            let mut accepted = false;
            for _ in 0..=opts.max_halvings {
                let (cand, drift) = displaced_rescaled(&b, &ev, tau, target)?;
                let ev_new = flow_evaluate(&cand, gamma, opts.nl_rule);
                if ev_new.total <= ev.total * (1.0 + 1e-12) {
                    trace
                        .records
                        .push(record_of(step_idx, &ev_new, &cand, drift, tau));
                    b = cand;
                    ev = ev_new;
                    accepted = true;
                    break;
                }
                tau /= 2.0;
            }
            if !accepted {
                stop = StopReason::Stalled { step: step_idx };
                break;
            }
            tau *= opts.grow;

            if ev.residual_linf / ev.lambda.abs() <= opts.tolerance {
                converged = true;
                stop = StopReason::ResidualTolerance;
                break;
            }
        }
    }

    let final_report = evaluate(&b, gamma)?;
    let identity_residual = match b.dim() {
        Dim::Three => Some(lagrange_identity_residual_of(&final_report)),
        Dim::Two => None,
    };
    let (asph, _) = asphericity(&b);
    let ball_deviation = best_fit_ball_deviation(&b);
    Ok(FlowResult {
        boundary: b,
        trace,
        converged,
        stop,
        final_report,
        identity_residual,
        ball_deviation,
        asphericity: asph,
        remeshes,
    })
}

/// Largest vertex deviation from the best-fit ball (center at the volume
/// centroid, radius from the enclosed volume).
pub fn best_fit_ball_deviation(b: &Boundary) -> f64 {
    let c = b.volume_centroid();
    let v = b.volume();
    let r = match b.dim() {
        Dim::Three => (3.0 * v / (4.0 * std::f64::consts::PI)).powf(1.0 / 3.0),
        Dim::Two => (v / std::f64::consts::PI).sqrt(),
    };
    b.vertices()
        .iter()
        .map(|x| ((x - c).norm() - r).abs())
        .fold(0.0_f64, f64::max)
}

/// A critical spherical shell `B_R \ B_rho` for the given coupling and
/// enclosed volume, from the radial closed form.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct CriticalAnnulus {
    pub outer_r: f64,
    pub inner_r: f64,
    pub lambda: f64,
    /// `|outer condition - inner condition|` at the root.
    pub condition_residual: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum AnnulusCriticality {
    Critical(CriticalAnnulus),
    /// No critical shell in the scanned inner-radius range: the curvature
    /// mismatch between the two spheres cannot be balanced at this coupling.
    NoRootInRange {
        rho_min: f64,
        rho_max: f64,
        min_abs_condition: f64,
    },
}

/// Radial potential of the shell `B_R \ B_rho` (piecewise: constant in the
/// hole, `c + b/r - r^2/6` in the shell, `m/r` outside, matched to be C^1).
pub fn shell_potential(outer_r: f64, inner_r: f64, r: f64) -> f64 {
    let (rr, rho) = (outer_r, inner_r);
    let b = -rho * rho * rho / 3.0;
    let c = rr * rr / 2.0;
    let m = (rr * rr * rr - rho * rho * rho) / 3.0;
    if r <= rho {
        (rr * rr - rho * rho) / 2.0
    } else if r <= rr {
        c + b / r - r * r / 6.0
    } else {
        m / r
    }
}

// Difference of the criticality condition H + 2 gamma v between the outer
// and inner spheres of the shell with fixed enclosed volume.
fn shell_condition_gap(gamma: f64, volume: f64, rho: f64) -> f64 {
    let rr = (rho * rho * rho + 3.0 * volume / (4.0 * std::f64::consts::PI)).cbrt();
    let outer = 2.0 / rr + 2.0 * gamma * shell_potential(rr, rho, rr);
    let inner = -2.0 / rho + 2.0 * gamma * shell_potential(rr, rho, rho);
    outer - inner
}

/// Solve the radial criticality condition for a spherical shell of the
/// given enclosed volume by scanning the inner radius and bisecting the
/// first sign change. Nonexistence is an outcome, not an error.
pub fn annulus_critical(gamma: f64, volume: f64) -> Result<AnnulusCriticality> {
    if gamma <= 0.0 || volume <= 0.0 {
        return Err(Error::InvalidShape(
            "the critical shell needs gamma > 0 and volume > 0".into(),
        ));
    }
    let r0 = (3.0 * volume / (4.0 * std::f64::consts::PI)).cbrt();
    let rho_min = 1e-3 * r0;
    let rho_max = 30.0 * r0;
    let samples = 4000;
    let grid = |k: usize| -> f64 {
        rho_min * (rho_max / rho_min).powf(k as f64 / (samples - 1) as f64)
    };

    let mut prev_rho = grid(0);
    let mut prev_f = shell_condition_gap(gamma, volume, prev_rho);
    let mut min_abs = prev_f.abs();
    let mut bracket = None;
    for k in 1..samples {
        let rho = grid(k);
        let f = shell_condition_gap(gamma, volume, rho);
        min_abs = min_abs.min(f.abs());
        if bracket.is_none() && (prev_f.signum() != f.signum()) {
            bracket = Some((prev_rho, prev_f, rho, f));
            break;
        }
        prev_rho = rho;
        prev_f = f;
    }

    let Some((mut lo, mut flo, mut hi, _)) = bracket else {
        return Ok(AnnulusCriticality::NoRootInRange {
            rho_min,
            rho_max,
            min_abs_condition: min_abs,
        });
    };

    for _ in 0..500 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let fm = shell_condition_gap(gamma, volume, mid);
        if fm == 0.0 {
            lo = mid;
            break;
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    let rho = 0.5 * (lo + hi);
    let rr = (rho * rho * rho + 3.0 * volume / (4.0 * std::f64::consts::PI)).cbrt();
    let lambda = 2.0 / rr + 2.0 * gamma * shell_potential(rr, rho, rr);
    let residual = shell_condition_gap(gamma, volume, rho).abs();
    Ok(AnnulusCriticality::Critical(CriticalAnnulus {
        outer_r: rr,
        inner_r: rho,
        lambda,
        condition_residual: residual,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shell_potential_is_c1_and_solves_poisson() {
        let (rr, rho) = (1.2, 0.5);
        let eps = 1e-6;
        // Continuity at the interfaces.
        for r in [rho, rr] {
            let a = shell_potential(rr, rho, r - eps);
            let b = shell_potential(rr, rho, r + eps);
            assert!((a - b).abs() < 1e-5, "jump at {r}: {a} vs {b}");
        }
        // Derivative continuity.
        for r in [rho, rr] {
            let d_in = (shell_potential(rr, rho, r) - shell_potential(rr, rho, r - eps)) / eps;
            let d_out = (shell_potential(rr, rho, r + eps) - shell_potential(rr, rho, r)) / eps;
            assert!((d_in - d_out).abs() < 1e-4, "kink at {r}: {d_in} vs {d_out}");
        }
        // -Lap v = 1 in the shell: radial Laplacian by finite differences.
        for r in [0.7, 0.9, 1.1] {
            let h = 1e-4;
            let vm = shell_potential(rr, rho, r - h);
            let v0 = shell_potential(rr, rho, r);
            let vp = shell_potential(rr, rho, r + h);
            let lap = (vp - 2.0 * v0 + vm) / (h * h) + (vp - vm) / (h * r);
            assert!((lap + 1.0).abs() < 1e-5, "Lap v = {lap} at r = {r}");
        }
        // Decay outside and constancy inside.
        let far = shell_potential(rr, rho, 50.0);
        assert!(far > 0.0 && far < 0.02);
        assert_eq!(
            shell_potential(rr, rho, 0.1),
            shell_potential(rr, rho, 0.3)
        );
    }
}
