//! Numerical verification that a chart actually presents a groupoid:
//! unit laws, source compatibility, associativity, inversion and the
//! submersion rank condition, each evaluated at deterministically sampled
//! points and reported with ∞-norm residuals.

use crate::chart::{
    sample_quads, sample_triples, LocalGroupoidChart, SamplePlan, DEFAULT_NEWTON_MAX_ITERATIONS,
};
use crate::report::{evaluate_samples, inf_norm, inf_norm_diff, CheckReport, CheckResult};
use crate::Result;

/// Default tolerance for the identity checks.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;
/// Default smallest-singular-value threshold for the submersion check.
pub const DEFAULT_RANK_TOLERANCE: f64 = 1e-8;

/// Fiber samples are shrunk by this extra factor so nested products such as
/// `p(u, p(u,v,w), z)` stay inside the declared fiber box.
const FIBER_SCALE: f64 = 0.5;

fn concat(parts: &[&[f64]]) -> Vec<f64> {
    parts.iter().flat_map(|p| p.iter().copied()).collect()
}

/// `p(u,0,w) = w`, `p(u,v,0) = v` and `sigma(u,0) = u`.
pub fn check_unit_laws(chart: &LocalGroupoidChart, plan: &SamplePlan, tol: f64) -> CheckResult {
    let points = sample_triples(chart, plan, FIBER_SCALE);
    let zero = vec![0.0; chart.m()];
    evaluate_samples(
        "unit_laws",
        tol,
        &points,
        |t| concat(&[&t.u, &t.v, &t.w]),
        |t| {
            let left_unit = chart.eval_prod(&t.u, &zero, &t.w)?;
            let right_unit = chart.eval_prod(&t.u, &t.v, &zero)?;
            let source_unit = chart.eval_sigma(&t.u, &zero)?;
            let r = inf_norm_diff(&left_unit, &t.w)
                .max(inf_norm_diff(&right_unit, &t.v))
                .max(inf_norm_diff(&source_unit, &t.u));
            Ok(r)
        },
    )
}

/// `sigma(u, p(u,v,w)) = sigma(sigma(u,v), w)`: the source of a product is
/// the source of its second factor.
pub fn check_source_compat(chart: &LocalGroupoidChart, plan: &SamplePlan, tol: f64) -> CheckResult {
    let points = sample_triples(chart, plan, FIBER_SCALE);
    evaluate_samples(
        "source_compatibility",
        tol,
        &points,
        |t| concat(&[&t.u, &t.v, &t.w]),
        |t| {
            let prod = chart.eval_prod(&t.u, &t.v, &t.w)?;
            let lhs = chart.eval_sigma(&t.u, &prod)?;
            let mid = chart.eval_sigma(&t.u, &t.v)?;
            let rhs = chart.eval_sigma(&mid, &t.w)?;
            Ok(inf_norm_diff(&lhs, &rhs))
        },
    )
}

/// `p(u, p(u,v,w), z) = p(u, v, p(sigma(u,v), w, z))`.
pub fn check_associativity(chart: &LocalGroupoidChart, plan: &SamplePlan, tol: f64) -> CheckResult {
    let points = sample_quads(chart, plan, FIBER_SCALE);
    evaluate_samples(
        "associativity",
        tol,
        &points,
        |q| concat(&[&q.u, &q.v, &q.w, &q.z]),
        |q| {
            let vw = chart.eval_prod(&q.u, &q.v, &q.w)?;
            let lhs = chart.eval_prod(&q.u, &vw, &q.z)?;
            let mid = chart.eval_sigma(&q.u, &q.v)?;
            let wz = chart.eval_prod(&mid, &q.w, &q.z)?;
            let rhs = chart.eval_prod(&q.u, &q.v, &wz)?;
            Ok(inf_norm_diff(&lhs, &rhs))
        },
    )
}

/// With `w* = invert_at(u, v)`: `p(u, v, w*) = 0` and
/// `p(sigma(u,v), w*, v) = 0` (two-sided inverse).
pub fn check_inversion(chart: &LocalGroupoidChart, plan: &SamplePlan, tol: f64) -> CheckResult {
    let points = sample_triples(chart, plan, FIBER_SCALE);
    let newton_tol = crate::chart::DEFAULT_NEWTON_TOLERANCE.min(tol);
    evaluate_samples(
        "inversion",
        tol,
        &points,
        |t| concat(&[&t.u, &t.v]),
        |t| {
            let out = chart.invert_at(&t.u, &t.v, newton_tol, DEFAULT_NEWTON_MAX_ITERATIONS)?;
            let mid = chart.eval_sigma(&t.u, &t.v)?;
            let back = chart.eval_prod(&mid, &out.w, &t.v)?;
            Ok(out.residual.max(inf_norm(&back)))
        },
    )
}

/// The source map must be a submersion: the `n × (n+m)` Jacobian of `sigma`
/// has full rank `n` at every sampled point.
///
/// The recorded residual is `tol² / σ_min`, which is nonnegative,
/// continuous in the data, and `≤ tol` exactly when the smallest singular
/// value is at least `tol`. Charts with `n = 0` pass vacuously.
pub fn check_submersion_rank(
    chart: &LocalGroupoidChart,
    plan: &SamplePlan,
    tol: f64,
) -> CheckResult {
    if chart.n() == 0 {
        let mut result = CheckResult {
            name: "submersion_rank".to_string(),
            samples: plan.count(),
            max_residual: 0.0,
            tolerance: tol,
            pass: true,
            worst_point: None,
            note: Some("base dimension 0: empty Jacobian".to_string()),
        };
        if plan.count() == 0 {
            result.note = Some("no samples".to_string());
        }
        return result;
    }
    let points = sample_triples(chart, plan, FIBER_SCALE);
    evaluate_samples(
        "submersion_rank",
        tol,
        &points,
        |t| concat(&[&t.u, &t.v]),
        |t| {
            let jac = chart.sigma_jacobian_uv(&t.u, &t.v)?;
            let svd = jac.svd(false, false);
            let sigma_min = svd
                .singular_values
                .iter()
                .fold(f64::INFINITY, |a, &b| a.min(b));
            Ok((tol * tol / sigma_min).min(f64::MAX))
        },
    )
}

/// Run the five groupoid checks in fixed order: unit laws, source
/// compatibility, associativity, inversion, submersion rank. Failures are
/// data, not errors.
pub fn run_groupoid_suite(
    chart: &LocalGroupoidChart,
    plan: &SamplePlan,
    tol: f64,
) -> CheckReport {
    CheckReport {
        chart: chart.name().to_string(),
        checks: vec![
            check_unit_laws(chart, plan, tol),
            check_source_compat(chart, plan, tol),
            check_associativity(chart, plan, tol),
            check_inversion(chart, plan, tol),
            check_submersion_rank(chart, plan, DEFAULT_RANK_TOLERANCE),
        ],
    }
}

/// Convenience used by tests and the CLI: residual of the expansion
/// `p(u, tv, tw) - tv - tw - t²·B(u,v,w)` for a scaling diagnostic.
pub fn product_expansion_residual(
    chart: &LocalGroupoidChart,
    u: &[f64],
    v: &[f64],
    w: &[f64],
    bilinear_vw: &[f64],
    t: f64,
) -> Result<f64> {
    let tv: Vec<f64> = v.iter().map(|x| t * x).collect();
    let tw: Vec<f64> = w.iter().map(|x| t * x).collect();
    let p = chart.eval_prod(u, &tv, &tw)?;
    let diff: Vec<f64> = p
        .iter()
        .zip(tv.iter().zip(tw.iter()))
        .zip(bilinear_vw.iter())
        .map(|((pk, (a, b)), bk)| pk - a - b - t * t * bk)
        .collect();
    Ok(inf_norm(&diff))
}
