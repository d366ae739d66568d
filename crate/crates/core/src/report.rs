//! Verification reports: one named result per check, aggregated
//! deterministically over the sample sequence.

use serde::Serialize;

use crate::par;
use crate::Result;

/// Outcome of one named check over a sample set.
///
/// `pass` holds exactly when every sample evaluated cleanly and
/// `max_residual <= tolerance`. An empty sample set passes vacuously and is
/// annotated in `note`. All residuals are ∞-norms and nonnegative.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub samples: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Concatenated coordinates `[u.., v.., w.., z..]` (as applicable to the
    /// check) of the sample with the largest residual.
    pub worst_point: Option<Vec<f64>>,
    pub note: Option<String>,
}

/// All checks of one suite on one chart, in the suite's fixed order.
#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub chart: String,
    pub checks: Vec<CheckResult>,
}

impl CheckReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Evaluate `residual` over every sample (in parallel when enabled) and fold
/// the outcomes in sample order. Per-sample evaluation errors are recorded
/// and fail the check; ties on the maximum keep the earliest sample.
pub(crate) fn evaluate_samples<P>(
    name: &str,
    tolerance: f64,
    points: &[P],
    coords: impl Fn(&P) -> Vec<f64> + Sync + Send,
    residual: impl Fn(&P) -> Result<f64> + Sync + Send,
) -> CheckResult
where
    P: Sync,
{
    if points.is_empty() {
        return CheckResult {
            name: name.to_string(),
            samples: 0,
            max_residual: 0.0,
            tolerance,
            pass: true,
            worst_point: None,
            note: Some("no samples".to_string()),
        };
    }
    let outcomes = par::map_slice(points, |p| residual(p));
    let mut max_residual = f64::NEG_INFINITY;
    let mut worst: Option<usize> = None;
    let mut errors = 0usize;
    let mut first_error: Option<(usize, String)> = None;
    for (i, outcome) in outcomes.iter().enumerate() {
        match outcome {
            Ok(r) => {
                if *r > max_residual {
                    max_residual = *r;
                    worst = Some(i);
                }
            }
            Err(e) => {
                errors += 1;
                if first_error.is_none() {
                    first_error = Some((i, e.to_string()));
                }
            }
        }
    }
    if worst.is_none() {
        max_residual = 0.0;
    }
    let note = first_error.map(|(i, msg)| {
        format!("{errors} of {} samples failed to evaluate; first at sample {i}: {msg}", points.len())
    });
    CheckResult {
        name: name.to_string(),
        samples: points.len(),
        max_residual,
        tolerance,
        pass: errors == 0 && max_residual <= tolerance,
        worst_point: worst.map(|i| coords(&points[i])),
        note,
    }
}

/// ∞-norm of a vector.
pub(crate) fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// ∞-norm of the componentwise difference.
pub(crate) fn inf_norm_diff(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b.iter())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).abs()))
}
