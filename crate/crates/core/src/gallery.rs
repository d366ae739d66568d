//! Built-in example charts with ground-truth structure data.
//!
//! Every entry is an exact groupoid by construction, with expected anchor
//! and structure functions derived independently of the extraction code
//! (matrix products, quaternion algebra, composition of affine maps), so a
//! failing comparison pinpoints an extraction bug rather than a chart bug.

use std::sync::Arc;

use crate::chart::LocalGroupoidChart;
use crate::structure::Tensor3;
use crate::{Error, Result};

type AnchorRule = Arc<dyn Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync>;
type TensorRule = Arc<dyn Fn(&[f64]) -> Tensor3 + Send + Sync>;

/// A gallery chart together with its expected structure data.
pub struct GalleryEntry {
    pub chart: LocalGroupoidChart,
    /// Where the chart and its expected data come from.
    pub note: String,
    anchor_rule: AnchorRule,
    c_rule: TensorRule,
}

impl GalleryEntry {
    /// Ground-truth anchor matrix at `u`.
    pub fn expected_anchor(&self, u: &[f64]) -> Vec<Vec<f64>> {
        (self.anchor_rule)(u)
    }

    /// Ground-truth structure functions at `u`.
    pub fn expected_c(&self, u: &[f64]) -> Tensor3 {
        (self.c_rule)(u)
    }
}

/// Names of the built-in entries, sorted.
pub fn list_entries() -> Vec<&'static str> {
    vec![
        "affine_action",
        "heisenberg",
        "heisenberg_bundle",
        "pair",
        "su2_quaternion",
    ]
}

fn zero_tensor(m: usize) -> Tensor3 {
    vec![vec![vec![0.0; m]; m]; m]
}

fn epsilon(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// Largest supported pair-groupoid dimension.
pub const MAX_PAIR_DIM: usize = 16;

/// Construct a gallery entry. `dim` applies to the `pair` entry only
/// (default 1) and must be in `1..=MAX_PAIR_DIM`.
pub fn get_entry(name: &str, dim: Option<usize>) -> Result<GalleryEntry> {
    if !list_entries().contains(&name) {
        return Err(Error::UnknownEntry {
            name: name.to_string(),
        });
    }
    if name != "pair" && dim.is_some() {
        return Err(Error::BadParameter {
            name: name.to_string(),
            parameter: "dim",
        });
    }
    match name {
        "pair" => {
            let d = dim.unwrap_or(1);
            if d == 0 || d > MAX_PAIR_DIM {
                return Err(Error::ParameterOutOfRange {
                    name: name.to_string(),
                    parameter: "dim",
                    value: d,
                });
            }
            let sigma: Vec<String> = (1..=d).map(|i| format!("u{i} + v{i}")).collect();
            let prod: Vec<String> = (1..=d).map(|i| format!("v{i} + w{i}")).collect();
            let chart = LocalGroupoidChart::from_exprs(
                "pair",
                d,
                d,
                &sigma.iter().map(String::as_str).collect::<Vec<_>>(),
                &prod.iter().map(String::as_str).collect::<Vec<_>>(),
                1.0,
                1.0,
            )?;
            Ok(GalleryEntry {
                chart,
                note: format!(
                    "pair groupoid M×M over an interval chart of R^{d}; the algebroid is the \
                     tangent bundle: identity anchor, zero bracket"
                ),
                anchor_rule: Arc::new(move |_| {
                    (0..d)
                        .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                        .collect()
                }),
                c_rule: Arc::new(move |_| zero_tensor(d)),
            })
        }
        "heisenberg" => {
            let chart = LocalGroupoidChart::from_exprs(
                "heisenberg",
                0,
                3,
                &[],
                &["v1 + w1", "v2 + w2", "v3 + w3 + v1*w2"],
                1.0,
                1.0,
            )?;
            Ok(GalleryEntry {
                chart,
                note: "Heisenberg group: product of 3×3 upper unitriangular matrices, \
                       entries (v1, v2, v3); [e1, e2] = e3"
                    .to_string(),
                anchor_rule: Arc::new(|_| vec![Vec::new(); 3]),
                c_rule: Arc::new(|_| {
                    let mut c = zero_tensor(3);
                    c[2][0][1] = 1.0;
                    c[2][1][0] = -1.0;
                    c
                }),
            })
        }
        "su2_quaternion" => {
            let chart = LocalGroupoidChart::from_exprs(
                "su2_quaternion",
                0,
                3,
                &[],
                &[
                    "sqrt(1 - v1^2 - v2^2 - v3^2)*w1 + sqrt(1 - w1^2 - w2^2 - w3^2)*v1 \
                     + v2*w3 - v3*w2",
                    "sqrt(1 - v1^2 - v2^2 - v3^2)*w2 + sqrt(1 - w1^2 - w2^2 - w3^2)*v2 \
                     + v3*w1 - v1*w3",
                    "sqrt(1 - v1^2 - v2^2 - v3^2)*w3 + sqrt(1 - w1^2 - w2^2 - w3^2)*v3 \
                     + v1*w2 - v2*w1",
                ],
                1.0,
                0.5,
            )?;
            Ok(GalleryEntry {
                chart,
                note: "SU(2) charted by the vector part of unit quaternions with positive \
                       scalar part (smooth near the identity, unlike rotation-log charts); \
                       quaternion units give [ei, ej] = 2 ε_ijk ek"
                    .to_string(),
                anchor_rule: Arc::new(|_| vec![Vec::new(); 3]),
                c_rule: Arc::new(|_| {
                    let mut c = zero_tensor(3);
                    for k in 0..3 {
                        for i in 0..3 {
                            for j in 0..3 {
                                c[k][i][j] = 2.0 * epsilon(i, j, k);
                            }
                        }
                    }
                    c
                }),
            })
        }
        "affine_action" => {
            // Convention: (x, h)(x·h, h') = (x, h·h') with x·h = h(x) and
            // h·h' = h' ∘ h, so the source of (x, h) is h(x).
            let chart = LocalGroupoidChart::from_exprs(
                "affine_action",
                1,
                2,
                &["exp(v1)*u1 + v2"],
                &["v1 + w1", "exp(w1)*v2 + w2"],
                3.0,
                0.5,
            )?;
            Ok(GalleryEntry {
                chart,
                note: "action groupoid of the affine group x ↦ e^a x + b on the line; \
                       anchor sends e1 ↦ u∂, e2 ↦ ∂, and [e1, e2] = -e2"
                    .to_string(),
                anchor_rule: Arc::new(|u| vec![vec![u[0]], vec![1.0]]),
                c_rule: Arc::new(|_| {
                    let mut c = zero_tensor(2);
                    c[1][1][0] = 1.0;
                    c[1][0][1] = -1.0;
                    c
                }),
            })
        }
        "heisenberg_bundle" => {
            let chart = LocalGroupoidChart::from_exprs(
                "heisenberg_bundle",
                1,
                3,
                &["u1"],
                &["v1 + w1", "v2 + w2", "v3 + w3 + (1 + u1)*v1*w2"],
                1.0,
                1.0,
            )?;
            Ok(GalleryEntry {
                chart,
                note: "bundle of Heisenberg-type groups over an interval: zero anchor and \
                       base-dependent bracket [e1, e2] = (1 + u) e3"
                    .to_string(),
                anchor_rule: Arc::new(|_| vec![vec![0.0]; 3]),
                c_rule: Arc::new(|u| {
                    let mut c = zero_tensor(3);
                    c[2][0][1] = 1.0 + u[0];
                    c[2][1][0] = -(1.0 + u[0]);
                    c
                }),
            })
        }
        _ => Err(Error::UnknownEntry {
            name: name.to_string(),
        }),
    }
}
