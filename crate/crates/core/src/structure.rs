//! Extraction of the algebroid data carried by a groupoid chart, and the
//! numerical verification of the Lie algebroid axioms.
//!
//! At a base point `u` the product map determines
//!
//! * the anchor matrix `a[i][j] = ∂sigma_j/∂v_i (u, 0)`,
//! * the bilinear term `B[k][i][j] = ∂²p_k/∂v_i∂w_j (u, 0, 0)` (the pure
//!   second-order blocks of `p` vanish by the unit laws, so the mixed
//!   Hessian is the whole second-order content),
//! * the structure functions `c[k][i][j] = B[k][i][j] - B[k][j][i]`.
//!
//! Index convention, used for every rank-3 tensor here: `c[k][i][j]` is the
//! `e_k`-coefficient of the frame bracket `[e_i, e_j]`.
//!
//! Two independent routes to `c` are provided: the mixed-Hessian extraction
//! above, and the Lie bracket of the left-invariant vector fields evaluated
//! as functions of the fiber coordinate (`bracket_invariant_fields_at`).
//! The invariant field uses the exact Jacobian `∂p/∂w(u, v, 0)`, not its
//! first-order expansion, which keeps the two routes numerically distinct.

use crate::chart::{sample_base_points, LocalGroupoidChart, SamplePlan};
use crate::expr::{Expr, VariableEnv};
use crate::jet::{Jet, JetSpec, JetTable};
use crate::report::{evaluate_samples, inf_norm_diff, CheckReport, CheckResult};
use crate::{Error, Result};

/// Rank-3 tensor `t[k][i][j]`, dimension `m` each way.
pub type Tensor3 = Vec<Vec<Vec<f64>>>;

/// Structure data of a chart at one base point.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct StructureData {
    /// Base point.
    pub u: Vec<f64>,
    /// Anchor matrix, `m × n`: `anchor[i][j] = ∂sigma_j/∂v_i (u, 0)`.
    pub anchor: Vec<Vec<f64>>,
    /// Mixed Hessian of the product map, `B[k][i][j] = ∂²p_k/∂v_i∂w_j`.
    pub bilinear: Tensor3,
    /// Structure functions `c[k][i][j] = B[k][i][j] - B[k][j][i]`.
    pub c: Tensor3,
}

/// An algebroid section expressed in the moving frame: `m` coefficient
/// expressions over the base coordinates `u1..un`.
#[derive(Debug, Clone)]
pub struct SectionSpec {
    n: usize,
    env: VariableEnv,
    coeffs: Vec<Expr>,
}

impl SectionSpec {
    pub fn parse(n: usize, sources: &[&str]) -> Result<Self> {
        let env = VariableEnv::base_only(n);
        let coeffs: Vec<Expr> = sources
            .iter()
            .map(|s| Expr::parse(s, &env))
            .collect::<Result<_>>()?;
        Ok(SectionSpec { n, env, coeffs })
    }

    /// Constant coefficients.
    pub fn constant(n: usize, values: &[f64]) -> Self {
        SectionSpec {
            n,
            env: VariableEnv::base_only(n),
            coeffs: values.iter().map(|&v| Expr::Num(v)).collect(),
        }
    }

    /// The `i`-th frame section `e_i` (0-based).
    pub fn frame(n: usize, m: usize, i: usize) -> Self {
        let values: Vec<f64> = (0..m).map(|k| if k == i { 1.0 } else { 0.0 }).collect();
        SectionSpec::constant(n, &values)
    }

    /// The section with every coefficient multiplied by `f` (an expression
    /// over the same base variables).
    pub fn scaled_by(&self, f: &Expr) -> SectionSpec {
        SectionSpec {
            n: self.n,
            env: self.env.clone(),
            coeffs: self
                .coeffs
                .iter()
                .map(|c| Expr::Mul(Box::new(f.clone()), Box::new(c.clone())))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Coefficient vector at `u`.
    pub fn eval_at(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.coeffs.iter().map(|c| c.eval_f64(u)).collect()
    }

    /// Gradient of each coefficient: `grad[k][t] = ∂ξ_k/∂u_t (u)`, as `m`
    /// rows of `n` entries.
    fn gradients_at(&self, u: &[f64]) -> Result<Vec<Vec<f64>>> {
        let n = self.n;
        if n == 0 {
            return Ok(vec![Vec::new(); self.coeffs.len()]);
        }
        let spec = JetSpec::new(n, 1)?;
        let table = JetTable::shared(spec);
        let bindings: Vec<Jet> = u
            .iter()
            .enumerate()
            .map(|(t, &x)| Jet::variable_from(table, x, t))
            .collect::<Result<_>>()?;
        let mut out = Vec::with_capacity(self.coeffs.len());
        let mut alpha = vec![0usize; n];
        for coeff in &self.coeffs {
            let jet = coeff.eval(&bindings, &|v| Jet::constant_from(table, v))?;
            let mut grad = Vec::with_capacity(n);
            for t in 0..n {
                alpha[t] = 1;
                grad.push(jet.extract_partial(&alpha)?);
                alpha[t] = 0;
            }
            out.push(grad);
        }
        Ok(out)
    }
}

/// Value of a tangent vector field in chart coordinates, split into base
/// and fiber components. Left-invariant fields have base component zero.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentFieldValue {
    pub base: Vec<f64>,
    pub fiber: Vec<f64>,
}

fn check_section(chart: &LocalGroupoidChart, name: &'static str, s: &SectionSpec) -> Result<()> {
    if s.n != chart.n() || s.len() != chart.m() {
        return Err(Error::VectorLength {
            name,
            expected: chart.m(),
            got: s.len(),
        });
    }
    Ok(())
}

fn check_point(chart: &LocalGroupoidChart, u: &[f64]) -> Result<()> {
    if u.len() != chart.n() {
        return Err(Error::VectorLength {
            name: "u",
            expected: chart.n(),
            got: u.len(),
        });
    }
    Ok(())
}

/// Anchor matrix at `u`: partials of the source map in the fiber
/// directions at `v = 0`. For `n = 0` this is the empty `m × 0` matrix.
pub fn anchor_at(chart: &LocalGroupoidChart, u: &[f64]) -> Result<Vec<Vec<f64>>> {
    check_point(chart, u)?;
    let (n, m) = (chart.n(), chart.m());
    if n == 0 {
        return Ok(vec![Vec::new(); m]);
    }
    let spec = JetSpec::new(m, 1)?;
    let table = JetTable::shared(spec);
    let mut inputs: Vec<Jet> = Vec::with_capacity(n + m);
    for &x in u {
        inputs.push(Jet::constant_from(table, x));
    }
    for i in 0..m {
        inputs.push(Jet::variable_from(table, 0.0, i)?);
    }
    let sigma = chart.eval_sigma_jets(&inputs, spec)?;
    let mut anchor = vec![vec![0.0; n]; m];
    let mut alpha = vec![0usize; m];
    for (j, jet) in sigma.iter().enumerate() {
        for (i, row) in anchor.iter_mut().enumerate() {
            alpha[i] = 1;
            row[j] = jet.extract_partial(&alpha)?;
            alpha[i] = 0;
        }
    }
    Ok(anchor)
}

/// Bilinear term at `u`, extracted as the mixed Hessian of the product map:
/// `B[k][i][j] = ∂²p_k/∂v_i∂w_j (u, 0, 0)`. One order-2 jet evaluation with
/// two seeded directions per `(i, j)` pair.
pub fn bilinear_at(chart: &LocalGroupoidChart, u: &[f64]) -> Result<Tensor3> {
    bilinear_at_with_order(chart, u, 2)
}

/// [`bilinear_at`] evaluated at a caller-chosen jet order in `2..=3`.
/// Results are identical at every admissible order (truncation
/// consistency); higher orders exist for diagnostics.
pub fn bilinear_at_with_order(
    chart: &LocalGroupoidChart,
    u: &[f64],
    order: usize,
) -> Result<Tensor3> {
    check_point(chart, u)?;
    if !(2..=crate::jet::MAX_ORDER).contains(&order) {
        return Err(Error::InvalidOrder { order });
    }
    let (n, m) = (chart.n(), chart.m());
    let spec = JetSpec::new(2, order)?;
    let table = JetTable::shared(spec);
    let mut b = vec![vec![vec![0.0; m]; m]; m];
    for i in 0..m {
        for j in 0..m {
            let mut inputs: Vec<Jet> = Vec::with_capacity(n + 2 * m);
            for &x in u {
                inputs.push(Jet::constant_from(table, x));
            }
            for a in 0..m {
                if a == i {
                    inputs.push(Jet::variable_from(table, 0.0, 0)?);
                } else {
                    inputs.push(Jet::constant_from(table, 0.0));
                }
            }
            for a in 0..m {
                if a == j {
                    inputs.push(Jet::variable_from(table, 0.0, 1)?);
                } else {
                    inputs.push(Jet::constant_from(table, 0.0));
                }
            }
            let p = chart.eval_prod_jets(&inputs, spec)?;
            for (k, jet) in p.iter().enumerate() {
                b[k][i][j] = jet.extract_partial(&[1, 1])?;
            }
        }
    }
    Ok(b)
}

/// Structure functions at `u`: the antisymmetrization of the bilinear term
/// in its two lower indices.
pub fn structure_constants_at(chart: &LocalGroupoidChart, u: &[f64]) -> Result<Tensor3> {
    Ok(antisymmetrize(&bilinear_at(chart, u)?))
}

fn antisymmetrize(b: &Tensor3) -> Tensor3 {
    let m = b.len();
    let mut c = vec![vec![vec![0.0; m]; m]; m];
    for k in 0..m {
        for i in 0..m {
            for j in 0..m {
                c[k][i][j] = b[k][i][j] - b[k][j][i];
            }
        }
    }
    c
}

/// Anchor, bilinear term and structure functions at one base point.
pub fn structure_data_at(chart: &LocalGroupoidChart, u: &[f64]) -> Result<StructureData> {
    structure_data_at_with_order(chart, u, 2)
}

/// [`structure_data_at`] at a caller-chosen jet order in `2..=3`.
pub fn structure_data_at_with_order(
    chart: &LocalGroupoidChart,
    u: &[f64],
    order: usize,
) -> Result<StructureData> {
    let anchor = anchor_at(chart, u)?;
    let bilinear = bilinear_at_with_order(chart, u, order)?;
    let c = antisymmetrize(&bilinear);
    Ok(StructureData {
        u: u.to_vec(),
        anchor,
        bilinear,
        c,
    })
}

/// Contract the bilinear tensor against two fiber vectors:
/// `out_k = Σ_ij B[k][i][j] v_i w_j`.
pub fn contract_bilinear(b: &Tensor3, v: &[f64], w: &[f64]) -> Vec<f64> {
    let m = b.len();
    let mut out = vec![0.0; m];
    for (k, bk) in b.iter().enumerate() {
        let mut acc = 0.0;
        for (i, bki) in bk.iter().enumerate() {
            for (j, bkij) in bki.iter().enumerate() {
                acc += bkij * v[i] * w[j];
            }
        }
        out[k] = acc;
    }
    out
}

/// Bracket of two sections with constant frame coefficients:
/// `B(u, ξ0, η0) - B(u, η0, ξ0)`. By bilinearity this equals the
/// contraction `Σ_ij ξ_i η_j c[·][i][j]`.
pub fn bracket_constant_sections(
    chart: &LocalGroupoidChart,
    u: &[f64],
    xi0: &[f64],
    eta0: &[f64],
) -> Result<Vec<f64>> {
    check_point(chart, u)?;
    let m = chart.m();
    if xi0.len() != m || eta0.len() != m {
        return Err(Error::VectorLength {
            name: "section coefficients",
            expected: m,
            got: xi0.len().max(eta0.len()),
        });
    }
    let b = bilinear_at(chart, u)?;
    let forward = contract_bilinear(&b, xi0, eta0);
    let backward = contract_bilinear(&b, eta0, xi0);
    Ok(forward
        .iter()
        .zip(backward.iter())
        .map(|(f, g)| f - g)
        .collect())
}

/// The full section bracket at `u`, including the anchor-derivative
/// (Leibniz) terms:
/// `[ξ,η]_k = Σ_ij ξ_i η_j c[k][i][j] + ρ(ξ)(η_k) - ρ(η)(ξ_k)` with
/// `ρ(ξ)(f) = Σ_it ξ_i a[i][t] ∂f/∂u_t`. Agrees with
/// [`bracket_constant_sections`] on constant sections.
pub fn bracket_sections_full(
    chart: &LocalGroupoidChart,
    xi: &SectionSpec,
    eta: &SectionSpec,
    u: &[f64],
) -> Result<Vec<f64>> {
    let data = structure_data_at(chart, u)?;
    bracket_full_with(chart, &data, xi, eta, u)
}

fn bracket_full_with(
    chart: &LocalGroupoidChart,
    data: &StructureData,
    xi: &SectionSpec,
    eta: &SectionSpec,
    u: &[f64],
) -> Result<Vec<f64>> {
    check_point(chart, u)?;
    check_section(chart, "xi", xi)?;
    check_section(chart, "eta", eta)?;
    let m = chart.m();
    let n = chart.n();
    let xi_u = xi.eval_at(u)?;
    let eta_u = eta.eval_at(u)?;
    let grad_xi = xi.gradients_at(u)?;
    let grad_eta = eta.gradients_at(u)?;
    let mut out = vec![0.0; m];
    for k in 0..m {
        let mut acc = 0.0;
        for i in 0..m {
            for j in 0..m {
                acc += xi_u[i] * eta_u[j] * data.c[k][i][j];
            }
        }
        for i in 0..m {
            for t in 0..n {
                acc += xi_u[i] * data.anchor[i][t] * grad_eta[k][t];
                acc -= eta_u[i] * data.anchor[i][t] * grad_xi[k][t];
            }
        }
        out[k] = acc;
    }
    Ok(out)
}

/// Value at `(u, v)` of the left-invariant vector field generated by the
/// section: base component zero, fiber component
/// `∂p/∂w(u, v, 0) · ξ0(sigma(u, v))` with the exact Jacobian from jets.
pub fn left_invariant_field_at(
    chart: &LocalGroupoidChart,
    section: &SectionSpec,
    u: &[f64],
    v: &[f64],
) -> Result<TangentFieldValue> {
    check_point(chart, u)?;
    check_section(chart, "section", section)?;
    let m = chart.m();
    let s = chart.eval_sigma(u, v)?;
    let xi0 = section.eval_at(&s)?;
    let jac = chart.prod_jacobian_w(u, v, &vec![0.0; m])?;
    let mut fiber = vec![0.0; m];
    for (k, f) in fiber.iter_mut().enumerate() {
        *f = (0..m).map(|j| jac[(k, j)] * xi0[j]).sum();
    }
    Ok(TangentFieldValue {
        base: vec![0.0; chart.n()],
        fiber,
    })
}

/// Lie bracket of the invariant fields of the frame sections `e_i` and
/// `e_j`, evaluated at `v = 0`.
///
/// The fields `x ↦ ∂p/∂w(u, v, 0) f_i` are expanded in `v` with order-2
/// jets and combined with the coordinate formula
/// `[(0,a),(0,b)]_k = Σ_l (a_l ∂b_k/∂v_l - b_l ∂a_k/∂v_l)`. This is the
/// cross-validation oracle for the structure functions.
pub fn bracket_invariant_fields_at(
    chart: &LocalGroupoidChart,
    i: usize,
    j: usize,
    u: &[f64],
) -> Result<Vec<f64>> {
    check_point(chart, u)?;
    let m = chart.m();
    for (name, idx) in [("i", i), ("j", j)] {
        if idx >= m {
            return Err(Error::VectorLength {
                name: if name == "i" { "frame index i" } else { "frame index j" },
                expected: m,
                got: idx,
            });
        }
    }
    // Directions 0..m perturb v; direction m perturbs the single seeded
    // w-slot that selects the frame vector.
    let spec = JetSpec::new(m + 1, 2)?;
    let table = JetTable::shared(spec);
    let field = |which: usize| -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let mut inputs: Vec<Jet> = Vec::with_capacity(chart.n() + 2 * m);
        for &x in u {
            inputs.push(Jet::constant_from(table, x));
        }
        for l in 0..m {
            inputs.push(Jet::variable_from(table, 0.0, l)?);
        }
        for a in 0..m {
            if a == which {
                inputs.push(Jet::variable_from(table, 0.0, m)?);
            } else {
                inputs.push(Jet::constant_from(table, 0.0));
            }
        }
        let p = chart.eval_prod_jets(&inputs, spec)?;
        let mut value = vec![0.0; m];
        let mut dv = vec![vec![0.0; m]; m];
        let mut alpha = vec![0usize; m + 1];
        for (k, jet) in p.iter().enumerate() {
            alpha[m] = 1;
            value[k] = jet.extract_partial(&alpha)?;
            for l in 0..m {
                alpha[l] = 1;
                dv[k][l] = jet.extract_partial(&alpha)?;
                alpha[l] = 0;
            }
            alpha[m] = 0;
        }
        Ok((value, dv))
    };
    let (a_val, a_dv) = field(i)?;
    let (b_val, b_dv) = field(j)?;
    let mut out = vec![0.0; m];
    for k in 0..m {
        let mut acc = 0.0;
        for l in 0..m {
            acc += a_val[l] * b_dv[k][l] - b_val[l] * a_dv[k][l];
        }
        out[k] = acc;
    }
    Ok(out)
}

/// Anchor and second mixed derivatives of `sigma`:
/// `a[i][s]` and `da[t][i][s] = ∂²sigma_s/∂u_t∂v_i (u, 0)`.
fn anchor_with_grad_at(
    chart: &LocalGroupoidChart,
    u: &[f64],
) -> Result<(Vec<Vec<f64>>, Tensor3)> {
    let (n, m) = (chart.n(), chart.m());
    if n == 0 {
        return Ok((vec![Vec::new(); m], Vec::new()));
    }
    let spec = JetSpec::new(n + m, 2)?;
    let table = JetTable::shared(spec);
    let mut inputs: Vec<Jet> = Vec::with_capacity(n + m);
    for (t, &x) in u.iter().enumerate() {
        inputs.push(Jet::variable_from(table, x, t)?);
    }
    for i in 0..m {
        inputs.push(Jet::variable_from(table, 0.0, n + i)?);
    }
    let sigma = chart.eval_sigma_jets(&inputs, spec)?;
    let mut anchor = vec![vec![0.0; n]; m];
    let mut grad = vec![vec![vec![0.0; n]; m]; n];
    let mut alpha = vec![0usize; n + m];
    for (s, jet) in sigma.iter().enumerate() {
        for i in 0..m {
            alpha[n + i] = 1;
            anchor[i][s] = jet.extract_partial(&alpha)?;
            for (t, gt) in grad.iter_mut().enumerate() {
                alpha[t] += 1;
                gt[i][s] = jet.extract_partial(&alpha)?;
                alpha[t] -= 1;
            }
            alpha[n + i] = 0;
        }
    }
    Ok((anchor, grad))
}

/// Bilinear term together with its base-point gradient:
/// `db[t][k][i][j] = ∂B[k][i][j]/∂u_t`, from order-3 jets.
fn bilinear_with_grad_at(
    chart: &LocalGroupoidChart,
    u: &[f64],
) -> Result<(Tensor3, Vec<Tensor3>)> {
    let (n, m) = (chart.n(), chart.m());
    if n == 0 {
        return Ok((bilinear_at(chart, u)?, Vec::new()));
    }
    let spec = JetSpec::new(n + 2, 3)?;
    let table = JetTable::shared(spec);
    let mut b = vec![vec![vec![0.0; m]; m]; m];
    let mut db = vec![vec![vec![vec![0.0; m]; m]; m]; n];
    for i in 0..m {
        for j in 0..m {
            let mut inputs: Vec<Jet> = Vec::with_capacity(n + 2 * m);
            for (t, &x) in u.iter().enumerate() {
                inputs.push(Jet::variable_from(table, x, t)?);
            }
            for a in 0..m {
                if a == i {
                    inputs.push(Jet::variable_from(table, 0.0, n)?);
                } else {
                    inputs.push(Jet::constant_from(table, 0.0));
                }
            }
            for a in 0..m {
                if a == j {
                    inputs.push(Jet::variable_from(table, 0.0, n + 1)?);
                } else {
                    inputs.push(Jet::constant_from(table, 0.0));
                }
            }
            let p = chart.eval_prod_jets(&inputs, spec)?;
            let mut alpha = vec![0usize; n + 2];
            alpha[n] = 1;
            alpha[n + 1] = 1;
            for (k, jet) in p.iter().enumerate() {
                b[k][i][j] = jet.extract_partial(&alpha)?;
                for (t, dbt) in db.iter_mut().enumerate() {
                    alpha[t] += 1;
                    dbt[k][i][j] = jet.extract_partial(&alpha)?;
                    alpha[t] -= 1;
                }
            }
        }
    }
    Ok((b, db))
}

/// Default Leibniz probe functions: the coordinate monomials `u_t` and
/// `u_t²` (a single constant probe when `n = 0`).
pub fn default_leibniz_probes(n: usize) -> Vec<Expr> {
    if n == 0 {
        return vec![Expr::Num(1.0)];
    }
    let mut probes = Vec::with_capacity(2 * n);
    for t in 0..n {
        probes.push(Expr::Var(t));
        probes.push(Expr::Pow(Box::new(Expr::Var(t)), 2));
    }
    probes
}

/// Antisymmetry of the structure functions; a tautology guard by
/// construction, asserted over sampled base points.
pub fn check_antisymmetry(chart: &LocalGroupoidChart, plan: &SamplePlan, tol: f64) -> CheckResult {
    let points = sample_base_points(chart, plan);
    let m = chart.m();
    evaluate_samples(
        "antisymmetry",
        tol,
        &points,
        |u| u.clone(),
        |u| {
            let c = structure_constants_at(chart, u)?;
            let mut worst = 0.0f64;
            for k in 0..m {
                for i in 0..m {
                    for j in 0..m {
                        worst = worst.max((c[k][i][j] + c[k][j][i]).abs());
                    }
                }
            }
            Ok(worst)
        },
    )
}

/// The invariant-field bracket oracle agrees with the extracted structure
/// functions: `‖[Ω(e_i), Ω(e_j)](u, 0) - c[·][i][j]‖_∞ ≤ tol`.
pub fn check_bracket_cross(chart: &LocalGroupoidChart, plan: &SamplePlan, tol: f64) -> CheckResult {
    let points = sample_base_points(chart, plan);
    let m = chart.m();
    evaluate_samples(
        "bracket_cross_check",
        tol,
        &points,
        |u| u.clone(),
        |u| {
            let c = structure_constants_at(chart, u)?;
            let mut worst = 0.0f64;
            for i in 0..m {
                for j in 0..m {
                    let oracle = bracket_invariant_fields_at(chart, i, j, u)?;
                    let column: Vec<f64> = (0..m).map(|k| c[k][i][j]).collect();
                    worst = worst.max(inf_norm_diff(&oracle, &column));
                }
            }
            Ok(worst)
        },
    )
}

/// The anchor is a Lie algebra morphism:
/// `Σ_l c[l][i][j] a[l][s] = Σ_t (a[i][t] ∂a[j][s]/∂u_t - a[j][t] ∂a[i][s]/∂u_t)`.
pub fn check_anchor_morphism(
    chart: &LocalGroupoidChart,
    plan: &SamplePlan,
    tol: f64,
) -> CheckResult {
    let points = sample_base_points(chart, plan);
    let (n, m) = (chart.n(), chart.m());
    evaluate_samples(
        "anchor_morphism",
        tol,
        &points,
        |u| u.clone(),
        |u| {
            if n == 0 {
                return Ok(0.0);
            }
            let (anchor, da) = anchor_with_grad_at(chart, u)?;
            let c = structure_constants_at(chart, u)?;
            let mut worst = 0.0f64;
            for i in 0..m {
                for j in (i + 1)..m {
                    for s in 0..n {
                        let lhs: f64 = (0..m).map(|l| c[l][i][j] * anchor[l][s]).sum();
                        let rhs: f64 = (0..n)
                            .map(|t| anchor[i][t] * da[t][j][s] - anchor[j][t] * da[t][i][s])
                            .sum();
                        worst = worst.max((lhs - rhs).abs());
                    }
                }
            }
            Ok(worst)
        },
    )
}

/// Jacobi identity for the frame bracket, with the anchor-derivative
/// correction terms required when the structure functions vary over the
/// base: the cyclic sum over `(i, j, k)` of
/// `Σ_l c[l][i][j] c[q][l][k] - Σ_s a[k][s] ∂c[q][i][j]/∂u_s`
/// vanishes for every `q`.
pub fn check_jacobi(chart: &LocalGroupoidChart, plan: &SamplePlan, tol: f64) -> CheckResult {
    let points = sample_base_points(chart, plan);
    let (n, m) = (chart.n(), chart.m());
    evaluate_samples(
        "jacobi",
        tol,
        &points,
        |u| u.clone(),
        |u| {
            let (b, db) = bilinear_with_grad_at(chart, u)?;
            let anchor = if n == 0 {
                vec![Vec::new(); m]
            } else {
                anchor_at(chart, u)?
            };
            let c = antisymmetrize(&b);
            let dc: Vec<Tensor3> = db.iter().map(antisymmetrize).collect();
            let term = |i: usize, j: usize, k: usize, q: usize| -> f64 {
                let fluxes: f64 = (0..m).map(|l| c[l][i][j] * c[q][l][k]).sum();
                let transport: f64 = (0..n).map(|s| anchor[k][s] * dc[s][q][i][j]).sum();
                fluxes - transport
            };
            let mut worst = 0.0f64;
            for i in 0..m {
                for j in 0..m {
                    for k in 0..m {
                        for q in 0..m {
                            let cyclic =
                                term(i, j, k, q) + term(j, k, i, q) + term(k, i, j, q);
                            worst = worst.max(cyclic.abs());
                        }
                    }
                }
            }
            Ok(worst)
        },
    )
}

/// Leibniz rule `[ξ, f·η] = f·[ξ, η] + ρ(ξ)(f)·η` for frame sections and
/// the given probe functions.
pub fn check_leibniz(
    chart: &LocalGroupoidChart,
    plan: &SamplePlan,
    tol: f64,
    probes: &[Expr],
) -> CheckResult {
    let points = sample_base_points(chart, plan);
    let (n, m) = (chart.n(), chart.m());
    evaluate_samples(
        "leibniz",
        tol,
        &points,
        |u| u.clone(),
        |u| {
            let data = structure_data_at(chart, u)?;
            let mut worst = 0.0f64;
            for i in 0..m {
                let xi = SectionSpec::frame(n, m, i);
                for j in 0..m {
                    let eta = SectionSpec::frame(n, m, j);
                    let bracket_ij = bracket_full_with(chart, &data, &xi, &eta, u)?;
                    for f in probes {
                        let f_eta = eta.scaled_by(f);
                        let lhs = bracket_full_with(chart, &data, &xi, &f_eta, u)?;
                        let f_u = f.eval_f64(u)?;
                        let rho_xi_f = rho_applied(&data.anchor, &xi, f, u)?;
                        let mut residual = 0.0f64;
                        for k in 0..m {
                            let eta_k = if k == j { 1.0 } else { 0.0 };
                            let rhs = f_u * bracket_ij[k] + rho_xi_f * eta_k;
                            residual = residual.max((lhs[k] - rhs).abs());
                        }
                        worst = worst.max(residual);
                    }
                }
            }
            Ok(worst)
        },
    )
}

/// `ρ(ξ)(f)(u) = Σ_it ξ_i(u) a[i][t] ∂f/∂u_t (u)`.
fn rho_applied(
    anchor: &[Vec<f64>],
    xi: &SectionSpec,
    f: &Expr,
    u: &[f64],
) -> Result<f64> {
    let n = u.len();
    if n == 0 {
        return Ok(0.0);
    }
    let spec = JetSpec::new(n, 1)?;
    let table = JetTable::shared(spec);
    let bindings: Vec<Jet> = u
        .iter()
        .enumerate()
        .map(|(t, &x)| Jet::variable_from(table, x, t))
        .collect::<Result<_>>()?;
    let jet = f.eval(&bindings, &|v| Jet::constant_from(table, v))?;
    let xi_u = xi.eval_at(u)?;
    let mut alpha = vec![0usize; n];
    let mut acc = 0.0;
    for t in 0..n {
        alpha[t] = 1;
        let df = jet.extract_partial(&alpha)?;
        alpha[t] = 0;
        for (i, xi_i) in xi_u.iter().enumerate() {
            acc += xi_i * anchor[i][t] * df;
        }
    }
    Ok(acc)
}

/// Run the algebroid checks in fixed order: antisymmetry, the
/// invariant-field cross-check, anchor morphism, Jacobi, Leibniz.
pub fn run_algebroid_suite(
    chart: &LocalGroupoidChart,
    plan: &SamplePlan,
    tol: f64,
) -> CheckReport {
    let probes = default_leibniz_probes(chart.n());
    CheckReport {
        chart: chart.name().to_string(),
        checks: vec![
            check_antisymmetry(chart, plan, tol),
            check_bracket_cross(chart, plan, tol),
            check_anchor_morphism(chart, plan, tol),
            check_jacobi(chart, plan, tol),
            check_leibniz(chart, plan, tol, &probes),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::LocalGroupoidChart;

    fn pair(dim: usize) -> LocalGroupoidChart {
        let sigma: Vec<String> = (1..=dim).map(|i| format!("u{i} + v{i}")).collect();
        let prod: Vec<String> = (1..=dim).map(|i| format!("v{i} + w{i}")).collect();
        LocalGroupoidChart::from_exprs(
            "pair",
            dim,
            dim,
            &sigma.iter().map(String::as_str).collect::<Vec<_>>(),
            &prod.iter().map(String::as_str).collect::<Vec<_>>(),
            1.0,
            1.0,
        )
        .unwrap()
    }

    fn heisenberg() -> LocalGroupoidChart {
        LocalGroupoidChart::from_exprs(
            "heisenberg",
            0,
            3,
            &[],
            &["v1 + w1", "v2 + w2", "v3 + w3 + v1*w2"],
            1.0,
            1.0,
        )
        .unwrap()
    }

    fn affine_action() -> LocalGroupoidChart {
        LocalGroupoidChart::from_exprs(
            "affine_action",
            1,
            2,
            &["exp(v1)*u1 + v2"],
            &["v1 + w1", "exp(w1)*v2 + w2"],
            3.0,
            0.5,
        )
        .unwrap()
    }

    fn heisenberg_bundle() -> LocalGroupoidChart {
        LocalGroupoidChart::from_exprs(
            "heisenberg_bundle",
            1,
            3,
            &["u1"],
            &["v1 + w1", "v2 + w2", "v3 + w3 + (1 + u1)*v1*w2"],
            1.0,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn pair_anchor_is_identity() {
        let chart = pair(2);
        let a = anchor_at(&chart, &[0.3, -0.1]).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((a[i][j] - expected).abs() < 1e-14);
            }
        }
        let c = structure_constants_at(&chart, &[0.3, -0.1]).unwrap();
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    assert_eq!(c[k][i][j], 0.0);
                }
            }
        }
    }

    #[test]
    fn lie_group_anchor_is_empty() {
        let a = anchor_at(&heisenberg(), &[]).unwrap();
        assert_eq!(a.len(), 3);
        assert!(a.iter().all(Vec::is_empty));
    }

    #[test]
    fn affine_anchor_rows() {
        // sigma = e^a·u + b at (a, b) = 0: ∂/∂a = u, ∂/∂b = 1.
        let a = anchor_at(&affine_action(), &[2.0]).unwrap();
        assert!((a[0][0] - 2.0).abs() < 1e-14);
        assert!((a[1][0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn heisenberg_bilinear_and_structure() {
        let chart = heisenberg();
        let b = bilinear_at(&chart, &[]).unwrap();
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    let expected = if (k, i, j) == (2, 0, 1) { 1.0 } else { 0.0 };
                    assert!((b[k][i][j] - expected).abs() < 1e-14, "B[{k}][{i}][{j}]");
                }
            }
        }
        let c = structure_constants_at(&chart, &[]).unwrap();
        assert!((c[2][0][1] - 1.0).abs() < 1e-14);
        assert!((c[2][1][0] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn heisenberg_bundle_base_dependent_structure() {
        let c = structure_constants_at(&heisenberg_bundle(), &[0.5]).unwrap();
        assert!((c[2][0][1] - 1.5).abs() < 1e-13);
        let a = anchor_at(&heisenberg_bundle(), &[0.5]).unwrap();
        assert!(a.iter().all(|row| row.iter().all(|x| x.abs() < 1e-14)));
    }

    #[test]
    fn constant_bracket_matches_structure_contraction() {
        let chart = heisenberg();
        let out = bracket_constant_sections(&chart, &[], &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0])
            .unwrap();
        assert!(inf_norm_diff(&out, &[0.0, 0.0, 1.0]) < 1e-14);
        // ξ = η gives zero by antisymmetry.
        let zero = bracket_constant_sections(&chart, &[], &[0.4, -0.2, 0.1], &[0.4, -0.2, 0.1])
            .unwrap();
        assert!(zero.iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn su2_constant_bracket() {
        // Quaternion units: [e2, e3] = 2 e1.
        let su2 = crate::gallery::get_entry("su2_quaternion", None).unwrap().chart;
        let out = bracket_constant_sections(&su2, &[], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0])
            .unwrap();
        assert!(inf_norm_diff(&out, &[2.0, 0.0, 0.0]) < 1e-13);
    }

    #[test]
    fn algebroid_suite_with_empty_plan_is_vacuous() {
        let report = run_algebroid_suite(&heisenberg(), &SamplePlan::new(0, 0), 1e-9);
        assert!(report.all_pass());
        for check in &report.checks {
            assert_eq!(check.samples, 0);
            assert_eq!(check.note.as_deref(), Some("no samples"));
        }
    }

    #[test]
    fn full_bracket_reduces_to_constant_bracket() {
        let chart = affine_action();
        let u = [0.3];
        let xi = SectionSpec::constant(1, &[0.7, -0.1]);
        let eta = SectionSpec::constant(1, &[0.2, 0.9]);
        let full = bracket_sections_full(&chart, &xi, &eta, &u).unwrap();
        let constant =
            bracket_constant_sections(&chart, &u, &[0.7, -0.1], &[0.2, 0.9]).unwrap();
        assert!(inf_norm_diff(&full, &constant) < 1e-13);
    }

    #[test]
    fn pair_vector_field_bracket() {
        // Sections 1·e and u·e on the pair groupoid act as the vector
        // fields ∂ and u∂ on the base, and [∂, u∂] = ∂.
        let chart = pair(1);
        let xi = SectionSpec::parse(1, &["1"]).unwrap();
        let eta = SectionSpec::parse(1, &["u1"]).unwrap();
        let out = bracket_sections_full(&chart, &xi, &eta, &[0.2]).unwrap();
        assert!((out[0] - 1.0).abs() < 1e-13);
    }

    #[test]
    fn affine_frame_bracket_sign() {
        // [e1, e2] = -e2 in the convention fixed by this chart.
        let chart = affine_action();
        let e1 = SectionSpec::frame(1, 2, 0);
        let e2 = SectionSpec::frame(1, 2, 1);
        let out = bracket_sections_full(&chart, &e1, &e2, &[0.4]).unwrap();
        assert!(inf_norm_diff(&out, &[0.0, -1.0]) < 1e-13);
    }

    #[test]
    fn invariant_field_examples() {
        let chart = heisenberg();
        // At v = 0 the field equals the section itself.
        let e2 = SectionSpec::frame(0, 3, 1);
        let at_zero = left_invariant_field_at(&chart, &e2, &[], &[0.0; 3]).unwrap();
        assert_eq!(at_zero.fiber, vec![0.0, 1.0, 0.0]);
        // At general v the classical field e2 + v1·e3 appears.
        let v = [0.3, -0.1, 0.2];
        let at_v = left_invariant_field_at(&chart, &e2, &[], &v).unwrap();
        assert!(inf_norm_diff(&at_v.fiber, &[0.0, 1.0, 0.3]) < 1e-14);
        assert!(at_v.base.is_empty());
        // Pair groupoid: ∂p/∂w = I everywhere, so the field is constant.
        let p = pair(1);
        let field = left_invariant_field_at(&p, &SectionSpec::frame(1, 1, 0), &[0.3], &[0.2])
            .unwrap();
        assert_eq!(field.base, vec![0.0]);
        assert!(inf_norm_diff(&field.fiber, &[1.0]) < 1e-14);
    }

    #[test]
    fn field_bracket_oracle_matches_structure_constants() {
        for chart in [heisenberg(), heisenberg_bundle(), affine_action(), pair(2)] {
            let u: Vec<f64> = vec![0.17; chart.n()];
            let c = structure_constants_at(&chart, &u).unwrap();
            let m = chart.m();
            for i in 0..m {
                for j in 0..m {
                    let oracle = bracket_invariant_fields_at(&chart, i, j, &u).unwrap();
                    let column: Vec<f64> = (0..m).map(|k| c[k][i][j]).collect();
                    assert!(
                        inf_norm_diff(&oracle, &column) < 1e-10,
                        "{} ({i},{j})",
                        chart.name()
                    );
                }
            }
        }
    }

    #[test]
    fn diagonal_field_bracket_vanishes() {
        let out = bracket_invariant_fields_at(&heisenberg(), 1, 1, &[]).unwrap();
        assert!(out.iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn algebroid_suite_passes_on_exact_charts() {
        for chart in [pair(1), heisenberg(), affine_action(), heisenberg_bundle()] {
            let report = run_algebroid_suite(&chart, &SamplePlan::new(3, 20), 1e-9);
            assert!(
                report.all_pass(),
                "{}: {:?}",
                chart.name(),
                report
                    .checks
                    .iter()
                    .filter(|c| !c.pass)
                    .map(|c| (&c.name, c.max_residual))
                    .collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn bilinear_order_override_is_consistent() {
        let chart = heisenberg_bundle();
        let b2 = bilinear_at_with_order(&chart, &[0.25], 2).unwrap();
        let b3 = bilinear_at_with_order(&chart, &[0.25], 3).unwrap();
        assert_eq!(b2, b3);
    }

    #[test]
    fn quadratic_fit_recovers_bilinear_term() {
        // Fit p(u, tv, tw) - tv - tw = t²·Q + t³·C at two scales and solve
        // for Q; it must agree with the jet extraction.
        let chart = affine_action();
        let u = [0.3];
        let v = [0.21, -0.4];
        let w = [-0.13, 0.33];
        let b = bilinear_at(&chart, &u).unwrap();
        let expected = contract_bilinear(&b, &v, &w);
        let r = |t: f64| -> Vec<f64> {
            let tv: Vec<f64> = v.iter().map(|x| t * x).collect();
            let tw: Vec<f64> = w.iter().map(|x| t * x).collect();
            let p = chart.eval_prod(&u, &tv, &tw).unwrap();
            p.iter()
                .zip(tv.iter().zip(tw.iter()))
                .map(|(pk, (a, b))| pk - a - b)
                .collect()
        };
        let (t1, t2) = (1e-2, 5e-3);
        let (r1, r2) = (r(t1), r(t2));
        for k in 0..2 {
            let q = (r1[k] * t2.powi(3) - r2[k] * t1.powi(3))
                / (t1.powi(2) * t2.powi(3) - t2.powi(2) * t1.powi(3));
            assert!((q - expected[k]).abs() < 1e-6, "component {k}: {q} vs {expected:?}");
        }
    }
}
