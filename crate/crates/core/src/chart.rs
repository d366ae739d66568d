//! A Lie groupoid presented in an adapted local chart.
//!
//! The chart data is the pair of maps
//!
//! * `sigma : R^n × R^m → R^n` — the source map; `sigma(u, 0) = u`,
//! * `p : R^n × R^m × R^m → R^m` — the product map; `p(u, 0, w) = w` and
//!   `p(u, v, 0) = v`,
//!
//! together with the base dimension `n`, the fiber dimension `m` and the
//! radii of the open boxes on which the maps are declared valid.
//! Composability is implicit in the parametrization: a product evaluation
//! takes `(u, v, w)` and the second factor is understood at base point
//! `sigma(u, v)`, so no pair matching is ever stored.
//!
//! Maps are either parsed expressions or native programs implementing
//! [`NativeMap`]; both evaluate over plain reals and over jets through the
//! same arithmetic path.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::expr::{Expr, VariableEnv};
use crate::jet::{Jet, JetSpec, JetTable};
use crate::report::inf_norm;
use crate::{Error, Result};

/// Default tolerance for Newton inversion.
pub const DEFAULT_NEWTON_TOLERANCE: f64 = 1e-12;
/// Default iteration cap for Newton inversion.
pub const DEFAULT_NEWTON_MAX_ITERATIONS: usize = 50;

/// A chart map implemented in code rather than as parsed expressions.
///
/// Implementors typically write one generic function over
/// [`crate::expr::Scalar`] and delegate both methods to it.
pub trait NativeMap: Send + Sync {
    fn inputs(&self) -> usize;
    fn outputs(&self) -> usize;
    fn eval_f64(&self, x: &[f64]) -> Result<Vec<f64>>;
    fn eval_jets(&self, x: &[Jet]) -> Result<Vec<Jet>>;
}

/// One vector-valued chart map.
pub(crate) enum MapProgram {
    Exprs { env: VariableEnv, exprs: Vec<Expr> },
    Native(Arc<dyn NativeMap>),
}

impl std::fmt::Debug for MapProgram {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MapProgram::Exprs { exprs, .. } => write!(f, "Exprs[{}]", exprs.len()),
            MapProgram::Native(map) => {
                write!(f, "Native[{} -> {}]", map.inputs(), map.outputs())
            }
        }
    }
}

impl MapProgram {
    fn inputs(&self) -> usize {
        match self {
            MapProgram::Exprs { env, .. } => env.len(),
            MapProgram::Native(map) => map.inputs(),
        }
    }

    fn outputs(&self) -> usize {
        match self {
            MapProgram::Exprs { exprs, .. } => exprs.len(),
            MapProgram::Native(map) => map.outputs(),
        }
    }

    fn eval_f64(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            MapProgram::Exprs { exprs, .. } => {
                exprs.iter().map(|e| e.eval_f64(x)).collect()
            }
            MapProgram::Native(map) => map.eval_f64(x),
        }
    }

    fn eval_jets(&self, x: &[Jet], spec: JetSpec) -> Result<Vec<Jet>> {
        match self {
            MapProgram::Exprs { exprs, .. } => {
                let table = JetTable::shared(spec);
                exprs
                    .iter()
                    .map(|e| e.eval(x, &|v| Jet::constant_from(table, v)))
                    .collect()
            }
            MapProgram::Native(map) => map.eval_jets(x),
        }
    }

    pub(crate) fn as_exprs(&self) -> Option<(&VariableEnv, &[Expr])> {
        match self {
            MapProgram::Exprs { env, exprs } => Some((env, exprs)),
            MapProgram::Native(_) => None,
        }
    }
}

/// A Lie groupoid in an adapted chart: source map, product map, dimensions
/// and domain radii. Immutable after construction; evaluation is pure.
#[derive(Debug)]
pub struct LocalGroupoidChart {
    name: String,
    n: usize,
    m: usize,
    sigma: MapProgram,
    prod: MapProgram,
    radius_u: f64,
    radius_v: f64,
}

impl LocalGroupoidChart {
    /// Build a chart from expression sources. `sigma` is a list of `n`
    /// expressions over `u1..un, v1..vm`; `prod` a list of `m` expressions
    /// over `u1..un, v1..vm, w1..wm`.
    pub fn from_exprs(
        name: impl Into<String>,
        n: usize,
        m: usize,
        sigma: &[&str],
        prod: &[&str],
        radius_u: f64,
        radius_v: f64,
    ) -> Result<Self> {
        let name = name.into();
        let sigma_env = VariableEnv::chart_source(n, m);
        let prod_env = VariableEnv::chart_product(n, m);
        let sigma_exprs: Vec<Expr> = sigma
            .iter()
            .map(|s| Expr::parse(s, &sigma_env))
            .collect::<Result<_>>()?;
        let prod_exprs: Vec<Expr> = prod
            .iter()
            .map(|s| Expr::parse(s, &prod_env))
            .collect::<Result<_>>()?;
        Self::from_programs(
            name,
            n,
            m,
            MapProgram::Exprs {
                env: sigma_env,
                exprs: sigma_exprs,
            },
            MapProgram::Exprs {
                env: prod_env,
                exprs: prod_exprs,
            },
            radius_u,
            radius_v,
        )
    }

    /// Build a chart from native programs evaluating over abstract scalars.
    pub fn from_native(
        name: impl Into<String>,
        n: usize,
        m: usize,
        sigma: Arc<dyn NativeMap>,
        prod: Arc<dyn NativeMap>,
        radius_u: f64,
        radius_v: f64,
    ) -> Result<Self> {
        Self::from_programs(
            name.into(),
            n,
            m,
            MapProgram::Native(sigma),
            MapProgram::Native(prod),
            radius_u,
            radius_v,
        )
    }

    fn from_programs(
        name: String,
        n: usize,
        m: usize,
        sigma: MapProgram,
        prod: MapProgram,
        radius_u: f64,
        radius_v: f64,
    ) -> Result<Self> {
        if m == 0 {
            return Err(Error::ChartFiberDimension { chart: name });
        }
        if n + 2 * m > crate::jet::MAX_DIRECTIONS {
            return Err(Error::InvalidDirections {
                directions: n + 2 * m,
            });
        }
        for (field, value) in [("radius_u", radius_u), ("radius_v", radius_v)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::ChartRadius {
                    chart: name,
                    field,
                    value,
                });
            }
        }
        let dims = [
            ("sigma inputs", n + m, sigma.inputs()),
            ("sigma outputs", n, sigma.outputs()),
            ("p inputs", n + 2 * m, prod.inputs()),
            ("p outputs", m, prod.outputs()),
        ];
        for (field, expected, got) in dims {
            if expected != got {
                return Err(Error::ChartArity {
                    chart: name,
                    field,
                    expected,
                    got,
                });
            }
        }
        Ok(LocalGroupoidChart {
            name,
            n,
            m,
            sigma,
            prod,
            radius_u,
            radius_v,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Base dimension (`dim` of the unit space).
    pub fn n(&self) -> usize {
        self.n
    }

    /// Fiber dimension (the algebroid rank).
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn radius_u(&self) -> f64 {
        self.radius_u
    }

    pub fn radius_v(&self) -> f64 {
        self.radius_v
    }

    pub(crate) fn sigma_program(&self) -> &MapProgram {
        &self.sigma
    }

    pub(crate) fn prod_program(&self) -> &MapProgram {
        &self.prod
    }

    fn check_len(&self, name: &'static str, expected: usize, got: usize) -> Result<()> {
        if expected != got {
            return Err(Error::VectorLength {
                name,
                expected,
                got,
            });
        }
        Ok(())
    }

    fn check_domain(&self, block: &'static str, values: &[f64], radius: f64) -> Result<()> {
        for (index, &value) in values.iter().enumerate() {
            if !(value.is_finite() && value.abs() <= radius) {
                return Err(Error::OutOfDomain {
                    block,
                    index,
                    value,
                    radius,
                });
            }
        }
        Ok(())
    }

    fn check_domain_jets(&self, block: &'static str, values: &[Jet], radius: f64) -> Result<()> {
        for (index, jet) in values.iter().enumerate() {
            let value = jet.value();
            if !(value.is_finite() && value.abs() <= radius) {
                return Err(Error::OutOfDomain {
                    block,
                    index,
                    value,
                    radius,
                });
            }
        }
        Ok(())
    }

    /// `sigma(u, v)` as an `n`-vector.
    pub fn eval_sigma(&self, u: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        self.check_len("u", self.n, u.len())?;
        self.check_len("v", self.m, v.len())?;
        self.check_domain("u", u, self.radius_u)?;
        self.check_domain("v", v, self.radius_v)?;
        let inputs: Vec<f64> = u.iter().chain(v.iter()).copied().collect();
        self.sigma.eval_f64(&inputs)
    }

    /// `p(u, v, w)` as an `m`-vector. The second factor of the product is
    /// understood at base point `sigma(u, v)`.
    pub fn eval_prod(&self, u: &[f64], v: &[f64], w: &[f64]) -> Result<Vec<f64>> {
        self.check_len("u", self.n, u.len())?;
        self.check_len("v", self.m, v.len())?;
        self.check_len("w", self.m, w.len())?;
        self.check_domain("u", u, self.radius_u)?;
        self.check_domain("v", v, self.radius_v)?;
        self.check_domain("w", w, self.radius_v)?;
        let inputs: Vec<f64> = u.iter().chain(v.iter()).chain(w.iter()).copied().collect();
        self.prod.eval_f64(&inputs)
    }

    /// `sigma` over jets; inputs ordered `u.., v..` and their constant
    /// terms must lie in the chart domain.
    pub fn eval_sigma_jets(&self, inputs: &[Jet], spec: JetSpec) -> Result<Vec<Jet>> {
        self.check_len("sigma inputs", self.n + self.m, inputs.len())?;
        self.check_domain_jets("u", &inputs[..self.n], self.radius_u)?;
        self.check_domain_jets("v", &inputs[self.n..], self.radius_v)?;
        self.sigma.eval_jets(inputs, spec)
    }

    /// `p` over jets; inputs ordered `u.., v.., w..`.
    pub fn eval_prod_jets(&self, inputs: &[Jet], spec: JetSpec) -> Result<Vec<Jet>> {
        self.check_len("p inputs", self.n + 2 * self.m, inputs.len())?;
        let (n, m) = (self.n, self.m);
        self.check_domain_jets("u", &inputs[..n], self.radius_u)?;
        self.check_domain_jets("v", &inputs[n..n + m], self.radius_v)?;
        self.check_domain_jets("w", &inputs[n + m..], self.radius_v)?;
        self.prod.eval_jets(inputs, spec)
    }

    /// Jacobian `∂p/∂w (u, v, w)` as an `m × m` matrix (rows index output
    /// components).
    pub(crate) fn prod_jacobian_w(&self, u: &[f64], v: &[f64], w: &[f64]) -> Result<DMatrix<f64>> {
        let m = self.m;
        let spec = JetSpec::new(m, 1)?;
        let table = JetTable::shared(spec);
        let mut inputs: Vec<Jet> = Vec::with_capacity(self.n + 2 * m);
        for &x in u.iter().chain(v.iter()) {
            inputs.push(Jet::constant_from(table, x));
        }
        for (j, &x) in w.iter().enumerate() {
            inputs.push(Jet::variable_from(table, x, j)?);
        }
        let out = self.eval_prod_jets(&inputs, spec)?;
        let mut jac = DMatrix::zeros(m, m);
        let mut alpha = vec![0usize; m];
        for (k, jet) in out.iter().enumerate() {
            for j in 0..m {
                alpha[j] = 1;
                jac[(k, j)] = jet.extract_partial(&alpha)?;
                alpha[j] = 0;
            }
        }
        Ok(jac)
    }

    /// Full Jacobian of `sigma` with respect to `(u, v)`, an
    /// `n × (n + m)` matrix.
    pub(crate) fn sigma_jacobian_uv(&self, u: &[f64], v: &[f64]) -> Result<DMatrix<f64>> {
        let (n, m) = (self.n, self.m);
        if n == 0 {
            return Ok(DMatrix::zeros(0, m));
        }
        let spec = JetSpec::new(n + m, 1)?;
        let table = JetTable::shared(spec);
        let mut inputs: Vec<Jet> = Vec::with_capacity(n + m);
        for (j, &x) in u.iter().chain(v.iter()).enumerate() {
            inputs.push(Jet::variable_from(table, x, j)?);
        }
        let out = self.eval_sigma_jets(&inputs, spec)?;
        let mut jac = DMatrix::zeros(n, n + m);
        let mut alpha = vec![0usize; n + m];
        for (k, jet) in out.iter().enumerate() {
            for j in 0..n + m {
                alpha[j] = 1;
                jac[(k, j)] = jet.extract_partial(&alpha)?;
                alpha[j] = 0;
            }
        }
        Ok(jac)
    }

    /// Solve `p(u, v, w) = 0` for the inverse fiber coordinate `w` by
    /// Newton iteration from `w0 = -v` (the first-order inverse), with the
    /// Jacobian `∂p/∂w` computed exactly from jets.
    ///
    /// `iterations` in the outcome counts residual evaluations, so an exact
    /// initial guess reports 1.
    pub fn invert_at(
        &self,
        u: &[f64],
        v: &[f64],
        tolerance: f64,
        max_iterations: usize,
    ) -> Result<NewtonOutcome> {
        self.check_len("u", self.n, u.len())?;
        self.check_len("v", self.m, v.len())?;
        let mut w: Vec<f64> = v.iter().map(|x| -x).collect();
        let mut residual = f64::INFINITY;
        for eval in 1..=max_iterations + 1 {
            let f = self.eval_prod(u, v, &w)?;
            residual = inf_norm(&f);
            if residual <= tolerance {
                return Ok(NewtonOutcome {
                    w,
                    residual,
                    iterations: eval,
                });
            }
            if eval == max_iterations + 1 {
                break;
            }
            let jac = self.prod_jacobian_w(u, v, &w)?;
            let rhs = DVector::from_iterator(self.m, f.iter().map(|x| -x));
            let delta = jac
                .lu()
                .solve(&rhs)
                .ok_or(Error::SingularJacobian { iteration: eval })?;
            for (wi, di) in w.iter_mut().zip(delta.iter()) {
                *wi += di;
            }
        }
        Err(Error::NewtonNoConvergence {
            iterations: max_iterations,
            residual,
            tolerance,
        })
    }
}

/// Result of a Newton inversion.
#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub w: Vec<f64>,
    /// `‖p(u, v, w)‖_∞` at the returned `w`.
    pub residual: f64,
    /// Number of residual evaluations performed.
    pub iterations: usize,
}

/// Deterministic sampling plan: identical seed, count and shrink always
/// produce the identical point sequence, on every platform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplePlan {
    seed: u64,
    count: usize,
    shrink: f64,
}

impl SamplePlan {
    /// Plan with the default shrink factor of 0.5 (samples live in the
    /// half-radius box).
    pub fn new(seed: u64, count: usize) -> SamplePlan {
        SamplePlan {
            seed,
            count,
            shrink: 0.5,
        }
    }

    pub fn with_shrink(self, shrink: f64) -> Result<SamplePlan> {
        if !(shrink.is_finite() && 0.0 < shrink && shrink < 1.0) {
            return Err(Error::InvalidShrink { shrink });
        }
        Ok(SamplePlan { shrink, ..self })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn shrink(&self) -> f64 {
        self.shrink
    }
}

impl Default for SamplePlan {
    fn default() -> Self {
        SamplePlan::new(0, 100)
    }
}

/// One sampled evaluation point `(u, v, w)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleTriple {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub w: Vec<f64>,
}

/// A triple extended by a fourth fiber vector for associativity checks.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct SampleQuad {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub w: Vec<f64>,
    pub z: Vec<f64>,
}

fn draw_block(rng: &mut ChaCha8Rng, len: usize, half_width: f64) -> Vec<f64> {
    (0..len)
        .map(|_| (2.0 * rng.gen::<f64>() - 1.0) * half_width)
        .collect()
}

/// Uniform points in the shrunken domain box, reproducible from the seed.
pub fn sample_points(chart: &LocalGroupoidChart, plan: &SamplePlan) -> Vec<SampleTriple> {
    sample_triples(chart, plan, 1.0)
}

/// `fiber_scale` further shrinks the fiber box; the verification suites use
/// 0.5 so that nested products and Newton iterates stay inside the declared
/// domain.
pub(crate) fn sample_triples(
    chart: &LocalGroupoidChart,
    plan: &SamplePlan,
    fiber_scale: f64,
) -> Vec<SampleTriple> {
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let hu = plan.shrink * chart.radius_u;
    let hv = plan.shrink * chart.radius_v * fiber_scale;
    (0..plan.count)
        .map(|_| SampleTriple {
            u: draw_block(&mut rng, chart.n, hu),
            v: draw_block(&mut rng, chart.m, hv),
            w: draw_block(&mut rng, chart.m, hv),
        })
        .collect()
}

pub(crate) fn sample_quads(
    chart: &LocalGroupoidChart,
    plan: &SamplePlan,
    fiber_scale: f64,
) -> Vec<SampleQuad> {
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let hu = plan.shrink * chart.radius_u;
    let hv = plan.shrink * chart.radius_v * fiber_scale;
    (0..plan.count)
        .map(|_| SampleQuad {
            u: draw_block(&mut rng, chart.n, hu),
            v: draw_block(&mut rng, chart.m, hv),
            w: draw_block(&mut rng, chart.m, hv),
            z: draw_block(&mut rng, chart.m, hv),
        })
        .collect()
}

/// Base points only (`u` block), for structure extraction sweeps. For
/// charts with `n = 0` there is a single base point, the empty vector.
pub fn sample_base_points(chart: &LocalGroupoidChart, plan: &SamplePlan) -> Vec<Vec<f64>> {
    if plan.count == 0 {
        return Vec::new();
    }
    if chart.n == 0 {
        return vec![Vec::new()];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let hu = plan.shrink * chart.radius_u;
    (0..plan.count)
        .map(|_| draw_block(&mut rng, chart.n, hu))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Scalar;

    pub(crate) fn pair_chart(dim: usize) -> LocalGroupoidChart {
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

    pub(crate) fn heisenberg_chart() -> LocalGroupoidChart {
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

    #[test]
    fn pair_source_map() {
        let chart = pair_chart(1);
        assert_eq!(chart.eval_sigma(&[0.3], &[0.2]).unwrap(), vec![0.5]);
    }

    #[test]
    fn lie_group_chart_has_empty_source() {
        let chart = heisenberg_chart();
        assert_eq!(chart.eval_sigma(&[], &[0.1, 0.2, 0.3]).unwrap(), Vec::<f64>::new());
    }

    #[test]
    fn unit_laws_on_examples() {
        let chart = pair_chart(1);
        assert_eq!(chart.eval_sigma(&[0.7], &[0.0]).unwrap(), vec![0.7]);
        assert_eq!(
            chart.eval_prod(&[0.0], &[0.1], &[0.2]).unwrap(),
            vec![0.30000000000000004]
        );
        let h = heisenberg_chart();
        // right unit law p(u, v, 0) = v
        let v = [0.3, -0.2, 0.5];
        assert_eq!(h.eval_prod(&[], &v, &[0.0; 3]).unwrap(), v.to_vec());
    }

    #[test]
    fn heisenberg_product_matches_matrix_multiplication() {
        // (v1,v2,v3)·(w1,w2,w3) = (v1+w1, v2+w2, v3+w3+v1*w2) from the
        // product of 3×3 upper unitriangular matrices.
        let h = heisenberg_chart();
        assert_eq!(
            h.eval_prod(&[], &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]).unwrap(),
            vec![1.0, 1.0, 1.0]
        );
    }

    #[test]
    fn out_of_domain_is_an_error() {
        let chart = pair_chart(1);
        assert!(matches!(
            chart.eval_sigma(&[1.5], &[0.0]),
            Err(Error::OutOfDomain { block: "u", .. })
        ));
        assert!(matches!(
            chart.eval_prod(&[0.0], &[0.0], &[-1.2]),
            Err(Error::OutOfDomain { block: "w", .. })
        ));
    }

    #[test]
    fn pair_inversion_is_exact_in_one_evaluation() {
        let chart = pair_chart(1);
        let out = chart.invert_at(&[0.1], &[0.4], 1e-12, 50).unwrap();
        assert_eq!(out.w, vec![-0.4]);
        assert_eq!(out.iterations, 1);
    }

    #[test]
    fn heisenberg_inverse_matches_closed_form() {
        // Inverse of a unitriangular matrix: (-v1, -v2, -v3 + v1*v2).
        let h = heisenberg_chart();
        let v = [0.1, 0.2, 0.3];
        let out = h.invert_at(&[], &v, 1e-13, 50).unwrap();
        let expected = [-0.1, -0.2, -0.3 + 0.1 * 0.2];
        for (a, b) in out.w.iter().zip(expected.iter()) {
            assert!((a - b).abs() < 1e-13, "{a} vs {b}");
        }
    }

    #[test]
    fn affine_inverse_matches_closed_form() {
        // Inverse of x ↦ e^a·x + b is x ↦ e^(-a)·x - e^(-a)·b.
        let chart = LocalGroupoidChart::from_exprs(
            "affine_action",
            1,
            2,
            &["exp(v1)*u1 + v2"],
            &["v1 + w1", "exp(w1)*v2 + w2"],
            3.0,
            0.5,
        )
        .unwrap();
        let out = chart.invert_at(&[1.0], &[0.2, 0.3], 1e-13, 50).unwrap();
        assert!((out.w[0] + 0.2).abs() < 1e-13);
        assert!((out.w[1] + (-0.2f64).exp() * 0.3).abs() < 1e-13);
        assert!(out.iterations <= 8);
    }

    #[test]
    fn sampling_is_deterministic_and_bounded() {
        let chart = pair_chart(2);
        let plan = SamplePlan::new(42, 64);
        let a = sample_points(&chart, &plan);
        let b = sample_points(&chart, &plan);
        assert_eq!(a, b);
        for t in &a {
            for &x in t.u.iter() {
                assert!(x.abs() < 0.5 * chart.radius_u());
            }
            for &x in t.v.iter().chain(t.w.iter()) {
                assert!(x.abs() < 0.5 * chart.radius_v());
            }
        }
        let empty = sample_points(&chart, &SamplePlan::new(42, 0));
        assert!(empty.is_empty());
    }

    #[test]
    fn newton_iteration_cap_is_reported() {
        let h = heisenberg_chart();
        // The initial guess does not solve the Heisenberg inversion, so a
        // zero iteration budget must fail with the residual attached.
        let err = h.invert_at(&[], &[0.3, 0.4, 0.1], 1e-13, 0).unwrap_err();
        assert!(matches!(err, Error::NewtonNoConvergence { iterations: 0, .. }));
    }

    #[test]
    fn invalid_shrink_rejected() {
        assert!(SamplePlan::new(0, 1).with_shrink(1.0).is_err());
        assert!(SamplePlan::new(0, 1).with_shrink(0.0).is_err());
        assert!(SamplePlan::new(0, 1).with_shrink(0.25).is_ok());
    }

    struct PairNative {
        dim: usize,
        sigma: bool,
    }

    impl PairNative {
        fn eval_generic<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>> {
            let d = self.dim;
            let offset = if self.sigma { 0 } else { d };
            Ok((0..d).map(|i| x[offset + i].add(&x[offset + d + i])).collect())
        }
    }

    impl NativeMap for PairNative {
        fn inputs(&self) -> usize {
            if self.sigma {
                2 * self.dim
            } else {
                3 * self.dim
            }
        }
        fn outputs(&self) -> usize {
            self.dim
        }
        fn eval_f64(&self, x: &[f64]) -> Result<Vec<f64>> {
            self.eval_generic(x)
        }
        fn eval_jets(&self, x: &[Jet]) -> Result<Vec<Jet>> {
            self.eval_generic(x)
        }
    }

    #[test]
    fn native_chart_agrees_with_expression_chart() {
        let dim = 2;
        let native = LocalGroupoidChart::from_native(
            "pair_native",
            dim,
            dim,
            Arc::new(PairNative { dim, sigma: true }),
            Arc::new(PairNative { dim, sigma: false }),
            1.0,
            1.0,
        )
        .unwrap();
        let exprs = pair_chart(dim);
        let (u, v, w) = ([0.1, -0.2], [0.3, 0.05], [-0.1, 0.2]);
        assert_eq!(
            native.eval_sigma(&u, &v).unwrap(),
            exprs.eval_sigma(&u, &v).unwrap()
        );
        assert_eq!(
            native.eval_prod(&u, &v, &w).unwrap(),
            exprs.eval_prod(&u, &v, &w).unwrap()
        );
        let out = native.invert_at(&u, &v, 1e-12, 50).unwrap();
        assert_eq!(out.w, vec![-0.3, -0.05]);
    }

    #[test]
    fn arity_mismatch_rejected_at_construction() {
        let err = LocalGroupoidChart::from_exprs("bad", 1, 1, &[], &["v1 + w1"], 1.0, 1.0);
        assert!(matches!(err, Err(Error::ChartArity { .. })));
    }
}
