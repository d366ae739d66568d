//! Truncated multivariate Taylor arithmetic: the forward-mode AD scalar
//! used to read exact partial derivatives off evaluated chart programs.
//!
//! A [`Jet`] carries one coefficient per multi-index `α` with `|α| ≤ k` in
//! `d` perturbation directions. Coefficients are stored as partial
//! derivatives (the raw Taylor coefficient times `α!`), so
//! [`Jet::extract_partial`] returns `∂^α` of the program with no
//! postprocessing. The truncation order is capped at 3: enough for mixed
//! Hessians and their first base-point derivatives, which is everything the
//! structure extraction needs.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use crate::{Error, Result};

/// Largest supported truncation order.
pub const MAX_ORDER: usize = 3;
/// Largest supported number of perturbation directions.
pub const MAX_DIRECTIONS: usize = 64;

/// Shape of a jet: number of perturbation directions and truncation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct JetSpec {
    directions: usize,
    order: usize,
}

impl JetSpec {
    /// A spec with `directions ≥ 1` and `order` in `1..=3`.
    pub fn new(directions: usize, order: usize) -> Result<Self> {
        if directions == 0 || directions > MAX_DIRECTIONS {
            return Err(Error::InvalidDirections { directions });
        }
        if order == 0 || order > MAX_ORDER {
            return Err(Error::InvalidOrder { order });
        }
        Ok(JetSpec { directions, order })
    }

    pub fn directions(&self) -> usize {
        self.directions
    }

    pub fn order(&self) -> usize {
        self.order
    }
}

/// The five elementary functions jets (and the expression DSL) support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElementaryFn {
    Exp,
    Log,
    Sin,
    Cos,
    Sqrt,
}

impl ElementaryFn {
    pub fn name(&self) -> &'static str {
        match self {
            ElementaryFn::Exp => "exp",
            ElementaryFn::Log => "log",
            ElementaryFn::Sin => "sin",
            ElementaryFn::Cos => "cos",
            ElementaryFn::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "exp" => Some(ElementaryFn::Exp),
            "log" => Some(ElementaryFn::Log),
            "sin" => Some(ElementaryFn::Sin),
            "cos" => Some(ElementaryFn::Cos),
            "sqrt" => Some(ElementaryFn::Sqrt),
            _ => None,
        }
    }
}

const FACTORIAL: [f64; 4] = [1.0, 1.0, 2.0, 6.0];

/// Precomputed multi-index layout and multiplication table for one spec.
///
/// The multi-index list is graded (all degree-j indices precede degree-j+1)
/// and, within a degree, ordered independently of the truncation order, so
/// the coefficient layout of an order-2 table is a prefix of the order-3
/// layout. Arithmetic preserves that prefix bit-for-bit.
#[derive(Debug)]
pub(crate) struct JetTable {
    spec: JetSpec,
    midx: Vec<Box<[u8]>>,
    index: HashMap<Box<[u8]>, usize>,
    degree: Vec<u8>,
    /// Per result slot `r`: triples `(i, j, mult)` with
    /// `midx[i] + midx[j] = midx[r]` and `mult = ∏ C(midx[r]_t, midx[i]_t)`.
    prod: Vec<Vec<(u32, u32, f64)>>,
}

fn enumerate_degree(d: usize, deg: usize, prefix: &mut Vec<u8>, out: &mut Vec<Box<[u8]>>) {
    if prefix.len() == d - 1 {
        prefix.push(deg as u8);
        out.push(prefix.clone().into_boxed_slice());
        prefix.pop();
        return;
    }
    for a in (0..=deg).rev() {
        prefix.push(a as u8);
        enumerate_degree(d, deg - a, prefix, out);
        prefix.pop();
    }
}

fn binom(n: u8, k: u8) -> f64 {
    // n ≤ 3 here; exact in f64.
    let mut acc = 1.0;
    for t in 0..k {
        acc = acc * f64::from(n - t) / f64::from(t + 1);
    }
    acc
}

impl JetTable {
    fn build(spec: JetSpec) -> JetTable {
        let d = spec.directions;
        let mut midx: Vec<Box<[u8]>> = Vec::new();
        for deg in 0..=spec.order {
            let mut prefix = Vec::with_capacity(d);
            enumerate_degree(d, deg, &mut prefix, &mut midx);
        }
        let index: HashMap<Box<[u8]>, usize> = midx
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), i))
            .collect();
        let degree: Vec<u8> = midx.iter().map(|a| a.iter().sum()).collect();
        let mut prod = Vec::with_capacity(midx.len());
        for (r, gamma) in midx.iter().enumerate() {
            let mut pairs = Vec::new();
            for (i, alpha) in midx.iter().enumerate() {
                if degree[i] > degree[r] {
                    break;
                }
                if alpha.iter().zip(gamma.iter()).all(|(a, g)| a <= g) {
                    let beta: Box<[u8]> = gamma
                        .iter()
                        .zip(alpha.iter())
                        .map(|(g, a)| g - a)
                        .collect();
                    let j = index[&beta];
                    let mult: f64 = gamma
                        .iter()
                        .zip(alpha.iter())
                        .map(|(g, a)| binom(*g, *a))
                        .product();
                    pairs.push((i as u32, j as u32, mult));
                }
            }
            prod.push(pairs);
        }
        JetTable {
            spec,
            midx,
            index,
            degree,
            prod,
        }
    }

    /// Tables are interned for the lifetime of the process: they are
    /// small, immutable, and bounded by the number of distinct specs, and
    /// a plain reference keeps jet arithmetic free of shared refcount
    /// traffic across threads.
    pub(crate) fn shared(spec: JetSpec) -> &'static JetTable {
        static REGISTRY: OnceLock<Mutex<HashMap<JetSpec, &'static JetTable>>> = OnceLock::new();
        let registry = REGISTRY.get_or_init(|| Mutex::new(HashMap::new()));
        let mut map = registry.lock().expect("jet table registry poisoned");
        map.entry(spec)
            .or_insert_with(|| Box::leak(Box::new(JetTable::build(spec))))
    }

    fn len(&self) -> usize {
        self.midx.len()
    }
}

/// A truncated Taylor expansion of an evaluated program at a base point.
///
/// Immutable value type; all operations are pure and allocate the result.
#[derive(Debug, Clone)]
pub struct Jet {
    table: &'static JetTable,
    coeffs: Vec<f64>,
}

impl PartialEq for Jet {
    fn eq(&self, other: &Self) -> bool {
        self.table.spec == other.table.spec && self.coeffs == other.coeffs
    }
}

impl Jet {
    /// A jet with the given constant term and zero derivatives.
    pub fn constant(spec: JetSpec, value: f64) -> Jet {
        Jet::constant_from(JetTable::shared(spec), value)
    }

    /// Seed an independent variable: constant term `base_value`, unit first
    /// derivative in `direction`, all other coefficients zero.
    pub fn variable(spec: JetSpec, base_value: f64, direction: usize) -> Result<Jet> {
        Jet::variable_from(JetTable::shared(spec), base_value, direction)
    }

    pub(crate) fn constant_from(table: &'static JetTable, value: f64) -> Jet {
        let mut coeffs = vec![0.0; table.len()];
        coeffs[0] = value;
        Jet { table, coeffs }
    }

    pub(crate) fn variable_from(
        table: &'static JetTable,
        base_value: f64,
        direction: usize,
    ) -> Result<Jet> {
        let d = table.spec.directions;
        if direction >= d {
            return Err(Error::DirectionOutOfRange {
                direction,
                directions: d,
            });
        }
        let mut coeffs = vec![0.0; table.len()];
        coeffs[0] = base_value;
        let mut alpha = vec![0u8; d];
        alpha[direction] = 1;
        let slot = table.index[alpha.as_slice()];
        coeffs[slot] = 1.0;
        Ok(Jet { table, coeffs })
    }

    /// A jet with explicit coefficients, ordered by the spec's multi-index
    /// layout (graded, constant slot first).
    pub fn from_coefficients(spec: JetSpec, coeffs: Vec<f64>) -> Result<Jet> {
        let table = JetTable::shared(spec);
        if coeffs.len() != table.len() {
            return Err(Error::MultiIndexLength {
                expected: table.len(),
                got: coeffs.len(),
            });
        }
        Ok(Jet { table, coeffs })
    }

    /// The raw coefficient slice (partial derivatives, graded layout).
    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn spec(&self) -> JetSpec {
        self.table.spec
    }

    /// The value of the program at the base point (the `α = 0` coefficient).
    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// The partial derivative `∂^α` of the evaluated program.
    pub fn extract_partial(&self, alpha: &[usize]) -> Result<f64> {
        let spec = self.table.spec;
        if alpha.len() != spec.directions {
            return Err(Error::MultiIndexLength {
                expected: spec.directions,
                got: alpha.len(),
            });
        }
        let total: usize = alpha.iter().sum();
        if total > spec.order {
            return Err(Error::PartialOrderExceeded {
                requested: total,
                order: spec.order,
            });
        }
        let key: Box<[u8]> = alpha.iter().map(|&a| a as u8).collect();
        Ok(self.coeffs[self.table.index[&key]])
    }

    /// A constant jet sharing this jet's spec.
    pub fn constant_like(&self, value: f64) -> Jet {
        Jet::constant_from(self.table, value)
    }

    fn assert_same_spec(&self, other: &Jet, op: &str) {
        assert!(
            self.table.spec == other.table.spec,
            "jet spec mismatch in {op}: {:?} vs {:?}",
            self.table.spec,
            other.table.spec
        );
    }

    pub fn add(&self, other: &Jet) -> Jet {
        self.assert_same_spec(other, "add");
        let coeffs = self
            .coeffs
            .iter()
            .zip(other.coeffs.iter())
            .map(|(a, b)| a + b)
            .collect();
        Jet {
            table: self.table,
            coeffs,
        }
    }

    pub fn sub(&self, other: &Jet) -> Jet {
        self.assert_same_spec(other, "sub");
        let coeffs = self
            .coeffs
            .iter()
            .zip(other.coeffs.iter())
            .map(|(a, b)| a - b)
            .collect();
        Jet {
            table: self.table,
            coeffs,
        }
    }

    pub fn neg(&self) -> Jet {
        Jet {
            table: self.table,
            coeffs: self.coeffs.iter().map(|a| -a).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet {
            table: self.table,
            coeffs: self.coeffs.iter().map(|a| a * s).collect(),
        }
    }

    /// Truncated product. With derivative-valued coefficients this is the
    /// Leibniz rule: `h^(γ) = Σ_{α≤γ} C(γ,α) f^(α) g^(γ−α)`.
    pub fn mul(&self, other: &Jet) -> Jet {
        self.assert_same_spec(other, "mul");
        let table = &self.table;
        let mut coeffs = vec![0.0; table.len()];
        for (r, pairs) in table.prod.iter().enumerate() {
            let mut acc = 0.0;
            for &(i, j, mult) in pairs {
                acc += self.coeffs[i as usize] * other.coeffs[j as usize] * mult;
            }
            coeffs[r] = acc;
        }
        Jet {
            table,
            coeffs,
        }
    }

    /// Truncated quotient. Errors if the divisor's constant term is zero.
    pub fn div(&self, other: &Jet) -> Result<Jet> {
        self.assert_same_spec(other, "div");
        let b0 = other.value();
        if b0 == 0.0 {
            return Err(Error::DivisionByZero);
        }
        let derivs = [
            1.0 / b0,
            -1.0 / (b0 * b0),
            2.0 / (b0 * b0 * b0),
            -6.0 / (b0 * b0 * b0 * b0),
        ];
        let mut out = self.mul(&other.compose(&derivs));
        // The constant slot mirrors plain f64 arithmetic exactly; a0·(1/b0)
        // can differ from a0/b0 by an ulp.
        out.coeffs[0] = self.coeffs[0] / b0;
        Ok(out)
    }

    /// Nonnegative integer power by repeated multiplication.
    pub fn powi(&self, n: u32) -> Jet {
        if n == 0 {
            return self.constant_like(1.0);
        }
        let mut acc = self.clone();
        for _ in 1..n {
            acc = acc.mul(self);
        }
        acc
    }

    /// Apply one of the elementary functions by truncated series
    /// composition around the constant term.
    pub fn apply(&self, f: ElementaryFn) -> Result<Jet> {
        let a0 = self.value();
        let derivs = match f {
            ElementaryFn::Exp => {
                let e = a0.exp();
                [e, e, e, e]
            }
            ElementaryFn::Log => {
                if a0 <= 0.0 {
                    return Err(Error::Domain {
                        func: f.name(),
                        value: a0,
                    });
                }
                [a0.ln(), 1.0 / a0, -1.0 / (a0 * a0), 2.0 / (a0 * a0 * a0)]
            }
            ElementaryFn::Sin => [a0.sin(), a0.cos(), -a0.sin(), -a0.cos()],
            ElementaryFn::Cos => [a0.cos(), -a0.sin(), -a0.cos(), a0.sin()],
            ElementaryFn::Sqrt => {
                if a0 <= 0.0 {
                    return Err(Error::Domain {
                        func: f.name(),
                        value: a0,
                    });
                }
                let s = a0.sqrt();
                [s, 0.5 / s, -0.25 / (s * s * s), 0.375 / (s * s * s * s * s)]
            }
        };
        Ok(self.compose(&derivs))
    }

    /// `g = f ∘ self` where `derivs[j] = f^(j)` at this jet's constant term.
    ///
    /// Writes each slot from contributions of degree ≤ the slot's own
    /// degree only, so an order-2 evaluation is a bit-for-bit prefix of the
    /// order-3 evaluation of the same program.
    fn compose(&self, derivs: &[f64; 4]) -> Jet {
        let table = &self.table;
        let k = table.spec.order;
        let mut abar = self.clone();
        abar.coeffs[0] = 0.0;
        let mut pows: Vec<Jet> = Vec::with_capacity(k);
        pows.push(abar.clone());
        for _ in 1..k {
            let next = pows.last().expect("nonempty").mul(&abar);
            pows.push(next);
        }
        let mut coeffs = vec![0.0; table.len()];
        for (slot, c) in coeffs.iter_mut().enumerate() {
            let deg = usize::from(table.degree[slot]);
            if deg == 0 {
                *c = derivs[0];
                continue;
            }
            let mut acc = 0.0;
            for (j, pow) in pows.iter().enumerate().take(deg) {
                acc += derivs[j + 1] / FACTORIAL[j + 1] * pow.coeffs[slot];
            }
            *c = acc;
        }
        Jet {
            table,
            coeffs,
        }
    }

    /// Read the order-≤`target.order()` coefficients into a fresh jet of the
    /// smaller spec. Requires identical direction count and a not-larger
    /// order.
    pub fn truncated(&self, target: JetSpec) -> Result<Jet> {
        let spec = self.table.spec;
        if target.directions != spec.directions || target.order > spec.order {
            return Err(Error::JetTruncation {
                from: (spec.directions, spec.order),
                to: (target.directions, target.order),
            });
        }
        let table = JetTable::shared(target);
        // Graded layout: the smaller table's slots are a prefix.
        let coeffs = self.coeffs[..table.len()].to_vec();
        Ok(Jet { table, coeffs })
    }
}
