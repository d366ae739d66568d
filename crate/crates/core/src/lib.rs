//! Local charts for Lie groupoids: evaluate a groupoid presented by its
//! source map `σ(u, v)` and product map `p(u, v, w)`, extract the
//! second-order expansion data of the product (the bilinear term `B`, the
//! anchor matrix `a`, the structure functions `c`, invariant vector fields
//! and section brackets), and verify every groupoid and Lie algebroid axiom
//! numerically at deterministically sampled points.
//!
//! Derivatives are exact to roundoff: chart programs are evaluated over
//! truncated Taylor [`jet`]s rather than finite differences. Charts can be
//! written in a small expression language ([`expr`]), loaded from TOML chart
//! files ([`chartfile`]), or implemented natively over abstract scalars.
//! Built-in charts with known structure data live in [`gallery`].
//!
//! Sample evaluation inside the verification suites is data-parallel via
//! rayon when the default `parallel` feature is enabled; build with
//! `--no-default-features` for the sequential fallback. `RAYON_NUM_THREADS`
//! overrides the worker count.

// Tensor contractions here are written as indexed loops; the index names
// carry the formulas.
#![allow(clippy::needless_range_loop)]

pub mod axioms;
pub mod chart;
pub mod chartfile;
pub mod expr;
pub mod gallery;
pub mod jet;
mod par;
pub mod report;
pub mod structure;

pub use chart::{LocalGroupoidChart, NativeMap, NewtonOutcome, SamplePlan, SampleTriple};
pub use expr::{Expr, Scalar, VariableEnv};
pub use jet::{ElementaryFn, Jet, JetSpec};
pub use report::{CheckReport, CheckResult};
pub use structure::{SectionSpec, StructureData, TangentFieldValue};

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while building, evaluating or verifying a
/// chart.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    // --- jets ---
    #[error("jet direction count {directions} outside supported range 1..={}", jet::MAX_DIRECTIONS)]
    InvalidDirections { directions: usize },
    #[error("jet order {order} outside supported range 1..={}", jet::MAX_ORDER)]
    InvalidOrder { order: usize },
    #[error("direction index {direction} out of range for {directions} directions")]
    DirectionOutOfRange { direction: usize, directions: usize },
    #[error("multi-index length {got} does not match {expected} directions")]
    MultiIndexLength { expected: usize, got: usize },
    #[error("multi-index order {requested} exceeds jet order {order}")]
    PartialOrderExceeded { requested: usize, order: usize },
    #[error("cannot truncate jet of shape {from:?} to {to:?}")]
    JetTruncation { from: (usize, usize), to: (usize, usize) },
    #[error("division by a value with zero constant term")]
    DivisionByZero,
    #[error("{func}: argument {value} outside the function domain")]
    Domain { func: &'static str, value: f64 },

    // --- expression language ---
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("variable index {index} has no binding ({bound} values supplied)")]
    MissingBinding { index: usize, bound: usize },
    #[error("duplicate variable name `{name}`")]
    DuplicateVariable { name: String },

    // --- charts ---
    #[error("chart `{chart}`: {field} has {got} components, expected {expected}")]
    ChartArity {
        chart: String,
        field: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("chart `{chart}`: {field} must be positive, got {value}")]
    ChartRadius {
        chart: String,
        field: &'static str,
        value: f64,
    },
    #[error("chart `{chart}`: fiber dimension m must be at least 1")]
    ChartFiberDimension { chart: String },
    #[error("input {block}[{index}] = {value} outside the chart domain (radius {radius})")]
    OutOfDomain {
        block: &'static str,
        index: usize,
        value: f64,
        radius: f64,
    },
    #[error("vector argument `{name}` has length {got}, expected {expected}")]
    VectorLength {
        name: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("singular product Jacobian during Newton inversion (iteration {iteration})")]
    SingularJacobian { iteration: usize },
    #[error(
        "Newton inversion did not reach tolerance {tolerance:e} in {iterations} iterations \
         (residual {residual:e})"
    )]
    NewtonNoConvergence {
        iterations: usize,
        residual: f64,
        tolerance: f64,
    },
    #[error("sample shrink factor {shrink} outside the open interval (0, 1)")]
    InvalidShrink { shrink: f64 },

    // --- chart files / gallery ---
    #[error("chart file: {message}")]
    ChartFile { message: String },
    #[error("chart file field `{field}[{index}]`: {source}")]
    ChartFileExpr {
        field: &'static str,
        index: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("native chart maps cannot be exported to the chart file format")]
    NativeChartNotExportable,
    #[error("unknown gallery entry `{name}`")]
    UnknownEntry { name: String },
    #[error("gallery entry `{name}` does not accept parameter `{parameter}`")]
    BadParameter { name: String, parameter: &'static str },
    #[error("gallery entry `{name}`: {parameter} = {value} out of range")]
    ParameterOutOfRange {
        name: String,
        parameter: &'static str,
        value: usize,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for inputs the caller got wrong (parse, domain, dimension or
    /// configuration errors) as opposed to numerical failures.
    pub fn is_usage(&self) -> bool {
        !matches!(
            self,
            Error::SingularJacobian { .. } | Error::NewtonNoConvergence { .. }
        )
    }
}
