//! Metric component expressions in `z`, `z̄`: parsing, printing, symbolic
//! Wirtinger differentiation and evaluation.

mod expr;
mod parser;
mod spec_file;

pub use expr::{evaluate, wirtinger_diff, Direction, Expr};
pub use parser::{parse_expr, parse_expr_at};
pub use spec_file::{
    hopf_source, parse, parse_scalar, CompiledScalar, DslMetric, MetricSpecFile, ScalarJet,
};
