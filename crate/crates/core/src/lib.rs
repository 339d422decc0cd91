//! Pointwise curvature of Hermitian metrics and their canonical connections.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod connections;
pub mod curvature;
pub mod dsl;
pub mod dump;
pub mod error;
pub mod hodge;
pub mod metric;
pub mod models;
pub mod real;
pub mod sampling;
pub mod solver;
pub mod suite;
pub mod tensor;
