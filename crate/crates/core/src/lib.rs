// NaN-rejecting guards are written as negated comparisons on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod certification;
pub mod cli;
pub mod experiments;
pub mod linalg;
pub mod problem;
pub mod solvers;
