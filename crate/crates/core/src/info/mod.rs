//! Exact discrete-probability engine: dense tables over named variables,
//! information quantities, DAG multi-information, and the brute-force tiny
//! world used for identity verification.

mod dag;
mod table;
mod world;

pub use dag::DagSpec;
pub use table::{kahan_sum, CategoricalTable, ConditionalTable, Variable, PROB_TOL};
pub use world::{
    check_upper_bound, information_projection_gap, BoundCheck, BoundReport, TinyWorld,
    TinyWorldKernels, VariationalSet,
};
