//! Exact rational linear and integer programming.

mod ilp;
mod lp;
mod rational;
mod simplex;

pub use ilp::{ilp_solve, IlpError, IlpOptions, IlpResult, IlpStatus, IntegralPoint};
pub use lp::{
    lp_solve, lp_solve_with, Constraint, LpError, LpModel, LpOptions, LpSolution, LpStatus, Relation,
};
pub use rational::{ParseRationalError, Rational};
