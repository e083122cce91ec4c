//! Interval calculus under the LU order and sampling-based auditors for
//! generalized invexity classes of interval-valued functions, with KKT and
//! dominance checks for interval-valued nonlinear programs.

pub mod audit;
pub mod expr;
pub mod interval;
pub mod invexity;
pub mod ivf;
pub mod optprog;
pub mod problem;
pub mod report;
pub mod rng;
