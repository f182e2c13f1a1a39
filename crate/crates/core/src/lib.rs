//! Matrix-free generator of l1-regularized least-squares problems
//!
//! `minimize tau ||x||_1 + 1/2 ||Ax - b||_2^2`
//!
//! with a planted optimal solution, together with the solvers and the
//! benchmark harness used to compare them.
//!
//! - [`operator`]: implicit `A = (P1 G~ P2) Sigma G^T` from Givens stages.
//! - [`solution`]: planted sparse solutions and conditioning measures.
//! - [`instance`]: right-hand sides that make the planted solution optimal.
//! - [`solvers`]: ISTA, FISTA, randomized coordinate descent, Newton-CG.
//! - [`bench`]: declarative experiments, presets, traces and plot data.
//! - [`format`]: operator documents and binary instance files.

pub mod bench;
pub mod format;
pub mod instance;
pub mod operator;
pub mod rng;
pub mod solution;
pub mod solvers;
