//! Numerical engine for Feller semigroups via Chernoff product formulas.
//!
//! The semigroup `T_t` generated by a pseudo-differential operator with
//! symbol `-H(q, p)` is approximated by `[F(t/n)]^n` on a periodic grid,
//! where `F` is a Hamiltonian step, a Lagrangian (kernel) step, a potential
//! or drift step, or a composition of these. Frozen-coefficient Monte Carlo
//! chains give an independent estimate of the same quantities.

pub mod chernoff;
pub mod error;
pub mod grid;
pub mod kernels;
pub mod montecarlo;
pub mod quadrature;
pub mod symbol;

pub use chernoff::{convergence_study, iterate, ConvergenceRow, Iterate, Reference, StepOperator};
pub use error::{Error, Result};
pub use grid::{Grid1D, GridFunction};
pub use kernels::TransitionKernel;
pub use symbol::{CoefficientFn, Psi, SymbolSpec};
