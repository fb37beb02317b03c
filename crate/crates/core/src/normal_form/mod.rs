//! Birkhoff normal form on the term algebra
//! `c xi^mu xi-bar^nu prod <A_j, f> prod <B_k, f-bar> prod int Psi U^d`.
//!
//! Pairings are bilinear, `<a, b> = sum a_i b_i dr`, and the Poisson bracket is
//! `{A, B} = i (d_xi A d_xibar B - d_xibar A d_xi B) + i <grad_f A, grad_fbar B> - i <grad_fbar A, grad_f B>`,
//! so the flow of `H` is `xi' = -i d_xibar H`, `f' = -i grad_fbar H`.

mod algebra;
mod engine;
mod flow;
mod term;

pub use algebra::{Algebra, PhasePoint};
pub use engine::{
    classify_violations, homological_residual, is_normal_linear, lie_series, normal_form_recursion, solve_homological,
    step0_hamiltonian, NormalFormResult, RecursionOptions, StepLog, TOL_RES,
};
pub use flow::{compose_transform, lie_transform_flow};
pub use term::{AlgebraTerm, FieldFactor, HamiltonianPoly, LinearFactor, Vector};

#[cfg(test)]
mod tests;
