//! Radial discretization of `H = -Delta + V + m^2`, its spectrum, and functional calculus for `B = sqrt(H)`.

mod data;
mod function;
mod grid;
mod potential;
pub mod tridiag;

pub use data::{assemble_hamiltonian, bound_state, BoundState, Part, SpectralData};
pub use function::{lp_norm, weighted_lp_norm, GridFunction};
pub use grid::{RadialGrid, MIN_NODES};
pub use potential::{tune_gaussian_depth, DecayCheck, Potential, PotentialSpec, MIN_DECAY_EXPONENT};
