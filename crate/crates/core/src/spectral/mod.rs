//! Biorthogonal eigenproblem of `H_eff`, fixed-point resonances, parameter
//! sweeps with branch tracking, and exceptional-point detection.

mod diagonalize;
mod exceptional;
mod fixed_point;
mod sweep;

pub use diagonalize::{diagonalize, diagonalize_with, ResonanceSpectrum, DEFAULT_DEFECT_TOL};
pub use exceptional::{find_exceptional_points, ExceptionalPoint};
pub use fixed_point::{follow_branch, solve_fixed_point, ResonanceState, AMBIGUITY_TOL, DAMPING, MAX_ITERATIONS};
pub use sweep::{resonance_states, sweep, SweepPoint, SweepResult, MAX_REFINEMENT_LEVELS};

pub(crate) use exceptional::golden_section;
