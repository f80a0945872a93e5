//! Non-Hermitian effective Hamiltonians of open quantum systems.
//!
//! A finite set of discrete levels (`H_B`) is coupled to one or more decay
//! channels. Projecting the channels out gives the energy-dependent, complex
//! symmetric effective Hamiltonian `H_eff(E)` whose biorthogonal eigenpairs
//! carry every observable of the open system:
//!
//! - [`model`]: levels, channels, couplings and `H_eff(E)` assembly
//! - [`spectral`]: biorthogonal diagonalization, fixed-point resonances,
//!   parameter sweeps and exceptional points
//! - [`scattering`]: S-matrix, transmission and the phase rigidity of the
//!   internal scattering wave function
//! - [`dynamics`]: time evolution, population and decay rate
//! - [`bic`]: bound states in the continuum
//! - [`oracle`]: brute-force discretized Hermitian full-space reference
//! - [`cli`]: the `resonance-lab` command pipeline and its artifacts
//!
//! Units: energies are arbitrary but consistent, ħ = 1.

pub mod bic;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod io;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod scattering;
pub mod spectral;

pub use error::{Error, Result};
pub use model::{build_h_eff, coupling_vector, Channel, EffectiveHamiltonian, Scalar, SystemModel};
pub use spectral::{diagonalize, solve_fixed_point, sweep, ResonanceSpectrum, ResonanceState, SweepResult};
