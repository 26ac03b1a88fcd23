//! Desk-scale simulator for atomic tunnelling and decoherence in a 1D
//! optical double-well lattice.
//!
//! The pieces, bottom to top:
//!
//! - [`lattice`]: the 2D lattice potential, its 1D cut, and the partition of
//!   the domain into labeled left/right sub-wells. Units are dimensionless
//!   throughout: lengths in λ, energies in E_R, time in 1/E_R (ħ=1).
//! - [`spectral`]: the zero-quasi-momentum plane-wave Hamiltonian, its
//!   eigendecomposition, and synthesis of eigenstates and superpositions on
//!   the propagation grid.
//! - [`dynamics`]: uniform periodic grid, wavefunctions, and the
//!   split-operator Fourier propagator.
//! - [`decoherence`]: Poisson-timed random recoil phase kicks interleaved
//!   with unitary evolution, one seeded RNG stream per trajectory.
//! - [`ensemble`]: Monte Carlo trajectory ensembles and the derived
//!   observables (left-well probability, survival, purity).
//! - [`config`], [`presets`], [`output`]: run configuration, figure presets,
//!   and CSV output for the `dwell` CLI.
//!
//! All core math is generic over the scalar type through [`scalar::Real`]
//! (f32 or f64); the CLI and the type aliases below pin f64.

pub mod config;
pub mod decoherence;
pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod lattice;
pub mod output;
pub mod presets;
pub mod scalar;
pub mod spectral;

pub use error::{Error, Result};
pub use scalar::Real;

/// f64 instantiations used by the CLI and most callers.
pub type Params64 = lattice::LatticeParams<f64>;
pub type Partition64 = lattice::WellPartition<f64>;
pub type Grid64 = dynamics::Grid<f64>;
pub type Wave64 = dynamics::WaveFunction<f64>;
pub type Plan64 = dynamics::PropagatorPlan<f64>;
pub type Spectrum64 = spectral::BlochSpectrum<f64>;
pub type Series64 = ensemble::ObservableSeries<f64>;
