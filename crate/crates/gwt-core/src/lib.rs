//! Solvers built around the Gaussian wave packet transform (GWT) for the
//! semi-classical Schrodinger equation with scalar and vector potentials.
//!
//! The crate factors the wave function into a Gaussian phase driven by a
//! small ODE system (the packet parameters) and a rescaled, non-oscillatory
//! field `w` that lives on an O(1) periodic grid. The `w` equation is
//! advanced by operator-split spectral / semi-Lagrangian steps (SL-TS2 and
//! SL-TS3). A direct semi-Lagrangian time-splitting solver for the
//! untransformed equation is included as a benchmark reference.
//!
//! Module map:
//! - [`grid`]: periodic tensor grids, DFTs, norms, trigonometric interpolation
//! - [`potentials`]: scalar/vector potential models and Taylor remainders
//! - [`packet`]: packet parameter ODE integration with dense output
//! - [`wsolver`]: split-step solvers for the transformed `w` equation
//! - [`reference`]: direct SL-TS solver on the physical grid
//! - [`reconstruct`]: initial data, wave-function reconstruction, observables
//! - [`snapshot`]: binary field snapshots

pub mod error;
pub mod grid;
pub mod packet;
pub mod potentials;
pub mod reconstruct;
pub mod reference;
pub mod snapshot;
pub mod wsolver;

pub use error::CoreError;
pub use num_complex::Complex64;

/// Convenience result alias used across the crate.
pub type Result<T> = std::result::Result<T, CoreError>;
