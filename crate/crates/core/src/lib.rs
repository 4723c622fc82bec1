//! Simulator for topological frequency conversion in a two-tone driven
//! qubit, its degradation under Ornstein–Uhlenbeck dephasing, and its
//! recovery with π-pulse dynamical decoupling.
//!
//! Module map:
//! - [`algebra`]: closed-form 2x2 Pauli algebra (propagators, eigenpairs)
//! - [`drive`]: field vectors and all time-dependent Hamiltonians
//! - [`noise`]: OU dephasing traces
//! - [`propagation`]: plain and decoupled time stepping, Magnus check
//! - [`observables`]: work, pumping rates, Chern estimate, fidelity
//! - [`topology`]: Chern numbers, minimum gap, h-trajectory geometry
//! - [`ensemble`]: Monte Carlo averaging and parameter sweeps
//! - [`config`] / [`cli`]: experiment files and the command-line runner

pub mod algebra;
pub mod cli;
pub mod config;
pub mod drive;
pub mod ensemble;
pub mod error;
pub mod noise;
pub mod observables;
pub mod propagation;
pub mod topology;

pub use algebra::{eig_pauli, expm_pauli, Band, Eigensystem, PauliCoeffs, SpinState, Unitary2};
pub use drive::{DriveParams, FieldVector, LabFrameParams};
pub use error::{Error, Result};
pub use noise::{NoiseParams, NoiseTrace};
pub use observables::{PumpingFit, WorkRecord};
pub use propagation::{DDConfig, IntegrationConfig, Trajectory};
