//! Pseudo-spectral solver and experiment harness for the shear-thinning
//! p-Navier-Stokes system on the periodic unit torus.
//!
//! The crate is organised bottom-up:
//!
//! * [`spectral`]: torus grids, Fourier transforms, differential operators,
//!   the Leray projection, quadrature norms and field snapshots.
//! * [`rheology`]: the power-law stress and its regularisation, the
//!   monotonicity inequality, embedding-constant estimation and the
//!   smallness budget (gradient threshold, force bound, contraction rate,
//!   extinction bounds).
//! * [`dynamics`]: forcing, the Galerkin right-hand side, an exponential
//!   IMEX integrator, trajectory recording and identity monitors.
//! * [`orbits`]: Poincaré-map iteration to time-periodic solutions,
//!   steady solutions and finite-time extinction experiments.

pub mod dynamics;
pub mod error;
pub mod orbits;
pub mod rheology;
pub mod spectral;

pub use error::{Error, Result};
pub use dynamics::{
    assemble_rhs, simulate, simulate_observed, ForcingSpec, Integrator, Modulation, MonitorToggles,
    SimConfig, TimeStepPolicy, TrajectoryRecord, TrajectoryRow,
};
pub use orbits::{
    extinction_experiment, find_periodic_orbit, poincare_map, steady_solve, verify_periodicity,
    ExtinctionReport, OrbitResult, SteadyResult,
};
pub use rheology::{RheologyParams, SmallnessBudget, SobolevRole};
pub use spectral::{GridSamples, Resolution, SymTensorField, TorusGrid, VectorField};
