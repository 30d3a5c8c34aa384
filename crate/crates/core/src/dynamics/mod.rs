//! Time integration of the Galerkin system and the monitors evaluated along
//! trajectories.

mod forcing;
mod integrator;
mod kernel;
mod record;
mod simulate;

pub use forcing::{ForcingSpec, Modulation, WindowShape};
pub use integrator::{Integrator, TimeStepPolicy};
pub use kernel::assemble_rhs;
pub use record::{
    derivative, energy_identity_residual, gradient_inequality_monitor, gradient_slack,
    vt_identity_residual, TrajectoryRecord, TrajectoryRow, CSV_COLUMNS,
};
pub use simulate::{
    extrapolate_to_zero, simulate, simulate_mu_ladder, simulate_observed, LadderEntry,
    MonitorToggles, MuLadder, SimConfig, DEFAULT_MU_LADDER,
};
