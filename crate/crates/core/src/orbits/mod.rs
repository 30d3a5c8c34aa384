//! Period maps, time-periodic and steady solutions, and finite-time extinction.

mod extinction;
mod periodic;
mod steady;

pub use extinction::{extinction_experiment, ExtinctionReport};
pub use periodic::{
    contraction_comparison, find_periodic_orbit, geometric_fit, geometric_mean_ratio, poincare_map, verify_periodicity,
    ContractionReport, GeometricFit, OrbitResult, PeriodicityReport, BURN_IN,
};
pub use steady::{steady_solve, SteadyResult};

use crate::dynamics::{ForcingSpec, MonitorToggles, SimConfig};
use crate::error::{Error, Result};

/// The period of `forcing`, or `config.t_end` as a pseudo-period for
/// time-independent forces.
pub(crate) fn resolve_period(forcing: &ForcingSpec, config: &SimConfig) -> Result<f64> {
    let period = forcing.period().unwrap_or(config.t_end);
    if !(period > 0.0 && period.is_finite()) {
        return Err(Error::config(format!("period must be positive, got {period}")));
    }
    Ok(period)
}

/// A copy of `config` that integrates exactly one period and only samples
/// the end points.
pub(crate) fn period_config(config: &SimConfig, period: f64) -> SimConfig {
    SimConfig {
        t_end: period,
        sample_stride: usize::MAX,
        monitors: MonitorToggles::none(),
        ..config.clone()
    }
}
