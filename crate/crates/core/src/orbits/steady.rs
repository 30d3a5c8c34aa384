use serde::Serialize;

use super::{period_config, resolve_period};
use crate::dynamics::{assemble_rhs, simulate, ForcingSpec, Modulation, SimConfig};
use crate::error::{Error, Result};
use crate::spectral::VectorField;

#[derive(Clone, Debug, Serialize)]
pub struct SteadyResult {
    #[serde(skip)]
    pub field: VectorField,
    /// `||rhs(v)||_2` at the returned state.
    pub residual: f64,
    /// Residual after each pseudo-period.
    pub history: Vec<f64>,
    pub pseudo_period: f64,
    pub periods: usize,
    pub grad_sq: f64,
    pub converged: bool,
}

/// Integrates in pseudo-time from `seed` (zero by default) under a
/// time-independent force, one pseudo-period (`config.t_end`) at a time,
/// until `||rhs||_2 <= tol`.
///
/// A steady state is the periodic orbit of any period, so this is the period
/// map iteration with the stopping rule moved to the residual.
pub fn steady_solve(
    seed: Option<&VectorField>,
    forcing: &ForcingSpec,
    config: &SimConfig,
    tol: f64,
    max_periods: usize,
) -> Result<SteadyResult> {
    if !matches!(forcing.modulation(), Modulation::Constant) {
        return Err(Error::precondition("steady solve needs a time-independent force"));
    }
    if !(tol > 0.0) {
        return Err(Error::config("tol must be positive"));
    }
    if let Some(b) = &config.budget {
        forcing.check_budget(b)?;
    }
    let period = resolve_period(forcing, config)?;
    let pc = period_config(config, period);
    let f = forcing.at(0.0);
    let mut v = seed.cloned().unwrap_or_else(|| VectorField::zeros(config.grid));
    let mut residual = assemble_rhs(&v, &f, &config.params)?.l2_norm();
    let mut history = vec![residual];
    while residual > tol && history.len() <= max_periods {
        v = simulate(&v, forcing, &pc)?.0;
        residual = assemble_rhs(&v, &f, &config.params)?.l2_norm();
        history.push(residual);
    }
    Ok(SteadyResult {
        grad_sq: v.grad_l2_sq(),
        field: v,
        residual,
        periods: history.len() - 1,
        history,
        pseudo_period: period,
        converged: residual <= tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rheology::RheologyParams;
    use crate::spectral::{random_solenoidal, TorusGrid};

    #[test]
    fn newtonian_single_mode_balance() {
        // for a single Fourier shear the advection vanishes, so the steady
        // state solves (1/2) Lap v = -f, i.e. v = f / (2 pi^2)
        let grid = TorusGrid::new(2, 16).unwrap();
        let shear = crate::spectral::GridSamples::from_fn(grid, |x| (2.0 * std::f64::consts::PI * x[1]).sin());
        let s = crate::spectral::GridSamples::new(
            grid,
            vec![shear.component(0).to_vec(), vec![0.0; grid.len()]],
        )
        .unwrap();
        let prof = VectorField::from_samples(&s).unwrap();
        let f = ForcingSpec::new(prof.clone(), Modulation::Constant, 1.0).unwrap();
        let params = RheologyParams::new(2.0, 0.0).unwrap();
        let c = SimConfig::new(grid, params, 1e-2, 0.5);
        let r = steady_solve(None, &f, &c, 1e-10, 50).unwrap();
        assert!(r.converged);
        let want = prof.scaled(1.0 / (2.0 * std::f64::consts::PI.powi(2)));
        assert!(r.field.distance(&want).unwrap() < 1e-10);
    }

    #[test]
    fn time_dependent_force_is_rejected() {
        let grid = TorusGrid::new(2, 8).unwrap();
        let prof = random_solenoidal(&grid, 1, 1.0, 1.0, None).unwrap();
        let f = ForcingSpec::new(prof, Modulation::Periodic { period: 1.0, mean: 0.0, swing: 1.0 }, 1.0).unwrap();
        let c = SimConfig::new(grid, RheologyParams::new(2.0, 0.0).unwrap(), 1e-2, 0.5);
        assert!(matches!(steady_solve(None, &f, &c, 1e-8, 5), Err(Error::Precondition(_))));
    }
}
