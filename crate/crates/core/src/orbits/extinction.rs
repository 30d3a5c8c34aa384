use serde::Serialize;

use crate::dynamics::{simulate, simulate_observed, ForcingSpec, MonitorToggles, SimConfig};
use crate::error::{Error, Result};
use crate::rheology::{ExtinctionBounds, SmallnessBudget};
use crate::spectral::VectorField;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExtinctionReport {
    pub t_f: f64,
    pub v_tf_l2: f64,
    pub threshold: f64,
    /// First sampled time with `||v||_2 <= threshold`.
    pub extinction_time: Option<f64>,
    pub bounds: ExtinctionBounds,
    /// Sample times after `t_f` and the matching `||v||_2`.
    pub times: Vec<f64>,
    pub l2: Vec<f64>,
    /// `||v(t_f)||^(2-p) - (2-p)(t - t_f)/C_S - ||v(t)||^(2-p)` while above
    /// the threshold.
    pub margin: Vec<f64>,
    pub min_margin: f64,
    /// `||v||_2` strictly decreases from `t_f` until the first sample below
    /// the threshold.
    pub monotone: bool,
    pub within_proof_bound: bool,
    pub within_statement_bound: bool,
}

/// Runs to `config.t_end` with a force that vanishes after `t_f` and
/// measures when `||v||_2` first drops below `threshold`.
///
/// The run is split at `t_f` so the decay phase starts exactly there.
pub fn extinction_experiment(
    v0: &VectorField,
    budget: &SmallnessBudget,
    forcing: &ForcingSpec,
    config: &SimConfig,
    threshold: f64,
) -> Result<ExtinctionReport> {
    let p = config.params.p;
    if p >= 2.0 {
        return Err(Error::argument("no finite-time extinction for p = 2"));
    }
    let t_f = forcing
        .modulation()
        .cutoff()
        .ok_or_else(|| Error::config("extinction experiment needs an extinction window"))?;
    if config.t_end <= t_f {
        return Err(Error::config("t_end must exceed t_f"));
    }
    if let Some(per) = forcing.period() {
        if config.t_end > per {
            return Err(Error::config("t_end must stay within the first period"));
        }
    }
    if !(threshold > 0.0) {
        return Err(Error::config("threshold must be positive"));
    }

    let v_tf = if t_f > 0.0 {
        simulate(v0, forcing, &SimConfig { t_end: t_f, ..config.clone() })?.0
    } else {
        v0.clone()
    };
    let decay = SimConfig {
        t_end: config.t_end - t_f,
        monitors: MonitorToggles::none(),
        ..config.clone()
    };
    let mut times = Vec::new();
    let mut l2 = Vec::new();
    simulate_observed(&v_tf, &ForcingSpec::zero(config.grid), &decay, &mut |s, v| {
        times.push(t_f + s);
        l2.push(v.l2_norm());
    })?;

    let n0 = l2[0];
    let bounds = budget.extinction_bounds(t_f, Some(n0))?;
    let extinction_time = times.iter().zip(&l2).find(|(_, &n)| n <= threshold).map(|(&t, _)| t);
    let q = 2.0 - p;
    let margin: Vec<f64> = times
        .iter()
        .zip(&l2)
        .take_while(|(_, &n)| n > threshold)
        .map(|(&t, &n)| n0.powf(q) - q * (t - t_f) / budget.c_s - n.powf(q))
        .collect();
    let min_margin = margin.iter().copied().fold(f64::INFINITY, f64::min);
    let live = l2.iter().take_while(|&&n| n > threshold).count();
    let monotone = l2[..(live + 1).min(l2.len())].windows(2).all(|w| w[1] < w[0]);
    let (within_proof_bound, within_statement_bound) = match extinction_time {
        Some(t) => (
            bounds.proof_bound.is_some_and(|b| t <= b),
            t <= bounds.statement_bound,
        ),
        None => (false, false),
    };
    Ok(ExtinctionReport {
        t_f,
        v_tf_l2: n0,
        threshold,
        extinction_time,
        bounds,
        times,
        l2,
        margin,
        min_margin,
        monotone,
        within_proof_bound,
        within_statement_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{Modulation, WindowShape};
    use crate::rheology::RheologyParams;
    use crate::spectral::{random_solenoidal, TorusGrid};
    use std::collections::BTreeMap;

    fn budget(params: RheologyParams) -> SmallnessBudget {
        let roles = BTreeMap::from([(crate::rheology::SobolevRole::Interpolation, 0.44)]);
        SmallnessBudget::from_constants(params, roles, 1.0).unwrap()
    }

    #[test]
    fn zero_state_at_cutoff_is_already_extinct() {
        let grid = TorusGrid::new(2, 8).unwrap();
        let params = RheologyParams::new(5.0 / 3.0, 1e-4).unwrap();
        let f = ForcingSpec::new(
            random_solenoidal(&grid, 1, 1.0, 1.0, None).unwrap(),
            Modulation::Extinction { period: 1.0, t_f: 0.0, shape: WindowShape::Flat },
            0.0,
        )
        .unwrap();
        let c = SimConfig::new(grid, params, 1e-2, 0.1);
        let r = extinction_experiment(&VectorField::zeros(grid), &budget(params), &f, &c, 1e-8).unwrap();
        assert_eq!(r.extinction_time, Some(0.0));
        assert!(r.margin.is_empty() && r.within_proof_bound);
    }

    #[test]
    fn newtonian_is_rejected() {
        let grid = TorusGrid::new(2, 8).unwrap();
        let params = RheologyParams::new(2.0, 0.0).unwrap();
        let f = ForcingSpec::zero(grid);
        let c = SimConfig::new(grid, params, 1e-2, 0.1);
        let b = budget(RheologyParams::new(1.5, 0.0).unwrap());
        let r = extinction_experiment(&VectorField::zeros(grid), &b, &f, &c, 1e-8);
        assert!(matches!(r, Err(Error::Argument(_))));
    }
}
