use serde::Serialize;

use super::{period_config, resolve_period};
use crate::dynamics::{simulate, simulate_observed, ForcingSpec, SimConfig, TimeStepPolicy};
use crate::error::{Error, Result};
use crate::rheology::SmallnessBudget;
use crate::spectral::VectorField;

/// Iterates discarded before estimating the contraction factor.
pub const BURN_IN: usize = 2;

/// Evolves `b` over one period of the forcing.
pub fn poincare_map(b: &VectorField, forcing: &ForcingSpec, config: &SimConfig) -> Result<VectorField> {
    let period = resolve_period(forcing, config)?;
    Ok(simulate(b, forcing, &period_config(config, period))?.0)
}

/// Least-squares line through `(n, ln delta_n)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeometricFit {
    /// Iterate indices used.
    pub indices: Vec<usize>,
    pub slope: f64,
    pub r_squared: f64,
    /// `exp(slope)`.
    pub ratio: f64,
    /// True when only post-burn-in iterates were used.
    pub post_burn_in: bool,
}

/// Fits `ln delta_n` against `n` over iterates above `floor`, preferring
/// the post-burn-in ones when there are at least three.
pub fn geometric_fit(deltas: &[f64], floor: f64) -> Option<GeometricFit> {
    let above: Vec<usize> = (0..deltas.len()).filter(|&i| deltas[i] > floor).collect();
    let late: Vec<usize> = above.iter().copied().filter(|&i| i >= BURN_IN).collect();
    let (indices, post) = if late.len() >= 3 { (late, true) } else { (above, false) };
    if indices.len() < 2 {
        return None;
    }
    let n = indices.len() as f64;
    let xs: Vec<f64> = indices.iter().map(|&i| i as f64).collect();
    let ys: Vec<f64> = indices.iter().map(|&i| deltas[i].ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(GeometricFit {
        indices,
        slope,
        r_squared,
        ratio: slope.exp(),
        post_burn_in: post,
    })
}

/// Geometric mean of `delta_(n+1) / delta_n` over iterates above `floor`,
/// restricted to `n >= BURN_IN` when any qualify. A successor that lands
/// exactly on the fixed point contributes a zero ratio.
pub fn geometric_mean_ratio(deltas: &[f64], floor: f64) -> Option<f64> {
    let all: Vec<usize> = (0..deltas.len().saturating_sub(1)).filter(|&n| deltas[n] > floor).collect();
    let late: Vec<usize> = all.iter().copied().filter(|&n| n >= BURN_IN).collect();
    let used = if late.is_empty() { all } else { late };
    if used.is_empty() {
        return None;
    }
    let log_sum: f64 = used.iter().map(|&n| (deltas[n + 1] / deltas[n]).ln()).sum();
    Some((log_sum / used.len() as f64).exp())
}

#[derive(Clone, Debug, Serialize)]
pub struct OrbitResult {
    #[serde(skip)]
    pub fixed_point: VectorField,
    pub period: f64,
    /// `delta_n = ||b_(n+1) - b_n||_2`.
    pub deltas: Vec<f64>,
    /// See [`geometric_mean_ratio`].
    pub rho_measured: Option<f64>,
    pub fit: Option<GeometricFit>,
    /// `exp(-r T)` from the budget, when the rate is positive.
    pub theoretical_factor: Option<f64>,
    /// `||v(T) - v(0)||_2` from the returned initial field.
    pub periodicity_defect: f64,
    pub fixed_point_grad_sq: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Whether `delta_n` decreases after the burn-in (over iterates above
    /// the roundoff floor).
    pub monotone_after_burn_in: bool,
}

/// Iterates the period map from `b0` until `||b_(n+1) - b_n||_2 <= tol`.
pub fn find_periodic_orbit(
    b0: &VectorField,
    forcing: &ForcingSpec,
    config: &SimConfig,
    tol: f64,
    max_iter: usize,
) -> Result<OrbitResult> {
    if !(tol > 0.0) || max_iter == 0 {
        return Err(Error::config("need tol > 0 and max_iter >= 1"));
    }
    let period = resolve_period(forcing, config)?;
    if let Some(b) = &config.budget {
        let g = b0.grad_l2_sq();
        if g > b.lambda {
            return Err(Error::precondition(format!(
                "seed has ||grad b0||^2 = {g:.6e} above Lambda = {:.6e}",
                b.lambda
            )));
        }
    }
    let pc = period_config(config, period);
    let mut b = b0.clone();
    let mut deltas = Vec::new();
    let mut scale = b.l2_norm();
    let mut converged = false;
    while deltas.len() < max_iter {
        let next = simulate(&b, forcing, &pc)?.0;
        let d = next.distance(&b)?;
        deltas.push(d);
        scale = scale.max(next.l2_norm());
        b = next;
        if d <= tol {
            converged = true;
            break;
        }
    }
    let after = simulate(&b, forcing, &pc)?.0;
    let periodicity_defect = after.distance(&b)?;
    let floor = 1e3 * f64::EPSILON * scale.max(f64::MIN_POSITIVE);
    let fit = geometric_fit(&deltas, floor);
    let rho_measured = geometric_mean_ratio(&deltas, floor);
    let tail: Vec<f64> = deltas.iter().skip(BURN_IN).copied().filter(|&d| d > floor).collect();
    let monotone_after_burn_in = tail.windows(2).all(|w| w[1] < w[0]);
    Ok(OrbitResult {
        fixed_point_grad_sq: b.grad_l2_sq(),
        fixed_point: b,
        period,
        iterations: deltas.len(),
        deltas,
        rho_measured,
        fit,
        theoretical_factor: config.budget.as_ref().and_then(|bd| bd.contraction_factor(period)),
        periodicity_defect,
        converged,
        monotone_after_burn_in,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PeriodicityReport {
    pub period: f64,
    /// Sample times `t` in `[0, n_periods T]`.
    pub times: Vec<f64>,
    /// `||v(t + T) - v(t)||_2`.
    pub l2_defects: Vec<f64>,
    /// `||grad(v(t + T) - v(t))||_2`.
    pub h1_defects: Vec<f64>,
    pub max_l2: f64,
    pub max_h1: f64,
}

/// Compares `v(t)` with `v(t + T)` at sampled phases over `n_periods`.
///
/// The step is fixed (from `config.policy.dt_init`, shortened to divide the
/// period) so samples of consecutive periods fall on the same phases.
pub fn verify_periodicity(
    v0_star: &VectorField,
    forcing: &ForcingSpec,
    config: &SimConfig,
    n_periods: usize,
    samples_per_period: usize,
) -> Result<PeriodicityReport> {
    if n_periods == 0 || samples_per_period == 0 {
        return Err(Error::config("need at least one period and one sample per period"));
    }
    let period = resolve_period(forcing, config)?;
    let dt0 = config.policy.dt_init.min(config.policy.max_dt);
    let mut steps = (period / dt0).ceil() as usize;
    steps = steps.div_ceil(samples_per_period) * samples_per_period;
    let dt = period / steps as f64;
    let c = SimConfig {
        policy: TimeStepPolicy::fixed(dt),
        t_end: period * (n_periods + 1) as f64,
        sample_stride: steps / samples_per_period,
        monitors: crate::dynamics::MonitorToggles::none(),
        ..config.clone()
    };
    let mut states: Vec<(f64, VectorField)> = Vec::new();
    simulate_observed(v0_star, forcing, &c, &mut |t, v| states.push((t, v.clone())))?;
    let n = n_periods * samples_per_period;
    let mut report = PeriodicityReport {
        period,
        times: Vec::with_capacity(n + 1),
        l2_defects: Vec::with_capacity(n + 1),
        h1_defects: Vec::with_capacity(n + 1),
        max_l2: 0.0,
        max_h1: 0.0,
    };
    for i in 0..=n {
        let j = i + samples_per_period;
        if j >= states.len() {
            break;
        }
        let diff = states[j].1.add_scaled(&states[i].1, -1.0)?;
        let (l2, h1) = (diff.l2_norm(), diff.grad_l2_sq().sqrt());
        report.times.push(states[i].0);
        report.l2_defects.push(l2);
        report.h1_defects.push(h1);
        report.max_l2 = report.max_l2.max(l2);
        report.max_h1 = report.max_h1.max(h1);
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContractionReport {
    pub rho_measured: Option<f64>,
    pub theoretical_factor: Option<f64>,
    pub margin: f64,
    /// `rho_measured <= exp(-r T) + margin`; `None` when skipped.
    pub consistent: Option<bool>,
    /// Set when the budget rate is not positive, so the bound is vacuous.
    pub skipped: bool,
}

pub fn contraction_comparison(orbit: &OrbitResult, budget: &SmallnessBudget, margin: f64) -> ContractionReport {
    let theoretical = budget.contraction_factor(orbit.period);
    let skipped = theoretical.is_none();
    ContractionReport {
        rho_measured: orbit.rho_measured,
        theoretical_factor: theoretical,
        margin,
        consistent: match (orbit.rho_measured, theoretical) {
            (Some(r), Some(t)) => Some(r <= t + margin),
            (None, Some(_)) => Some(true),
            _ => None,
        },
        skipped,
    }
}
