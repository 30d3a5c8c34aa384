//! Trajectory integration with sampled diagnostics.

use serde::{Deserialize, Serialize};

use super::forcing::ForcingSpec;
use super::integrator::{Integrator, TimeStepPolicy};
use super::kernel::Kernel;
use super::record::{TrajectoryRecord, TrajectoryRow};
use crate::error::{Error, Result};
use crate::rheology::{RheologyParams, SmallnessBudget};
use crate::spectral::{lp_norm, second_gradient, sym_gradient, Resolution, TorusGrid, VectorField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonitorToggles {
    /// Require `||grad v0||^2 < Lambda` and `sup ||f||_(4/p) <= K` up front.
    pub smallness: bool,
    pub gradient_inequality: bool,
    /// Track `v_t` across neighbouring samples.
    pub vt: bool,
}

impl Default for MonitorToggles {
    fn default() -> Self {
        MonitorToggles {
            smallness: true,
            gradient_inequality: true,
            vt: true,
        }
    }
}

impl MonitorToggles {
    pub fn none() -> Self {
        MonitorToggles {
            smallness: false,
            gradient_inequality: false,
            vt: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub grid: TorusGrid,
    pub params: RheologyParams,
    pub policy: TimeStepPolicy,
    pub t_end: f64,
    /// Record every `sample_stride` steps (and always at both ends).
    pub sample_stride: usize,
    pub budget: Option<SmallnessBudget>,
    pub monitors: MonitorToggles,
}

impl SimConfig {
    pub fn new(grid: TorusGrid, params: RheologyParams, dt: f64, t_end: f64) -> Self {
        SimConfig {
            grid,
            params,
            policy: TimeStepPolicy::fixed(dt),
            t_end,
            sample_stride: 1,
            budget: None,
            monitors: MonitorToggles::none(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.policy.validate()?;
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::config(format!("t_end must be positive, got {}", self.t_end)));
        }
        if self.sample_stride == 0 {
            return Err(Error::config("sample_stride must be at least 1"));
        }
        if let Some(b) = &self.budget {
            if b.params.p != self.params.p {
                return Err(Error::config("budget was computed for a different p"));
            }
        }
        Ok(())
    }
}

struct Sampler<'a> {
    params: RheologyParams,
    forcing: &'a ForcingSpec,
    profile_norm: f64,
    advection: Option<Kernel>,
    /// Previous and current samples awaiting their `v_t` terms.
    prev: Option<(f64, VectorField)>,
    cur: Option<(f64, VectorField, usize)>,
}

impl<'a> Sampler<'a> {
    fn new(grid: TorusGrid, params: RheologyParams, forcing: &'a ForcingSpec, vt: bool) -> Result<Self> {
        Ok(Sampler {
            params,
            forcing,
            profile_norm: forcing.profile_norm(4.0 / params.p),
            advection: if vt {
                Some(Kernel::new(grid, RheologyParams::new(2.0, 0.0)?)?)
            } else {
                None
            },
            prev: None,
            cur: None,
        })
    }

    fn row(&self, t: f64, v: &VectorField) -> TrajectoryRow {
        let p = self.params.p;
        let d = sym_gradient(v, Resolution::Padded);
        let n = d.grid().len();
        let (mut dvp, mut diss, mut pot) = (0.0, 0.0, 0.0);
        for x in 0..n {
            let s = d.norm_sq_at(x);
            dvp += s.powf(0.5 * p);
            diss += self.params.dissipation_density(s);
            pot += self.params.potential_density(s);
        }
        let r = 4.0 / (4.0 - p);
        let gdg = lp_norm(&second_gradient(v, Resolution::Padded), r).expect("r >= 1");
        let fs = self.forcing.scale_at(t);
        TrajectoryRow {
            t,
            v_l2: v.l2_norm(),
            grad_l2_sq: v.grad_l2_sq(),
            dv_p_p: dvp / n as f64,
            dissipation: diss / n as f64,
            f_dot_v: if fs == 0.0 { 0.0 } else { fs * self.forcing.profile().inner(v).expect("same grid") },
            f_norm_4p: fs.abs() * self.profile_norm,
            grad_sym_grad_sq: gdg * gdg,
            potential: pot / n as f64,
            ..Default::default()
        }
    }

    fn fill_vt(&self, rec: &mut TrajectoryRecord, idx: usize, t: f64, v: &VectorField, vt: &VectorField) -> Result<()> {
        let kernel = self.advection.as_ref().expect("vt enabled");
        let (neg_adv, _) = kernel.nonlinear(v.coefficients(), None, t)?;
        let neg_adv = VectorField::from_raw(*v.grid(), neg_adv, true);
        let row = &mut rec.rows[idx];
        row.vt_l2 = vt.l2_norm();
        row.adv_dot_vt = -neg_adv.inner(vt)?;
        row.f_dot_vt = self.forcing.scale_at(t) * self.forcing.profile().inner(vt)?;
        Ok(())
    }

    /// Records a sample and resolves the `v_t` terms of the previous one.
    fn push(&mut self, rec: &mut TrajectoryRecord, t: f64, v: &VectorField) -> Result<()> {
        rec.rows.push(self.row(t, v));
        rec.max_divergence_defect = rec.max_divergence_defect.max(v.divergence_defect());
        if self.advection.is_none() {
            return Ok(());
        }
        let idx = rec.rows.len() - 1;
        if let Some((tc, vc, ic)) = self.cur.take() {
            let vt = match &self.prev {
                None => v.add_scaled(&vc, -1.0)?.scaled(1.0 / (t - tc)),
                Some((tp, vp)) => {
                    let h0 = tc - tp;
                    let h1 = t - tc;
                    let den = h0 * h1 * (h0 + h1);
                    v.scaled(h0 * h0 / den)
                        .add_scaled(vp, -h1 * h1 / den)?
                        .add_scaled(&vc, (h1 * h1 - h0 * h0) / den)?
                }
            };
            self.fill_vt(rec, ic, tc, &vc, &vt)?;
            self.prev = Some((tc, vc));
        }
        self.cur = Some((t, v.clone(), idx));
        Ok(())
    }

    /// One-sided difference for the final sample.
    fn finish(&mut self, rec: &mut TrajectoryRecord) -> Result<()> {
        if let (Some((tc, vc, ic)), Some((tp, vp))) = (self.cur.take(), self.prev.take()) {
            let vt = vc.add_scaled(&vp, -1.0)?.scaled(1.0 / (tc - tp));
            self.fill_vt(rec, ic, tc, &vc, &vt)?;
        }
        Ok(())
    }
}

/// Integrates from `v0` at `t = 0` to `config.t_end`.
pub fn simulate(
    v0: &VectorField,
    forcing: &ForcingSpec,
    config: &SimConfig,
) -> Result<(VectorField, TrajectoryRecord)> {
    simulate_observed(v0, forcing, config, &mut |_, _| {})
}

/// As [`simulate`], calling `observer` with every sampled state.
pub fn simulate_observed(
    v0: &VectorField,
    forcing: &ForcingSpec,
    config: &SimConfig,
    observer: &mut dyn FnMut(f64, &VectorField),
) -> Result<(VectorField, TrajectoryRecord)> {
    config.validate()?;
    config.grid.check_same(v0.grid())?;
    if !v0.is_finite() {
        return Err(Error::precondition("initial state is not finite"));
    }
    if v0.divergence_defect() > 1e-10 {
        return Err(Error::precondition("initial state is not solenoidal"));
    }
    let budget = config.budget.as_ref();
    if config.monitors.smallness {
        let b = budget.ok_or_else(|| Error::config("smallness monitoring needs a budget"))?;
        let phi0 = v0.grad_l2_sq();
        if phi0 >= b.lambda {
            return Err(Error::precondition(format!(
                "||grad v0||^2 = {phi0:.6e} is not below Lambda = {:.6e}",
                b.lambda
            )));
        }
        forcing.check_budget(b)?;
    }

    let mut integrator = Integrator::new(config.grid, config.params, forcing)?;
    let mut sampler = Sampler::new(config.grid, config.params, forcing, config.monitors.vt)?;
    let mut rec = TrajectoryRecord::new(Some(config.params));
    rec.lambda = budget.map(|b| b.lambda);

    let finish = |mut rec: TrajectoryRecord, sampler: &mut Sampler| -> Result<TrajectoryRecord> {
        sampler.finish(&mut rec)?;
        let gi = if config.monitors.gradient_inequality { budget } else { None };
        rec.finalize(gi);
        if rec.dt_min == f64::INFINITY {
            rec.dt_min = 0.0;
        }
        Ok(rec)
    };

    let mut t = 0.0;
    let mut v = v0.clone();
    sampler.push(&mut rec, t, &v)?;
    observer(t, &v);
    let t_end = config.t_end;
    let tiny = 1e-12 * t_end.max(1.0);
    while t < t_end {
        let step = integrator
            .advance(&v, t, &config.policy, t_end - t)
            .and_then(|(next, dt)| {
                let (n0, n1) = (v.l2_norm(), next.l2_norm());
                if !next.is_finite() {
                    Err(super::kernel::diverged(t + dt, "non-finite state"))
                } else if n0 > 0.0 && n1 > 10.0 * n0 {
                    Err(super::kernel::diverged(
                        t + dt,
                        &format!("||v|| grew from {n0:.3e} to {n1:.3e} in one step"),
                    ))
                } else {
                    Ok((next, dt))
                }
            });
        let (next, dt) = match step {
            Ok(x) => x,
            Err(Error::Diverged { t, reason, .. }) => {
                let partial = finish(rec, &mut sampler).ok().map(Box::new);
                return Err(Error::Diverged { t, reason, partial });
            }
            Err(e) => return Err(e),
        };
        v = next;
        t += dt;
        if t_end - t <= tiny {
            t = t_end;
        }
        rec.steps += 1;
        rec.dt_min = rec.dt_min.min(dt);
        rec.dt_max = rec.dt_max.max(dt);
        if rec.steps % config.sample_stride == 0 || t == t_end {
            sampler.push(&mut rec, t, &v)?;
            observer(t, &v);
        }
    }
    let rec = finish(rec, &mut sampler)?;
    Ok((v, rec))
}

/// Regularization ladder used to reach `mu = 0` by extrapolation.
pub const DEFAULT_MU_LADDER: [f64; 4] = [1e-2, 1e-3, 1e-4, 1e-6];

/// Value at `x = 0` of the interpolating polynomial through `(xs, ys)`.
pub fn extrapolate_to_zero(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.is_empty() || xs.len() != ys.len() {
        return Err(Error::argument("need matching, nonempty abscissae and values"));
    }
    let mut p = ys.to_vec();
    let n = xs.len();
    for m in 1..n {
        for i in 0..n - m {
            let (a, b) = (xs[i], xs[i + m]);
            if a == b {
                return Err(Error::argument("abscissae must be distinct"));
            }
            // Neville at x = 0
            p[i] = (b * p[i] - a * p[i + 1]) / (b - a);
        }
    }
    Ok(p[0])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderEntry {
    pub mu: f64,
    pub sup_grad_sq: f64,
    pub final_l2: f64,
    pub violated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MuLadder {
    pub entries: Vec<LadderEntry>,
    pub extrapolated_sup_grad_sq: f64,
    pub extrapolated_final_l2: f64,
}

/// Runs the same experiment at each `mu` of the ladder and extrapolates the
/// headline quantities to `mu = 0`.
pub fn simulate_mu_ladder(
    v0: &VectorField,
    forcing: &ForcingSpec,
    config: &SimConfig,
    ladder: &[f64],
) -> Result<(MuLadder, Vec<TrajectoryRecord>)> {
    let mut entries = Vec::new();
    let mut records = Vec::new();
    for &mu in ladder {
        let mut c = config.clone();
        c.params = RheologyParams::new(config.params.p, mu)?;
        c.budget = match &config.budget {
            Some(b) => Some(b.with_mu(mu)?),
            None => None,
        };
        let (_, rec) = simulate(v0, forcing, &c)?;
        entries.push(LadderEntry {
            mu,
            sup_grad_sq: rec.sup_grad_sq(),
            final_l2: rec.last().map_or(0.0, |r| r.v_l2),
            violated: rec.violated(),
        });
        records.push(rec);
    }
    let xs: Vec<f64> = entries.iter().map(|e| e.mu).collect();
    let sup: Vec<f64> = entries.iter().map(|e| e.sup_grad_sq).collect();
    let fin: Vec<f64> = entries.iter().map(|e| e.final_l2).collect();
    Ok((
        MuLadder {
            extrapolated_sup_grad_sq: extrapolate_to_zero(&xs, &sup)?,
            extrapolated_final_l2: extrapolate_to_zero(&xs, &fin)?,
            entries,
        },
        records,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::record::{energy_identity_residual, vt_identity_residual};
    use crate::dynamics::Modulation;
    use crate::spectral::{random_solenoidal, GridSamples};
    use std::f64::consts::PI;

    fn shear(grid: TorusGrid, a: f64) -> VectorField {
        let s = GridSamples::new(
            grid,
            vec![
                (0..grid.len()).map(|i| a * (2.0 * PI * grid.point(i)[1]).sin()).collect(),
                vec![0.0; grid.len()],
            ],
        )
        .unwrap();
        VectorField::from_samples(&s).unwrap()
    }

    #[test]
    fn zero_trajectory() {
        let grid = TorusGrid::new(2, 16).unwrap();
        let mut c = SimConfig::new(grid, RheologyParams::new(5.0 / 3.0, 1e-3).unwrap(), 1e-3, 0.01);
        c.monitors.vt = true;
        let (v, rec) = simulate(&VectorField::zeros(grid), &ForcingSpec::zero(grid), &c).unwrap();
        assert_eq!(v.l2_norm(), 0.0);
        assert_eq!(rec.rows.len(), 11);
        assert!(rec.rows.iter().all(|r| r.v_l2 == 0.0 && r.grad_l2_sq == 0.0 && r.vt_l2 == 0.0));
        assert_eq!(rec.last().unwrap().t, 0.01);
    }

    #[test]
    fn newtonian_energy_residual_is_small() {
        let grid = TorusGrid::new(2, 16).unwrap();
        let mut c = SimConfig::new(grid, RheologyParams::new(2.0, 0.0).unwrap(), 1e-4, 0.01);
        c.monitors.vt = true;
        let (_, rec) = simulate(&shear(grid, 0.01), &ForcingSpec::zero(grid), &c).unwrap();
        assert!(energy_identity_residual(&rec) < 1e-8);
        assert!(vt_identity_residual(&rec) < 1e-6);
    }

    #[test]
    fn energy_is_nonincreasing_without_force() {
        let grid = TorusGrid::new(2, 16).unwrap();
        let v0 = random_solenoidal(&grid, 2, 1.0, 0.2, None).unwrap();
        let c = SimConfig::new(grid, RheologyParams::new(5.0 / 3.0, 1e-3).unwrap(), 1e-3, 0.2);
        let (_, rec) = simulate(&v0, &ForcingSpec::zero(grid), &c).unwrap();
        for w in rec.rows.windows(2) {
            assert!(w[1].v_l2 <= w[0].v_l2 * (1.0 + 1e-12));
        }
        assert!(rec.max_divergence_defect < 1e-10);
    }

    #[test]
    fn sampling_stride_and_observer() {
        let grid = TorusGrid::new(2, 16).unwrap();
        let v0 = random_solenoidal(&grid, 2, 1.0, 0.2, None).unwrap();
        let mut c = SimConfig::new(grid, RheologyParams::new(1.8, 1e-2).unwrap(), 1e-3, 0.0105);
        c.sample_stride = 4;
        let mut seen = Vec::new();
        let (_, rec) = simulate_observed(&v0, &ForcingSpec::zero(grid), &c, &mut |t, _| seen.push(t)).unwrap();
        assert_eq!(seen, rec.times());
        assert_eq!(rec.steps, 11);
        assert_eq!(seen.len(), 4);
        assert_eq!(*seen.last().unwrap(), 0.0105);
    }

    #[test]
    fn smallness_preconditions() {
        let grid = TorusGrid::new(2, 16).unwrap();
        let params = RheologyParams::new(5.0 / 3.0, 1e-3).unwrap();
        let mut roles = std::collections::BTreeMap::new();
        roles.insert(crate::rheology::SobolevRole::Interpolation, 0.4);
        let b = SmallnessBudget::from_constants(params, roles, std::f64::consts::SQRT_2).unwrap();
        let mut c = SimConfig::new(grid, params, 1e-3, 0.01);
        c.monitors.smallness = true;
        c.budget = Some(b.clone());
        let big = random_solenoidal(&grid, 1, 1.0, 2.0 * b.lambda, None).unwrap();
        assert!(matches!(simulate(&big, &ForcingSpec::zero(grid), &c), Err(Error::Precondition(_))));
        let prof = random_solenoidal(&grid, 3, 1.0, 1.0, None).unwrap();
        let f = ForcingSpec::new(prof, Modulation::Constant, 1.0).unwrap().scaled_to(params.p, 2.0 * b.k).unwrap();
        let small = big.scaled(0.5);
        assert!(matches!(simulate(&small, &f, &c), Err(Error::Precondition(_))));
        c.budget = None;
        assert!(matches!(simulate(&small, &ForcingSpec::zero(grid), &c), Err(Error::Config(_))));
    }

    #[test]
    fn blow_up_is_reported_with_partial_record() {
        let grid = TorusGrid::new(2, 16).unwrap();
        let v0 = random_solenoidal(&grid, 2, 0.0, 1e6, None).unwrap();
        let mut c = SimConfig::new(grid, RheologyParams::new(2.0, 0.0).unwrap(), 1e-1, 1.0);
        c.policy.cfl = f64::INFINITY;
        match simulate(&v0, &ForcingSpec::zero(grid), &c) {
            Err(Error::Diverged { partial, .. }) => assert!(!partial.unwrap().rows.is_empty()),
            other => panic!("expected divergence, got {:?}", other.map(|x| x.1.steps)),
        }
    }

    #[test]
    fn neville_recovers_polynomials() {
        let xs = [1e-2, 1e-3, 1e-4, 1e-6];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 + 3.0 * x - 5.0 * x * x).collect();
        assert!((extrapolate_to_zero(&xs, &ys).unwrap() - 2.0).abs() < 1e-12);
        assert!(extrapolate_to_zero(&[1.0, 1.0], &[0.0, 1.0]).is_err());
    }
}
