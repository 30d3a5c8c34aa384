//! The five experiment commands. Each writes its artifacts under `out` and
//! reports how the run ended.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use pnstokes::dynamics::{
    energy_identity_residual, simulate, vt_identity_residual, ForcingSpec, SimConfig, TrajectoryRecord,
};
use pnstokes::orbits::{
    contraction_comparison, extinction_experiment, find_periodic_orbit, steady_solve, verify_periodicity,
};
use pnstokes::rheology::{korn_constant, SmallnessBudget, SobolevRole};
use pnstokes::spectral::{random_solenoidal, read_snapshot, write_snapshot};
use pnstokes::{Error, VectorField};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Command, InitialKind, RunConfig};

/// How a command finished; maps onto the process exit code.
#[derive(Debug)]
pub enum Outcome {
    Pass,
    /// A soft monitor flagged something; artifacts are complete.
    Flagged(Vec<String>),
    /// A hard assertion failed.
    Failed(Vec<String>),
}

pub type CmdResult = Result<Outcome, Error>;

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn budget(cfg: &RunConfig) -> Result<SmallnessBudget, Error> {
    let params = cfg.params();
    match cfg.budget.c_s {
        Some(c_s) => {
            let c_k = match cfg.budget.c_k {
                Some(c) => c,
                None => korn_constant(cfg.grid.d)?,
            };
            let roles = SobolevRole::ALL.iter().map(|r| (*r, c_s)).collect::<BTreeMap<_, _>>();
            SmallnessBudget::from_constants(params, roles, c_k)
        }
        None => {
            let mut b = SmallnessBudget::certify(&cfg.grid(), params, &cfg.sobolev_options())?;
            if let Some(c_k) = cfg.budget.c_k {
                b = SmallnessBudget::from_constants(params, b.c_s_by_role.clone(), c_k)?;
            }
            Ok(b)
        }
    }
}

fn budget_if_needed(cfg: &RunConfig, command: Command) -> Result<Option<SmallnessBudget>, Error> {
    if cfg.needs_budget(command) {
        budget(cfg).map(Some)
    } else {
        Ok(None)
    }
}

fn need<'a>(b: Option<&'a SmallnessBudget>, what: &str) -> Result<&'a SmallnessBudget, Error> {
    b.ok_or_else(|| Error::Config(format!("{what} needs the smallness budget")))
}

fn initial(cfg: &RunConfig, b: Option<&SmallnessBudget>) -> Result<VectorField, Error> {
    let grid = cfg.grid();
    let i = &cfg.initial;
    match i.kind {
        InitialKind::Zero => Ok(VectorField::zeros(grid)),
        InitialKind::Random => {
            let target = match (i.grad_sq, i.fraction_of_lambda) {
                (Some(g), _) => g,
                (None, Some(f)) => f * need(b, "initial.fraction_of_lambda")?.lambda,
                (None, None) => unreachable!("validated"),
            };
            random_solenoidal(&grid, cfg.seed(), i.decay, target, i.kmax)
        }
        InitialKind::Snapshot => {
            let path = i.path.as_ref().expect("validated");
            let (_, v) = read_snapshot(path)?;
            grid.check_same(v.grid())?;
            Ok(v)
        }
    }
}

fn forcing(cfg: &RunConfig, b: Option<&SmallnessBudget>) -> Result<ForcingSpec, Error> {
    let grid = cfg.grid();
    let f = &cfg.forcing;
    let target = match (f.norm, f.fraction_of_k) {
        (Some(x), _) => x,
        (None, Some(x)) => x * need(b, "forcing.fraction_of_k")?.k,
        (None, None) => 0.0,
    };
    if target == 0.0 {
        return ForcingSpec::new(VectorField::zeros(grid), f.modulation, 0.0);
    }
    let profile = random_solenoidal(&grid, cfg.seed().wrapping_add(1), f.decay, 1.0, f.kmax)?;
    ForcingSpec::new(profile, f.modulation, 1.0)?.scaled_to(cfg.rheology.p, target)
}

fn sim_config(cfg: &RunConfig, b: Option<&SmallnessBudget>) -> SimConfig {
    SimConfig {
        grid: cfg.grid(),
        params: cfg.params(),
        policy: cfg.policy(),
        t_end: cfg.time.t_end,
        sample_stride: cfg.time.sample_stride,
        budget: b.cloned(),
        monitors: cfg.monitors,
    }
}

fn budget_json(b: Option<&SmallnessBudget>, t_f: f64) -> Result<Value, Error> {
    match b {
        Some(b) if b.params.p < 2.0 => Ok(serde_json::to_value(b.report(t_f)?)?),
        _ => Ok(Value::Null),
    }
}

fn extinction_t_f(cfg: &RunConfig) -> f64 {
    cfg.forcing.modulation.cutoff().unwrap_or(0.5)
}

fn trajectory_summary(rec: &TrajectoryRecord, b: Option<&SmallnessBudget>, f: &ForcingSpec, p: f64) -> Value {
    let energy_bound = b.and_then(|b| rec.energy_bound_check(b, f.sup_norm(4.0 / p)));
    json!({
        "steps": rec.steps,
        "dt_min": rec.dt_min,
        "dt_max": rec.dt_max,
        "samples": rec.rows.len(),
        "sup_grad_sq": rec.sup_grad_sq(),
        "Lambda": rec.lambda,
        "violated": rec.violated(),
        "max_divergence_defect": rec.max_divergence_defect,
        "energy_residual_max": energy_identity_residual(rec),
        "energy_residual_integrated": rec.integrated_energy_residual(),
        "vt_residual_max": vt_identity_residual(rec),
        "energy_bound": energy_bound.map(|(lhs, rhs)| json!({"lhs": lhs, "rhs": rhs, "holds": lhs <= rhs})),
    })
}

fn write_summary(out: &Path, cfg: &RunConfig, budget: &Value, result: Value) -> Result<(), Error> {
    write_json(
        &out.join("summary.json"),
        &json!({ "config": cfg, "budget": budget, "result": result }),
    )
}

/// Writes what a diverged run left behind, then hands the error back.
fn diverged(out: &Path, cfg: &RunConfig, budget: &Value, err: Error) -> CmdResult {
    if let Error::Diverged { t, reason, partial } = &err {
        if let Some(rec) = partial {
            rec.write_csv(&out.join("trajectory.csv"))?;
        }
        write_summary(
            out,
            cfg,
            budget,
            json!({"diverged": {"t": t, "reason": reason}, "partial_samples": partial.as_ref().map(|r| r.rows.len())}),
        )?;
    }
    Err(err)
}

pub fn constants(cfg: &RunConfig, out: &Path) -> CmdResult {
    let b = budget(cfg)?;
    let report = b.report(extinction_t_f(cfg))?;
    write_json(&out.join("budget.json"), &report)?;
    write_summary(out, cfg, &serde_json::to_value(&report)?, json!({"certified": true}))?;
    Ok(Outcome::Pass)
}

pub fn simulate_cmd(cfg: &RunConfig, out: &Path) -> CmdResult {
    let b = budget_if_needed(cfg, Command::Simulate)?;
    let bj = budget_json(b.as_ref(), extinction_t_f(cfg))?;
    let v0 = initial(cfg, b.as_ref())?;
    let f = forcing(cfg, b.as_ref())?;
    let sc = sim_config(cfg, b.as_ref());
    write_snapshot(&out.join("initial.pnss"), &v0, cfg.rheology.p, cfg.rheology.mu, 0.0)?;
    let (v, rec) = match simulate(&v0, &f, &sc) {
        Ok(x) => x,
        Err(e @ Error::Diverged { .. }) => return diverged(out, cfg, &bj, e),
        Err(e) => return Err(e),
    };
    rec.write_csv(&out.join("trajectory.csv"))?;
    write_snapshot(&out.join("final.pnss"), &v, cfg.rheology.p, cfg.rheology.mu, sc.t_end)?;
    let summary = trajectory_summary(&rec, b.as_ref(), &f, cfg.rheology.p);
    write_summary(out, cfg, &bj, summary)?;
    let mut flags = Vec::new();
    if rec.violated() {
        flags.push("||grad v||^2 exceeded Lambda or the gradient inequality was violated".into());
    }
    Ok(if flags.is_empty() { Outcome::Pass } else { Outcome::Flagged(flags) })
}

pub fn periodic(cfg: &RunConfig, out: &Path) -> CmdResult {
    let b = budget(cfg)?;
    let bj = budget_json(Some(&b), extinction_t_f(cfg))?;
    let v0 = initial(cfg, Some(&b))?;
    let f = forcing(cfg, Some(&b))?;
    let sc = sim_config(cfg, Some(&b));
    let o = &cfg.orbit;
    let orbit = match find_periodic_orbit(&v0, &f, &sc, o.tol, o.max_iter) {
        Ok(x) => x,
        Err(e @ Error::Diverged { .. }) => return diverged(out, cfg, &bj, e),
        Err(e) => return Err(e),
    };
    write_snapshot(&out.join("fixed_point.pnss"), &orbit.fixed_point, cfg.rheology.p, cfg.rheology.mu, 0.0)?;
    let phases = verify_periodicity(&orbit.fixed_point, &f, &sc, o.verify_periods, o.samples_per_period)?;
    let cmp = contraction_comparison(&orbit, &b, o.margin);
    // one monitored period from the fixed point
    let one = SimConfig { t_end: orbit.period, ..sc.clone() };
    let (_, rec) = simulate(&orbit.fixed_point, &f, &one)?;
    rec.write_csv(&out.join("trajectory.csv"))?;
    write_json(
        &out.join("orbit.json"),
        &json!({"orbit": orbit, "periodicity": phases, "contraction": cmp}),
    )?;
    let mut summary = trajectory_summary(&rec, Some(&b), &f, cfg.rheology.p);
    summary["converged"] = json!(orbit.converged);
    summary["periodicity_defect"] = json!(orbit.periodicity_defect);
    summary["rho_measured"] = json!(orbit.rho_measured);
    write_summary(out, cfg, &bj, summary)?;

    if !orbit.converged {
        return Ok(Outcome::Failed(vec![format!(
            "period map did not reach tol {} in {} iterations",
            o.tol, o.max_iter
        )]));
    }
    let mut flags = Vec::new();
    if !orbit.monotone_after_burn_in {
        flags.push("iterate distances not monotone after burn-in".into());
    }
    if cmp.consistent == Some(false) {
        flags.push("measured contraction slower than exp(-r T) + margin".into());
    }
    if rec.violated() {
        flags.push("smallness monitor flagged along the orbit".into());
    }
    Ok(if flags.is_empty() { Outcome::Pass } else { Outcome::Flagged(flags) })
}

pub fn extinction(cfg: &RunConfig, out: &Path) -> CmdResult {
    let b = budget(cfg)?;
    let bj = budget_json(Some(&b), extinction_t_f(cfg))?;
    let v0 = initial(cfg, Some(&b))?;
    let f = forcing(cfg, Some(&b))?;
    let sc = sim_config(cfg, Some(&b));
    let r = match extinction_experiment(&v0, &b, &f, &sc, cfg.extinction.threshold) {
        Ok(x) => x,
        Err(e @ Error::Diverged { .. }) => return diverged(out, cfg, &bj, e),
        Err(e) => return Err(e),
    };
    let mut csv = String::from("t,v_l2,margin\n");
    for (i, (t, n)) in r.times.iter().zip(&r.l2).enumerate() {
        let m = r.margin.get(i).map(|m| m.to_string()).unwrap_or_default();
        csv.push_str(&format!("{t},{n},{m}\n"));
    }
    fs::write(out.join("trajectory.csv"), csv)?;
    write_json(&out.join("extinction.json"), &r)?;
    write_summary(
        out,
        cfg,
        &bj,
        json!({
            "extinction_time": r.extinction_time,
            "proof_bound": r.bounds.proof_bound,
            "statement_bound": r.bounds.statement_bound,
            "min_margin": r.min_margin,
            "monotone": r.monotone,
        }),
    )?;
    if !r.within_proof_bound {
        return Ok(Outcome::Failed(vec![match r.extinction_time {
            Some(t) => format!("extinction at {t} after the proof bound"),
            None => format!("||v|| never fell below {} before t_end", r.threshold),
        }]));
    }
    let mut flags = Vec::new();
    if r.min_margin < -1e-6 {
        flags.push(format!("decay-law margin fell to {:.3e}", r.min_margin));
    }
    if !r.monotone {
        flags.push("||v|| not strictly decreasing after t_f".into());
    }
    Ok(if flags.is_empty() { Outcome::Pass } else { Outcome::Flagged(flags) })
}

pub fn steady(cfg: &RunConfig, out: &Path) -> CmdResult {
    let b = budget(cfg)?;
    let bj = budget_json(Some(&b), extinction_t_f(cfg))?;
    let f = forcing(cfg, Some(&b))?;
    let sc = sim_config(cfg, Some(&b));
    let seed = match cfg.initial.kind {
        InitialKind::Zero => None,
        _ => Some(initial(cfg, Some(&b))?),
    };
    let s = match steady_solve(seed.as_ref(), &f, &sc, cfg.steady.tol, cfg.steady.max_periods) {
        Ok(x) => x,
        Err(e @ Error::Diverged { .. }) => return diverged(out, cfg, &bj, e),
        Err(e) => return Err(e),
    };
    write_snapshot(&out.join("steady.pnss"), &s.field, cfg.rheology.p, cfg.rheology.mu, 0.0)?;
    let mut csv = String::from("period,residual\n");
    for (i, r) in s.history.iter().enumerate() {
        csv.push_str(&format!("{i},{r}\n"));
    }
    fs::write(out.join("trajectory.csv"), csv)?;
    write_json(&out.join("steady.json"), &s)?;
    write_summary(out, cfg, &bj, serde_json::to_value(&s)?)?;
    if !s.converged {
        return Ok(Outcome::Failed(vec![format!(
            "residual {:.3e} above tol after {} pseudo-periods",
            s.residual, s.periods
        )]));
    }
    if s.grad_sq > b.lambda {
        return Ok(Outcome::Flagged(vec!["steady state has ||grad v||^2 above Lambda".into()]));
    }
    Ok(Outcome::Pass)
}
