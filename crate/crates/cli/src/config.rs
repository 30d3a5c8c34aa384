//! Run configuration: JSON in, validated and fully resolved out.

use std::path::{Path, PathBuf};

use pnstokes::dynamics::{Modulation, MonitorToggles, TimeStepPolicy};
use pnstokes::rheology::{RheologyParams, SobolevOptions};
use pnstokes::TorusGrid;
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Constants,
    Simulate,
    Periodic,
    Extinction,
    Steady,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub grid: GridConfig,
    pub rheology: RheologyConfig,
    pub time: TimeConfig,
    pub initial: InitialConfig,
    pub forcing: ForcingConfig,
    pub budget: BudgetConfig,
    pub monitors: MonitorToggles,
    pub orbit: OrbitConfig,
    pub extinction: ExtinctionConfig,
    pub steady: SteadyConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: None,
            grid: GridConfig::default(),
            rheology: RheologyConfig::default(),
            time: TimeConfig::default(),
            initial: InitialConfig::default(),
            forcing: ForcingConfig::default(),
            budget: BudgetConfig::default(),
            monitors: MonitorToggles::default(),
            orbit: OrbitConfig::default(),
            extinction: ExtinctionConfig::default(),
            steady: SteadyConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub d: usize,
    pub n: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { d: 2, n: 32 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RheologyConfig {
    pub p: f64,
    pub mu: f64,
}

impl Default for RheologyConfig {
    fn default() -> Self {
        RheologyConfig { p: 5.0 / 3.0, mu: 1e-3 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeConfig {
    pub dt_init: f64,
    pub cfl: f64,
    pub max_dt: f64,
    pub t_end: f64,
    pub sample_stride: usize,
}

impl Default for TimeConfig {
    fn default() -> Self {
        TimeConfig {
            dt_init: 1e-3,
            cfl: 0.5,
            max_dt: 1e-3,
            t_end: 1.0,
            sample_stride: 10,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    Zero,
    Random,
    Snapshot,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialConfig {
    pub kind: InitialKind,
    /// Target `||grad v0||_2^2`.
    pub grad_sq: Option<f64>,
    /// Target `||grad v0||_2^2` as a fraction of Lambda.
    pub fraction_of_lambda: Option<f64>,
    pub decay: f64,
    pub kmax: Option<f64>,
    pub path: Option<PathBuf>,
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig {
            kind: InitialKind::Zero,
            grad_sq: None,
            fraction_of_lambda: None,
            decay: 1.0,
            kmax: None,
            path: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForcingConfig {
    pub modulation: Modulation,
    /// `sup_t ||f(t)||_{4/p}`; with neither this nor `fraction_of_k` the
    /// force is zero.
    pub norm: Option<f64>,
    pub fraction_of_k: Option<f64>,
    pub decay: f64,
    pub kmax: Option<f64>,
}

impl Default for ForcingConfig {
    fn default() -> Self {
        ForcingConfig {
            modulation: Modulation::Constant,
            norm: None,
            fraction_of_k: None,
            decay: 2.0,
            kmax: Some(4.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BudgetConfig {
    pub samples: usize,
    pub refine_from: usize,
    pub ascent_iters: usize,
    pub safety: f64,
    /// Skips the estimation and uses this constant for every role.
    pub c_s: Option<f64>,
    pub c_k: Option<f64>,
}

impl Default for BudgetConfig {
    fn default() -> Self {
        let o = SobolevOptions::default();
        BudgetConfig {
            samples: o.samples,
            refine_from: o.refine_from,
            ascent_iters: o.ascent_iters,
            safety: o.safety,
            c_s: None,
            c_k: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrbitConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub verify_periods: usize,
    pub samples_per_period: usize,
    pub margin: f64,
}

impl Default for OrbitConfig {
    fn default() -> Self {
        OrbitConfig {
            tol: 1e-9,
            max_iter: 30,
            verify_periods: 2,
            samples_per_period: 10,
            margin: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtinctionConfig {
    pub threshold: f64,
}

impl Default for ExtinctionConfig {
    fn default() -> Self {
        ExtinctionConfig { threshold: 1e-8 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SteadyConfig {
    pub tol: f64,
    pub max_periods: usize,
}

impl Default for SteadyConfig {
    fn default() -> Self {
        SteadyConfig { tol: 1e-8, max_periods: 200 }
    }
}

const MODULATION_KEYS: [&str; 6] = ["kind", "period", "mean", "swing", "t_f", "shape"];

/// Dotted paths of keys in `given` that the default layout does not have.
fn unknown_keys(given: &Value, known: &Value, prefix: &str, out: &mut Vec<String>) {
    let (Value::Object(g), Value::Object(k)) = (given, known) else {
        return;
    };
    for (key, val) in g {
        let path = if prefix.is_empty() { key.clone() } else { format!("{prefix}.{key}") };
        if path == "forcing.modulation" {
            if let Value::Object(m) = val {
                for mk in m.keys().filter(|mk| !MODULATION_KEYS.contains(&mk.as_str())) {
                    out.push(format!("{path}.{mk}"));
                }
            }
            continue;
        }
        match k.get(key) {
            None => out.push(path),
            Some(sub) => unknown_keys(val, sub, &path, out),
        }
    }
}

impl RunConfig {
    /// Parses and validates; every problem found is reported.
    pub fn from_json(text: &str, command: Command, seed: Option<u64>) -> Result<Self, Vec<String>> {
        let value: Value = serde_json::from_str(text).map_err(|e| vec![format!("invalid JSON: {e}")])?;
        if !value.is_object() {
            return Err(vec!["configuration must be a JSON object".into()]);
        }
        let known = serde_json::to_value(RunConfig::default()).expect("defaults serialize");
        let mut problems = Vec::new();
        unknown_keys(&value, &known, "", &mut problems);
        let mut problems: Vec<String> = problems.into_iter().map(|k| format!("unknown key `{k}`")).collect();
        if !problems.is_empty() {
            return Err(problems);
        }
        let mut cfg: RunConfig = serde_json::from_value(value).map_err(|e| vec![e.to_string()])?;
        if seed.is_some() {
            cfg.seed = seed;
        }
        problems.extend(cfg.violations(command));
        if problems.is_empty() {
            Ok(cfg)
        } else {
            Err(problems)
        }
    }

    pub fn load(path: &Path, command: Command, seed: Option<u64>) -> Result<Self, Vec<String>> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| vec![format!("cannot read {}: {e}", path.display())])?;
        Self::from_json(&text, command, seed)
    }

    fn violations(&self, command: Command) -> Vec<String> {
        let mut v = Vec::new();
        if self.seed.is_none() {
            v.push("seed is required (config `seed` or --seed)".into());
        }
        if let Err(e) = TorusGrid::new(self.grid.d, self.grid.n) {
            v.push(e.to_string());
        }
        if let Err(e) = RheologyParams::new(self.rheology.p, self.rheology.mu) {
            v.push(e.to_string());
        }
        if let Err(e) = self.policy().validate() {
            v.push(e.to_string());
        }
        let t = &self.time;
        if !(t.t_end > 0.0 && t.t_end.is_finite()) {
            v.push(format!("time.t_end must be positive, got {}", t.t_end));
        }
        if t.sample_stride == 0 {
            v.push("time.sample_stride must be at least 1".into());
        }

        let i = &self.initial;
        match i.kind {
            InitialKind::Zero => {}
            InitialKind::Random => match (i.grad_sq, i.fraction_of_lambda) {
                (Some(g), None) if g >= 0.0 && g.is_finite() => {}
                (None, Some(f)) if f >= 0.0 && f.is_finite() => {}
                (Some(_), Some(_)) => v.push("initial: give grad_sq or fraction_of_lambda, not both".into()),
                (None, None) => v.push("initial: random data needs grad_sq or fraction_of_lambda".into()),
                _ => v.push("initial: target must be finite and nonnegative".into()),
            },
            InitialKind::Snapshot => {
                if i.path.is_none() {
                    v.push("initial: snapshot data needs a path".into());
                }
            }
        }
        if !i.decay.is_finite() || i.kmax.is_some_and(|k| !(k > 0.0)) {
            v.push("initial: decay must be finite and kmax positive".into());
        }

        let f = &self.forcing;
        if let Err(e) = f.modulation.validate() {
            v.push(e.to_string());
        }
        match (f.norm, f.fraction_of_k) {
            (Some(_), Some(_)) => v.push("forcing: give norm or fraction_of_k, not both".into()),
            (Some(x), None) | (None, Some(x)) if !(x >= 0.0 && x.is_finite()) => {
                v.push("forcing: strength must be finite and nonnegative".into())
            }
            _ => {}
        }
        if !f.decay.is_finite() || f.kmax.is_some_and(|k| !(k > 0.0)) {
            v.push("forcing: decay must be finite and kmax positive".into());
        }

        let b = &self.budget;
        if b.samples == 0 || !(b.safety >= 1.0) {
            v.push("budget: need samples >= 1 and safety >= 1".into());
        }
        if b.c_s.is_some_and(|c| !(c > 0.0)) || b.c_k.is_some_and(|c| !(c > 0.0)) {
            v.push("budget: constant overrides must be positive".into());
        }

        let o = &self.orbit;
        if !(o.tol > 0.0) || o.max_iter == 0 || o.verify_periods == 0 || o.samples_per_period == 0 {
            v.push("orbit: need tol > 0 and positive iteration and sample counts".into());
        }
        if !(self.extinction.threshold > 0.0) {
            v.push("extinction.threshold must be positive".into());
        }
        if !(self.steady.tol > 0.0) {
            v.push("steady.tol must be positive".into());
        }

        let p = self.rheology.p;
        match command {
            Command::Constants | Command::Extinction if p >= 2.0 => {
                v.push(format!("p must lie in (1, 2) for this command, got {p}"))
            }
            _ => {}
        }
        match command {
            Command::Extinction if !matches!(f.modulation, Modulation::Extinction { .. }) => {
                v.push("extinction needs an extinction forcing window".into())
            }
            Command::Steady if !matches!(f.modulation, Modulation::Constant) => {
                v.push("steady needs a time-independent force".into())
            }
            _ => {}
        }
        v
    }

    pub fn grid(&self) -> TorusGrid {
        TorusGrid::new(self.grid.d, self.grid.n).expect("validated")
    }

    pub fn params(&self) -> RheologyParams {
        RheologyParams::new(self.rheology.p, self.rheology.mu).expect("validated")
    }

    pub fn policy(&self) -> TimeStepPolicy {
        TimeStepPolicy {
            dt_init: self.time.dt_init,
            cfl: self.time.cfl,
            max_dt: self.time.max_dt,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.expect("validated")
    }

    pub fn sobolev_options(&self) -> SobolevOptions {
        SobolevOptions {
            samples: self.budget.samples,
            refine_from: self.budget.refine_from,
            ascent_iters: self.budget.ascent_iters,
            safety: self.budget.safety,
            seed: self.seed(),
        }
    }

    /// Whether any step needs the smallness budget.
    pub fn needs_budget(&self, command: Command) -> bool {
        command != Command::Simulate
            || self.monitors.smallness
            || self.monitors.gradient_inequality
            || self.initial.fraction_of_lambda.is_some()
            || self.forcing.fraction_of_k.is_some()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_a_minimal_config() {
        let c = RunConfig::from_json(r#"{"seed": 3}"#, Command::Simulate, None).unwrap();
        assert_eq!(c.grid.n, 32);
        assert_eq!(c.seed, Some(3));
        assert_eq!(c.time, TimeConfig::default());
    }

    #[test]
    fn every_unknown_key_is_listed() {
        let e = RunConfig::from_json(
            r#"{"seed": 1, "bogus": 1, "grid": {"n": 16, "m": 2}, "forcing": {"modulation": {"kind": "constant", "x": 1}}}"#,
            Command::Simulate,
            None,
        )
        .unwrap_err();
        assert_eq!(e.len(), 3, "{e:?}");
        assert!(e.iter().any(|m| m.contains("`bogus`")));
        assert!(e.iter().any(|m| m.contains("`grid.m`")));
        assert!(e.iter().any(|m| m.contains("`forcing.modulation.x`")));
    }

    #[test]
    fn all_violations_are_reported() {
        let e = RunConfig::from_json(r#"{"grid": {"n": 7}, "rheology": {"p": 2.5}}"#, Command::Simulate, None)
            .unwrap_err();
        assert!(e.len() >= 3, "{e:?}");
        assert!(e.iter().any(|m| m.contains("seed")));
    }

    #[test]
    fn cli_seed_overrides_config() {
        let c = RunConfig::from_json(r#"{"seed": 3}"#, Command::Simulate, Some(9)).unwrap();
        assert_eq!(c.seed(), 9);
    }

    #[test]
    fn echo_round_trips() {
        let c = RunConfig::from_json(
            r#"{"seed": 5, "initial": {"kind": "random", "grad_sq": 0.1},
                "forcing": {"modulation": {"kind": "periodic", "period": 1.0, "mean": 0.5, "swing": 0.5}, "norm": 0.2}}"#,
            Command::Periodic,
            None,
        )
        .unwrap();
        let echoed = serde_json::to_string(&c).unwrap();
        assert_eq!(RunConfig::from_json(&echoed, Command::Periodic, None).unwrap(), c);
    }

    #[test]
    fn command_specific_checks() {
        let e = RunConfig::from_json(r#"{"seed": 1, "rheology": {"p": 2.0, "mu": 0.0}}"#, Command::Constants, None)
            .unwrap_err();
        assert!(e.iter().any(|m| m.contains("(1, 2)")));
        assert!(RunConfig::from_json(r#"{"seed": 1}"#, Command::Extinction, None).is_err());
        let per = r#"{"seed": 1, "forcing": {"modulation": {"kind": "periodic", "period": 1.0, "mean": 0.0, "swing": 1.0}}}"#;
        assert!(RunConfig::from_json(per, Command::Steady, None).is_err());
    }
}
