//! Sampled trajectories and the identity / inequality monitors on them.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::rheology::{RheologyParams, SmallnessBudget};

/// One sample of a trajectory. The first ten columns are the primary record;
/// the rest feed the time-derivative identity monitor.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub v_l2: f64,
    /// `phi = ||grad v||_2^2`.
    pub grad_l2_sq: f64,
    pub dv_p_p: f64,
    pub dissipation: f64,
    pub f_dot_v: f64,
    pub f_norm_4p: f64,
    /// `(1/2) d/dt ||v||^2 + (S_mu(Dv), Dv) - (f, v)`.
    pub energy_residual: f64,
    pub gradient_inequality_slack: f64,
    pub vt_l2: f64,
    /// `D = ||grad Dv||_r^2`, `r = 4/(4-p)`.
    pub grad_sym_grad_sq: f64,
    /// `(1/p) int (mu + |Dv|^2)^(p/2)`.
    pub potential: f64,
    pub adv_dot_vt: f64,
    pub f_dot_vt: f64,
    /// `||v_t||^2 + (v . grad v, v_t) + d/dt potential - (f, v_t)`.
    pub vt_residual: f64,
}

pub const CSV_COLUMNS: [&str; 15] = [
    "t",
    "v_l2",
    "grad_l2_sq",
    "dv_p_p",
    "dissipation",
    "f_dot_v",
    "f_norm_4p",
    "energy_residual",
    "gradient_inequality_slack",
    "vt_l2",
    "grad_sym_grad_sq",
    "potential",
    "adv_dot_vt",
    "f_dot_vt",
    "vt_residual",
];

impl TrajectoryRow {
    fn values(&self) -> [f64; 15] {
        [
            self.t,
            self.v_l2,
            self.grad_l2_sq,
            self.dv_p_p,
            self.dissipation,
            self.f_dot_v,
            self.f_norm_4p,
            self.energy_residual,
            self.gradient_inequality_slack,
            self.vt_l2,
            self.grad_sym_grad_sq,
            self.potential,
            self.adv_dot_vt,
            self.f_dot_vt,
            self.vt_residual,
        ]
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub params: Option<RheologyParams>,
    pub rows: Vec<TrajectoryRow>,
    pub steps: usize,
    pub dt_min: f64,
    pub dt_max: f64,
    /// Largest relative divergence defect seen at a sample.
    pub max_divergence_defect: f64,
    /// Gradient threshold the run was monitored against, if any.
    pub lambda: Option<f64>,
}

/// Derivative at `t[i]` from up to three samples; one-sided at the ends.
pub fn derivative(t: &[f64], y: &[f64], i: usize) -> f64 {
    let n = t.len();
    if n < 2 {
        return 0.0;
    }
    if i == 0 {
        return (y[1] - y[0]) / (t[1] - t[0]);
    }
    if i == n - 1 {
        return (y[n - 1] - y[n - 2]) / (t[n - 1] - t[n - 2]);
    }
    let h0 = t[i] - t[i - 1];
    let h1 = t[i + 1] - t[i];
    (h0 * h0 * y[i + 1] - h1 * h1 * y[i - 1] + (h1 * h1 - h0 * h0) * y[i])
        / (h0 * h1 * (h0 + h1))
}

impl TrajectoryRecord {
    pub fn new(params: Option<RheologyParams>) -> Self {
        TrajectoryRecord {
            params,
            dt_min: f64::INFINITY,
            ..Default::default()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    pub fn column(&self, f: impl Fn(&TrajectoryRow) -> f64) -> Vec<f64> {
        self.rows.iter().map(f).collect()
    }

    pub fn sup_grad_sq(&self) -> f64 {
        self.rows.iter().map(|r| r.grad_l2_sq).fold(0.0, f64::max)
    }

    /// True when the gradient threshold was exceeded at some sample.
    pub fn violated(&self) -> bool {
        self.lambda.is_some_and(|l| self.sup_grad_sq() > l)
    }

    pub fn last(&self) -> Option<&TrajectoryRow> {
        self.rows.last()
    }

    /// Fills the derivative-based monitor columns.
    pub(crate) fn finalize(&mut self, budget: Option<&SmallnessBudget>) {
        let t = self.times();
        let half_e = self.column(|r| 0.5 * r.v_l2 * r.v_l2);
        let pot = self.column(|r| r.potential);
        let slack = budget.map(|b| gradient_inequality_monitor(self, b));
        for i in 0..self.rows.len() {
            let de = derivative(&t, &half_e, i);
            let dp = derivative(&t, &pot, i);
            let r = &mut self.rows[i];
            r.energy_residual = de + r.dissipation - r.f_dot_v;
            r.vt_residual = r.vt_l2 * r.vt_l2 + r.adv_dot_vt + dp - r.f_dot_vt;
            if let Some(s) = &slack {
                r.gradient_inequality_slack = s[i];
            }
        }
    }

    /// Trapezoid-integrated energy balance
    /// `(1/2)||v(t)||^2 - (1/2)||v(0)||^2 + int_0^t (diss - (f, v))`,
    /// maximized in absolute value over the samples.
    pub fn integrated_energy_residual(&self) -> f64 {
        let Some(first) = self.rows.first() else {
            return 0.0;
        };
        let e0 = 0.5 * first.v_l2 * first.v_l2;
        let mut acc = 0.0;
        let mut worst: f64 = 0.0;
        for w in self.rows.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            acc += 0.5 * (b.t - a.t) * (a.dissipation - a.f_dot_v + b.dissipation - b.f_dot_v);
            worst = worst.max((0.5 * b.v_l2 * b.v_l2 - e0 + acc).abs());
        }
        worst
    }

    /// A priori energy bound with constants derived from the budget:
    /// `(1/2)||v(T)||^2 + (1/2) 2^((p-2)/2) int ||Dv||_p^p
    ///   <= (1/2)||v0||^2 + 2^((p-2)/2) mu^(p/2) T + C(eps) T (C_W F)^p'`,
    /// where `F` bounds `||f(t)||_(4/p)`, `C_W` is the energy-embedding
    /// constant, `eps = (1/2) 2^((p-2)/2)` and `C(eps) = (eps p)^(-p'/p) / p'`.
    pub fn energy_bound_check(&self, budget: &SmallnessBudget, f_sup: f64) -> Option<(f64, f64)> {
        let first = self.rows.first()?;
        let last = self.rows.last()?;
        let p = budget.params.p;
        let mu = budget.params.mu;
        let cw = budget.role_constant(crate::rheology::SobolevRole::EnergyEmbedding)?;
        let c = 2f64.powf(0.5 * (p - 2.0));
        let eps = 0.5 * c;
        let pp = p / (p - 1.0);
        let c_eps = (eps * p).powf(-pp / p) / pp;
        let big_t = last.t - first.t;
        let int_dv: f64 = self
            .rows
            .windows(2)
            .map(|w| 0.5 * (w[1].t - w[0].t) * (w[0].dv_p_p + w[1].dv_p_p))
            .sum();
        let lhs = 0.5 * last.v_l2 * last.v_l2 + eps * int_dv;
        let rhs = 0.5 * first.v_l2 * first.v_l2
            + c * mu.powf(0.5 * p) * big_t
            + c_eps * big_t * (cw * f_sup).powf(pp);
        Some((lhs, rhs))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "{}", CSV_COLUMNS.join(","))?;
        for r in &self.rows {
            let vals: Vec<String> = r.values().iter().map(|x| format!("{x:e}")).collect();
            writeln!(w, "{}", vals.join(","))?;
        }
        w.flush()?;
        Ok(())
    }
}

fn rate_scale(rec: &TrajectoryRecord) -> f64 {
    let span = match (rec.rows.first(), rec.rows.last()) {
        (Some(a), Some(b)) if b.t > a.t => b.t - a.t,
        _ => return 1.0,
    };
    let e = rec.rows.iter().map(|r| r.v_l2 * r.v_l2).fold(0.0, f64::max);
    (e / span).max(1.0)
}

/// Max centered-difference residual of the energy identity over interior
/// samples, normalized by
/// `max(1, max ||v||^2 / window length)`. Zero for fewer than 3 samples.
pub fn energy_identity_residual(rec: &TrajectoryRecord) -> f64 {
    if rec.rows.len() < 3 {
        return 0.0;
    }
    let n = rec.rows.len();
    let worst = rec.rows[1..n - 1].iter().map(|r| r.energy_residual.abs()).fold(0.0, f64::max);
    worst / rate_scale(rec)
}

/// Same for the time-derivative identity.
pub fn vt_identity_residual(rec: &TrajectoryRecord) -> f64 {
    if rec.rows.len() < 3 {
        return 0.0;
    }
    let n = rec.rows.len();
    let worst = rec.rows[1..n - 1].iter().map(|r| r.vt_residual.abs()).fold(0.0, f64::max);
    worst / rate_scale(rec)
}

/// Slack of the gradient differential inequality at every sample:
/// `(mu+phi)^((2-p)/2) phi'/2 + (p/4) D - A (mu+phi)^((2-p)/2) phi^(1/2) D
///   - (mu+phi)^(2-p) K^2 / (p-1)`.
/// Negative values are consistent with the smallness argument.
pub fn gradient_inequality_monitor(rec: &TrajectoryRecord, budget: &SmallnessBudget) -> Vec<f64> {
    let p = budget.params.p;
    let mu = budget.params.mu;
    let t = rec.times();
    let phi = rec.column(|r| r.grad_l2_sq);
    (0..rec.rows.len())
        .map(|i| {
            let dphi = if rec.rows.len() >= 2 { derivative(&t, &phi, i) } else { 0.0 };
            gradient_slack(p, mu, budget.a, budget.k, phi[i], dphi, rec.rows[i].grad_sym_grad_sq)
        })
        .collect()
}

pub fn gradient_slack(p: f64, mu: f64, a: f64, k: f64, phi: f64, dphi: f64, d: f64) -> f64 {
    let m = (mu + phi).powf(0.5 * (2.0 - p));
    m * 0.5 * dphi + 0.25 * p * d - a * m * phi.sqrt() * d - m * m * k * k / (p - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_is_exact_for_quadratics() {
        let t = [0.0, 0.1, 0.35, 0.4];
        let y: Vec<f64> = t.iter().map(|x| 3.0 * x * x - x + 2.0).collect();
        for i in 1..3 {
            assert!((derivative(&t, &y, i) - (6.0 * t[i] - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_trajectory_has_zero_residuals() {
        let mut rec = TrajectoryRecord::new(None);
        for i in 0..5 {
            rec.rows.push(TrajectoryRow { t: 0.1 * i as f64, ..Default::default() });
        }
        rec.finalize(None);
        assert_eq!(energy_identity_residual(&rec), 0.0);
        assert_eq!(vt_identity_residual(&rec), 0.0);
        assert_eq!(rec.integrated_energy_residual(), 0.0);
    }

    #[test]
    fn slack_at_rest_is_the_force_term() {
        let (p, mu, k) = (5.0 / 3.0, 1e-3, 0.3);
        let s = gradient_slack(p, mu, 0.1, k, 0.0, 0.0, 0.0);
        assert!((s + mu.powf(2.0 - p) * k * k / (p - 1.0)).abs() < 1e-18);
        assert!(s < 0.0);
    }

    #[test]
    fn csv_has_declared_columns() {
        let dir = tempfile::tempdir().unwrap();
        let mut rec = TrajectoryRecord::new(None);
        rec.rows.push(TrajectoryRow { t: 0.5, v_l2: 1.25, ..Default::default() });
        let path = dir.path().join("t.csv");
        rec.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap().split(',').count(), 15);
        let vals: Vec<f64> = lines.next().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(vals[0], 0.5);
        assert_eq!(vals[1], 1.25);
    }
}
