//! Gradient threshold, force bound, contraction rate and extinction bounds.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::sobolev::{estimate_sobolev_constant, SobolevOptions, SobolevRole};
use super::{korn_constant, RheologyParams};
use crate::error::{Error, Result};
use crate::spectral::TorusGrid;

const HEADROOM: f64 = 0.99;

fn check_p(p: f64) -> Result<()> {
    if p > 1.0 && p < 2.0 {
        Ok(())
    } else {
        Err(Error::argument(format!("p must lie in (1, 2), got {p}")))
    }
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::argument(format!("{name} must be positive and finite, got {x}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaThreshold {
    pub lambda: f64,
    pub branches: [f64; 3],
    /// 1-based index of the smallest branch.
    pub active_branch: usize,
}

/// `Lambda = 0.99 * min` of the three threshold branches.
pub fn lambda_threshold(p: f64, c_s: f64, c_k: f64) -> Result<LambdaThreshold> {
    check_p(p)?;
    check_positive("C_S", c_s)?;
    check_positive("C_K", c_k)?;
    let e = 2.0 / (3.0 - p);
    let branches = [
        (p / (8.0 * c_s)).powf(e),
        (3f64.powf((2.0 - p) / 2.0) * c_s * c_k / 2.0).powf(-e),
        (3f64.powf((p - 2.0) / 2.0) * (p - 1.0) / (c_s * c_k)).powf(e),
    ];
    let (idx, min) = branches
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |a, (i, &b)| if b < a.1 { (i, b) } else { a });
    Ok(LambdaThreshold {
        lambda: HEADROOM * min,
        branches,
        active_branch: idx + 1,
    })
}

/// Largest `K` with `C_S K^2 2^(2-p) <= p (p-1) Lambda^(p-1) / 8`.
pub fn force_bound(p: f64, lambda: f64, c_s: f64) -> Result<f64> {
    check_p(p)?;
    check_positive("Lambda", lambda)?;
    check_positive("C_S", c_s)?;
    Ok((p * (p - 1.0) * lambda.powf(p - 1.0) / (8.0 * 2f64.powf(2.0 - p) * c_s)).sqrt())
}

/// Exponential rate of the period-map contraction; the flag reports `r > 0`.
pub fn contraction_rate(p: f64, lambda: f64, mu: f64, c_s: f64, c_k: f64) -> (f64, bool) {
    let m = (mu + 2.0 * lambda).powf((2.0 - p) / 2.0);
    let r = (3f64.powf((p - 2.0) / 2.0) * c_k - c_s * lambda.sqrt() * m) / (2.0 * m);
    (r, r > 0.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtinctionBounds {
    pub t_f: f64,
    /// `t_f + C_S^(3-p) Lambda^(2-p) / (2-p)`.
    pub statement_bound: f64,
    /// `t_f + C_S ||v(t_f)||^(2-p) / (2-p)`, when the norm is known.
    pub proof_bound: Option<f64>,
}

pub fn extinction_bound(
    p: f64,
    c_s: f64,
    lambda: f64,
    t_f: f64,
    v_tf_l2: Option<f64>,
) -> Result<ExtinctionBounds> {
    if p == 2.0 {
        return Err(Error::argument("no finite-time extinction for p = 2"));
    }
    check_p(p)?;
    check_positive("C_S", c_s)?;
    if !(lambda >= 0.0) || !(t_f >= 0.0) {
        return Err(Error::argument("Lambda and t_f must be nonnegative"));
    }
    if let Some(n) = v_tf_l2 {
        if !(n >= 0.0) {
            return Err(Error::argument("norm must be nonnegative"));
        }
    }
    Ok(ExtinctionBounds {
        t_f,
        statement_bound: t_f + c_s.powf(3.0 - p) * lambda.powf(2.0 - p) / (2.0 - p),
        proof_bound: v_tf_l2.map(|n| t_f + c_s * n.powf(2.0 - p) / (2.0 - p)),
    })
}

/// The constants of the smallness argument for one `(p, mu)`.
///
/// `c_s` is the largest per-role constant: a single symbol has to satisfy
/// every inequality it appears in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmallnessBudget {
    pub params: RheologyParams,
    pub c_s_by_role: BTreeMap<SobolevRole, f64>,
    pub c_s: f64,
    pub c_k: f64,
    pub threshold: LambdaThreshold,
    pub lambda: f64,
    pub k: f64,
    pub a: f64,
    pub contraction_rate: f64,
    pub contraction_positive: bool,
}

impl SmallnessBudget {
    pub fn from_constants(
        params: RheologyParams,
        c_s_by_role: BTreeMap<SobolevRole, f64>,
        c_k: f64,
    ) -> Result<Self> {
        let p = params.p;
        check_p(p)?;
        if c_s_by_role.is_empty() {
            return Err(Error::argument("at least one embedding constant is required"));
        }
        for (role, c) in &c_s_by_role {
            check_positive(&format!("C_S[{role}]"), *c)?;
        }
        let c_s = c_s_by_role.values().cloned().fold(0.0, f64::max);
        let threshold = lambda_threshold(p, c_s, c_k)?;
        let lambda = threshold.lambda;
        let k = force_bound(p, lambda, c_s)?;
        let (r, pos) = contraction_rate(p, lambda, params.mu, c_s, c_k);
        Ok(SmallnessBudget {
            params,
            c_s_by_role,
            c_s,
            c_k,
            lambda,
            k,
            a: c_s.powf((12.0 * p - 11.0) / (3.0 * p - 2.0)),
            contraction_rate: r,
            contraction_positive: pos,
            threshold,
        })
    }

    /// Estimates every embedding constant on `grid` and assembles the budget.
    pub fn certify(grid: &TorusGrid, params: RheologyParams, opts: &SobolevOptions) -> Result<Self> {
        check_p(params.p)?;
        let mut by_role = BTreeMap::new();
        for role in SobolevRole::ALL {
            let e = estimate_sobolev_constant(grid, params.p, role, opts)?;
            by_role.insert(role, e.constant);
        }
        Self::from_constants(params, by_role, korn_constant(grid.dim())?)
    }

    /// Same constants, different regularization.
    pub fn with_mu(&self, mu: f64) -> Result<Self> {
        let params = RheologyParams::new(self.params.p, mu)?;
        Self::from_constants(params, self.c_s_by_role.clone(), self.c_k)
    }

    pub fn role_constant(&self, role: SobolevRole) -> Option<f64> {
        self.c_s_by_role.get(&role).copied()
    }

    pub fn extinction_bounds(&self, t_f: f64, v_tf_l2: Option<f64>) -> Result<ExtinctionBounds> {
        extinction_bound(self.params.p, self.c_s, self.lambda, t_f, v_tf_l2)
    }

    /// `exp(-r T)`, or `None` when the rate is not positive.
    pub fn contraction_factor(&self, period: f64) -> Option<f64> {
        self.contraction_positive
            .then(|| (-self.contraction_rate * period).exp())
    }

    pub fn report(&self, t_f: f64) -> Result<BudgetReport> {
        Ok(BudgetReport {
            p: self.params.p,
            mu: self.params.mu,
            c_s_by_role: self
                .c_s_by_role
                .iter()
                .map(|(r, c)| (r.name().to_string(), *c))
                .collect(),
            c_s: self.c_s,
            c_k: self.c_k,
            lambda: self.lambda,
            branches: self.threshold.branches,
            active_branch: self.threshold.active_branch,
            k: self.k,
            a: self.a,
            contraction_rate: self.contraction_rate,
            contraction_positive: self.contraction_positive,
            extinction_bounds: ExtinctionReportBounds {
                t_f,
                statement_bound: self.extinction_bounds(t_f, None)?.statement_bound,
                proof_coefficient: self.c_s / (2.0 - self.params.p),
            },
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtinctionReportBounds {
    pub t_f: f64,
    pub statement_bound: f64,
    /// The proof bound is `t_f + proof_coefficient * ||v(t_f)||^(2-p)`.
    pub proof_coefficient: f64,
}

/// JSON form of a [`SmallnessBudget`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetReport {
    pub p: f64,
    pub mu: f64,
    #[serde(rename = "C_S_by_role")]
    pub c_s_by_role: BTreeMap<String, f64>,
    #[serde(rename = "C_S")]
    pub c_s: f64,
    #[serde(rename = "C_K")]
    pub c_k: f64,
    #[serde(rename = "Lambda")]
    pub lambda: f64,
    pub branches: [f64; 3],
    pub active_branch: usize,
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "A")]
    pub a: f64,
    pub contraction_rate: f64,
    pub contraction_positive: bool,
    pub extinction_bounds: ExtinctionReportBounds,
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    #[test]
    fn threshold_at_reference_point() {
        let t = lambda_threshold(5.0 / 3.0, 1.0, SQRT_2).unwrap();
        let b1 = (5.0f64 / 24.0).powf(1.5);
        assert!((t.branches[0] - b1).abs() < 1e-15);
        // independent evaluation of the other two
        let b2 = (3f64.powf(1.0 / 6.0) * SQRT_2 / 2.0).powf(-1.5);
        let b3 = (3f64.powf(-1.0 / 6.0) * (2.0 / 3.0) / SQRT_2).powf(1.5);
        assert!((t.branches[1] - b2).abs() < 1e-14 && (t.branches[2] - b3).abs() < 1e-14);
        assert!(b1 < b2 && b1 < b3);
        assert_eq!(t.active_branch, 1);
        assert!((t.lambda - 0.99 * b1).abs() < 1e-16);
    }

    #[test]
    fn threshold_decreases_with_c_s() {
        for c in [0.1, 0.5, 1.0, 3.0] {
            let a = lambda_threshold(1.8, c, SQRT_2).unwrap().lambda;
            let b = lambda_threshold(1.8, 2.0 * c, SQRT_2).unwrap().lambda;
            assert!(b < a);
        }
        assert!(lambda_threshold(1.8, 0.0, SQRT_2).is_err());
        assert!(lambda_threshold(1.8, 1.0, -1.0).is_err());
        assert!(lambda_threshold(2.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn force_bound_is_tight() {
        let (p, lam, c) = (5.0 / 3.0, 0.09, 0.7);
        let k = force_bound(p, lam, c).unwrap();
        let lhs = c * k * k * 2f64.powf(2.0 - p);
        let rhs = p * (p - 1.0) * lam.powf(p - 1.0) / 8.0;
        assert!((lhs - rhs).abs() < 1e-15 * rhs);
    }

    #[test]
    fn contraction_rate_cases() {
        let (r, pos) = contraction_rate(2.0, 0.04, 0.0, 1.0, SQRT_2);
        assert!((r - (SQRT_2 - 0.2) / 2.0).abs() < 1e-15 && pos);
        let lam = lambda_threshold(5.0 / 3.0, 1.0, SQRT_2).unwrap().lambda;
        let (r, pos) = contraction_rate(5.0 / 3.0, lam, 1e-6, 1.0, SQRT_2);
        assert!(pos && r > 0.5, "{r}");
        let mut prev = f64::INFINITY;
        for i in 1..50 {
            let (r, _) = contraction_rate(5.0 / 3.0, 0.01 * i as f64, 1e-3, 1.0, SQRT_2);
            assert!(r < prev);
            prev = r;
        }
    }

    #[test]
    fn extinction_bounds() {
        let p = 5.0 / 3.0;
        let b = extinction_bound(p, 1.0, 0.09, 1.0, Some(0.0)).unwrap();
        assert!((b.statement_bound - (1.0 + 3.0 * 0.09f64.powf(1.0 / 3.0))).abs() < 1e-14);
        assert_eq!(b.proof_bound, Some(1.0));
        let b = extinction_bound(p, 1.0, 1e-30, 0.4, None).unwrap();
        assert!((b.statement_bound - 0.4).abs() < 1e-9);
        assert!(matches!(extinction_bound(2.0, 1.0, 0.1, 0.0, None), Err(Error::Argument(_))));
    }

    #[test]
    fn budget_uses_largest_constant() {
        let params = RheologyParams::new(5.0 / 3.0, 1e-3).unwrap();
        let mut roles = BTreeMap::new();
        roles.insert(SobolevRole::Interpolation, 0.3);
        roles.insert(SobolevRole::SupEmbedding, 0.8);
        let b = SmallnessBudget::from_constants(params, roles, SQRT_2).unwrap();
        assert_eq!(b.c_s, 0.8);
        assert!(b.lambda < b.threshold.branches.iter().cloned().fold(f64::INFINITY, f64::min));
        let lhs = b.c_s * b.k * b.k * 2f64.powf(2.0 - params.p);
        let rhs = params.p * (params.p - 1.0) * b.lambda.powf(params.p - 1.0) / 8.0;
        assert!(lhs <= rhs * (1.0 + 1e-14));
        let json = serde_json::to_value(b.report(0.5).unwrap()).unwrap();
        for key in ["p", "mu", "C_S_by_role", "C_K", "Lambda", "active_branch", "K", "A", "contraction_rate", "extinction_bounds"] {
            assert!(!json[key].is_null(), "{key}");
        }
    }
}
