//! Power-law stress, its regularization, and the constants that drive the
//! smallness argument.

mod budget;
mod inequalities;
mod sobolev;

pub use budget::{
    contraction_rate, extinction_bound, force_bound, lambda_threshold, BudgetReport,
    ExtinctionBounds, LambdaThreshold, SmallnessBudget,
};
pub use inequalities::{interpolation_check, reverse_holder_check};
pub use sobolev::{
    estimate_sobolev_constant, sobolev_quotient, SobolevEstimate, SobolevOptions, SobolevRole,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{lp_norm, sym_gradient, Resolution, SymTensorField, VectorField};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RheologyParams {
    pub p: f64,
    pub mu: f64,
}

impl RheologyParams {
    /// `1 < p <= 2`, `0 <= mu < 1`.
    pub fn new(p: f64, mu: f64) -> Result<Self> {
        if !(p > 1.0 && p <= 2.0) {
            return Err(Error::argument(format!("p must lie in (1, 2], got {p}")));
        }
        if !(0.0..1.0).contains(&mu) {
            return Err(Error::argument(format!("mu must lie in [0, 1), got {mu}")));
        }
        Ok(RheologyParams { p, mu })
    }

    pub fn is_newtonian(&self) -> bool {
        self.p == 2.0
    }

    /// Effective viscosity `(mu + s)^((p-2)/2)` at squared shear rate `s`.
    #[inline]
    pub fn viscosity(&self, s: f64) -> f64 {
        if self.p == 2.0 {
            1.0
        } else {
            (self.mu + s).powf(0.5 * (self.p - 2.0))
        }
    }

    /// Upper bound of the effective viscosity, `mu^((p-2)/2)`; infinite when
    /// `mu = 0` and `p < 2`.
    pub fn nu0(&self) -> f64 {
        if self.p == 2.0 {
            1.0
        } else {
            self.mu.powf(0.5 * (self.p - 2.0))
        }
    }

    /// Stress density `(mu + s)^((p-2)/2) s` with `S(0) = 0`.
    #[inline]
    pub fn dissipation_density(&self, s: f64) -> f64 {
        if s == 0.0 {
            0.0
        } else {
            self.viscosity(s) * s
        }
    }

    /// Potential density `(mu + s)^(p/2) / p`.
    #[inline]
    pub fn potential_density(&self, s: f64) -> f64 {
        (self.mu + s).powf(0.5 * self.p) / self.p
    }
}

/// `S_mu(D) = (mu + |D|^2)^((p-2)/2) D`, pointwise.
pub fn stress(d: &SymTensorField, params: &RheologyParams) -> SymTensorField {
    let weights = d.samples().weights().to_vec();
    d.map_pointwise(|e| {
        let s: f64 = e.iter().zip(&weights).map(|(x, w)| w * x * x).sum();
        let f = if s == 0.0 { 0.0 } else { params.viscosity(s) };
        e.iter().map(|x| f * x).collect()
    })
}

fn check_symmetric(m: &[Vec<f64>], name: &str) -> Result<()> {
    let n = m.len();
    if !(1..=3).contains(&n) || m.iter().any(|r| r.len() != n) {
        return Err(Error::argument(format!("{name} must be a square matrix of size 1 to 3")));
    }
    let scale = m.iter().flatten().fold(0.0f64, |a, x| a.max(x.abs()));
    for i in 0..n {
        for j in 0..i {
            if (m[i][j] - m[j][i]).abs() > 1e-14 * scale {
                return Err(Error::argument(format!("{name} is not symmetric")));
            }
        }
    }
    Ok(())
}

fn frobenius_sq(m: &[Vec<f64>]) -> f64 {
    m.iter().flatten().map(|x| x * x).sum()
}

fn stress_matrix(m: &[Vec<f64>], params: &RheologyParams) -> Vec<Vec<f64>> {
    let s = frobenius_sq(m);
    let f = if s == 0.0 { 0.0 } else { params.viscosity(s) };
    m.iter().map(|r| r.iter().map(|x| f * x).collect()).collect()
}

/// Both sides of the monotonicity inequality:
/// `(S(A) - S(B)) : (A - B) >= 3^((p-2)/2) |A - B|^2 (mu + |A|^2 + |B|^2)^((p-2)/2)`.
pub fn monotonicity_gap(
    a: &[Vec<f64>],
    b: &[Vec<f64>],
    params: &RheologyParams,
) -> Result<(f64, f64)> {
    check_symmetric(a, "A")?;
    check_symmetric(b, "B")?;
    if a.len() != b.len() {
        return Err(Error::argument("A and B differ in size"));
    }
    let sa = stress_matrix(a, params);
    let sb = stress_matrix(b, params);
    let mut lhs = 0.0;
    let mut diff_sq = 0.0;
    for i in 0..a.len() {
        for j in 0..a.len() {
            let d = a[i][j] - b[i][j];
            lhs += (sa[i][j] - sb[i][j]) * d;
            diff_sq += d * d;
        }
    }
    let p = params.p;
    let lower = if diff_sq == 0.0 {
        0.0
    } else {
        3f64.powf(0.5 * (p - 2.0))
            * diff_sq
            * (params.mu + frobenius_sq(a) + frobenius_sq(b)).powf(0.5 * (p - 2.0))
    };
    Ok((lhs, lower))
}

/// `(S_mu(Dv), Dv)`, by quadrature on the padded grid.
pub fn dissipation(v: &VectorField, params: &RheologyParams) -> f64 {
    let d = sym_gradient(v, Resolution::Padded);
    let n = d.grid().len();
    (0..n)
        .map(|x| params.dissipation_density(d.norm_sq_at(x)))
        .sum::<f64>()
        / n as f64
}

/// `||Dv||_p^p` on the padded grid.
pub fn dv_p_p(v: &VectorField, p: f64) -> f64 {
    let d = sym_gradient(v, Resolution::Padded);
    lp_norm(d.samples(), p).expect("p >= 1").powf(p)
}

/// `(1/p) int (mu + |Dv|^2)^(p/2)`, whose time derivative is `(S_mu(Dv), Dv_t)`.
pub fn potential(v: &VectorField, params: &RheologyParams) -> f64 {
    let d = sym_gradient(v, Resolution::Padded);
    let n = d.grid().len();
    (0..n)
        .map(|x| params.potential_density(d.norm_sq_at(x)))
        .sum::<f64>()
        / n as f64
}

/// Korn constant: `||grad v||_2 = sqrt(2) ||Dv||_2` for mean-zero
/// solenoidal periodic fields.
pub fn korn_constant(dim: usize) -> Result<f64> {
    match dim {
        2 | 3 => Ok(std::f64::consts::SQRT_2),
        _ => Err(Error::argument(format!("dimension must be 2 or 3, got {dim}"))),
    }
}
