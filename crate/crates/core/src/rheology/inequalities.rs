//! Pointwise checks of the interpolation and reverse Hoelder inequalities.

use crate::error::{Error, Result};
use crate::spectral::{gradient, lp_norm, second_gradient, Resolution, VectorField};

/// `(||grad v||_3^3, C^3 ||grad v||_2^a ||grad Dv||_r^b)` with
/// `a = (9p-12)/(3p-2)`, `b = 6/(3p-2)`, `r = 4/(4-p)`.
pub fn interpolation_check(v: &VectorField, p: f64, c: f64) -> Result<(f64, f64)> {
    if !(p > 1.0 && p <= 2.0) {
        return Err(Error::argument(format!("p must lie in (1, 2], got {p}")));
    }
    let g = gradient(v, Resolution::Padded);
    let h = second_gradient(v, Resolution::Padded);
    let a = (9.0 * p - 12.0) / (3.0 * p - 2.0);
    let b = 6.0 / (3.0 * p - 2.0);
    let lhs = lp_norm(&g, 3.0)?.powi(3);
    let rhs = c.powi(3)
        * v.grad_l2_sq().sqrt().powf(a)
        * lp_norm(&h, 4.0 / (4.0 - p))?.powf(b);
    Ok((lhs, rhs))
}

/// `(int |fg|, (int |f|^q)^(1/q) (int |g|^q')^(1/q'))` for `0 < q < 1`,
/// `q' = q/(q-1) < 0`, by uniform quadrature.
pub fn reverse_holder_check(f: &[f64], g: &[f64], q: f64) -> Result<(f64, f64)> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::argument(format!("q must lie in (0, 1), got {q}")));
    }
    if f.len() != g.len() || f.is_empty() {
        return Err(Error::argument("sample arrays must be nonempty and equal in length"));
    }
    if g.iter().any(|x| *x == 0.0 || !x.is_finite()) {
        return Err(Error::precondition(
            "g must be finite and nonzero everywhere for int |g|^q' to be finite",
        ));
    }
    let n = f.len() as f64;
    let qp = q / (q - 1.0);
    let lhs = f.iter().zip(g).map(|(a, b)| (a * b).abs()).sum::<f64>() / n;
    let fq = f.iter().map(|a| a.abs().powf(q)).sum::<f64>() / n;
    let gq = g.iter().map(|b| b.abs().powf(qp)).sum::<f64>() / n;
    Ok((lhs, fq.powf(1.0 / q) * gq.powf(1.0 / qp)))
}
