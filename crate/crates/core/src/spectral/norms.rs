//! Uniform-weight quadrature on the collocation grid.

use super::field::GridSamples;
use crate::error::{Error, Result};

/// `(mean |x|^q)^(1/q)` with `|x|` the pointwise weighted magnitude.
pub fn lp_norm(samples: &GridSamples, q: f64) -> Result<f64> {
    if !(q >= 1.0) || q.is_infinite() {
        return Err(Error::argument(format!("lp_norm needs finite q >= 1, got {q}")));
    }
    let n = samples.grid().len() as f64;
    let s: f64 = if q == 2.0 {
        (0..samples.grid().len())
            .map(|i| samples.magnitude_sq_at(i))
            .sum()
    } else {
        let h = q / 2.0;
        (0..samples.grid().len())
            .map(|i| samples.magnitude_sq_at(i).powf(h))
            .sum()
    };
    Ok((s / n).powf(1.0 / q))
}

/// Largest pointwise magnitude.
pub fn sup_norm(samples: &GridSamples) -> f64 {
    (0..samples.grid().len())
        .map(|i| samples.magnitude_sq_at(i))
        .fold(0.0, f64::max)
        .sqrt()
}

/// The `L2` pairing, honouring component weights.
pub fn inner_product(a: &GridSamples, b: &GridSamples) -> Result<f64> {
    a.check_shape(b)?;
    let n = a.grid().len() as f64;
    let s: f64 = a
        .comps()
        .iter()
        .zip(b.comps())
        .zip(a.weights())
        .map(|((x, y), w)| w * x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>())
        .sum();
    Ok(s / n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{random_solenoidal, TorusGrid};
    use std::f64::consts::PI;

    #[test]
    fn sine_has_analytic_l2_norm() {
        let grid = TorusGrid::new(2, 16).unwrap();
        let s = GridSamples::from_fn(grid, |x| (2.0 * PI * x[0]).sin());
        assert!((lp_norm(&s, 2.0).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        // mean |sin|^4 = 3/8
        assert!((lp_norm(&s, 4.0).unwrap() - 0.375f64.powf(0.25)).abs() < 1e-14);
        assert!((sup_norm(&s) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn parseval() {
        let grid = TorusGrid::new(3, 8).unwrap();
        let v = random_solenoidal(&grid, 3, 0.5, 2.0, None).unwrap();
        let q = lp_norm(&v.to_grid(), 2.0).unwrap().powi(2);
        assert!((q - v.l2_norm_sq()).abs() < 1e-13 * q);
    }

    #[test]
    fn zero_and_bad_exponent() {
        let grid = TorusGrid::new(2, 8).unwrap();
        let z = GridSamples::zeros(grid, 2);
        for q in [1.0, 1.5, 2.0, 7.0] {
            assert_eq!(lp_norm(&z, q).unwrap(), 0.0);
        }
        assert!(matches!(lp_norm(&z, 0.5), Err(Error::Argument(_))));
        assert!(matches!(lp_norm(&z, f64::NAN), Err(Error::Argument(_))));
    }

    #[test]
    fn inner_product_checks_shape() {
        let a = GridSamples::zeros(TorusGrid::new(2, 8).unwrap(), 2);
        let b = GridSamples::zeros(TorusGrid::new(2, 16).unwrap(), 2);
        assert!(inner_product(&a, &b).is_err());
        let c = GridSamples::zeros(TorusGrid::new(2, 8).unwrap(), 3);
        assert!(inner_product(&a, &c).is_err());
    }
}
