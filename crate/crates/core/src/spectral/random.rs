//! Seeded random fields.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::fft;
use super::field::VectorField;
use super::grid::TorusGrid;
use crate::error::{Error, Result};

/// Gaussian white noise samples, one array per component.
pub fn scalar_white_noise(grid: &TorusGrid, seed: u64, components: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..components)
        .map(|_| {
            (0..grid.len())
                .map(|_| StandardNormal.sample(&mut rng))
                .collect()
        })
        .collect()
}

/// Hermitian Gaussian coefficients with amplitude `|k|^-decay`, cut off
/// above `kmax` when given. Not projected, not normalized.
pub fn random_band_limited(
    grid: &TorusGrid,
    seed: u64,
    decay: f64,
    kmax: Option<f64>,
) -> VectorField {
    let noise = scalar_white_noise(grid, seed, grid.dim());
    let refs: Vec<&[f64]> = noise.iter().map(|c| c.as_slice()).collect();
    let mut spectra = fft::analyze_real(grid, &refs);
    let k2 = grid.wavenumber_sq();
    for c in spectra.iter_mut() {
        for (z, &q) in c.iter_mut().zip(&k2) {
            if q == 0.0 || kmax.is_some_and(|m| q > m * m) {
                *z = Complex64::new(0.0, 0.0);
            } else {
                *z *= q.powf(-decay / 2.0);
            }
        }
    }
    VectorField::from_spectral(*grid, spectra).expect("grid-shaped spectra")
}

/// A solenoidal field with `||grad v||_2^2` equal to `target_grad_sq`.
pub fn random_solenoidal(
    grid: &TorusGrid,
    seed: u64,
    decay: f64,
    target_grad_sq: f64,
    kmax: Option<f64>,
) -> Result<VectorField> {
    if !(target_grad_sq >= 0.0) || !target_grad_sq.is_finite() {
        return Err(Error::argument(format!(
            "gradient target must be finite and nonnegative, got {target_grad_sq}"
        )));
    }
    if target_grad_sq == 0.0 {
        return Ok(VectorField::zeros(*grid));
    }
    let v = random_band_limited(grid, seed, decay, kmax).project_solenoidal();
    let g = v.grad_l2_sq();
    if g == 0.0 {
        return Err(Error::argument(
            "spectral cutoff leaves no solenoidal modes to draw from",
        ));
    }
    Ok(v.scaled((target_grad_sq / g).sqrt()))
}
