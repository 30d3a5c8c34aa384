//! Constant-coefficient differential operators acting diagonally in Fourier space.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::fft;
use super::field::{GridSamples, Resolution, VectorField};
use super::grid::TorusGrid;

#[derive(Clone, Copy, Debug)]
struct Factor {
    input: usize,
    coef: f64,
    derivs: [usize; 2],
    order: usize,
}

impl Factor {
    fn multiplier(&self, k: &[i64; 3]) -> Complex64 {
        let mut m = Complex64::new(self.coef, 0.0);
        for &axis in &self.derivs[..self.order] {
            m *= Complex64::new(0.0, 2.0 * PI * k[axis] as f64);
        }
        m
    }
}

/// Ordered index pairs `(i, j)` of the independent entries of a symmetric
/// `d x d` tensor: the diagonal first, then `i < j` row by row.
pub fn sym_pairs(dim: usize) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = (0..dim).map(|i| (i, i)).collect();
    for i in 0..dim {
        for j in i + 1..dim {
            out.push((i, j));
        }
    }
    out
}

/// Frobenius weights matching [`sym_pairs`].
pub fn sym_weights(dim: usize) -> Vec<f64> {
    sym_pairs(dim)
        .into_iter()
        .map(|(i, j)| if i == j { 1.0 } else { 2.0 })
        .collect()
}

/// A linear map from a vector field to a list of scalar grid components.
///
/// Each output component is a sum of spectral multipliers applied to input
/// components; `weights` define the pointwise Frobenius magnitude.
#[derive(Clone, Debug)]
pub struct SpectralOperator {
    dim: usize,
    rows: Vec<Vec<Factor>>,
    weights: Vec<f64>,
}

impl SpectralOperator {
    pub fn identity(dim: usize) -> Self {
        let rows = (0..dim)
            .map(|i| {
                vec![Factor {
                    input: i,
                    coef: 1.0,
                    derivs: [0, 0],
                    order: 0,
                }]
            })
            .collect();
        SpectralOperator {
            dim,
            rows,
            weights: vec![1.0; dim],
        }
    }

    /// Full gradient; component `i*d + j` is `d v_i / d x_j`.
    pub fn gradient(dim: usize) -> Self {
        let mut rows = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                rows.push(vec![Factor {
                    input: i,
                    coef: 1.0,
                    derivs: [j, 0],
                    order: 1,
                }]);
            }
        }
        SpectralOperator {
            dim,
            rows,
            weights: vec![1.0; dim * dim],
        }
    }

    /// Symmetric gradient in [`sym_pairs`] order.
    pub fn sym_gradient(dim: usize) -> Self {
        let rows = sym_pairs(dim)
            .into_iter()
            .map(|(i, j)| {
                if i == j {
                    vec![Factor {
                        input: i,
                        coef: 1.0,
                        derivs: [i, 0],
                        order: 1,
                    }]
                } else {
                    vec![
                        Factor {
                            input: i,
                            coef: 0.5,
                            derivs: [j, 0],
                            order: 1,
                        },
                        Factor {
                            input: j,
                            coef: 0.5,
                            derivs: [i, 0],
                            order: 1,
                        },
                    ]
                }
            })
            .collect();
        SpectralOperator {
            dim,
            rows,
            weights: sym_weights(dim),
        }
    }

    /// Gradient of the symmetric gradient; component `s*d + k` is
    /// `d/dx_k` of symmetric entry `s`.
    pub fn grad_sym_gradient(dim: usize) -> Self {
        let sym = Self::sym_gradient(dim);
        let mut rows = Vec::new();
        let mut weights = Vec::new();
        for (row, w) in sym.rows.iter().zip(&sym.weights) {
            for k in 0..dim {
                rows.push(
                    row.iter()
                        .map(|f| Factor {
                            derivs: [f.derivs[0], k],
                            order: 2,
                            ..*f
                        })
                        .collect(),
                );
                weights.push(*w);
            }
        }
        SpectralOperator { dim, rows, weights }
    }

    pub fn outputs(&self) -> usize {
        self.rows.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Output spectra on the base grid of `v`.
    pub fn apply_spectral(&self, v: &VectorField) -> Vec<Vec<Complex64>> {
        let grid = v.grid();
        let coeffs = v.coefficients();
        self.rows
            .iter()
            .map(|row| {
                (0..grid.len())
                    .map(|k| {
                        let kv = grid.wavevector(k);
                        row.iter()
                            .map(|f| f.multiplier(&kv) * coeffs[f.input][k])
                            .sum()
                    })
                    .collect()
            })
            .collect()
    }

    /// Samples of the operator output at the requested resolution.
    pub fn apply(&self, v: &VectorField, res: Resolution) -> GridSamples {
        let base = *v.grid();
        let target = res.grid_for(&base);
        let spectra: Vec<Vec<Complex64>> = self
            .apply_spectral(v)
            .into_iter()
            .map(|s| fft::pad(&base, &target, &s))
            .collect();
        let comps = fft::synthesize_real(&target, &spectra);
        GridSamples::with_weights(target, comps, self.weights.clone())
            .expect("operator output is consistent")
    }

    /// L2 adjoint: maps grid components (on any grid at least as fine as
    /// `base`) back to base-grid vector spectra, `sum_c conj(m_c) W_c`.
    pub fn adjoint(&self, base: &TorusGrid, w: &GridSamples) -> Vec<Vec<Complex64>> {
        assert_eq!(w.components(), self.outputs());
        let refs: Vec<&[f64]> = w.comps().iter().map(|c| c.as_slice()).collect();
        let spectra = fft::analyze_real(w.grid(), &refs);
        let mut out = vec![vec![Complex64::new(0.0, 0.0); base.len()]; self.dim];
        for (row, spec) in self.rows.iter().zip(spectra) {
            let spec = fft::truncate(base, w.grid(), &spec);
            for k in 0..base.len() {
                if spec[k] == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let kv = base.wavevector(k);
                for f in row {
                    out[f.input][k] += f.multiplier(&kv).conj() * spec[k];
                }
            }
        }
        out
    }
}
