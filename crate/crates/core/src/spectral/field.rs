use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use super::fft;
use super::grid::TorusGrid;
use super::operator::{sym_pairs, sym_weights, SpectralOperator};
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Which collocation grid a nonlinear quantity is evaluated on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Resolution {
    Base,
    /// 2x oversampled in every direction.
    #[default]
    Padded,
}

impl Resolution {
    pub fn grid_for(self, base: &TorusGrid) -> TorusGrid {
        match self {
            Resolution::Base => *base,
            Resolution::Padded => base.padded(),
        }
    }
}

/// Real-valued component arrays sampled on a collocation grid.
///
/// The pointwise magnitude is `sqrt(sum_c w_c x_c^2)`, so a symmetric
/// tensor stored by independent entries still reports its Frobenius norm.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSamples {
    grid: TorusGrid,
    comps: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl GridSamples {
    pub fn new(grid: TorusGrid, comps: Vec<Vec<f64>>) -> Result<Self> {
        let w = vec![1.0; comps.len()];
        Self::with_weights(grid, comps, w)
    }

    pub fn with_weights(grid: TorusGrid, comps: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if comps.is_empty() {
            return Err(Error::config("samples need at least one component"));
        }
        if weights.len() != comps.len() {
            return Err(Error::config("one weight per component required"));
        }
        if let Some(c) = comps.iter().find(|c| c.len() != grid.len()) {
            return Err(Error::config(format!(
                "component has {} samples, grid has {}",
                c.len(),
                grid.len()
            )));
        }
        Ok(GridSamples {
            grid,
            comps,
            weights,
        })
    }

    /// A scalar field built from a function of the point coordinates.
    pub fn from_fn(grid: TorusGrid, f: impl Fn([f64; 3]) -> f64) -> Self {
        let c = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        GridSamples {
            grid,
            comps: vec![c],
            weights: vec![1.0],
        }
    }

    pub fn zeros(grid: TorusGrid, components: usize) -> Self {
        GridSamples {
            grid,
            comps: vec![vec![0.0; grid.len()]; components],
            weights: vec![1.0; components],
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.comps.len()
    }

    pub fn comps(&self) -> &[Vec<f64>] {
        &self.comps
    }

    pub fn comps_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.comps
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn component(&self, c: usize) -> &[f64] {
        &self.comps[c]
    }

    /// Squared pointwise magnitude at point `i`.
    pub fn magnitude_sq_at(&self, i: usize) -> f64 {
        self.comps
            .iter()
            .zip(&self.weights)
            .map(|(c, w)| w * c[i] * c[i])
            .sum()
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        (0..self.grid.len())
            .map(|i| self.magnitude_sq_at(i).sqrt())
            .collect()
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for c in out.comps.iter_mut() {
            for x in c.iter_mut() {
                *x *= s;
            }
        }
        out
    }

    pub(crate) fn check_shape(&self, other: &GridSamples) -> Result<()> {
        self.grid.check_same(&other.grid)?;
        if self.comps.len() != other.comps.len() {
            return Err(Error::config(format!(
                "component count mismatch: {} vs {}",
                self.comps.len(),
                other.comps.len()
            )));
        }
        Ok(())
    }
}

/// Pointwise symmetric tensors (rate of strain, stress) on a collocation grid.
///
/// Components follow [`sym_pairs`]: the diagonal first, then `i < j`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymTensorField {
    dim: usize,
    samples: GridSamples,
}

impl SymTensorField {
    pub fn new(grid: TorusGrid, comps: Vec<Vec<f64>>) -> Result<Self> {
        let dim = grid.dim();
        if comps.len() != dim * (dim + 1) / 2 {
            return Err(Error::config(format!(
                "symmetric {dim}x{dim} tensor needs {} components, got {}",
                dim * (dim + 1) / 2,
                comps.len()
            )));
        }
        Ok(SymTensorField {
            dim,
            samples: GridSamples::with_weights(grid, comps, sym_weights(dim))?,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grid(&self) -> &TorusGrid {
        self.samples.grid()
    }

    pub fn samples(&self) -> &GridSamples {
        &self.samples
    }

    pub fn comps(&self) -> &[Vec<f64>] {
        self.samples.comps()
    }

    /// Entry `(i, j)` at point `x`.
    pub fn entry(&self, i: usize, j: usize, x: usize) -> f64 {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        let idx = sym_pairs(self.dim)
            .iter()
            .position(|&p| p == (a, b))
            .expect("index within tensor");
        self.samples.comps[idx][x]
    }

    /// Squared Frobenius norm at point `x`.
    pub fn norm_sq_at(&self, x: usize) -> f64 {
        self.samples.magnitude_sq_at(x)
    }

    /// Maps every point through a function of its independent entries.
    pub fn map_pointwise(&self, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> SymTensorField {
        let m = self.samples.comps.len();
        let mut out = vec![vec![0.0; self.grid().len()]; m];
        let mut buf = vec![0.0; m];
        for x in 0..self.grid().len() {
            for (c, b) in buf.iter_mut().enumerate() {
                *b = self.samples.comps[c][x];
            }
            let r = f(&buf);
            for (c, v) in r.into_iter().enumerate() {
                out[c][x] = v;
            }
        }
        SymTensorField::new(*self.grid(), out).expect("same shape")
    }

    /// Full `d x d` component layout (row-major), unit weights.
    pub fn to_full(&self) -> GridSamples {
        let d = self.dim;
        let mut comps = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                let (a, b) = if i <= j { (i, j) } else { (j, i) };
                let idx = sym_pairs(d).iter().position(|&p| p == (a, b)).unwrap();
                comps.push(self.samples.comps[idx].clone());
            }
        }
        GridSamples::new(*self.grid(), comps).expect("consistent")
    }
}

/// A real, mean-zero velocity field on the torus, held by its Fourier coefficients.
///
/// Invariants: Hermitian symmetry `c(-k) = conj c(k)`, zero mean, no Nyquist content.
#[derive(Clone, Debug)]
pub struct VectorField {
    grid: TorusGrid,
    coeffs: Vec<Vec<Complex64>>,
    solenoidal: bool,
    samples: Option<Arc<GridSamples>>,
}

impl PartialEq for VectorField {
    fn eq(&self, other: &Self) -> bool {
        self.grid == other.grid && self.coeffs == other.coeffs
    }
}

impl VectorField {
    pub fn zeros(grid: TorusGrid) -> Self {
        VectorField {
            grid,
            coeffs: vec![vec![ZERO; grid.len()]; grid.dim()],
            solenoidal: true,
            samples: None,
        }
    }

    /// Builds a field from spectral coefficients, re-enforcing the invariants.
    pub fn from_spectral(grid: TorusGrid, coeffs: Vec<Vec<Complex64>>) -> Result<Self> {
        if coeffs.len() != grid.dim() {
            return Err(Error::config(format!(
                "expected {} components, got {}",
                grid.dim(),
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::config("coefficient array length does not match grid"));
        }
        let mut v = VectorField {
            grid,
            coeffs,
            solenoidal: false,
            samples: None,
        };
        v.enforce_invariants(true);
        Ok(v)
    }

    /// Discrete Fourier analysis of real samples on the field's base grid.
    pub fn from_samples(samples: &GridSamples) -> Result<Self> {
        let grid = *samples.grid();
        if samples.components() != grid.dim() {
            return Err(Error::config(format!(
                "a {}D vector field needs {} components, got {}",
                grid.dim(),
                grid.dim(),
                samples.components()
            )));
        }
        let refs: Vec<&[f64]> = samples.comps().iter().map(|c| c.as_slice()).collect();
        let coeffs = fft::analyze_real(&grid, &refs);
        let mut v = VectorField {
            grid,
            coeffs,
            solenoidal: false,
            samples: None,
        };
        // analysis output is already Hermitian
        v.enforce_invariants(false);
        Ok(v)
    }

    pub(crate) fn with_cached_samples(mut self, samples: GridSamples) -> Self {
        self.samples = Some(Arc::new(samples));
        self
    }

    pub(crate) fn cached_samples(&self) -> Option<&GridSamples> {
        self.samples.as_deref()
    }

    fn enforce_invariants(&mut self, symmetrize: bool) {
        let grid = self.grid;
        for c in self.coeffs.iter_mut() {
            c[0] = ZERO;
            for k in 0..grid.len() {
                if grid.is_nyquist(k) {
                    c[k] = ZERO;
                }
            }
            if symmetrize {
                for k in 0..grid.len() {
                    let nk = grid.negated(k);
                    if nk < k {
                        continue;
                    }
                    let s = (c[k] + c[nk].conj()) * 0.5;
                    c[k] = s;
                    c[nk] = s.conj();
                }
            }
        }
        self.samples = None;
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn coefficients(&self) -> &[Vec<Complex64>] {
        &self.coeffs
    }

    pub fn is_solenoidal(&self) -> bool {
        self.solenoidal
    }

    /// Real-space samples on the base grid.
    pub fn to_grid(&self) -> GridSamples {
        self.to_grid_at(Resolution::Base)
    }

    pub fn to_grid_at(&self, res: Resolution) -> GridSamples {
        let target = res.grid_for(&self.grid);
        let spectra: Vec<Vec<Complex64>> = self
            .coeffs
            .iter()
            .map(|c| fft::pad(&self.grid, &target, c))
            .collect();
        GridSamples::new(target, fft::synthesize_real(&target, &spectra)).expect("consistent")
    }

    /// Leray projection: removes `k (k . c) / |k|^2` from every mode.
    pub fn project_solenoidal(&self) -> VectorField {
        let mut out = self.clone();
        out.project_in_place();
        out
    }

    pub(crate) fn project_in_place(&mut self) {
        let d = self.dim();
        for k in 1..self.grid.len() {
            let kv = self.grid.wavevector(k);
            let k2: f64 = kv.iter().map(|x| (x * x) as f64).sum();
            let dot: Complex64 = (0..d).map(|i| self.coeffs[i][k] * kv[i] as f64).sum();
            if dot == ZERO {
                continue;
            }
            let s = dot / k2;
            for i in 0..d {
                self.coeffs[i][k] -= s * kv[i] as f64;
            }
        }
        self.solenoidal = true;
        self.samples = None;
    }

    /// Largest `|k . c(k)| / |k|` over modes, relative to `||v||_2`
    /// (zero for the zero field).
    pub fn divergence_defect(&self) -> f64 {
        let total = self.l2_norm();
        if total == 0.0 {
            return 0.0;
        }
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for k in 1..self.grid.len() {
            let kv = self.grid.wavevector(k);
            let kn: f64 = kv.iter().map(|x| (x * x) as f64).sum::<f64>().sqrt();
            let dot: Complex64 = (0..d).map(|i| self.coeffs[i][k] * kv[i] as f64).sum();
            worst = worst.max(dot.norm() / kn);
        }
        worst / total
    }

    /// `||v||_2^2` by Parseval.
    pub fn l2_norm_sq(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    /// `||grad v||_2^2` by Parseval.
    pub fn grad_l2_sq(&self) -> f64 {
        let k2 = self.grid.wavenumber_sq();
        let s: f64 = self
            .coeffs
            .iter()
            .map(|c| c.iter().zip(&k2).map(|(z, q)| q * z.norm_sqr()).sum::<f64>())
            .sum();
        4.0 * PI * PI * s
    }

    /// `(u, v)` in `L2(Omega)` by Parseval.
    pub fn inner(&self, other: &VectorField) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x * y.conj()).re).sum::<f64>())
            .sum())
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, other: &VectorField, s: f64) -> Result<VectorField> {
        self.grid.check_same(&other.grid)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y * s).collect())
            .collect();
        Ok(VectorField {
            grid: self.grid,
            coeffs,
            solenoidal: self.solenoidal && other.solenoidal,
            samples: None,
        })
    }

    pub fn scaled(&self, s: f64) -> VectorField {
        VectorField {
            grid: self.grid,
            coeffs: self
                .coeffs
                .iter()
                .map(|c| c.iter().map(|z| z * s).collect())
                .collect(),
            solenoidal: self.solenoidal,
            samples: None,
        }
    }

    /// `||self - other||_2`.
    pub fn distance(&self, other: &VectorField) -> Result<f64> {
        Ok(self.add_scaled(other, -1.0)?.l2_norm())
    }

    /// `||grad(self - other)||_2`.
    pub fn grad_distance(&self, other: &VectorField) -> Result<f64> {
        Ok(self.add_scaled(other, -1.0)?.grad_l2_sq().sqrt())
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs
            .iter()
            .all(|c| c.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
    }

    pub(crate) fn from_raw(grid: TorusGrid, coeffs: Vec<Vec<Complex64>>, solenoidal: bool) -> Self {
        VectorField {
            grid,
            coeffs,
            solenoidal,
            samples: None,
        }
    }
}

/// Full gradient samples; component `i*d + j` holds `d v_i / d x_j`.
pub fn gradient(v: &VectorField, res: Resolution) -> GridSamples {
    SpectralOperator::gradient(v.dim()).apply(v, res)
}

/// Symmetric gradient `Dv = (grad v + grad v^T) / 2`.
pub fn sym_gradient(v: &VectorField, res: Resolution) -> SymTensorField {
    let s = SpectralOperator::sym_gradient(v.dim()).apply(v, res);
    let grid = *s.grid();
    SymTensorField::new(grid, s.comps).expect("consistent")
}

/// Samples of `grad Dv`, weighted so the pointwise magnitude is `|grad Dv|`.
pub fn second_gradient(v: &VectorField, res: Resolution) -> GridSamples {
    SpectralOperator::grad_sym_gradient(v.dim()).apply(v, res)
}

/// Pointwise divergence on the base grid.
pub fn divergence(v: &VectorField) -> GridSamples {
    let grid = *v.grid();
    let spec: Vec<Complex64> = (0..grid.len())
        .map(|k| {
            let kv = grid.wavevector(k);
            (0..grid.dim())
                .map(|i| Complex64::new(0.0, 2.0 * PI * kv[i] as f64) * v.coefficients()[i][k])
                .sum()
        })
        .collect();
    GridSamples::new(grid, fft::synthesize_real(&grid, &[spec])).expect("consistent")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::norms::lp_norm;
    use crate::spectral::random::random_solenoidal;

    fn single_mode(grid: TorusGrid, k: [i64; 3], comp: usize, c: Complex64) -> VectorField {
        let mut coeffs = vec![vec![ZERO; grid.len()]; grid.dim()];
        let idx = grid.index_of(k).unwrap();
        coeffs[comp][idx] = c;
        coeffs[comp][grid.negated(idx)] = c.conj();
        VectorField::from_spectral(grid, coeffs).unwrap()
    }

    #[test]
    fn zero_field_round_trip() {
        let grid = TorusGrid::new(2, 8).unwrap();
        let v = VectorField::zeros(grid);
        let s = v.to_grid();
        assert!(s.comps().iter().all(|c| c.iter().all(|&x| x == 0.0)));
        assert_eq!(VectorField::from_samples(&s).unwrap(), v);
    }

    #[test]
    fn single_mode_samples_match_direct_summation() {
        let grid = TorusGrid::new(2, 8).unwrap();
        let e = Complex64::new(0.3, -0.7);
        // k0 = (1, 0): varies along x1
        let v = single_mode(grid, [1, 0, 0], 0, e);
        let s = v.to_grid();
        for x in 0..grid.len() {
            let p = grid.point(x);
            let want = 2.0 * (e * Complex64::from_polar(1.0, 2.0 * PI * p[0])).re;
            assert!((s.component(0)[x] - want).abs() < 1e-14);
            assert!(s.component(1)[x].abs() < 1e-15);
        }
    }

    #[test]
    fn round_trip_random_fields() {
        for grid in [TorusGrid::new(2, 32).unwrap(), TorusGrid::new(3, 16).unwrap()] {
            let v = random_solenoidal(&grid, 11, 1.0, 1.0, None).unwrap();
            let back = VectorField::from_samples(&v.to_grid()).unwrap();
            let err = back.distance(&v).unwrap() / v.l2_norm();
            assert!(err < 1e-12, "round trip error {err}");
        }
    }

    #[test]
    fn from_samples_rejects_wrong_shape() {
        let grid = TorusGrid::new(2, 8).unwrap();
        let s = GridSamples::zeros(grid, 3);
        assert!(matches!(VectorField::from_samples(&s), Err(Error::Config(_))));
    }

    #[test]
    fn gradient_fields_are_annihilated() {
        let grid = TorusGrid::new(2, 16).unwrap();
        let mut coeffs = vec![vec![ZERO; grid.len()]; 2];
        // v = grad phi, phi_hat(k) = random-ish, v_hat = i 2 pi k phi_hat
        for k in 1..grid.len() {
            if grid.is_nyquist(k) {
                continue;
            }
            let kv = grid.wavevector(k);
            let phi = Complex64::new((k as f64).sin(), (k as f64 * 0.3).cos())
                / (1.0 + (kv[0] * kv[0] + kv[1] * kv[1]) as f64);
            for i in 0..2 {
                coeffs[i][k] = Complex64::new(0.0, 2.0 * PI * kv[i] as f64) * phi;
            }
        }
        let v = VectorField::from_spectral(grid, coeffs).unwrap();
        assert!(v.l2_norm() > 0.1);
        let p = v.project_solenoidal();
        assert!(p.l2_norm() < 1e-14 * v.l2_norm());
    }

    #[test]
    fn projection_matches_per_mode_formula() {
        let grid = TorusGrid::new(3, 8).unwrap();
        let mut coeffs = vec![vec![ZERO; grid.len()]; 3];
        for (i, c) in coeffs.iter_mut().enumerate() {
            for (k, z) in c.iter_mut().enumerate() {
                *z = Complex64::new(((k * 7 + i) as f64).sin(), ((k * 3 + 2 * i) as f64).cos());
            }
        }
        let v = VectorField::from_spectral(grid, coeffs).unwrap();
        let p = v.project_solenoidal();
        for k in 1..grid.len() {
            let kv = grid.wavevector(k);
            let k2 = (kv[0] * kv[0] + kv[1] * kv[1] + kv[2] * kv[2]) as f64;
            let dot: Complex64 = (0..3).map(|i| v.coefficients()[i][k] * kv[i] as f64).sum();
            for i in 0..3 {
                let want = v.coefficients()[i][k] - dot * kv[i] as f64 / k2;
                assert!((p.coefficients()[i][k] - want).norm() < 1e-15);
            }
        }
        assert!(p.divergence_defect() <= 1e-12);
        let twice = p.project_solenoidal();
        assert!(twice.distance(&p).unwrap() <= 1e-14 * p.l2_norm());
    }

    #[test]
    fn sym_gradient_of_shear_pair() {
        // v = (sin 2 pi x2, sin 2 pi x1)
        let grid = TorusGrid::new(2, 16).unwrap();
        let samples = GridSamples::new(
            grid,
            vec![
                (0..grid.len())
                    .map(|i| (2.0 * PI * grid.point(i)[1]).sin())
                    .collect(),
                (0..grid.len())
                    .map(|i| (2.0 * PI * grid.point(i)[0]).sin())
                    .collect(),
            ],
        )
        .unwrap();
        let v = VectorField::from_samples(&samples).unwrap();
        let d = sym_gradient(&v, Resolution::Base);
        for x in 0..grid.len() {
            let p = grid.point(x);
            let off = PI * ((2.0 * PI * p[1]).cos() + (2.0 * PI * p[0]).cos());
            assert!(d.entry(0, 0, x).abs() < 1e-12);
            assert!(d.entry(1, 1, x).abs() < 1e-12);
            assert!((d.entry(0, 1, x) - off).abs() < 1e-12);
            assert!((d.entry(1, 0, x) - off).abs() < 1e-12);
        }
    }

    #[test]
    fn trace_of_sym_gradient_vanishes_for_solenoidal_fields() {
        let grid = TorusGrid::new(2, 32).unwrap();
        let v = random_solenoidal(&grid, 5, 1.5, 2.0, None).unwrap();
        let d = sym_gradient(&v, Resolution::Base);
        let div = divergence(&v);
        let scale = lp_norm(d.samples(), 2.0).unwrap();
        for x in 0..grid.len() {
            let tr = d.entry(0, 0, x) + d.entry(1, 1, x);
            assert!(tr.abs() <= 1e-10 * scale);
            assert!(div.component(0)[x].abs() <= 1e-10 * scale);
        }
        let zero = sym_gradient(&VectorField::zeros(grid), Resolution::Padded);
        assert!(zero.comps().iter().all(|c| c.iter().all(|&x| x == 0.0)));
    }

    #[test]
    fn differentiation_commutes_with_projection_on_solenoidal_fields() {
        let grid = TorusGrid::new(2, 16).unwrap();
        let v = random_solenoidal(&grid, 8, 1.0, 1.0, None).unwrap();
        let a = gradient(&v, Resolution::Base);
        let b = gradient(&v.project_solenoidal(), Resolution::Base);
        for (x, y) in a.comps().iter().zip(b.comps()) {
            for (p, q) in x.iter().zip(y) {
                assert!((p - q).abs() < 1e-12);
            }
        }
    }
}
