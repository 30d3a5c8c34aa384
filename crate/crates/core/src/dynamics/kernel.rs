//! The Galerkin right-hand side, evaluated pseudo-spectrally.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::rheology::RheologyParams;
use crate::spectral::{analyze_real, sym_pairs, sym_weights, synthesize_real, TorusGrid, VectorField};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Precomputed tables for one grid and one rheology.
///
/// The stress divergence is split as `(nu/2) Lap v + div(S_mu(Dv) - nu Dv)`
/// with `nu = mu^((p-2)/2)`; the first part is linear and handled exactly by
/// the integrator, the rest goes into [`Kernel::nonlinear`] together with
/// advection and forcing.
#[derive(Clone, Debug)]
pub(crate) struct Kernel {
    grid: TorusGrid,
    fine: TorusGrid,
    params: RheologyParams,
    nu: f64,
    /// `2 pi k` per base index, zeroed on Nyquist modes.
    kvec: Vec<[f64; 3]>,
    /// Base index to padded index; `usize::MAX` marks discarded modes.
    pad_map: Vec<usize>,
    pairs: Vec<(usize, usize)>,
    weights: Vec<f64>,
}

impl Kernel {
    pub(crate) fn new(grid: TorusGrid, params: RheologyParams) -> Result<Self> {
        let nu = params.nu0();
        if !nu.is_finite() {
            return Err(Error::config(
                "mu = 0 with p < 2 has unbounded viscosity; use the mu ladder",
            ));
        }
        let fine = grid.padded();
        let mut kvec = Vec::with_capacity(grid.len());
        let mut pad_map = Vec::with_capacity(grid.len());
        for k in 0..grid.len() {
            if grid.is_nyquist(k) {
                kvec.push([0.0; 3]);
                pad_map.push(usize::MAX);
            } else {
                let kv = grid.wavevector(k);
                kvec.push([
                    2.0 * PI * kv[0] as f64,
                    2.0 * PI * kv[1] as f64,
                    2.0 * PI * kv[2] as f64,
                ]);
                pad_map.push(fine.index_of(kv).expect("fits on padded grid"));
            }
        }
        let d = grid.dim();
        Ok(Kernel {
            grid,
            fine,
            params,
            nu,
            kvec,
            pad_map,
            pairs: sym_pairs(d),
            weights: sym_weights(d),
        })
    }

    pub(crate) fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub(crate) fn params(&self) -> &RheologyParams {
        &self.params
    }

    /// Decay rate of the linear part for each mode: `(nu/2) 4 pi^2 |k|^2`.
    pub(crate) fn linear_rates(&self) -> Vec<f64> {
        self.kvec
            .iter()
            .map(|k| 0.5 * self.nu * (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]))
            .collect()
    }

    /// `P(div(-v v^T + S_mu(Dv) - nu Dv) + force_scale * f)`; returns the
    /// largest padded-grid speed alongside.
    pub(crate) fn nonlinear(
        &self,
        v: &[Vec<Complex64>],
        force: Option<(&[Vec<Complex64>], f64)>,
        t: f64,
    ) -> Result<(Vec<Vec<Complex64>>, f64)> {
        let d = self.grid.dim();
        let m = self.pairs.len();
        let fl = self.fine.len();

        let mut spectra = vec![vec![ZERO; fl]; d + m];
        for k in 0..self.grid.len() {
            let idx = self.pad_map[k];
            if idx == usize::MAX {
                continue;
            }
            let kv = &self.kvec[k];
            for i in 0..d {
                spectra[i][idx] = v[i][k];
            }
            for (s, &(i, j)) in self.pairs.iter().enumerate() {
                // D_ij = (i/2)(k_j v_i + k_i v_j)
                let z = v[i][k] * kv[j] + v[j][k] * kv[i];
                spectra[d + s][idx] = Complex64::new(-0.5 * z.im, 0.5 * z.re);
            }
        }
        let real = synthesize_real(&self.fine, &spectra);
        let (vel, strain) = real.split_at(d);

        let newtonian = self.params.is_newtonian() && self.nu == 1.0;
        let (mu, half_pm2) = (self.params.mu, 0.5 * (self.params.p - 2.0));
        let mut flux = vec![vec![0.0; fl]; m];
        let mut umax2: f64 = 0.0;
        let mut u = [0.0; 3];
        let mut e = [0.0; 6];
        for x in 0..fl {
            let mut u2 = 0.0;
            for (ui, c) in u.iter_mut().zip(vel) {
                *ui = c[x];
                u2 += *ui * *ui;
            }
            umax2 = umax2.max(u2);
            let mut s2 = 0.0;
            for ((ea, c), w) in e.iter_mut().zip(strain).zip(&self.weights) {
                *ea = c[x];
                s2 += w * *ea * *ea;
            }
            let coef = if newtonian {
                0.0
            } else if s2 == 0.0 && mu == 0.0 {
                -self.nu
            } else if half_pm2 == 0.0 {
                1.0 - self.nu
            } else {
                (mu + s2).powf(half_pm2) - self.nu
            };
            for (s, &(i, j)) in self.pairs.iter().enumerate() {
                flux[s][x] = coef * e[s] - u[i] * u[j];
            }
        }
        if !umax2.is_finite() {
            return Err(diverged(t, "non-finite velocity on the collocation grid"));
        }
        let refs: Vec<&[f64]> = flux.iter().map(|c| c.as_slice()).collect();
        let fspec = analyze_real(&self.fine, &refs);

        let mut out = vec![vec![ZERO; self.grid.len()]; d];
        for k in 1..self.grid.len() {
            let idx = self.pad_map[k];
            if idx == usize::MAX {
                continue;
            }
            let kv = &self.kvec[k];
            for (s, &(i, j)) in self.pairs.iter().enumerate() {
                let f = fspec[s][idx];
                // (div F)_i = sum_j i k_j F_ij
                let ik_f = |kk: f64| Complex64::new(-kk * f.im, kk * f.re);
                out[i][k] += ik_f(kv[j]);
                if i != j {
                    out[j][k] += ik_f(kv[i]);
                }
            }
            if let Some((f, scale)) = force {
                if scale != 0.0 {
                    for i in 0..d {
                        out[i][k] += f[i][k] * scale;
                    }
                }
            }
            self.project_mode(&mut out, k);
        }
        for c in &out {
            for z in c {
                if !(z.re.is_finite() && z.im.is_finite()) {
                    return Err(diverged(t, "non-finite right-hand side"));
                }
            }
        }
        Ok((out, umax2.sqrt()))
    }

    fn project_mode(&self, out: &mut [Vec<Complex64>], k: usize) {
        let kv = &self.kvec[k];
        let d = self.grid.dim();
        let k2: f64 = kv[..d].iter().map(|x| x * x).sum();
        if k2 == 0.0 {
            return;
        }
        let dot: Complex64 = (0..d).map(|i| out[i][k] * kv[i]).sum();
        let s = dot / k2;
        for i in 0..d {
            out[i][k] -= s * kv[i];
        }
    }

    /// Full right-hand side including the linear part.
    pub(crate) fn full(
        &self,
        v: &VectorField,
        force: Option<(&[Vec<Complex64>], f64)>,
        t: f64,
    ) -> Result<VectorField> {
        let (mut out, _) = self.nonlinear(v.coefficients(), force, t)?;
        let rates = self.linear_rates();
        for (o, c) in out.iter_mut().zip(v.coefficients()) {
            for k in 0..rates.len() {
                if self.pad_map[k] != usize::MAX {
                    o[k] -= c[k] * rates[k];
                }
            }
        }
        Ok(VectorField::from_raw(self.grid, out, true))
    }
}

pub(crate) fn diverged(t: f64, reason: &str) -> Error {
    Error::Diverged {
        t,
        reason: reason.to_string(),
        partial: None,
    }
}

/// `P(-v . grad v + div S_mu(Dv) + f)` for a solenoidal, mean-zero `v`.
pub fn assemble_rhs(v: &VectorField, f: &VectorField, params: &RheologyParams) -> Result<VectorField> {
    v.grid().check_same(f.grid())?;
    if !v.is_finite() {
        return Err(diverged(f64::NAN, "non-finite state"));
    }
    if params.nu0().is_finite() {
        Kernel::new(*v.grid(), *params)?.full(v, Some((f.coefficients(), 1.0)), f64::NAN)
    } else {
        assemble_rhs_unsplit(v, f, params)
    }
}

fn assemble_rhs_unsplit(v: &VectorField, f: &VectorField, params: &RheologyParams) -> Result<VectorField> {
    let mut k = Kernel::new(*v.grid(), RheologyParams { p: 2.0, mu: 0.0 })?;
    k.params = *params;
    k.nu = 0.0;
    k.full(v, Some((f.coefficients(), 1.0)), f64::NAN)
}
