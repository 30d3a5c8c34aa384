//! Second-order exponential time differencing (ETD2RK).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::forcing::ForcingSpec;
use super::kernel::Kernel;
use crate::error::{Error, Result};
use crate::rheology::RheologyParams;
use crate::spectral::{TorusGrid, VectorField};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeStepPolicy {
    /// Nominal step.
    pub dt_init: f64,
    /// Advective CFL number, `dt * max|v| / h`.
    pub cfl: f64,
    pub max_dt: f64,
}

impl TimeStepPolicy {
    pub fn fixed(dt: f64) -> Self {
        TimeStepPolicy {
            dt_init: dt,
            cfl: f64::INFINITY,
            max_dt: dt,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt_init > 0.0 && self.dt_init.is_finite()) {
            return Err(Error::config(format!("dt_init must be positive, got {}", self.dt_init)));
        }
        if !(self.cfl > 0.0) || !(self.max_dt > 0.0) {
            return Err(Error::config("cfl and max_dt must be positive"));
        }
        Ok(())
    }

    pub fn step_for(&self, grid: &TorusGrid, speed: f64) -> f64 {
        let mut dt = self.dt_init.min(self.max_dt);
        if speed > 0.0 && self.cfl.is_finite() {
            dt = dt.min(self.cfl * grid.spacing() / speed);
        }
        dt
    }
}

/// `phi1(z) = (e^z - 1)/z` and `phi2(z) = (e^z - 1 - z)/z^2`.
fn phi12(z: f64) -> (f64, f64) {
    if z.abs() < 1.0 {
        // phi_j(z) = sum_n z^n / (n + j)!
        let mut p1 = 0.0;
        let mut p2 = 0.0;
        let mut term = 1.0; // z^n / n!
        for n in 0..20 {
            p1 += term / (n + 1) as f64;
            p2 += term / ((n + 1) * (n + 2)) as f64;
            term *= z / (n + 1) as f64;
        }
        (p1, p2)
    } else {
        let e = z.exp_m1();
        (e / z, (e - z) / (z * z))
    }
}

struct Coefficients {
    dt: f64,
    decay: Vec<f64>,
    h_phi1: Vec<f64>,
    h_phi2: Vec<f64>,
}

/// Advances `v' = -A v + N(v, t)` with `A` diagonal in Fourier space.
pub struct Integrator {
    kernel: Kernel,
    rates: Vec<f64>,
    forcing: ForcingSpec,
    cache: Vec<Coefficients>,
}

impl Integrator {
    pub fn new(grid: TorusGrid, params: RheologyParams, forcing: &ForcingSpec) -> Result<Self> {
        grid.check_same(forcing.profile().grid())?;
        let kernel = Kernel::new(grid, params)?;
        Ok(Integrator {
            rates: kernel.linear_rates(),
            kernel,
            forcing: forcing.clone(),
            cache: Vec::new(),
        })
    }

    pub fn grid(&self) -> &TorusGrid {
        self.kernel.grid()
    }

    pub fn params(&self) -> &RheologyParams {
        self.kernel.params()
    }

    pub fn forcing(&self) -> &ForcingSpec {
        &self.forcing
    }

    fn coefficients(&mut self, dt: f64) -> &Coefficients {
        if let Some(i) = self.cache.iter().position(|c| c.dt == dt) {
            return &self.cache[i];
        }
        let mut c = Coefficients {
            dt,
            decay: Vec::with_capacity(self.rates.len()),
            h_phi1: Vec::with_capacity(self.rates.len()),
            h_phi2: Vec::with_capacity(self.rates.len()),
        };
        for &a in &self.rates {
            let z = -a * dt;
            let (p1, p2) = phi12(z);
            c.decay.push(z.exp());
            c.h_phi1.push(dt * p1);
            c.h_phi2.push(dt * p2);
        }
        // a fixed step plus a clipped final step covers nearly all use
        if self.cache.len() >= 4 {
            self.cache.remove(0);
        }
        self.cache.push(c);
        self.cache.last().unwrap()
    }

    fn nonlinear(&self, v: &[Vec<Complex64>], t: f64) -> Result<(Vec<Vec<Complex64>>, f64)> {
        let s = self.forcing.scale_at(t);
        let f = (s != 0.0).then(|| (self.forcing.profile().coefficients(), s));
        self.kernel.nonlinear(v, f, t)
    }

    /// Largest speed of `v` on the padded grid.
    pub fn speed(&self, v: &VectorField) -> Result<f64> {
        Ok(self.nonlinear(v.coefficients(), 0.0)?.1)
    }

    /// One step of length `dt` from time `t`.
    pub fn step(&mut self, v: &VectorField, t: f64, dt: f64) -> Result<VectorField> {
        Ok(self.advance(v, t, &TimeStepPolicy::fixed(dt), dt)?.0)
    }

    /// One step whose length follows `policy`, never exceeding `max_step`.
    /// Returns the new state and the step taken.
    pub fn advance(
        &mut self,
        v: &VectorField,
        t: f64,
        policy: &TimeStepPolicy,
        max_step: f64,
    ) -> Result<(VectorField, f64)> {
        let (n0, speed) = self.nonlinear(v.coefficients(), t)?;
        let dt = policy.step_for(self.kernel.grid(), speed).min(max_step);
        if !(dt > 0.0) {
            return Err(Error::config(format!("step size collapsed to {dt} at t = {t}")));
        }
        let coef = self.coefficients(dt);
        let (decay, h1, h2) = (coef.decay.clone(), coef.h_phi1.clone(), coef.h_phi2.clone());
        let mut a: Vec<Vec<Complex64>> = v.coefficients().to_vec();
        for (ac, nc) in a.iter_mut().zip(&n0) {
            for k in 0..ac.len() {
                ac[k] = ac[k] * decay[k] + nc[k] * h1[k];
            }
        }
        let (n1, _) = self.nonlinear(&a, t + dt)?;
        for ((ac, n1c), n0c) in a.iter_mut().zip(&n1).zip(&n0) {
            for k in 0..ac.len() {
                ac[k] += (n1c[k] - n0c[k]) * h2[k];
            }
        }
        let mut out = VectorField::from_raw(*self.kernel.grid(), a, true);
        out.project_in_place();
        Ok((out, dt))
    }
}
