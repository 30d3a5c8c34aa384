//! Time-periodic body forces `f(t, x) = amplitude * m(t) * profile(x)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rheology::SmallnessBudget;
use crate::spectral::{lp_norm, Resolution, VectorField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowShape {
    Flat,
    /// `sin^2(pi t / t_f)`, smooth at both ends of the window.
    SinSquared,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Modulation {
    Constant,
    /// `mean + swing * sin(2 pi t / period)`.
    Periodic { period: f64, mean: f64, swing: f64 },
    /// Active on `[0, t_f)` of each period, exactly zero on `[t_f, period)`.
    Extinction {
        period: f64,
        t_f: f64,
        shape: WindowShape,
    },
}

impl Modulation {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Modulation::Constant => Ok(()),
            Modulation::Periodic { period, mean, swing } => {
                if !(period > 0.0 && period.is_finite()) || !mean.is_finite() || !swing.is_finite() {
                    return Err(Error::config("periodic modulation needs a positive period and finite coefficients"));
                }
                Ok(())
            }
            Modulation::Extinction { period, t_f, .. } => {
                if !(period > 0.0 && period.is_finite()) || !(t_f >= 0.0 && t_f <= period) {
                    return Err(Error::config(format!(
                        "extinction window needs 0 <= t_f <= period, got t_f = {t_f}, period = {period}"
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn period(&self) -> Option<f64> {
        match *self {
            Modulation::Constant => None,
            Modulation::Periodic { period, .. } | Modulation::Extinction { period, .. } => {
                Some(period)
            }
        }
    }

    /// The instant after which the force vanishes within each period.
    pub fn cutoff(&self) -> Option<f64> {
        match *self {
            Modulation::Extinction { t_f, .. } => Some(t_f),
            _ => None,
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Modulation::Constant => 1.0,
            Modulation::Periodic { period, mean, swing } => {
                let phase = t.rem_euclid(period) / period;
                mean + swing * (2.0 * PI * phase).sin()
            }
            Modulation::Extinction { period, t_f, shape } => {
                let s = t.rem_euclid(period);
                if s >= t_f {
                    0.0
                } else {
                    match shape {
                        WindowShape::Flat => 1.0,
                        WindowShape::SinSquared => (PI * s / t_f).sin().powi(2),
                    }
                }
            }
        }
    }

    /// `sup_t |m(t)|`.
    pub fn sup_abs(&self) -> f64 {
        match *self {
            Modulation::Constant => 1.0,
            Modulation::Periodic { mean, swing, .. } => mean.abs() + swing.abs(),
            Modulation::Extinction { t_f, .. } => {
                if t_f > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ForcingSpec {
    profile: VectorField,
    modulation: Modulation,
    amplitude: f64,
}

impl ForcingSpec {
    pub fn new(profile: VectorField, modulation: Modulation, amplitude: f64) -> Result<Self> {
        modulation.validate()?;
        if !amplitude.is_finite() {
            return Err(Error::config("forcing amplitude must be finite"));
        }
        if !profile.is_finite() {
            return Err(Error::config("forcing profile must be finite"));
        }
        Ok(ForcingSpec {
            profile,
            modulation,
            amplitude,
        })
    }

    pub fn zero(grid: crate::spectral::TorusGrid) -> Self {
        ForcingSpec {
            profile: VectorField::zeros(grid),
            modulation: Modulation::Constant,
            amplitude: 0.0,
        }
    }

    pub fn profile(&self) -> &VectorField {
        &self.profile
    }

    pub fn modulation(&self) -> &Modulation {
        &self.modulation
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn period(&self) -> Option<f64> {
        self.modulation.period()
    }

    pub fn is_zero(&self) -> bool {
        self.amplitude == 0.0 || self.profile.l2_norm_sq() == 0.0 || self.modulation.sup_abs() == 0.0
    }

    /// Scalar multiplying the profile at time `t`.
    pub fn scale_at(&self, t: f64) -> f64 {
        self.amplitude * self.modulation.value(t)
    }

    pub fn at(&self, t: f64) -> VectorField {
        self.profile.scaled(self.scale_at(t))
    }

    /// `||profile||_q`, evaluated on the padded grid.
    pub fn profile_norm(&self, q: f64) -> f64 {
        lp_norm(&self.profile.to_grid_at(Resolution::Padded), q).expect("q >= 1")
    }

    /// `||f(t)||_q`.
    pub fn norm_at(&self, t: f64, q: f64) -> f64 {
        self.scale_at(t).abs() * self.profile_norm(q)
    }

    /// `sup_t ||f(t)||_q`.
    pub fn sup_norm(&self, q: f64) -> f64 {
        self.amplitude.abs() * self.modulation.sup_abs() * self.profile_norm(q)
    }

    /// Rescales the amplitude so that `sup_t ||f(t)||_(4/p)` equals `target`.
    pub fn scaled_to(&self, p: f64, target: f64) -> Result<Self> {
        let s = self.modulation.sup_abs() * self.profile_norm(4.0 / p);
        if s == 0.0 {
            if target == 0.0 {
                return Ok(self.clone());
            }
            return Err(Error::argument("cannot rescale a vanishing force to a nonzero norm"));
        }
        Ok(ForcingSpec {
            amplitude: target / s,
            ..self.clone()
        })
    }

    /// Checks `sup_t ||f(t)||_(4/p) <= K`.
    pub fn check_budget(&self, budget: &SmallnessBudget) -> Result<()> {
        let p = budget.params.p;
        let n = self.sup_norm(4.0 / p);
        if n > budget.k * (1.0 + 1e-12) {
            return Err(Error::precondition(format!(
                "force norm {n:.6e} exceeds the bound K = {:.6e}",
                budget.k
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{random_solenoidal, TorusGrid};

    #[test]
    fn modulations_are_periodic() {
        let mods = [
            Modulation::Periodic { period: 0.7, mean: 0.2, swing: 0.5 },
            Modulation::Extinction { period: 1.0, t_f: 0.5, shape: WindowShape::SinSquared },
            Modulation::Extinction { period: 1.0, t_f: 0.5, shape: WindowShape::Flat },
        ];
        for m in mods {
            let per = m.period().unwrap();
            for i in 0..50 {
                let t = 0.0137 * i as f64;
                assert!((m.value(t + per) - m.value(t)).abs() < 1e-12);
                assert!(m.value(t).abs() <= m.sup_abs() + 1e-15);
            }
        }
        let m = Modulation::Extinction { period: 1.0, t_f: 0.5, shape: WindowShape::SinSquared };
        for t in [0.5, 0.6, 0.99, 1.5, 2.75] {
            assert_eq!(m.value(t), 0.0);
        }
        assert!(m.value(0.25) > 0.99);
        assert!(Modulation::Extinction { period: 1.0, t_f: 1.5, shape: WindowShape::Flat }.validate().is_err());
    }

    #[test]
    fn rescaling_hits_target() {
        let grid = TorusGrid::new(2, 16).unwrap();
        let prof = random_solenoidal(&grid, 1, 1.0, 1.0, None).unwrap();
        let f = ForcingSpec::new(prof, Modulation::Periodic { period: 1.0, mean: 0.0, swing: 1.0 }, 1.0).unwrap();
        let g = f.scaled_to(5.0 / 3.0, 0.02).unwrap();
        assert!((g.sup_norm(4.0 / (5.0 / 3.0)) - 0.02).abs() < 1e-15);
        assert!((g.norm_at(0.25, 2.4) - 0.02).abs() < 1e-12);
        assert!(ForcingSpec::zero(grid).is_zero());
    }
}
