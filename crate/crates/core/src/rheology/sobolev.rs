//! Empirical embedding constants on band-limited solenoidal fields.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{
    lp_norm, random_band_limited, GridSamples, Resolution, SpectralOperator, TorusGrid,
    VectorField,
};

/// The inequality instance an estimated constant is for. With `r = 4/(4-p)`:
///
/// | role | inequality |
/// |---|---|
/// | `Interpolation` | `‖∇v‖₃³ ≤ C³ ‖∇v‖₂^a ‖∇Dv‖_r^b`, `a = (9p-12)/(3p-2)`, `b = 6/(3p-2)` |
/// | `EnergyEmbedding` | `‖v‖_r ≤ C ‖Dv‖_p` |
/// | `GradientEmbedding` | `‖∇v‖₂² ≤ C ‖∇Dv‖_r²` |
/// | `L2Embedding` | `‖v‖₂² ≤ C ‖∇v‖_r²` |
/// | `SupEmbedding` | `‖v‖∞² ≤ C ‖∇Dv‖_r²` |
/// | `Extinction` | `‖v‖₂^p ≤ C ‖Dv‖_p^p` |
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SobolevRole {
    Interpolation,
    EnergyEmbedding,
    GradientEmbedding,
    L2Embedding,
    SupEmbedding,
    Extinction,
}

impl SobolevRole {
    pub const ALL: [SobolevRole; 6] = [
        SobolevRole::Interpolation,
        SobolevRole::EnergyEmbedding,
        SobolevRole::GradientEmbedding,
        SobolevRole::L2Embedding,
        SobolevRole::SupEmbedding,
        SobolevRole::Extinction,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SobolevRole::Interpolation => "interpolation",
            SobolevRole::EnergyEmbedding => "energy_embedding",
            SobolevRole::GradientEmbedding => "gradient_embedding",
            SobolevRole::L2Embedding => "l2_embedding",
            SobolevRole::SupEmbedding => "sup_embedding",
            SobolevRole::Extinction => "extinction",
        }
    }

    /// Factors `(operator, exponent, power)` of the quotient: the quotient
    /// is `prod ‖L v‖_q^power`, and the constant is its `root`-th root.
    fn terms(self, p: f64) -> (Vec<(OpKind, Exponent, f64)>, f64) {
        use Exponent::{Finite, Sup};
        use OpKind::*;
        let r = 4.0 / (4.0 - p);
        match self {
            SobolevRole::Interpolation => (
                vec![
                    (Gradient, Finite(3.0), 3.0),
                    (Gradient, Finite(2.0), -(9.0 * p - 12.0) / (3.0 * p - 2.0)),
                    (GradSym, Finite(r), -6.0 / (3.0 * p - 2.0)),
                ],
                3.0,
            ),
            SobolevRole::EnergyEmbedding => {
                (vec![(Identity, Finite(r), 1.0), (Sym, Finite(p), -1.0)], 1.0)
            }
            SobolevRole::GradientEmbedding => (
                vec![(Gradient, Finite(2.0), 2.0), (GradSym, Finite(r), -2.0)],
                1.0,
            ),
            SobolevRole::L2Embedding => (
                vec![(Identity, Finite(2.0), 2.0), (Gradient, Finite(r), -2.0)],
                1.0,
            ),
            SobolevRole::SupEmbedding => {
                (vec![(Identity, Sup, 2.0), (GradSym, Finite(r), -2.0)], 1.0)
            }
            SobolevRole::Extinction => {
                (vec![(Identity, Finite(2.0), p), (Sym, Finite(p), -p)], 1.0)
            }
        }
    }
}

impl fmt::Display for SobolevRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SobolevRole {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SobolevRole::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::argument(format!("unknown Sobolev role {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum OpKind {
    Identity,
    Gradient,
    Sym,
    GradSym,
}

impl OpKind {
    fn operator(self, dim: usize) -> SpectralOperator {
        match self {
            OpKind::Identity => SpectralOperator::identity(dim),
            OpKind::Gradient => SpectralOperator::gradient(dim),
            OpKind::Sym => SpectralOperator::sym_gradient(dim),
            OpKind::GradSym => SpectralOperator::grad_sym_gradient(dim),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Exponent {
    Finite(f64),
    Sup,
}

fn norm_of(s: &GridSamples, e: Exponent) -> f64 {
    match e {
        Exponent::Finite(q) => lp_norm(s, q).expect("q >= 1"),
        Exponent::Sup => crate::spectral::sup_norm(s),
    }
}

/// Grid-space weight whose adjoint image is the gradient of `log ‖s‖`.
fn log_norm_weight(s: &GridSamples, e: Exponent) -> GridSamples {
    let n = s.grid().len();
    let mut out = GridSamples::with_weights(
        *s.grid(),
        vec![vec![0.0; n]; s.components()],
        s.weights().to_vec(),
    )
    .expect("same shape");
    match e {
        Exponent::Finite(q) => {
            let total: f64 = (0..n).map(|x| s.magnitude_sq_at(x).powf(q / 2.0)).sum::<f64>() / n as f64;
            for x in 0..n {
                let m2 = s.magnitude_sq_at(x);
                if m2 == 0.0 {
                    continue;
                }
                let f = m2.powf(q / 2.0 - 1.0) / total;
                for c in 0..s.components() {
                    out.comps_mut()[c][x] = f * s.weights()[c] * s.comps()[c][x];
                }
            }
        }
        Exponent::Sup => {
            let (arg, m2) = (0..n)
                .map(|x| (x, s.magnitude_sq_at(x)))
                .fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
            if m2 > 0.0 {
                for c in 0..s.components() {
                    out.comps_mut()[c][arg] = n as f64 * s.weights()[c] * s.comps()[c][arg] / m2;
                }
            }
        }
    }
    out
}

struct Quotient {
    terms: Vec<(SpectralOperator, Exponent, f64)>,
    root: f64,
}

impl Quotient {
    fn new(dim: usize, p: f64, role: SobolevRole) -> Self {
        let (t, root) = role.terms(p);
        Quotient {
            terms: t.into_iter().map(|(o, e, w)| (o.operator(dim), e, w)).collect(),
            root,
        }
    }

    fn log_value(&self, v: &VectorField) -> f64 {
        self.terms
            .iter()
            .map(|(op, e, w)| w * norm_of(&op.apply(v, Resolution::Padded), *e).ln())
            .sum()
    }

    /// `log Q` and its L2 gradient, restricted to solenoidal fields.
    fn log_value_and_gradient(&self, v: &VectorField) -> (f64, VectorField) {
        let grid = *v.grid();
        let mut value = 0.0;
        let mut grad = vec![vec![Complex64::new(0.0, 0.0); grid.len()]; grid.dim()];
        for (op, e, w) in &self.terms {
            let s = op.apply(v, Resolution::Padded);
            value += w * norm_of(&s, *e).ln();
            let g = op.adjoint(&grid, &log_norm_weight(&s, *e));
            for (a, b) in grad.iter_mut().zip(g) {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y * *w;
                }
            }
        }
        let g = VectorField::from_spectral(grid, grad)
            .expect("grid-shaped")
            .project_solenoidal();
        (value, g)
    }
}

/// The constant-form value of a role's quotient for one field
/// (`Q^(1/3)` for the interpolation role, `Q` otherwise).
pub fn sobolev_quotient(v: &VectorField, p: f64, role: SobolevRole) -> Result<f64> {
    if v.l2_norm_sq() == 0.0 {
        return Err(Error::argument("quotient is undefined for the zero field"));
    }
    let q = Quotient::new(v.dim(), p, role);
    Ok((q.log_value(v) / q.root).exp())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SobolevOptions {
    pub samples: usize,
    /// Refinement starts from this many of the best samples.
    pub refine_from: usize,
    pub ascent_iters: usize,
    pub safety: f64,
    pub seed: u64,
}

impl Default for SobolevOptions {
    fn default() -> Self {
        SobolevOptions {
            samples: 1000,
            refine_from: 3,
            ascent_iters: 40,
            safety: 1.1,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SobolevEstimate {
    pub role: SobolevRole,
    /// Best quotient seen, before the safety factor.
    pub observed: f64,
    pub sampled_max: f64,
    pub constant: f64,
}

/// Maximizes a role's quotient over random band-limited solenoidal fields,
/// refines the best few by gradient ascent, and applies the safety factor.
pub fn estimate_sobolev_constant(
    grid: &TorusGrid,
    p: f64,
    role: SobolevRole,
    opts: &SobolevOptions,
) -> Result<SobolevEstimate> {
    if !(p > 1.0 && p <= 2.0) {
        return Err(Error::argument(format!("p must lie in (1, 2], got {p}")));
    }
    if opts.samples == 0 || !(opts.safety >= 1.0) {
        return Err(Error::argument("need at least one sample and a safety factor >= 1"));
    }
    let quotient = Quotient::new(grid.dim(), p, role);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ (role as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let kmax_top = (grid.n() / 2 - 1) as f64;
    let mut scored: Vec<(f64, VectorField)> = Vec::with_capacity(opts.samples);
    while scored.len() < opts.samples {
        let decay = rng.random_range(0.0..4.0);
        let kmax = if rng.random_bool(0.5) {
            Some(rng.random_range(1.0..=kmax_top))
        } else {
            None
        };
        let v = random_band_limited(grid, rng.random(), decay, kmax).project_solenoidal();
        let n = v.l2_norm();
        if n == 0.0 {
            continue;
        }
        let v = v.scaled(1.0 / n);
        scored.push((quotient.log_value(&v), v));
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let sampled_max = scored[0].0;
    let mut best = sampled_max;
    for (start, v) in scored.into_iter().take(opts.refine_from.max(1)) {
        best = best.max(ascend(&quotient, v, start, opts.ascent_iters));
    }
    let observed = (best / quotient.root).exp();
    Ok(SobolevEstimate {
        role,
        observed,
        sampled_max: (sampled_max / quotient.root).exp(),
        constant: opts.safety * observed,
    })
}

fn ascend(q: &Quotient, mut v: VectorField, mut value: f64, iters: usize) -> f64 {
    let mut step = 0.1;
    for _ in 0..iters {
        let (_, g) = q.log_value_and_gradient(&v);
        let gn = g.l2_norm();
        if gn == 0.0 || !gn.is_finite() {
            break;
        }
        let mut accepted = false;
        while step > 1e-8 {
            let trial = v.add_scaled(&g, step / gn).expect("same grid");
            let n = trial.l2_norm();
            let trial = trial.scaled(1.0 / n);
            let tv = q.log_value(&trial);
            if tv > value {
                v = trial;
                value = tv;
                step *= 1.5;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    value
}
