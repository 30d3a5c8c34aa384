//! Multi-dimensional complex FFTs on the torus, with two real transforms
//! packed into each complex one.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::grid::TorusGrid;

type Plan = Arc<dyn Fft<f64>>;

struct Plans {
    forward: Plan,
    inverse: Plan,
}

fn plans(n: usize) -> Arc<Plans> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Plans>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().expect("fft plan cache poisoned");
    map.entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Arc::new(Plans {
                forward: planner.plan_fft_forward(n),
                inverse: planner.plan_fft_inverse(n),
            })
        })
        .clone()
}

#[derive(Clone, Copy)]
enum Direction {
    Forward,
    Inverse,
}

thread_local! {
    static BUFFERS: RefCell<(Vec<Complex64>, Vec<Complex64>)> = const { RefCell::new((Vec::new(), Vec::new())) };
}

/// Unnormalized in-place transform along every axis.
fn transform(grid: &TorusGrid, data: &mut [Complex64], dir: Direction) {
    let n = grid.n();
    let dim = grid.dim();
    debug_assert_eq!(data.len(), grid.len());
    let p = plans(n);
    let plan = match dir {
        Direction::Forward => &p.forward,
        Direction::Inverse => &p.inverse,
    };
    BUFFERS.with(|cell| {
        let (scratch, buf) = &mut *cell.borrow_mut();
        let need = plan.get_inplace_scratch_len();
        if scratch.len() < need {
            scratch.resize(need, Complex64::new(0.0, 0.0));
        }
        let scratch = &mut scratch[..need];

        // contiguous last axis
        plan.process_with_scratch(data, scratch);

        // strided axes: transpose one block at a time into contiguous lines
        let total = data.len();
        for axis in 0..dim - 1 {
            let stride = n.pow((dim - 1 - axis) as u32);
            let block = n * stride;
            if buf.len() < block {
                buf.resize(block, Complex64::new(0.0, 0.0));
            }
            let lines = &mut buf[..block];
            for chunk in data.chunks_exact_mut(block) {
                for j in 0..n {
                    let row = &chunk[j * stride..(j + 1) * stride];
                    for (inner, z) in row.iter().enumerate() {
                        lines[inner * n + j] = *z;
                    }
                }
                plan.process_with_scratch(lines, scratch);
                for j in 0..n {
                    let row = &mut chunk[j * stride..(j + 1) * stride];
                    for (inner, z) in row.iter_mut().enumerate() {
                        *z = lines[inner * n + j];
                    }
                }
            }
            debug_assert_eq!(total % block, 0);
        }
    });
}

/// Physical Fourier coefficients `c(k) = N^{-d} sum_x u(x) e^{-2 pi i k.x}` of complex data.
pub(crate) fn forward_complex(grid: &TorusGrid, data: &mut [Complex64]) {
    transform(grid, data, Direction::Forward);
    let scale = 1.0 / grid.len() as f64;
    for c in data.iter_mut() {
        *c *= scale;
    }
}

/// Synthesis `u(x) = sum_k c(k) e^{2 pi i k.x}`.
pub(crate) fn inverse_complex(grid: &TorusGrid, data: &mut [Complex64]) {
    transform(grid, data, Direction::Inverse);
}

/// Synthesizes real samples for a batch of Hermitian spectra on `grid`.
///
/// Spectra are packed pairwise as `a + i b`, halving the transform count.
pub(crate) fn synthesize_real(grid: &TorusGrid, spectra: &[Vec<Complex64>]) -> Vec<Vec<f64>> {
    let len = grid.len();
    let mut out = Vec::with_capacity(spectra.len());
    let i = Complex64::new(0.0, 1.0);
    for pair in spectra.chunks(2) {
        let mut work: Vec<Complex64> = match pair {
            [a, b] => a.iter().zip(b).map(|(x, y)| x + i * y).collect(),
            [a] => a.clone(),
            _ => unreachable!(),
        };
        debug_assert_eq!(work.len(), len);
        inverse_complex(grid, &mut work);
        out.push(work.iter().map(|z| z.re).collect());
        if pair.len() == 2 {
            out.push(work.iter().map(|z| z.im).collect());
        }
    }
    out
}

/// Fourier coefficients of a batch of real sample arrays on `grid`.
///
/// The unpacked spectra are exactly Hermitian by construction.
pub(crate) fn analyze_real(grid: &TorusGrid, samples: &[&[f64]]) -> Vec<Vec<Complex64>> {
    let len = grid.len();
    let neg = negation_table(grid);
    let mut out = Vec::with_capacity(samples.len());
    for pair in samples.chunks(2) {
        let mut work: Vec<Complex64> = match pair {
            [a, b] => a
                .iter()
                .zip(b.iter())
                .map(|(&x, &y)| Complex64::new(x, y))
                .collect(),
            [a] => a.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
            _ => unreachable!(),
        };
        debug_assert_eq!(work.len(), len);
        forward_complex(grid, &mut work);
        let mut first = vec![Complex64::new(0.0, 0.0); len];
        let mut second = if pair.len() == 2 {
            vec![Complex64::new(0.0, 0.0); len]
        } else {
            Vec::new()
        };
        for k in 0..len {
            let z = work[k];
            let zc = work[neg[k]].conj();
            first[k] = (z + zc) * 0.5;
            if pair.len() == 2 {
                // (z - conj z(-k)) / 2i
                let d = (z - zc) * 0.5;
                second[k] = Complex64::new(d.im, -d.re);
            }
        }
        out.push(first);
        if pair.len() == 2 {
            out.push(second);
        }
    }
    out
}

fn negation_table(grid: &TorusGrid) -> Arc<Vec<usize>> {
    static CACHE: OnceLock<Mutex<HashMap<TorusGrid, Arc<Vec<usize>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().expect("negation cache poisoned");
    map.entry(*grid)
        .or_insert_with(|| Arc::new((0..grid.len()).map(|k| grid.negated(k)).collect()))
        .clone()
}

/// Copies the retained modes of a base-grid spectrum onto a finer grid.
pub(crate) fn pad(base: &TorusGrid, fine: &TorusGrid, spec: &[Complex64]) -> Vec<Complex64> {
    if base == fine {
        return spec.to_vec();
    }
    let mut out = vec![Complex64::new(0.0, 0.0); fine.len()];
    for (k, c) in spec.iter().enumerate() {
        if *c == Complex64::new(0.0, 0.0) || base.is_nyquist(k) {
            continue;
        }
        let idx = fine
            .index_of(base.wavevector(k))
            .expect("coarse wavenumber fits on the fine grid");
        out[idx] = *c;
    }
    out
}

/// Keeps the modes of a fine-grid spectrum that the base grid retains.
pub(crate) fn truncate(base: &TorusGrid, fine: &TorusGrid, spec: &[Complex64]) -> Vec<Complex64> {
    if base == fine {
        let mut out = spec.to_vec();
        for (k, c) in out.iter_mut().enumerate() {
            if base.is_nyquist(k) {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        return out;
    }
    let map = truncation_map(base, fine);
    map.iter()
        .map(|m| match m {
            Some(idx) => spec[*idx],
            None => Complex64::new(0.0, 0.0),
        })
        .collect()
}

fn truncation_map(base: &TorusGrid, fine: &TorusGrid) -> Arc<Vec<Option<usize>>> {
    type Key = (TorusGrid, TorusGrid);
    static CACHE: OnceLock<Mutex<HashMap<Key, Arc<Vec<Option<usize>>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().expect("truncation cache poisoned");
    map.entry((*base, *fine))
        .or_insert_with(|| {
            Arc::new(
                (0..base.len())
                    .map(|k| {
                        if base.is_nyquist(k) {
                            None
                        } else {
                            fine.index_of(base.wavevector(k))
                        }
                    })
                    .collect(),
            )
        })
        .clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Naive O(N^{2d}) synthesis used as an oracle.
    fn direct_synthesis(grid: &TorusGrid, spec: &[Complex64]) -> Vec<f64> {
        (0..grid.len())
            .map(|x| {
                let pt = grid.point(x);
                let mut acc = Complex64::new(0.0, 0.0);
                for (k, c) in spec.iter().enumerate() {
                    let kv = grid.wavevector(k);
                    let phase = 2.0
                        * PI
                        * (kv[0] as f64 * pt[0] + kv[1] as f64 * pt[1] + kv[2] as f64 * pt[2]);
                    acc += c * Complex64::from_polar(1.0, phase);
                }
                acc.re
            })
            .collect()
    }

    fn hermitian_random(grid: &TorusGrid, seed: u64) -> Vec<Complex64> {
        // small LCG keeps this test independent of the crate's RNG plumbing
        let mut state = seed;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let mut spec = vec![Complex64::new(0.0, 0.0); grid.len()];
        for k in 0..grid.len() {
            if k == 0 || grid.is_nyquist(k) {
                continue;
            }
            let nk = grid.negated(k);
            if nk < k {
                continue;
            }
            let c = Complex64::new(next(), next());
            spec[k] = c;
            spec[nk] = c.conj();
        }
        spec
    }

    #[test]
    fn synthesis_matches_direct_summation() {
        let grid = TorusGrid::new(2, 8).unwrap();
        let a = hermitian_random(&grid, 3);
        let b = hermitian_random(&grid, 4);
        let fast = synthesize_real(&grid, &[a.clone(), b.clone()]);
        for (spec, got) in [a, b].iter().zip(&fast) {
            let want = direct_synthesis(&grid, spec);
            for (x, y) in got.iter().zip(&want) {
                assert!((x - y).abs() < 1e-12, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn analysis_inverts_synthesis() {
        for grid in [TorusGrid::new(2, 16).unwrap(), TorusGrid::new(3, 8).unwrap()] {
            let specs: Vec<_> = (0..3).map(|s| hermitian_random(&grid, s)).collect();
            let samples = synthesize_real(&grid, &specs);
            let refs: Vec<&[f64]> = samples.iter().map(|s| s.as_slice()).collect();
            let back = analyze_real(&grid, &refs);
            for (s, b) in specs.iter().zip(&back) {
                for (x, y) in s.iter().zip(b) {
                    assert!((x - y).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn padding_preserves_samples_of_band_limited_data() {
        let base = TorusGrid::new(2, 8).unwrap();
        let fine = base.padded();
        let spec = hermitian_random(&base, 9);
        let coarse = synthesize_real(&base, &[spec.clone()]);
        let padded = pad(&base, &fine, &spec);
        let fine_samples = synthesize_real(&fine, &[padded.clone()]);
        // every coarse point is also a fine point
        for x in 0..base.len() {
            let p = base.point(x);
            let fi = ((p[0] * 16.0).round() as usize) * 16 + (p[1] * 16.0).round() as usize;
            assert!((coarse[0][x] - fine_samples[0][fi]).abs() < 1e-12);
        }
        let back = truncate(&base, &fine, &padded);
        assert_eq!(back, spec);
    }
}
