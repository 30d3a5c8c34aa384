use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform collocation grid on the unit torus `(0,1)^d`.
///
/// Data on the grid is stored row-major with the last axis contiguous.
/// Spectral index `i` along an axis maps to wavenumber `i` for `i < n/2`
/// and `i - n` above; the Nyquist index `n/2` is never populated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TorusGrid {
    dim: usize,
    n: usize,
}

impl TorusGrid {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::config(format!("dimension must be 2 or 3, got {dim}")));
        }
        if n < 8 || n % 2 != 0 {
            return Err(Error::config(format!(
                "points per axis must be even and at least 8, got {n}"
            )));
        }
        Ok(TorusGrid { dim, n })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of collocation points, `n^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The 2x oversampled grid used for nonlinear products.
    pub fn padded(&self) -> TorusGrid {
        TorusGrid {
            dim: self.dim,
            n: 2 * self.n,
        }
    }

    /// Grid spacing `1/n`.
    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Signed wavenumber for a one-dimensional spectral index.
    pub fn wavenumber_1d(&self, i: usize) -> i64 {
        let n = self.n as i64;
        let i = i as i64;
        if i <= n / 2 {
            i
        } else {
            i - n
        }
    }

    /// Integer wavenumber vector of a flat spectral index (third entry is 0 in 2D).
    pub fn wavevector(&self, flat: usize) -> [i64; 3] {
        let mut k = [0i64; 3];
        let mut rem = flat;
        for axis in (0..self.dim).rev() {
            k[axis] = self.wavenumber_1d(rem % self.n);
            rem /= self.n;
        }
        k
    }

    /// True if any component of the index sits on the Nyquist frequency.
    pub fn is_nyquist(&self, flat: usize) -> bool {
        let mut rem = flat;
        for _ in 0..self.dim {
            if rem % self.n == self.n / 2 {
                return true;
            }
            rem /= self.n;
        }
        false
    }

    /// Flat index of the wavenumber `-k`.
    pub fn negated(&self, flat: usize) -> usize {
        let mut rem = flat;
        let mut out = 0;
        let mut stride = 1;
        for _ in 0..self.dim {
            let i = rem % self.n;
            out += ((self.n - i) % self.n) * stride;
            stride *= self.n;
            rem /= self.n;
        }
        out
    }

    /// Flat index of an integer wavevector, if it is representable.
    pub fn index_of(&self, k: [i64; 3]) -> Option<usize> {
        let n = self.n as i64;
        let mut flat = 0usize;
        for &ki in k.iter().take(self.dim) {
            if ki.abs() >= n / 2 {
                return None;
            }
            flat = flat * self.n + ki.rem_euclid(n) as usize;
        }
        Some(flat)
    }

    /// Coordinates of a flat grid point.
    pub fn point(&self, flat: usize) -> [f64; 3] {
        let mut x = [0.0; 3];
        let mut rem = flat;
        for axis in (0..self.dim).rev() {
            x[axis] = (rem % self.n) as f64 / self.n as f64;
            rem /= self.n;
        }
        x
    }

    /// `|k|^2` for every flat spectral index (integer wavenumbers, Nyquist entries included).
    pub fn wavenumber_sq(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| {
                let k = self.wavevector(i);
                (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64
            })
            .collect()
    }

    pub fn check_same(&self, other: &TorusGrid) -> Result<()> {
        if self != other {
            return Err(Error::config(format!(
                "grid mismatch: {}D n={} vs {}D n={}",
                self.dim, self.n, other.dim, other.n
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(TorusGrid::new(2, 6).is_err());
        assert!(TorusGrid::new(2, 9).is_err());
        assert!(TorusGrid::new(4, 16).is_err());
        assert!(TorusGrid::new(3, 8).is_ok());
    }

    #[test]
    fn wavenumber_layout() {
        let g = TorusGrid::new(2, 8).unwrap();
        assert_eq!(g.wavevector(0), [0, 0, 0]);
        assert_eq!(g.wavevector(1), [0, 1, 0]);
        assert_eq!(g.wavevector(8 * 7 + 1), [-1, 1, 0]);
        assert!(g.is_nyquist(4));
        assert!(!g.is_nyquist(3));
        let idx = g.index_of([-1, 2, 0]).unwrap();
        assert_eq!(g.wavevector(idx), [-1, 2, 0]);
        assert_eq!(g.wavevector(g.negated(idx)), [1, -2, 0]);
        assert_eq!(g.index_of([4, 0, 0]), None);
    }
}
