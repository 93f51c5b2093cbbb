use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_GRID_POINTS: usize = 4096;

/// Periodic momentum grid `p_axis = 2 pi k / L`, `k in 0..L`, in one or two
/// dimensions. Point index `k_0 + L k_1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MomentumGrid {
    dims: usize,
    side: usize,
}

impl MomentumGrid {
    pub fn new(dims: usize, side: usize) -> Result<Self> {
        if !(1..=2).contains(&dims) {
            return Err(Error::InvalidParameter(format!("grid dimension must be 1 or 2, got {dims}")));
        }
        if side < 2 {
            return Err(Error::InvalidParameter(format!("grid side must be >= 2, got {side}")));
        }
        if side.pow(dims as u32) > MAX_GRID_POINTS {
            return Err(Error::InvalidParameter(format!(
                "{side}^{dims} grid points exceed the cap of {MAX_GRID_POINTS}"
            )));
        }
        Ok(MomentumGrid { dims, side })
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn len(&self) -> usize {
        self.side.pow(self.dims as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn components(&self, k: usize) -> [usize; 2] {
        [k % self.side, if self.dims == 2 { k / self.side } else { 0 }]
    }

    fn index(&self, c: [usize; 2]) -> usize {
        c[0] + self.side * c[1]
    }

    /// `k1 + k2` modulo the grid.
    pub fn add(&self, k1: usize, k2: usize) -> usize {
        let (a, b) = (self.components(k1), self.components(k2));
        self.index([(a[0] + b[0]) % self.side, (a[1] + b[1]) % self.side])
    }

    /// `k1 - k2` modulo the grid.
    pub fn sub(&self, k1: usize, k2: usize) -> usize {
        let (a, b) = (self.components(k1), self.components(k2));
        let l = self.side;
        self.index([(a[0] + l - b[0]) % l, (a[1] + l - b[1]) % l])
    }

    pub fn momentum(&self, k: usize) -> Vec<f64> {
        let c = self.components(k);
        (0..self.dims).map(|a| 2.0 * PI * c[a] as f64 / self.side as f64).collect()
    }

    /// Momentum components wrapped into `(-pi, pi]`.
    pub fn wrapped_momentum(&self, k: usize) -> Vec<f64> {
        let c = self.components(k);
        (0..self.dims)
            .map(|a| {
                let kk = c[a] as isize;
                let l = self.side as isize;
                let w = if 2 * kk <= l { kk } else { kk - l };
                2.0 * PI * w as f64 / self.side as f64
            })
            .collect()
    }
}

/// Single-particle band `eps(p)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Dispersion {
    /// `-2 J sum_axis cos p_axis`.
    Cosine { hopping: f64 },
    /// `J sum_axis p_axis^2` with `p_axis` wrapped into `(-pi, pi]`.
    Quadratic { hopping: f64 },
    /// Explicit values per grid point.
    Table(Vec<f64>),
}

impl Dispersion {
    pub fn energies(&self, grid: &MomentumGrid) -> Result<Vec<f64>> {
        let out: Vec<f64> = match self {
            Dispersion::Cosine { hopping } => (0..grid.len())
                .map(|k| -2.0 * hopping * grid.momentum(k).iter().map(|p| p.cos()).sum::<f64>())
                .collect(),
            Dispersion::Quadratic { hopping } => (0..grid.len())
                .map(|k| hopping * grid.wrapped_momentum(k).iter().map(|p| p * p).sum::<f64>())
                .collect(),
            Dispersion::Table(v) => {
                if v.len() != grid.len() {
                    return Err(Error::DimensionMismatch { expected: grid.len(), got: v.len() });
                }
                v.clone()
            }
        };
        if out.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidParameter("dispersion must be finite".into()));
        }
        Ok(out)
    }

    /// Energy scale used for shell tolerances.
    pub fn scale(&self) -> f64 {
        match self {
            Dispersion::Cosine { hopping } | Dispersion::Quadratic { hopping } => hopping.abs().max(f64::MIN_POSITIVE),
            Dispersion::Table(v) => v.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modular_arithmetic() {
        let g = MomentumGrid::new(2, 4).unwrap();
        assert_eq!(g.len(), 16);
        let k = g.add(g.index([3, 1]), g.index([2, 3]));
        assert_eq!(g.components(k), [1, 0]);
        assert_eq!(g.sub(k, g.index([2, 3])), g.index([3, 1]));
        assert!(MomentumGrid::new(3, 4).is_err());
        assert!(MomentumGrid::new(1, 1).is_err());
        assert!(MomentumGrid::new(2, 65).is_err());
    }

    #[test]
    fn cosine_band_sums_to_zero() {
        let g = MomentumGrid::new(2, 6).unwrap();
        let e = Dispersion::Cosine { hopping: 1.0 }.energies(&g).unwrap();
        assert!(e.iter().sum::<f64>().abs() < 1e-12);
        assert!((e[0] + 4.0).abs() < 1e-15);
    }

    #[test]
    fn quadratic_band_is_even() {
        let g = MomentumGrid::new(1, 8).unwrap();
        let e = Dispersion::Quadratic { hopping: 1.0 }.energies(&g).unwrap();
        for k in 1..8 {
            assert!((e[k] - e[8 - k]).abs() < 1e-15);
        }
        assert!((e[4] - PI * PI).abs() < 1e-14);
    }
}
