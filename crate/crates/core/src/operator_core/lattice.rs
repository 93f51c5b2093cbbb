use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard cap on the number of sites: dense matrices of dimension `2^N`.
pub const MAX_SITES: usize = 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Geometry {
    Chain,
    /// Row-major grid; site `(x, y)` has index `y * width + x`.
    Grid { width: usize, height: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundary {
    Periodic,
    Open,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeSpec {
    sites: usize,
    geometry: Geometry,
    boundary: Boundary,
}

impl LatticeSpec {
    pub fn chain(sites: usize, boundary: Boundary) -> Result<Self> {
        Self::new(sites, Geometry::Chain, boundary)
    }

    pub fn grid(width: usize, height: usize, boundary: Boundary) -> Result<Self> {
        Self::new(width * height, Geometry::Grid { width, height }, boundary)
    }

    pub fn new(sites: usize, geometry: Geometry, boundary: Boundary) -> Result<Self> {
        if sites == 0 {
            return Err(Error::InvalidLattice("at least one site is required".into()));
        }
        if sites > MAX_SITES {
            return Err(Error::TooManySites(sites, MAX_SITES));
        }
        if let Geometry::Grid { width, height } = geometry {
            if width == 0 || height == 0 || width * height != sites {
                return Err(Error::InvalidLattice(format!(
                    "grid {width}x{height} does not have {sites} sites"
                )));
            }
        }
        Ok(LatticeSpec { sites, geometry, boundary })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn dim(&self) -> usize {
        1 << self.sites
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.sites {
            Err(Error::SiteOutOfRange { site, sites: self.sites })
        } else {
            Ok(())
        }
    }

    /// Side lengths per axis (`[N]` for a chain).
    pub fn extents(&self) -> Vec<usize> {
        match self.geometry {
            Geometry::Chain => vec![self.sites],
            Geometry::Grid { width, height } => vec![width, height],
        }
    }

    pub fn coords(&self, site: usize) -> Vec<usize> {
        match self.geometry {
            Geometry::Chain => vec![site],
            Geometry::Grid { width, .. } => vec![site % width, site / width],
        }
    }

    pub fn site_at(&self, coords: &[usize]) -> usize {
        match self.geometry {
            Geometry::Chain => coords[0],
            Geometry::Grid { width, .. } => coords[1] * width + coords[0],
        }
    }

    /// Site reached from `site` by moving `dist` steps along `axis`, if it
    /// exists under the boundary condition.
    pub fn shifted(&self, site: usize, axis: usize, dist: isize) -> Option<usize> {
        let ext = self.extents();
        let mut c = self.coords(site);
        let l = ext[axis] as isize;
        let x = c[axis] as isize + dist;
        let x = match self.boundary {
            Boundary::Periodic => x.rem_euclid(l),
            Boundary::Open if (0..l).contains(&x) => x,
            Boundary::Open => return None,
        };
        c[axis] = x as usize;
        Some(self.site_at(&c))
    }

    /// Unordered pairs of sites at distance `dist` along a lattice axis,
    /// deduplicated, self-pairs dropped. `dist = 1` gives the bonds.
    pub fn pairs_at_distance(&self, dist: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for axis in 0..self.extents().len() {
            for i in 0..self.sites {
                if let Some(j) = self.shifted(i, axis, dist as isize) {
                    if i == j {
                        continue;
                    }
                    let p = (i.min(j), i.max(j));
                    if !out.contains(&p) {
                        out.push(p);
                    }
                }
            }
        }
        out
    }

    pub fn bonds(&self) -> Vec<(usize, usize)> {
        self.pairs_at_distance(1)
    }

    /// Site permutation of a translation by `shift` (one entry per axis).
    pub fn translation(&self, shift: &[isize]) -> Result<Vec<usize>> {
        if self.boundary != Boundary::Periodic {
            return Err(Error::Unsupported(
                "translations need a periodic lattice".into(),
            ));
        }
        let ext = self.extents();
        if shift.len() != ext.len() {
            return Err(Error::DimensionMismatch { expected: ext.len(), got: shift.len() });
        }
        Ok((0..self.sites)
            .map(|i| {
                let c: Vec<usize> = self
                    .coords(i)
                    .iter()
                    .zip(shift)
                    .zip(&ext)
                    .map(|((&x, &d), &l)| (x as isize + d).rem_euclid(l as isize) as usize)
                    .collect();
                self.site_at(&c)
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(LatticeSpec::chain(0, Boundary::Open).is_err());
        assert!(matches!(
            LatticeSpec::chain(15, Boundary::Open),
            Err(Error::TooManySites(15, 14))
        ));
        assert!(LatticeSpec::new(6, Geometry::Grid { width: 2, height: 2 }, Boundary::Open).is_err());
    }

    #[test]
    fn bond_counts() {
        assert_eq!(LatticeSpec::chain(6, Boundary::Open).unwrap().bonds().len(), 5);
        assert_eq!(LatticeSpec::chain(6, Boundary::Periodic).unwrap().bonds().len(), 6);
        assert_eq!(LatticeSpec::chain(2, Boundary::Periodic).unwrap().bonds(), vec![(0, 1)]);
        assert_eq!(LatticeSpec::grid(3, 3, Boundary::Periodic).unwrap().bonds().len(), 18);
        assert_eq!(LatticeSpec::grid(2, 3, Boundary::Open).unwrap().bonds().len(), 7);
    }

    #[test]
    fn translation_is_a_cyclic_permutation() {
        let l = LatticeSpec::chain(5, Boundary::Periodic).unwrap();
        assert_eq!(l.translation(&[2]).unwrap(), vec![2, 3, 4, 0, 1]);
        assert!(LatticeSpec::chain(5, Boundary::Open).unwrap().translation(&[1]).is_err());
        let g = LatticeSpec::grid(2, 2, Boundary::Periodic).unwrap();
        assert_eq!(g.translation(&[1, 0]).unwrap(), vec![1, 0, 3, 2]);
    }
}
