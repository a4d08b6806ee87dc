use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{ClgError, Result};

/// Marker stored in the neighbour table for a virtual site outside the box.
pub(crate) const MIRROR: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryMode {
    /// Torus: every axis wraps around.
    Periodic,
    /// Open box with reservoirs on every face.
    Open,
    /// Open along axis 1, periodic along axes 2..d.
    Cylinder,
}

impl BoundaryMode {
    pub fn is_periodic(self) -> bool {
        matches!(self, BoundaryMode::Periodic)
    }

    fn axis_is_open(self, axis: usize) -> bool {
        match self {
            BoundaryMode::Periodic => false,
            BoundaryMode::Open => true,
            BoundaryMode::Cylinder => axis == 0,
        }
    }
}

impl fmt::Display for BoundaryMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundaryMode::Periodic => "periodic",
            BoundaryMode::Open => "open",
            BoundaryMode::Cylinder => "cylinder",
        })
    }
}

impl FromStr for BoundaryMode {
    type Err = ClgError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "periodic" | "torus" => Ok(BoundaryMode::Periodic),
            "open" | "open-box" => Ok(BoundaryMode::Open),
            "cylinder" => Ok(BoundaryMode::Cylinder),
            other => Err(ClgError::usage(format!("unknown boundary mode `{other}`"))),
        }
    }
}

/// A neighbour of a site as seen from the public API.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Neighbor {
    /// 1-based coordinates; a mirror site has one coordinate equal to 0 or L+1.
    pub coords: Vec<i64>,
    pub mirror: bool,
}

/// Hypercubic lattice `⟦1,L⟧^d` together with its boundary behaviour.
///
/// Sites are linearized row-major with axis 1 slowest, so the hyperplane
/// `i_1 = k` occupies the contiguous range `(k-1)·L^{d-1} .. k·L^{d-1}`.
/// Directions are numbered `2·axis` (minus) and `2·axis + 1` (plus).
#[derive(Clone)]
pub struct Geometry {
    dim: usize,
    side: usize,
    mode: BoundaryMode,
    volume: usize,
    strides: Vec<usize>,
    table: Vec<u32>,
    boundary: Vec<usize>,
    mirror_counts: Vec<u8>,
}

impl fmt::Debug for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Geometry")
            .field("dim", &self.dim)
            .field("side", &self.side)
            .field("mode", &self.mode)
            .finish()
    }
}

impl PartialEq for Geometry {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.side == other.side && self.mode == other.mode
    }
}

impl Eq for Geometry {}

impl Geometry {
    pub fn new(dim: usize, side: usize, mode: BoundaryMode) -> Result<Self> {
        if dim == 0 {
            return Err(ClgError::usage("dimension must be at least 1"));
        }
        if side < 2 {
            return Err(ClgError::usage("side length must be at least 2"));
        }
        let volume = side
            .checked_pow(dim as u32)
            .filter(|&v| v.checked_mul(2 * dim).is_some_and(|k| k < MIRROR as usize))
            .ok_or_else(|| ClgError::usage(format!("lattice {side}^{dim} is too large")))?;

        let mut strides = vec![1usize; dim];
        for axis in (0..dim.saturating_sub(1)).rev() {
            strides[axis] = strides[axis + 1] * side;
        }

        let mut table = vec![MIRROR; volume * 2 * dim];
        let mut mirror_counts = vec![0u8; volume];
        let mut boundary = Vec::new();
        for site in 0..volume {
            for axis in 0..dim {
                let c = (site / strides[axis]) % side;
                let base = site - c * strides[axis];
                let open = mode.axis_is_open(axis);
                let minus = if c > 0 {
                    Some(c - 1)
                } else if open {
                    None
                } else {
                    Some(side - 1)
                };
                let plus = if c + 1 < side {
                    Some(c + 1)
                } else if open {
                    None
                } else {
                    Some(0)
                };
                for (k, nc) in [minus, plus].into_iter().enumerate() {
                    let slot = site * 2 * dim + 2 * axis + k;
                    match nc {
                        Some(nc) => table[slot] = (base + nc * strides[axis]) as u32,
                        None => mirror_counts[site] += 1,
                    }
                }
            }
            if mirror_counts[site] > 0 {
                boundary.push(site);
            }
        }

        Ok(Geometry {
            dim,
            side,
            mode,
            volume,
            strides,
            table,
            boundary,
            mirror_counts,
        })
    }

    pub fn periodic(dim: usize, side: usize) -> Result<Self> {
        Self::new(dim, side, BoundaryMode::Periodic)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn mode(&self) -> BoundaryMode {
        self.mode
    }

    /// Number of sites `L^d`.
    pub fn volume(&self) -> usize {
        self.volume
    }

    /// Number of directions per site, `2d`.
    pub fn degree(&self) -> usize {
        2 * self.dim
    }

    /// Size of a hyperplane `i_1 = const`, i.e. `L^{d-1}`.
    pub fn plane_size(&self) -> usize {
        self.volume / self.side
    }

    /// Sites of `∂Λ_L`: those with at least one mirror neighbour, in index order.
    pub fn boundary_sites(&self) -> &[usize] {
        &self.boundary
    }

    pub fn mirror_count(&self, site: usize) -> usize {
        self.mirror_counts[site] as usize
    }

    /// Flat index of the neighbour in direction `dir`, or `None` for a mirror site.
    #[inline]
    pub fn neighbor(&self, site: usize, dir: usize) -> Option<usize> {
        let v = self.table[site * 2 * self.dim + dir];
        (v != MIRROR).then_some(v as usize)
    }

    #[inline]
    pub(crate) fn raw_neighbors(&self, site: usize) -> &[u32] {
        let d2 = 2 * self.dim;
        &self.table[site * d2..(site + 1) * d2]
    }

    /// Number of undirected in-box nearest-neighbour edges.
    pub fn edge_count(&self) -> usize {
        let links: usize = (0..self.volume)
            .map(|s| self.raw_neighbors(s).iter().filter(|&&v| v != MIRROR).count())
            .sum();
        links / 2
    }

    /// Axis-1 coordinate (0-based) of a flat index.
    #[inline]
    pub fn first_coord(&self, site: usize) -> usize {
        site / self.strides[0]
    }

    /// Converts 1-based coordinates to a flat index.
    pub fn index_of(&self, coords: &[usize]) -> Result<usize> {
        if coords.len() != self.dim {
            return Err(ClgError::usage(format!(
                "site has {} coordinates, lattice has dimension {}",
                coords.len(),
                self.dim
            )));
        }
        let mut idx = 0;
        for (axis, &c) in coords.iter().enumerate() {
            if c < 1 || c > self.side {
                return Err(ClgError::usage(format!(
                    "coordinate {c} on axis {} outside 1..={}",
                    axis + 1,
                    self.side
                )));
            }
            idx += (c - 1) * self.strides[axis];
        }
        Ok(idx)
    }

    /// 1-based coordinates of a flat index.
    pub fn coords_of(&self, site: usize) -> Vec<usize> {
        (0..self.dim)
            .map(|axis| (site / self.strides[axis]) % self.side + 1)
            .collect()
    }

    /// 0-based coordinate along `axis`.
    #[inline]
    pub fn coord(&self, site: usize, axis: usize) -> usize {
        (site / self.strides[axis]) % self.side
    }

    /// Flat index of `site` translated by `shift` (wrapping on every axis).
    pub fn translate(&self, site: usize, shift: &[i64]) -> usize {
        let l = self.side as i64;
        (0..self.dim)
            .map(|axis| {
                let c = self.coord(site, axis) as i64;
                ((c + shift[axis]).rem_euclid(l) as usize) * self.strides[axis]
            })
            .sum()
    }

    /// Neighbours of a site in deterministic order (axis by axis, minus before
    /// plus). In open and cylinder mode, missing in-box neighbours are reported
    /// as mirror sites.
    pub fn neighbors(&self, coords: &[usize]) -> Result<Vec<Neighbor>> {
        let site = self.index_of(coords)?;
        let out = (0..2 * self.dim)
            .map(|dir| match self.neighbor(site, dir) {
                Some(j) => Neighbor {
                    coords: self.coords_of(j).into_iter().map(|c| c as i64).collect(),
                    mirror: false,
                },
                None => {
                    let mut c: Vec<i64> = coords.iter().map(|&c| c as i64).collect();
                    c[dir / 2] += if dir % 2 == 0 { -1 } else { 1 };
                    Neighbor { coords: c, mirror: true }
                }
            })
            .collect();
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coords(ns: &[Neighbor]) -> Vec<Vec<i64>> {
        ns.iter().map(|n| n.coords.clone()).collect()
    }

    #[test]
    fn periodic_1d_wraps() {
        let g = Geometry::periodic(1, 5).unwrap();
        let ns = g.neighbors(&[1]).unwrap();
        assert_eq!(coords(&ns), vec![vec![5], vec![2]]);
        assert!(ns.iter().all(|n| !n.mirror));
    }

    #[test]
    fn periodic_2d_corner() {
        let g = Geometry::periodic(2, 4).unwrap();
        let ns = g.neighbors(&[1, 1]).unwrap();
        assert_eq!(
            coords(&ns),
            vec![vec![4, 1], vec![2, 1], vec![1, 4], vec![1, 2]]
        );
    }

    #[test]
    fn open_2d_corner_has_two_mirrors() {
        let g = Geometry::new(2, 4, BoundaryMode::Open).unwrap();
        let ns = g.neighbors(&[1, 1]).unwrap();
        let inbox: Vec<_> = ns.iter().filter(|n| !n.mirror).map(|n| n.coords.clone()).collect();
        let mirrors: Vec<_> = ns.iter().filter(|n| n.mirror).map(|n| n.coords.clone()).collect();
        assert_eq!(inbox, vec![vec![2, 1], vec![1, 2]]);
        assert_eq!(mirrors, vec![vec![0, 1], vec![1, 0]]);
        assert_eq!(g.mirror_count(g.index_of(&[1, 1]).unwrap()), 2);
    }

    #[test]
    fn cylinder_is_open_only_on_axis_one() {
        let g = Geometry::new(2, 4, BoundaryMode::Cylinder).unwrap();
        assert_eq!(g.boundary_sites().len(), 8);
        let ns = g.neighbors(&[1, 1]).unwrap();
        assert_eq!(ns.iter().filter(|n| n.mirror).count(), 1);
        assert_eq!(ns[2].coords, vec![1, 4]);
        assert_eq!(g.edge_count(), 3 * 4 + 4 * 4);
    }

    #[test]
    fn every_periodic_site_has_2d_neighbours() {
        let g = Geometry::periodic(3, 4).unwrap();
        assert!(g.boundary_sites().is_empty());
        for s in 0..g.volume() {
            assert!((0..6).all(|d| g.neighbor(s, d).is_some()));
        }
        assert_eq!(g.edge_count(), 3 * 64);
    }

    #[test]
    fn out_of_range_site_is_usage_error() {
        let g = Geometry::periodic(2, 4).unwrap();
        assert!(matches!(g.neighbors(&[0, 1]), Err(ClgError::Usage(_))));
        assert!(matches!(g.neighbors(&[5, 1]), Err(ClgError::Usage(_))));
        assert!(matches!(g.neighbors(&[1]), Err(ClgError::Usage(_))));
    }

    #[test]
    fn rejects_degenerate_geometry() {
        assert!(Geometry::periodic(0, 4).is_err());
        assert!(Geometry::periodic(1, 1).is_err());
    }

    #[test]
    fn index_round_trip() {
        let g = Geometry::periodic(3, 5).unwrap();
        for s in 0..g.volume() {
            assert_eq!(g.index_of(&g.coords_of(s)).unwrap(), s);
        }
        assert_eq!(g.first_coord(g.index_of(&[3, 1, 1]).unwrap()), 2);
    }
}
