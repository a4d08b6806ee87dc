use std::sync::Arc;

use super::geometry::{Geometry, MIRROR};
use crate::error::{ClgError, Result};

/// Occupancy field on a lattice.
///
/// Besides `η` the configuration caches, per site, the number of occupied
/// neighbours. Mirror sites outside an open box count as occupied, so a
/// boundary particle is always active.
#[derive(Clone, Debug)]
pub struct Configuration {
    geometry: Arc<Geometry>,
    occ: Vec<u8>,
    occupied_nbrs: Vec<u8>,
    count: usize,
}

impl PartialEq for Configuration {
    fn eq(&self, other: &Self) -> bool {
        self.geometry == other.geometry && self.occ == other.occ
    }
}

impl Configuration {
    pub fn empty(geometry: Arc<Geometry>) -> Self {
        let occupied_nbrs = (0..geometry.volume())
            .map(|s| geometry.mirror_count(s) as u8)
            .collect();
        let occ = vec![0; geometry.volume()];
        Configuration {
            geometry,
            occ,
            occupied_nbrs,
            count: 0,
        }
    }

    /// Builds a configuration from a 0/1 occupancy vector in flat index order.
    pub fn from_occupancy(geometry: Arc<Geometry>, occupancy: &[u8]) -> Result<Self> {
        if occupancy.len() != geometry.volume() {
            return Err(ClgError::usage(format!(
                "occupancy has {} entries, lattice has {} sites",
                occupancy.len(),
                geometry.volume()
            )));
        }
        if occupancy.iter().any(|&v| v > 1) {
            return Err(ClgError::usage("occupancy values must be 0 or 1"));
        }
        let mut c = Configuration::empty(geometry);
        for (s, &v) in occupancy.iter().enumerate() {
            if v == 1 {
                c.set_raw(s, true);
            }
        }
        Ok(c)
    }

    /// Builds a configuration with particles at the given 1-based coordinates.
    pub fn from_sites(geometry: Arc<Geometry>, sites: &[Vec<usize>]) -> Result<Self> {
        let mut c = Configuration::empty(geometry);
        for coords in sites {
            let s = c.geometry.index_of(coords)?;
            c.set_raw(s, true);
        }
        Ok(c)
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn geometry_arc(&self) -> &Arc<Geometry> {
        &self.geometry
    }

    pub fn occupancy(&self) -> &[u8] {
        &self.occ
    }

    #[inline]
    pub fn is_occupied(&self, site: usize) -> bool {
        self.occ[site] == 1
    }

    pub fn particle_count(&self) -> usize {
        self.count
    }

    pub fn density(&self) -> f64 {
        self.count as f64 / self.geometry.volume() as f64
    }

    /// Number of occupied neighbours, mirror sites included.
    #[inline]
    pub fn occupied_neighbors(&self, site: usize) -> usize {
        self.occupied_nbrs[site] as usize
    }

    /// `A_i`: the site holds a particle with at least one occupied neighbour.
    #[inline]
    pub fn is_active(&self, site: usize) -> bool {
        self.occ[site] == 1 && self.occupied_nbrs[site] > 0
    }

    pub fn is_active_at(&self, coords: &[usize]) -> Result<bool> {
        Ok(self.is_active(self.geometry.index_of(coords)?))
    }

    /// `n_a`, the number of active particles.
    pub fn active_count(&self) -> usize {
        (0..self.occ.len()).filter(|&s| self.is_active(s)).count()
    }

    /// Sets `η_site` and keeps the neighbour counts and particle count in sync.
    /// Returns whether the occupancy changed.
    pub(crate) fn set_raw(&mut self, site: usize, value: bool) -> bool {
        let v = value as u8;
        if self.occ[site] == v {
            return false;
        }
        self.occ[site] = v;
        let geometry = Arc::clone(&self.geometry);
        for &n in geometry.raw_neighbors(site) {
            if n != MIRROR {
                if value {
                    self.occupied_nbrs[n as usize] += 1;
                } else {
                    self.occupied_nbrs[n as usize] -= 1;
                }
            }
        }
        if value {
            self.count += 1;
        } else {
            self.count -= 1;
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::BoundaryMode;

    #[test]
    fn isolated_particle_is_frozen() {
        let g = Arc::new(Geometry::periodic(2, 6).unwrap());
        let c = Configuration::from_sites(g, &[vec![3, 3]]).unwrap();
        assert!(!c.is_active_at(&[3, 3]).unwrap());
        assert_eq!(c.active_count(), 0);
    }

    #[test]
    fn adjacent_pair_is_active() {
        let g = Arc::new(Geometry::periodic(2, 6).unwrap());
        let c = Configuration::from_sites(g, &[vec![3, 3], vec![3, 4]]).unwrap();
        assert!(c.is_active_at(&[3, 3]).unwrap());
        assert!(c.is_active_at(&[3, 4]).unwrap());
        assert!(!c.is_active_at(&[1, 1]).unwrap());
    }

    #[test]
    fn boundary_particles_are_active_in_open_mode() {
        let g = Arc::new(Geometry::new(2, 5, BoundaryMode::Open).unwrap());
        let c = Configuration::from_sites(g, &[vec![1, 3], vec![3, 3]]).unwrap();
        assert!(c.is_active_at(&[1, 3]).unwrap());
        assert!(!c.is_active_at(&[3, 3]).unwrap());
    }

    #[test]
    fn occupancy_validation() {
        let g = Arc::new(Geometry::periodic(1, 4).unwrap());
        assert!(Configuration::from_occupancy(g.clone(), &[1, 0, 1]).is_err());
        assert!(Configuration::from_occupancy(g.clone(), &[1, 0, 2, 0]).is_err());
        let c = Configuration::from_occupancy(g, &[1, 1, 0, 1]).unwrap();
        assert_eq!(c.particle_count(), 3);
        assert_eq!(c.active_count(), 3);
    }
}
