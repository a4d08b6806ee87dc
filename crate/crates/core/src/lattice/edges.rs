use super::configuration::Configuration;
use super::geometry::MIRROR;
use crate::error::{ClgError, Result};

const ABSENT: u32 = u32::MAX;

/// The set of allowed ordered jumps `{(i,j) : A_i(1-η_j) = 1}` with `i ∼ j`
/// both inside the lattice.
///
/// Stored as a dense array of keys `site·2d + dir` plus a position map, which
/// gives O(1) insert, delete and uniform sampling.
#[derive(Clone, Debug)]
pub struct ActiveEdgeSet {
    keys: Vec<u32>,
    pos: Vec<u32>,
    degree: usize,
}

impl ActiveEdgeSet {
    /// Recomputes the set from scratch.
    pub fn from_configuration(config: &Configuration) -> Self {
        let g = config.geometry();
        let mut set = ActiveEdgeSet {
            keys: Vec::new(),
            pos: vec![ABSENT; g.volume() * g.degree()],
            degree: g.degree(),
        };
        for site in 0..g.volume() {
            set.refresh_source(config, site);
        }
        set
    }

    /// `𝔞̃`, the number of allowed ordered jumps.
    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// The `k`-th allowed jump as `(site, direction)`.
    #[inline]
    pub fn get(&self, k: usize) -> (usize, usize) {
        let key = self.keys[k] as usize;
        (key / self.degree, key % self.degree)
    }

    pub fn contains(&self, site: usize, dir: usize) -> bool {
        self.pos[site * self.degree + dir] != ABSENT
    }

    /// Raw keys in storage order; this order drives event selection.
    pub fn keys(&self) -> &[u32] {
        &self.keys
    }

    /// Allowed jumps as ordered `(from, to)` flat-index pairs, sorted.
    pub fn pairs(&self, config: &Configuration) -> Vec<(usize, usize)> {
        let g = config.geometry();
        let mut out: Vec<_> = self
            .keys
            .iter()
            .map(|&k| {
                let (s, d) = (k as usize / self.degree, k as usize % self.degree);
                (s, g.neighbor(s, d).expect("edge into mirror site"))
            })
            .collect();
        out.sort_unstable();
        out
    }

    /// Sorted raw keys; equal for two sets with the same members.
    pub fn sorted_keys(&self) -> Vec<u32> {
        let mut k = self.keys.clone();
        k.sort_unstable();
        k
    }

    /// Rebuilds a set with an explicit storage order, as saved in a checkpoint.
    pub(crate) fn from_keys(config: &Configuration, keys: Vec<u32>) -> Result<Self> {
        let fresh = ActiveEdgeSet::from_configuration(config);
        let mut sorted = keys.clone();
        sorted.sort_unstable();
        if sorted != fresh.sorted_keys() {
            return Err(ClgError::Checkpoint(
                "stored edge list does not match the stored occupancy".into(),
            ));
        }
        let mut pos = vec![ABSENT; fresh.pos.len()];
        for (k, &key) in keys.iter().enumerate() {
            pos[key as usize] = k as u32;
        }
        Ok(ActiveEdgeSet {
            keys,
            pos,
            degree: fresh.degree,
        })
    }

    #[inline]
    fn insert(&mut self, key: usize) {
        if self.pos[key] == ABSENT {
            self.pos[key] = self.keys.len() as u32;
            self.keys.push(key as u32);
        }
    }

    #[inline]
    fn remove(&mut self, key: usize) {
        let p = self.pos[key];
        if p != ABSENT {
            let last = self.keys.pop().expect("non-empty");
            if last as usize != key {
                self.keys[p as usize] = last;
                self.pos[last as usize] = p;
            }
            self.pos[key] = ABSENT;
        }
    }

    /// Re-evaluates every outgoing jump of `site`.
    #[inline]
    fn refresh_source(&mut self, config: &Configuration, site: usize) {
        let g = config.geometry();
        let active = config.is_active(site);
        let base = site * self.degree;
        for (dir, &n) in g.raw_neighbors(site).iter().enumerate() {
            let allowed = active && n != MIRROR && !config.is_occupied(n as usize);
            if allowed {
                self.insert(base + dir);
            } else {
                self.remove(base + dir);
            }
        }
    }

    /// Refreshes all jumps whose status can depend on `site`: outgoing jumps of
    /// the site and of its in-box neighbours (reaching ℓ¹-distance 2).
    #[inline]
    fn refresh_around(&mut self, config: &Configuration, site: usize) {
        self.refresh_source(config, site);
        let g = config.geometry();
        for &n in g.raw_neighbors(site) {
            if n != MIRROR {
                self.refresh_source(config, n as usize);
            }
        }
    }
}

impl Configuration {
    /// Moves the particle at `from` to the neighbouring empty site `to`,
    /// updating `edges` incrementally.
    pub fn apply_jump(&mut self, edges: &mut ActiveEdgeSet, from: usize, to: usize) -> Result<()> {
        let g = self.geometry();
        if from >= g.volume() || to >= g.volume() {
            return Err(ClgError::usage("site index out of range"));
        }
        let dir = (0..g.degree())
            .find(|&d| g.neighbor(from, d) == Some(to) && edges.contains(from, d))
            .ok_or_else(|| {
                ClgError::Contract(format!(
                    "jump {:?} -> {:?} is not an allowed jump",
                    g.coords_of(from),
                    g.coords_of(to)
                ))
            })?;
        self.apply_jump_dir(edges, from, dir);
        Ok(())
    }

    /// Jump along `dir` without validation; `(from, dir)` must be in `edges`.
    #[inline]
    pub(crate) fn apply_jump_dir(&mut self, edges: &mut ActiveEdgeSet, from: usize, dir: usize) -> usize {
        let to = self.geometry().neighbor(from, dir).expect("jump into mirror site");
        debug_assert!(edges.contains(from, dir));
        self.set_raw(from, false);
        self.set_raw(to, true);
        edges.refresh_around(self, from);
        edges.refresh_around(self, to);
        to
    }

    /// Sets a single site (reservoir resampling). Returns whether `η` changed.
    pub fn set_site(&mut self, edges: &mut ActiveEdgeSet, site: usize, value: bool) -> bool {
        let changed = self.set_raw(site, value);
        if changed {
            edges.refresh_around(self, site);
        }
        changed
    }
}

/// Full recomputation of the allowed-jump set.
pub fn allowed_jumps(config: &Configuration) -> ActiveEdgeSet {
    ActiveEdgeSet::from_configuration(config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{BoundaryMode, Geometry};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    /// Independent brute-force enumeration directly from the definition.
    fn brute_force(c: &Configuration) -> Vec<(usize, usize)> {
        let g = c.geometry();
        let mut out = Vec::new();
        for i in 0..g.volume() {
            if !c.is_occupied(i) {
                continue;
            }
            let mut occupied_nbr = g.mirror_count(i) > 0;
            for d in 0..g.degree() {
                if let Some(j) = g.neighbor(i, d) {
                    occupied_nbr |= c.is_occupied(j);
                }
            }
            if !occupied_nbr {
                continue;
            }
            for d in 0..g.degree() {
                if let Some(j) = g.neighbor(i, d) {
                    if !c.is_occupied(j) {
                        out.push((i, j));
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    #[test]
    fn chessboard_has_no_jumps() {
        let g = Arc::new(Geometry::periodic(2, 6).unwrap());
        let occ: Vec<u8> = (0..36).map(|s| ((s / 6 + s % 6) % 2) as u8).collect();
        let c = Configuration::from_occupancy(g, &occ).unwrap();
        assert!(allowed_jumps(&c).is_empty());
    }

    #[test]
    fn full_lattice_has_no_jumps() {
        let g = Arc::new(Geometry::periodic(2, 5).unwrap());
        let c = Configuration::from_occupancy(g, &[1; 25]).unwrap();
        assert_eq!(c.active_count(), 25);
        assert!(allowed_jumps(&c).is_empty());
    }

    #[test]
    fn pair_jump_freezes_1d() {
        let g = Arc::new(Geometry::periodic(1, 8).unwrap());
        let mut c = Configuration::from_sites(g.clone(), &[vec![3], vec![4]]).unwrap();
        let mut e = allowed_jumps(&c);
        assert_eq!(e.pairs(&c), brute_force(&c));
        assert_eq!(e.pairs(&c), vec![(2, 1), (3, 4)]);
        c.apply_jump(&mut e, 2, 1).unwrap();
        assert_eq!(c.occupancy()[1], 1);
        assert_eq!(c.occupancy()[3], 1);
        assert_eq!(c.particle_count(), 2);
        assert!(e.is_empty());
        assert_eq!(brute_force(&c), Vec::new());
    }

    #[test]
    fn disallowed_jump_is_contract_violation() {
        let g = Arc::new(Geometry::periodic(1, 8).unwrap());
        let mut c = Configuration::from_sites(g, &[vec![3], vec![4]]).unwrap();
        let mut e = allowed_jumps(&c);
        assert!(matches!(c.apply_jump(&mut e, 2, 3), Err(ClgError::Contract(_))));
        assert!(matches!(c.apply_jump(&mut e, 5, 6), Err(ClgError::Contract(_))));
    }

    #[test]
    fn open_box_excludes_jumps_into_mirror_sites() {
        let g = Arc::new(Geometry::new(2, 3, BoundaryMode::Open).unwrap());
        let c = Configuration::from_sites(g, &[vec![1, 1]]).unwrap();
        let e = allowed_jumps(&c);
        assert_eq!(e.len(), 2);
        assert_eq!(e.pairs(&c), brute_force(&c));
    }

    #[test]
    fn incremental_matches_brute_force_on_random_walks() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (dim, side, mode) in [
            (1, 9, BoundaryMode::Periodic),
            (2, 5, BoundaryMode::Periodic),
            (2, 5, BoundaryMode::Open),
            (2, 4, BoundaryMode::Cylinder),
            (3, 3, BoundaryMode::Periodic),
        ] {
            let g = Arc::new(Geometry::new(dim, side, mode).unwrap());
            let occ: Vec<u8> = (0..g.volume()).map(|_| rng.random_bool(0.55) as u8).collect();
            let mut c = Configuration::from_occupancy(g.clone(), &occ).unwrap();
            let mut e = allowed_jumps(&c);
            let n = c.particle_count();
            for step in 0..2000 {
                if step % 7 == 3 && !g.boundary_sites().is_empty() {
                    let b = g.boundary_sites()[rng.random_range(0..g.boundary_sites().len())];
                    c.set_site(&mut e, b, rng.random_bool(0.5));
                } else if !e.is_empty() {
                    let (s, d) = e.get(rng.random_range(0..e.len()));
                    let to = g.neighbor(s, d).unwrap();
                    c.apply_jump(&mut e, s, to).unwrap();
                    if mode.is_periodic() {
                        assert_eq!(c.particle_count(), n);
                    }
                }
                assert_eq!(e.pairs(&c), brute_force(&c), "step {step} {mode}");
            }
        }
    }
}
