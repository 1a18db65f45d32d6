//! Increments of a truncated countably dimensional Wiener process.
//!
//! Every Gaussian draw is a pure function of
//! `(master_seed, trajectory, coordinate, interval ordinal)`. Streams are
//! derived with a counter-based splitmix construction, so trajectories can
//! be sampled in any order or on any number of threads and coordinate sets
//! can be extended without disturbing the leading coordinates.

use rand_core::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Result, SdeError};
use crate::mesh::Mesh;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const COORD_STRIDE: u64 = 0xD1B5_4A32_D192_ED03;
const SEED_DOMAIN: u64 = 0x005E_ED0F_B0B5_1A75;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for one `(coordinate, interval)` cell. The first output is the
/// cell's base word; later outputs (rarely needed by the ziggurat) walk a
/// splitmix sequence seeded by it.
struct CellRng {
    base: u64,
    counter: u64,
}

impl CellRng {
    #[inline]
    fn new(coord_key: u64, interval: u64) -> Self {
        Self {
            base: mix64(coord_key.wrapping_add(interval.wrapping_mul(GOLDEN))),
            counter: 0,
        }
    }
}

impl RngCore for CellRng {
    #[inline]
    fn next_u64(&mut self) -> u64 {
        let out = if self.counter == 0 {
            self.base
        } else {
            mix64(self.base.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
        };
        self.counter += 1;
        out
    }

    #[inline]
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let bytes = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}

/// Seed-addressable source of Brownian increments for one trajectory over
/// `coords` scalar Wiener coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoisePlan {
    master_seed: u64,
    trajectory: u64,
    coords: usize,
}

impl NoisePlan {
    pub fn new(master_seed: u64, trajectory: u64, coords: usize) -> Result<Self> {
        if coords == 0 {
            return Err(SdeError::param("coords", "must be at least 1"));
        }
        Ok(Self {
            master_seed,
            trajectory,
            coords,
        })
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn trajectory(&self) -> u64 {
        self.trajectory
    }

    pub fn coords(&self) -> usize {
        self.coords
    }

    /// Same seed and trajectory, different substream.
    pub fn with_trajectory(&self, trajectory: u64) -> Self {
        Self {
            trajectory,
            ..*self
        }
    }

    /// Plan over `coords + extra` coordinates; the first `coords` streams are
    /// unchanged.
    pub fn extend_coords(&self, extra: usize) -> Result<Self> {
        if extra == 0 {
            return Err(SdeError::param("extra", "must be at least 1"));
        }
        Ok(Self {
            coords: self.coords + extra,
            ..*self
        })
    }

    /// Restriction to the first `coords` coordinates.
    pub fn project(&self, coords: usize) -> Result<Self> {
        if coords == 0 || coords > self.coords {
            return Err(SdeError::param(
                "coords",
                format!("must lie in 1..={}", self.coords),
            ));
        }
        Ok(Self { coords, ..*self })
    }

    fn trajectory_key(&self) -> u64 {
        mix64(mix64(self.master_seed ^ SEED_DOMAIN) ^ self.trajectory.wrapping_mul(GOLDEN))
    }

    fn coord_key(traj_key: u64, coord: usize) -> u64 {
        mix64(traj_key.wrapping_add((coord as u64).wrapping_mul(COORD_STRIDE)))
    }

    fn coord_keys(&self) -> Vec<u64> {
        let traj = self.trajectory_key();
        (1..=self.coords)
            .map(|k| Self::coord_key(traj, k))
            .collect()
    }

    /// Standard normal draw for coordinate `k` (from 1) on interval `j`.
    pub fn standard_normal(&self, coord: usize, interval: u64) -> f64 {
        let key = Self::coord_key(self.trajectory_key(), coord);
        StandardNormal.sample(&mut CellRng::new(key, interval))
    }

    /// Streams increments interval by interval; memory is `O(coords)`.
    pub fn stream<'m>(&self, mesh: &'m Mesh) -> IncrementStream<'m> {
        IncrementStream {
            keys: self.coord_keys(),
            buf: vec![0.0; self.coords],
            nodes: mesh.nodes(),
            next: 0,
        }
    }

    /// Materialises every increment on `mesh`.
    pub fn sample(&self, mesh: &Mesh) -> IncrementTable {
        let mut data = Vec::with_capacity(self.coords * mesh.intervals());
        let mut stream = self.stream(mesh);
        while let Some(block) = stream.next_block() {
            data.extend_from_slice(block.increments);
        }
        IncrementTable {
            mesh: mesh.clone(),
            coords: self.coords,
            data,
        }
    }
}

/// Increments of all coordinates over one interval `[t, t + dt]`.
#[derive(Debug)]
pub struct IncrementBlock<'a> {
    pub interval: usize,
    pub t: f64,
    pub dt: f64,
    pub increments: &'a [f64],
}

/// Lending iterator over interval blocks of one trajectory.
pub struct IncrementStream<'m> {
    keys: Vec<u64>,
    buf: Vec<f64>,
    nodes: &'m [f64],
    next: usize,
}

impl IncrementStream<'_> {
    pub fn next_block(&mut self) -> Option<IncrementBlock<'_>> {
        let j = self.next;
        if j + 1 >= self.nodes.len() {
            return None;
        }
        self.next += 1;
        let t = self.nodes[j];
        let dt = self.nodes[j + 1] - t;
        let sd = dt.sqrt();
        for (slot, &key) in self.buf.iter_mut().zip(&self.keys) {
            let z: f64 = StandardNormal.sample(&mut CellRng::new(key, j as u64));
            *slot = z * sd;
        }
        Some(IncrementBlock {
            interval: j,
            t,
            dt,
            increments: &self.buf,
        })
    }
}

/// Per-interval increments `dW_k(j) = W_k(t_{j+1}) - W_k(t_j)`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementTable {
    mesh: Mesh,
    coords: usize,
    data: Vec<f64>,
}

impl IncrementTable {
    /// Builds a table from explicit rows, one per interval.
    pub fn from_rows(mesh: Mesh, coords: usize, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() != mesh.intervals() {
            return Err(SdeError::Misaligned {
                blocks: rows.len(),
                intervals: mesh.intervals(),
            });
        }
        if let Some(r) = rows.iter().find(|r| r.len() != coords) {
            return Err(SdeError::CoordinateShortfall {
                required: coords,
                available: r.len(),
            });
        }
        Ok(Self {
            mesh,
            coords,
            data: rows.concat(),
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn coords(&self) -> usize {
        self.coords
    }

    pub fn intervals(&self) -> usize {
        self.mesh.intervals()
    }

    pub fn block(&self, j: usize) -> &[f64] {
        &self.data[j * self.coords..(j + 1) * self.coords]
    }

    pub fn blocks(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.coords)
    }

    /// Sums the fine increments covered by each interval of `coarse`,
    /// coordinate by coordinate in ascending fine order.
    pub fn aggregate_to(&self, coarse: &Mesh) -> Result<IncrementTable> {
        let map = CoarseMap::new(&self.mesh, coarse)?;
        let mut data = vec![0.0; self.coords * coarse.intervals()];
        for (c, out) in data.chunks_exact_mut(self.coords).enumerate() {
            for j in map.boundaries[c]..map.boundaries[c + 1] {
                for (acc, d) in out.iter_mut().zip(self.block(j)) {
                    *acc += d;
                }
            }
        }
        Ok(IncrementTable {
            mesh: coarse.clone(),
            coords: self.coords,
            data,
        })
    }
}

/// Fine node index of every coarse node; requires nested meshes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoarseMap {
    boundaries: Vec<usize>,
}

impl CoarseMap {
    pub fn new(fine: &Mesh, coarse: &Mesh) -> Result<Self> {
        if fine.horizon() != coarse.horizon() {
            return Err(SdeError::HorizonMismatch {
                left: fine.horizon(),
                right: coarse.horizon(),
            });
        }
        let boundaries = coarse
            .nodes()
            .iter()
            .map(|&t| {
                fine.node_index(t)
                    .ok_or(SdeError::NodeContainment { node: t })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { boundaries })
    }

    /// Fine node indices, one per coarse node.
    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_scaled() {
        let mesh = Mesh::from_nodes(vec![0.0, 0.25, 1.0]).unwrap();
        let plan = NoisePlan::new(7, 3, 4).unwrap();
        let a = plan.sample(&mesh);
        let b = plan.sample(&mesh);
        assert_eq!(a, b);
        for k in 1..=4 {
            let z = plan.standard_normal(k, 1);
            assert_eq!(a.block(1)[k - 1], z * 0.75f64.sqrt());
        }
        assert_ne!(a, NoisePlan::new(7, 4, 4).unwrap().sample(&mesh));
        assert_ne!(a, NoisePlan::new(8, 3, 4).unwrap().sample(&mesh));
    }

    #[test]
    fn extension_keeps_leading_streams() {
        let mesh = Mesh::equidistant(1.0, 5).unwrap();
        let plan = NoisePlan::new(1, 0, 2).unwrap();
        let ext = plan.extend_coords(2).unwrap();
        assert_eq!(ext.coords(), 4);
        assert_eq!(ext.project(2).unwrap(), plan);
        let a = plan.sample(&mesh);
        let b = ext.sample(&mesh);
        for j in 0..5 {
            assert_eq!(a.block(j), &b.block(j)[..2]);
        }
        assert!(plan.extend_coords(0).is_err());
        assert!(plan.project(3).is_err());
    }

    #[test]
    fn aggregation_telescopes() {
        let fine = Mesh::from_nodes(vec![0.0, 0.5, 1.0]).unwrap();
        let coarse = Mesh::from_nodes(vec![0.0, 1.0]).unwrap();
        let t = NoisePlan::new(5, 0, 3).unwrap().sample(&fine);
        let agg = t.aggregate_to(&coarse).unwrap();
        for k in 0..3 {
            assert_eq!(agg.block(0)[k], t.block(0)[k] + t.block(1)[k]);
        }
        assert_eq!(t.aggregate_to(&fine).unwrap(), t);
        let bad = Mesh::from_nodes(vec![0.0, 0.3, 1.0]).unwrap();
        assert!(matches!(
            t.aggregate_to(&bad),
            Err(SdeError::NodeContainment { .. })
        ));
    }

    #[test]
    fn tiny_steps_are_finite() {
        let mesh = Mesh::from_nodes(vec![0.0, 1e-300, 1.0]).unwrap();
        let t = NoisePlan::new(0, 0, 8).unwrap().sample(&mesh);
        assert!(t.blocks().flatten().all(|x| x.is_finite()));
    }
}
