//! Truncated-dimension Euler scheme
//!
//! ```text
//! x_{j+1} = x_j + a(t_j, x_j) dt_j + sum_{k<=M} sigma_k(t_j) dW_k(j)
//! ```
//!
//! on an arbitrary mesh, its piecewise-linear interpolant, and coupled
//! coarse/reference runs driven by one underlying Brownian path.

use std::io::Write;

use crate::error::{Result, SdeError};
use crate::mesh::Mesh;
use crate::model::SdeProblem;
use crate::wiener::{CoarseMap, IncrementTable, NoisePlan};

/// Scheme values at the nodes of a mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    mesh: Mesh,
    values: Vec<f64>,
}

impl Trajectory {
    pub fn new(mesh: Mesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.nodes().len() {
            return Err(SdeError::Misaligned {
                blocks: values.len(),
                intervals: mesh.nodes().len(),
            });
        }
        Ok(Self { mesh, values })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Piecewise-linear interpolation; exact at nodes.
    pub fn interpolate(&self, t: f64) -> Result<f64> {
        let nodes = self.mesh.nodes();
        let horizon = self.mesh.horizon();
        if !(0.0..=horizon).contains(&t) {
            return Err(SdeError::OutOfRange { t, horizon });
        }
        let j = match nodes.binary_search_by(|x| x.total_cmp(&t)) {
            Ok(i) => return Ok(self.values[i]),
            Err(i) => i - 1,
        };
        let (t0, t1) = (nodes[j], nodes[j + 1]);
        let (x0, x1) = (self.values[j], self.values[j + 1]);
        Ok((x0 * (t1 - t) + x1 * (t - t0)) / (t1 - t0))
    }

    /// Two-column CSV `t,value` with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,value")?;
        for (t, x) in self.mesh.nodes().iter().zip(&self.values) {
            writeln!(out, "{t:.16e},{x:.16e}")?;
        }
        Ok(())
    }
}

/// One step of the scheme from `(t, x)` over `dt` with increments `dw`.
#[inline]
pub fn euler_step(problem: &SdeProblem, t: f64, x: f64, dt: f64, dw: &[f64]) -> Result<f64> {
    Ok(x + problem.drift(t, x) * dt + problem.diffusion_dot(t, dw)?)
}

/// Runs the scheme on `mesh` with the first `coords` coordinates of `blocks`.
pub fn euler_truncated(
    problem: &SdeProblem,
    mesh: &Mesh,
    coords: usize,
    blocks: &IncrementTable,
) -> Result<Trajectory> {
    if blocks.intervals() != mesh.intervals() {
        return Err(SdeError::Misaligned {
            blocks: blocks.intervals(),
            intervals: mesh.intervals(),
        });
    }
    if blocks.coords() < coords {
        return Err(SdeError::CoordinateShortfall {
            required: coords,
            available: blocks.coords(),
        });
    }
    let mut values = Vec::with_capacity(mesh.nodes().len());
    let mut x = problem.initial_value();
    values.push(x);
    for ((w, dt), dw) in mesh
        .nodes()
        .windows(2)
        .zip(mesh.steps())
        .zip(blocks.blocks())
    {
        x = euler_step(problem, w[0], x, dt, &dw[..coords])?;
        values.push(x);
    }
    Trajectory::new(mesh.clone(), values)
}

/// A coarse scheme to run alongside the reference.
#[derive(Debug, Clone)]
pub struct CoarseTarget {
    pub mesh: Mesh,
    pub coords: usize,
    /// Sorted times in `[0, T]` at which the reference is reported.
    pub query_times: Vec<f64>,
}

/// Result of one coupled trajectory for one coarse target.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledOutput {
    pub coarse: Trajectory,
    pub reference_at_queries: Vec<f64>,
}

/// Fine mesh, node maps and query indices for a set of coupled runs; built
/// once and reused across trajectories.
#[derive(Debug, Clone)]
pub struct CoupledSetup {
    problem: SdeProblem,
    fine: Mesh,
    ref_coords: usize,
    targets: Vec<CoarseTarget>,
    maps: Vec<CoarseMap>,
    query_indices: Vec<Vec<usize>>,
}

impl CoupledSetup {
    /// Fine mesh = `equidistant(T, ref_n)` united with every coarse mesh and
    /// every query time, so the reference is evaluated exactly at queries.
    pub fn new(
        problem: &SdeProblem,
        targets: Vec<CoarseTarget>,
        ref_n: usize,
        ref_coords: usize,
    ) -> Result<Self> {
        let horizon = problem.horizon();
        if ref_coords > problem.coord_cap() {
            return Err(SdeError::CoordinateCap {
                index: ref_coords,
                cap: problem.coord_cap(),
            });
        }
        let mut fine = Mesh::equidistant(horizon, ref_n)?;
        for target in &targets {
            if target.coords == 0 || target.coords > ref_coords {
                return Err(SdeError::param(
                    "coords",
                    format!(
                        "coarse truncation {} must lie in 1..={ref_coords}",
                        target.coords
                    ),
                ));
            }
            if target.query_times.windows(2).any(|w| w[1] < w[0]) {
                return Err(SdeError::param("query_times", "must be sorted"));
            }
            fine = fine.union(&target.mesh)?.with_times(&target.query_times)?;
        }
        let maps = targets
            .iter()
            .map(|t| CoarseMap::new(&fine, &t.mesh))
            .collect::<Result<Vec<_>>>()?;
        let query_indices = targets
            .iter()
            .map(|t| {
                t.query_times
                    .iter()
                    .map(|&q| {
                        fine.node_index(q)
                            .ok_or(SdeError::NodeContainment { node: q })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            problem: problem.clone(),
            fine,
            ref_coords,
            targets,
            maps,
            query_indices,
        })
    }

    pub fn fine_mesh(&self) -> &Mesh {
        &self.fine
    }

    pub fn targets(&self) -> &[CoarseTarget] {
        &self.targets
    }

    /// One coupled trajectory. The reference uses all `ref_coords`
    /// coordinates on the fine mesh; each coarse scheme uses sums of the fine
    /// increments of its leading coordinates.
    pub fn run(&self, plan: &NoisePlan) -> Result<Vec<CoupledOutput>> {
        if plan.coords() < self.ref_coords {
            return Err(SdeError::CoordinateShortfall {
                required: self.ref_coords,
                available: plan.coords(),
            });
        }
        let plan = plan.project(self.ref_coords)?;
        let problem = &self.problem;
        let x0 = problem.initial_value();

        struct State {
            x: f64,
            acc: Vec<f64>,
            interval: usize,
            values: Vec<f64>,
            query_cursor: usize,
            at_queries: Vec<f64>,
        }
        let mut states: Vec<State> = self
            .targets
            .iter()
            .map(|t| {
                let mut values = Vec::with_capacity(t.mesh.nodes().len());
                values.push(x0);
                State {
                    x: x0,
                    acc: vec![0.0; t.coords],
                    interval: 0,
                    values,
                    query_cursor: 0,
                    at_queries: Vec::with_capacity(t.query_times.len()),
                }
            })
            .collect();

        let record = |states: &mut [State], node: usize, x_ref: f64| {
            for (s, idx) in states.iter_mut().zip(&self.query_indices) {
                while s.query_cursor < idx.len() && idx[s.query_cursor] == node {
                    s.at_queries.push(x_ref);
                    s.query_cursor += 1;
                }
            }
        };

        let mut x_ref = x0;
        record(&mut states, 0, x_ref);
        let mut stream = plan.stream(&self.fine);
        while let Some(block) = stream.next_block() {
            let dw = block.increments;
            x_ref = euler_step(problem, block.t, x_ref, block.dt, dw)?;
            let node = block.interval + 1;
            for ((s, target), map) in states.iter_mut().zip(&self.targets).zip(&self.maps) {
                for (a, d) in s.acc.iter_mut().zip(dw) {
                    *a += d;
                }
                if map.boundaries()[s.interval + 1] == node {
                    let nodes = target.mesh.nodes();
                    let (t0, t1) = (nodes[s.interval], nodes[s.interval + 1]);
                    s.x = euler_step(problem, t0, s.x, t1 - t0, &s.acc)?;
                    s.values.push(s.x);
                    s.acc.iter_mut().for_each(|a| *a = 0.0);
                    s.interval += 1;
                }
            }
            record(&mut states, node, x_ref);
        }

        states
            .into_iter()
            .zip(&self.targets)
            .map(|(s, t)| {
                Ok(CoupledOutput {
                    coarse: Trajectory::new(t.mesh.clone(), s.values)?,
                    reference_at_queries: s.at_queries,
                })
            })
            .collect()
    }
}

/// Runs the coarse scheme on `coarse_mesh` with `m_coarse` coordinates and
/// the reference on `equidistant(T, ref_n)` refined by the coarse nodes and
/// the query times, both driven by the same Brownian path.
pub fn coupled_solve(
    problem: &SdeProblem,
    coarse_mesh: &Mesh,
    m_coarse: usize,
    ref_n: usize,
    m_ref: usize,
    plan: &NoisePlan,
    query_times: &[f64],
) -> Result<CoupledOutput> {
    let target = CoarseTarget {
        mesh: coarse_mesh.clone(),
        coords: m_coarse,
        query_times: query_times.to_vec(),
    };
    let setup = CoupledSetup::new(problem, vec![target], ref_n, m_ref)?;
    Ok(setup.run(plan)?.remove(0))
}
