//! Partitions `0 = t_0 < t_1 < ... < t_k = T` of the time horizon.

use std::io::Write;

use serde::Serialize;

use crate::error::{Result, SdeError};
use crate::model::SdeProblem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MeshKind {
    Equidistant,
    Adaptive,
    Union,
    Custom,
}

/// Strictly increasing partition of `[0, T]` with at least two nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    nodes: Vec<f64>,
    kind: MeshKind,
}

/// Floor on the step size used by the adaptive recursion: `eps_n = n^(-exponent)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpsilonRule {
    exponent: f64,
}

impl Default for EpsilonRule {
    fn default() -> Self {
        Self {
            exponent: 1.0 / 3.0,
        }
    }
}

impl EpsilonRule {
    /// `exponent` must lie in `(0, 1/2)` so that `eps_n -> 0` and `n eps_n^2 -> inf`.
    pub fn new(exponent: f64) -> Result<Self> {
        if exponent > 0.0 && exponent < 0.5 {
            Ok(Self { exponent })
        } else {
            Err(SdeError::param(
                "epsilon_exponent",
                format!("must lie in (0, 1/2), got {exponent}"),
            ))
        }
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn value(&self, n: usize) -> f64 {
        (n as f64).powf(-self.exponent)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeshStats {
    /// Number of intervals `k`.
    pub intervals: usize,
    pub max_step: f64,
    pub min_step: f64,
}

impl Mesh {
    /// Validates an explicit node list.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        Self::validated(nodes, MeshKind::Custom)
    }

    fn validated(nodes: Vec<f64>, kind: MeshKind) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(SdeError::InvalidMesh("need at least two nodes".into()));
        }
        if nodes[0] != 0.0 {
            return Err(SdeError::InvalidMesh(format!(
                "first node must be 0, got {}",
                nodes[0]
            )));
        }
        if !nodes.iter().all(|t| t.is_finite()) {
            return Err(SdeError::InvalidMesh("non-finite node".into()));
        }
        if let Some(w) = nodes.windows(2).find(|w| w[1] <= w[0]) {
            return Err(SdeError::InvalidMesh(format!(
                "nodes not strictly increasing at {} -> {}",
                w[0], w[1]
            )));
        }
        Ok(Self { nodes, kind })
    }

    /// `n + 1` nodes `T j / n`, the last set to `T` exactly.
    pub fn equidistant(horizon: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(SdeError::param("n", "must be at least 1"));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(SdeError::param(
                "horizon",
                format!("must be positive, got {horizon}"),
            ));
        }
        let mut nodes: Vec<f64> = (0..=n).map(|j| horizon * (j as f64 / n as f64)).collect();
        nodes[n] = horizon;
        Self::validated(nodes, MeshKind::Equidistant)
    }

    /// Path-independent step-size control
    /// `t_{j+1} = t_j + T / (n max(eps_n, ||sigma^M(t_j)||))`, run until the
    /// first node at or beyond `T`; that node is then replaced by `T`.
    ///
    /// Depends only on the problem's diffusion norm profile and `(n, M, eps)`.
    pub fn adaptive(problem: &SdeProblem, n: usize, m: usize, eps: EpsilonRule) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(SdeError::param("n, M", "must be at least 1"));
        }
        let horizon = problem.horizon();
        let eps_n = eps.value(n);
        let cap = adaptive_iteration_cap(problem, n, eps);
        let scale = horizon / n as f64;
        let mut nodes = vec![0.0];
        let mut t = 0.0f64;
        // Neumaier compensation keeps equal steps from leaving a rounding
        // sliver just below T
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        while t < horizon {
            if nodes.len() > cap {
                return Err(SdeError::MeshIterationCap { cap });
            }
            let norm = problem.diffusion_norm_truncated(t, m)?;
            let step = scale / eps_n.max(norm);
            let next = sum + step;
            comp += if sum.abs() >= step {
                (sum - next) + step
            } else {
                (step - next) + sum
            };
            sum = next;
            t = sum + comp;
            nodes.push(t);
        }
        // every earlier node is < T, so clipping keeps strict monotonicity
        *nodes.last_mut().expect("at least two nodes") = horizon;
        Self::validated(nodes, MeshKind::Adaptive)
    }

    /// Sorted union of both node sets with exact duplicates removed.
    pub fn union(&self, other: &Mesh) -> Result<Mesh> {
        if self.horizon() != other.horizon() {
            return Err(SdeError::HorizonMismatch {
                left: self.horizon(),
                right: other.horizon(),
            });
        }
        let (a, b) = (&self.nodes, &other.nodes);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            let next = match (a.get(i), b.get(j)) {
                (Some(&x), Some(&y)) if x < y => {
                    i += 1;
                    x
                }
                (Some(&x), Some(&y)) if y < x => {
                    j += 1;
                    y
                }
                (Some(&x), Some(_)) => {
                    i += 1;
                    j += 1;
                    x
                }
                (Some(&x), None) => {
                    i += 1;
                    x
                }
                (None, Some(&y)) => {
                    j += 1;
                    y
                }
                (None, None) => unreachable!(),
            };
            out.push(next);
        }
        Self::validated(out, MeshKind::Union)
    }

    /// Adds arbitrary times in `[0, T]` as extra nodes.
    pub fn with_times(&self, times: &[f64]) -> Result<Mesh> {
        let horizon = self.horizon();
        let mut extra: Vec<f64> = Vec::with_capacity(times.len() + 2);
        extra.push(0.0);
        for &t in times {
            if !(0.0..=horizon).contains(&t) {
                return Err(SdeError::OutOfRange { t, horizon });
            }
            extra.push(t);
        }
        extra.push(horizon);
        extra.sort_by(f64::total_cmp);
        extra.dedup();
        self.union(&Self::validated(extra, MeshKind::Custom)?)
    }

    /// Node times interleaved with interval midpoints:
    /// `t_0, m_0, t_1, m_1, ..., t_k`.
    pub fn with_midpoints(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.nodes.len() - 1);
        for w in self.nodes.windows(2) {
            out.push(w[0]);
            out.push(0.5 * (w[0] + w[1]));
        }
        out.push(self.horizon());
        out
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn kind(&self) -> MeshKind {
        self.kind
    }

    pub fn horizon(&self) -> f64 {
        *self.nodes.last().expect("mesh has nodes")
    }

    /// Number of intervals.
    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn steps(&self) -> impl Iterator<Item = f64> + '_ {
        self.nodes.windows(2).map(|w| w[1] - w[0])
    }

    /// Index of `t` among the nodes, if it is one.
    pub fn node_index(&self, t: f64) -> Option<usize> {
        self.nodes.binary_search_by(|x| x.total_cmp(&t)).ok()
    }

    pub fn stats(&self) -> MeshStats {
        let (min_step, max_step) = self.steps().fold((f64::INFINITY, 0.0f64), |(lo, hi), h| {
            (lo.min(h), hi.max(h))
        });
        MeshStats {
            intervals: self.intervals(),
            max_step,
            min_step,
        }
    }

    /// Single-column CSV of node times with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t")?;
        for t in &self.nodes {
            writeln!(out, "{t:.16e}")?;
        }
        Ok(())
    }
}

/// `C_hat = c2 sup(delta) + c2 T`, bounding `||sigma^M(t)||` uniformly.
pub fn norm_bound(problem: &SdeProblem) -> f64 {
    let decay = problem.decay();
    decay.c2() * decay.sup() + decay.c2() * problem.horizon()
}

fn adaptive_iteration_cap(problem: &SdeProblem, n: usize, eps: EpsilonRule) -> usize {
    let n0 = (n as f64 * (eps.value(n) + norm_bound(problem))).floor() + 1.0;
    (10.0 * n0).min(usize::MAX as f64 / 2.0) as usize + 10
}

/// Bracket `[n eps_n^2 / T, floor(n (eps_n + C_hat)) + 1]` for the number of
/// adaptive intervals `k*_n`.
pub fn step_count_bracket(problem: &SdeProblem, n: usize, eps: EpsilonRule) -> (f64, u64) {
    let e = eps.value(n);
    let lower = n as f64 * e * e / problem.horizon();
    let upper = (n as f64 * (e + norm_bound(problem))).floor() as u64 + 1;
    (lower, upper)
}
