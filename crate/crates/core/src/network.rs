//! Precedence network and the critical-path (longest path) kernel.
//!
//! A [`ProjectNetwork`] is an immutable DAG of activities joined by
//! finish-to-start precedence edges. [`ProjectNetwork::compute_cpm`] runs the
//! classical forward/backward pass; the Monte Carlo engine calls the same
//! kernel once per replicate through [`CpmScratch`] so no allocation happens
//! inside the sampling loop.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dense, zero-based activity index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActivityId(pub usize);

impl ActivityId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for ActivityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<usize> for ActivityId {
    fn from(i: usize) -> Self {
        ActivityId(i)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetworkError {
    #[error("a network needs at least one activity")]
    Empty,
    #[error("invalid edge ({from}, {to}): {reason}")]
    InvalidEdge {
        from: usize,
        to: usize,
        reason: &'static str,
    },
    #[error("precedence graph contains a directed cycle")]
    CycleDetected,
    #[error("expected {expected} durations, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("duration of activity {0} is negative or not finite")]
    InvalidDuration(usize),
    #[error("network has more than {0} source-to-sink paths")]
    PathBudgetExceeded(usize),
}

/// Relative tolerance used to flag zero total float.
pub fn float_epsilon(completion_time: f64) -> f64 {
    1e-9 * completion_time.abs().max(1.0)
}

/// Adjacency in compressed row form.
#[derive(Debug, Clone)]
struct Csr {
    offsets: Vec<usize>,
    targets: Vec<usize>,
}

impl Csr {
    fn build(n: usize, pairs: impl Iterator<Item = (usize, usize)> + Clone) -> Self {
        let mut offsets = vec![0usize; n + 1];
        for (from, _) in pairs.clone() {
            offsets[from + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let mut fill = offsets.clone();
        let mut targets = vec![0usize; offsets[n]];
        for (from, to) in pairs {
            targets[fill[from]] = to;
            fill[from] += 1;
        }
        for i in 0..n {
            targets[offsets[i]..offsets[i + 1]].sort_unstable();
        }
        Csr { offsets, targets }
    }

    fn row(&self, i: usize) -> &[usize] {
        &self.targets[self.offsets[i]..self.offsets[i + 1]]
    }
}

/// Immutable precedence DAG with a cached topological order.
#[derive(Debug, Clone)]
pub struct ProjectNetwork {
    n: usize,
    edges: Vec<(ActivityId, ActivityId)>,
    successors: Csr,
    predecessors: Csr,
    topo_order: Vec<ActivityId>,
    topo_position: Vec<usize>,
}

/// Output of one forward/backward pass.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CpmResult {
    pub completion_time: f64,
    pub earliest_start: Vec<f64>,
    pub earliest_finish: Vec<f64>,
    pub latest_start: Vec<f64>,
    pub latest_finish: Vec<f64>,
    pub total_float: Vec<f64>,
    pub critical_mask: Vec<bool>,
}

/// Reusable buffers for the CPM kernel.
#[derive(Debug, Clone)]
pub struct CpmScratch {
    earliest_start: Vec<f64>,
    earliest_finish: Vec<f64>,
    latest_finish: Vec<f64>,
}

impl CpmScratch {
    pub fn new(n: usize) -> Self {
        CpmScratch {
            earliest_start: vec![0.0; n],
            earliest_finish: vec![0.0; n],
            latest_finish: vec![0.0; n],
        }
    }
}

impl ProjectNetwork {
    /// Validates the edge list and caches a topological order.
    ///
    /// The order is the lexicographically smallest one (Kahn's algorithm with
    /// a min-heap), so it depends only on the graph.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self, NetworkError> {
        if n == 0 {
            return Err(NetworkError::Empty);
        }
        let mut seen = std::collections::HashSet::with_capacity(edges.len());
        for &(from, to) in edges {
            if from >= n || to >= n {
                return Err(NetworkError::InvalidEdge {
                    from,
                    to,
                    reason: "endpoint out of range",
                });
            }
            if from == to {
                return Err(NetworkError::InvalidEdge {
                    from,
                    to,
                    reason: "self-loop",
                });
            }
            if !seen.insert((from, to)) {
                return Err(NetworkError::InvalidEdge {
                    from,
                    to,
                    reason: "duplicate edge",
                });
            }
        }

        let successors = Csr::build(n, edges.iter().copied());
        let predecessors = Csr::build(n, edges.iter().map(|&(a, b)| (b, a)));

        let mut indegree: Vec<usize> = (0..n).map(|i| predecessors.row(i).len()).collect();
        let mut ready: BinaryHeap<Reverse<usize>> =
            (0..n).filter(|&i| indegree[i] == 0).map(Reverse).collect();
        let mut topo_order = Vec::with_capacity(n);
        while let Some(Reverse(i)) = ready.pop() {
            topo_order.push(ActivityId(i));
            for &j in successors.row(i) {
                indegree[j] -= 1;
                if indegree[j] == 0 {
                    ready.push(Reverse(j));
                }
            }
        }
        if topo_order.len() != n {
            return Err(NetworkError::CycleDetected);
        }
        let mut topo_position = vec![0; n];
        for (pos, id) in topo_order.iter().enumerate() {
            topo_position[id.0] = pos;
        }

        Ok(ProjectNetwork {
            n,
            edges: edges
                .iter()
                .map(|&(a, b)| (ActivityId(a), ActivityId(b)))
                .collect(),
            successors,
            predecessors,
            topo_order,
            topo_position,
        })
    }

    pub fn activity_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(ActivityId, ActivityId)] {
        &self.edges
    }

    pub fn topo_order(&self) -> &[ActivityId] {
        &self.topo_order
    }

    pub fn successors(&self, id: ActivityId) -> impl Iterator<Item = ActivityId> + '_ {
        self.successors.row(id.0).iter().map(|&j| ActivityId(j))
    }

    pub fn predecessors(&self, id: ActivityId) -> impl Iterator<Item = ActivityId> + '_ {
        self.predecessors.row(id.0).iter().map(|&j| ActivityId(j))
    }

    /// Activities without predecessors, in index order.
    pub fn sources(&self) -> Vec<ActivityId> {
        (0..self.n)
            .filter(|&i| self.predecessors.row(i).is_empty())
            .map(ActivityId)
            .collect()
    }

    /// Activities without successors, in index order.
    pub fn sinks(&self) -> Vec<ActivityId> {
        (0..self.n)
            .filter(|&i| self.successors.row(i).is_empty())
            .map(ActivityId)
            .collect()
    }

    fn check_durations(&self, durations: &[f64]) -> Result<(), NetworkError> {
        if durations.len() != self.n {
            return Err(NetworkError::LengthMismatch {
                expected: self.n,
                actual: durations.len(),
            });
        }
        if let Some(i) = durations.iter().position(|d| !d.is_finite() || *d < 0.0) {
            return Err(NetworkError::InvalidDuration(i));
        }
        Ok(())
    }

    /// Forward pass only. Returns the completion time and leaves earliest
    /// finish times in `scratch`.
    pub fn completion_time_with(&self, durations: &[f64], scratch: &mut CpmScratch) -> f64 {
        let CpmScratch {
            earliest_start: es,
            earliest_finish: ef,
            ..
        } = scratch;
        let mut completion = 0.0f64;
        for &ActivityId(i) in &self.topo_order {
            es[i] = self
                .predecessors
                .row(i)
                .iter()
                .fold(0.0f64, |acc, &p| acc.max(ef[p]));
            ef[i] = es[i] + durations[i];
            if self.successors.row(i).is_empty() {
                completion = completion.max(ef[i]);
            }
        }
        completion
    }

    /// Forward and backward pass writing the zero-float mask into `mask`.
    /// Durations are assumed validated. Returns the completion time.
    pub fn critical_mask_with(
        &self,
        durations: &[f64],
        scratch: &mut CpmScratch,
        mask: &mut [bool],
    ) -> f64 {
        let completion = self.completion_time_with(durations, scratch);
        let eps = float_epsilon(completion);
        let CpmScratch {
            earliest_start: es,
            latest_finish: lf,
            ..
        } = scratch;
        for &ActivityId(i) in self.topo_order.iter().rev() {
            let finish = self
                .successors
                .row(i)
                .iter()
                .fold(completion, |acc, &s| acc.min(lf[s] - durations[s]));
            lf[i] = finish;
            mask[i] = (finish - durations[i]) - es[i] <= eps;
        }
        completion
    }

    /// Deterministic critical-path analysis for the given durations.
    pub fn compute_cpm(&self, durations: &[f64]) -> Result<CpmResult, NetworkError> {
        self.check_durations(durations)?;
        let n = self.n;
        let mut scratch = CpmScratch::new(n);
        let mut critical_mask = vec![false; n];
        let completion_time =
            self.critical_mask_with(durations, &mut scratch, &mut critical_mask);

        let CpmScratch {
            earliest_start,
            earliest_finish,
            latest_finish,
        } = scratch;
        let latest_start: Vec<f64> = (0..n).map(|i| latest_finish[i] - durations[i]).collect();
        let total_float = (0..n).map(|i| latest_start[i] - earliest_start[i]).collect();

        Ok(CpmResult {
            completion_time,
            earliest_start,
            earliest_finish,
            latest_start,
            latest_finish,
            total_float,
            critical_mask,
        })
    }

    /// Lists every source-to-sink path, ordered lexicographically by
    /// topological position. Intended as a brute-force oracle on small nets.
    pub fn enumerate_paths(&self, max_paths: usize) -> Result<Vec<Vec<ActivityId>>, NetworkError> {
        let by_topo = |ids: &mut Vec<usize>| ids.sort_by_key(|&i| self.topo_position[i]);
        let mut starts: Vec<usize> = self.sources().into_iter().map(|a| a.0).collect();
        by_topo(&mut starts);

        let mut paths = Vec::new();
        let mut path = Vec::new();
        // explicit stack of (node, next successor slot)
        let mut stack: Vec<(usize, usize)> = Vec::new();
        let ordered_succ: Vec<Vec<usize>> = (0..self.n)
            .map(|i| {
                let mut s = self.successors.row(i).to_vec();
                by_topo(&mut s);
                s
            })
            .collect();

        for start in starts {
            stack.push((start, 0));
            path.push(ActivityId(start));
            while let Some(top) = stack.last_mut() {
                let (node, slot) = *top;
                let succ = &ordered_succ[node];
                if succ.is_empty() {
                    if paths.len() == max_paths {
                        return Err(NetworkError::PathBudgetExceeded(max_paths));
                    }
                    paths.push(path.clone());
                }
                if slot < succ.len() {
                    top.1 += 1;
                    stack.push((succ[slot], 0));
                    path.push(ActivityId(succ[slot]));
                } else {
                    stack.pop();
                    path.pop();
                }
            }
        }
        Ok(paths)
    }
}
