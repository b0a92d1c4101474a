//! Time-varying communication topologies and their mixing diagnostics.
//!
//! Schedules are periodic lists of (graph, doubly stochastic matrix)
//! rounds. Validation checks that the union of edges over every window of
//! the configured length is connected, which is what guarantees geometric
//! mixing of the transition products; `mixing_bound_check` then verifies
//! the resulting decay bound numerically over a horizon.

use rand::Rng;
use thiserror::Error;

use crate::rng::{keyed_rng, stream};

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("graph must have at least one node")]
    EmptyGraph,
    #[error("edge ({0}, {1}) out of range for {2} nodes")]
    EdgeOutOfRange(usize, usize, usize),
    #[error("self-loop ({0}, {0}) not allowed; self-weights arise from matrix construction")]
    SelfLoop(usize),
    #[error("matrix is not doubly stochastic: {0}")]
    NotDoublyStochastic(String),
    #[error("positive entry below its reported floor: {0}")]
    EntryBelowFloor(String),
    #[error("schedule must contain at least one round")]
    EmptySchedule,
    #[error("round {round} has {got} nodes, expected {expected}")]
    RoundSizeMismatch {
        round: usize,
        expected: usize,
        got: usize,
    },
    #[error("edge union over rounds [{start}, {start_plus_window}) is not connected")]
    DisconnectedWindow {
        start: usize,
        start_plus_window: usize,
    },
    #[error("invalid connectivity window {0}; must be at least 1")]
    BadWindow(usize),
    #[error("transition product requires t >= s, got t = {t}, s = {s}")]
    BadProductRange { t: usize, s: usize },
    #[error("could not draw a connected geometric graph in {retries} retries; radius {radius} too small")]
    RetriesExhausted { retries: usize, radius: f64 },
    #[error("radius {0} must lie in (0, sqrt(2)]")]
    BadRadius(f64),
    #[error("mixing matrix dimension {got} does not match state count {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Undirected simple graph on nodes `0..node_count`. Self-loops are
/// implicit and never stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    node_count: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Builds a graph, normalizing each edge to `(min, max)` order and
    /// dropping duplicates.
    pub fn new(node_count: usize, edges: &[(usize, usize)]) -> Result<Self, NetworkError> {
        if node_count == 0 {
            return Err(NetworkError::EmptyGraph);
        }
        let mut normalized: Vec<(usize, usize)> = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a == b {
                return Err(NetworkError::SelfLoop(a));
            }
            if a >= node_count || b >= node_count {
                return Err(NetworkError::EdgeOutOfRange(a, b, node_count));
            }
            normalized.push((a.min(b), a.max(b)));
        }
        normalized.sort_unstable();
        normalized.dedup();
        Ok(Graph {
            node_count,
            edges: normalized,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.node_count];
        for &(a, b) in &self.edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }

    /// Breadth-first connectivity check.
    pub fn is_connected(&self) -> bool {
        if self.node_count <= 1 {
            return true;
        }
        let mut adj = vec![Vec::new(); self.node_count];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut seen = vec![false; self.node_count];
        let mut queue = std::collections::VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == self.node_count
    }

    /// Union of edge sets over several graphs on the same node set.
    pub fn union(graphs: &[&Graph]) -> Result<Graph, NetworkError> {
        let node_count = graphs.first().ok_or(NetworkError::EmptyGraph)?.node_count;
        let mut edges = Vec::new();
        for g in graphs {
            edges.extend_from_slice(&g.edges);
        }
        Graph::new(node_count, &edges)
    }

    /// Complete graph, mostly for tests and degenerate defaults.
    pub fn complete(node_count: usize) -> Result<Self, NetworkError> {
        let mut edges = Vec::new();
        for i in 0..node_count {
            for j in (i + 1)..node_count {
                edges.push((i, j));
            }
        }
        Graph::new(node_count, &edges)
    }
}

/// Square dense matrix, row-major. Only what the transition products need.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        SquareMatrix { n, data }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    /// `self * rhs`.
    pub fn matmul(&self, rhs: &SquareMatrix) -> SquareMatrix {
        assert_eq!(self.n, rhs.n);
        let n = self.n;
        let mut out = SquareMatrix {
            n,
            data: vec![0.0; n * n],
        };
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.get(k, j);
                }
            }
        }
        out
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).sum())
            .collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self.get(i, j)).sum())
            .collect()
    }
}

/// Doubly stochastic communication weights for one round, together with
/// the uniform floor on its positive entries.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingMatrix {
    entries: SquareMatrix,
    zeta: f64,
}

impl MixingMatrix {
    /// Validates double stochasticity (1e-12 on row and column sums),
    /// nonnegativity, and that the diagonal plus every positive
    /// off-diagonal entry sits at or above `zeta`.
    pub fn new(entries: SquareMatrix, zeta: f64) -> Result<Self, NetworkError> {
        let n = entries.size();
        for (i, s) in entries.row_sums().iter().enumerate() {
            if (s - 1.0).abs() > 1e-12 {
                return Err(NetworkError::NotDoublyStochastic(format!(
                    "row {i} sums to {s}"
                )));
            }
        }
        for (j, s) in entries.col_sums().iter().enumerate() {
            if (s - 1.0).abs() > 1e-12 {
                return Err(NetworkError::NotDoublyStochastic(format!(
                    "column {j} sums to {s}"
                )));
            }
        }
        for i in 0..n {
            for j in 0..n {
                let v = entries.get(i, j);
                if v < 0.0 {
                    return Err(NetworkError::NotDoublyStochastic(format!(
                        "entry ({i}, {j}) = {v} is negative"
                    )));
                }
                if i == j && v < zeta - 1e-15 {
                    return Err(NetworkError::EntryBelowFloor(format!(
                        "diagonal ({i}, {i}) = {v} < zeta = {zeta}"
                    )));
                }
                if i != j && v > 0.0 && v < zeta - 1e-15 {
                    return Err(NetworkError::EntryBelowFloor(format!(
                        "entry ({i}, {j}) = {v} < zeta = {zeta}"
                    )));
                }
            }
        }
        Ok(MixingMatrix { entries, zeta })
    }

    pub fn size(&self) -> usize {
        self.entries.size()
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries.get(i, j)
    }

    pub fn matrix(&self) -> &SquareMatrix {
        &self.entries
    }
}

/// Metropolis weights: `1 / (1 + max(deg_i, deg_j))` on each edge, with
/// the diagonal absorbing the remainder. Symmetric, hence doubly
/// stochastic; isolated nodes get weight 1 on themselves.
pub fn metropolis_matrix(graph: &Graph) -> MixingMatrix {
    let n = graph.node_count();
    let deg = graph.degrees();
    let mut m = SquareMatrix::identity(n);
    for &(a, b) in graph.edges() {
        let w = 1.0 / (1.0 + deg[a].max(deg[b]) as f64);
        m.set(a, b, w);
        m.set(b, a, w);
    }
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| m.get(i, j)).sum();
        m.set(i, i, 1.0 - off);
    }
    let mut zeta = f64::INFINITY;
    for i in 0..n {
        for j in 0..n {
            let v = m.get(i, j);
            if v > 0.0 {
                zeta = zeta.min(v);
            }
        }
    }
    MixingMatrix::new(m, zeta).expect("metropolis weights are doubly stochastic by construction")
}

/// One round of a periodic schedule.
#[derive(Debug, Clone)]
pub struct ScheduleRound {
    pub graph: Graph,
    pub matrix: MixingMatrix,
}

/// Periodic time-varying topology: round `t` uses entry `t mod period`.
/// Validated so that every window of `connectivity_window` consecutive
/// rounds has a connected edge union.
#[derive(Debug, Clone)]
pub struct TopologySchedule {
    rounds: Vec<ScheduleRound>,
    connectivity_window: usize,
}

impl TopologySchedule {
    pub fn new(rounds: Vec<ScheduleRound>, connectivity_window: usize) -> Result<Self, NetworkError> {
        if rounds.is_empty() {
            return Err(NetworkError::EmptySchedule);
        }
        if connectivity_window == 0 {
            return Err(NetworkError::BadWindow(0));
        }
        let n = rounds[0].graph.node_count();
        for (idx, r) in rounds.iter().enumerate() {
            if r.graph.node_count() != n {
                return Err(NetworkError::RoundSizeMismatch {
                    round: idx,
                    expected: n,
                    got: r.graph.node_count(),
                });
            }
            if r.matrix.size() != n {
                return Err(NetworkError::RoundSizeMismatch {
                    round: idx,
                    expected: n,
                    got: r.matrix.size(),
                });
            }
        }
        let schedule = TopologySchedule {
            rounds,
            connectivity_window,
        };
        schedule.check_window_connectivity()?;
        Ok(schedule)
    }

    /// Static schedule cycling a single round.
    pub fn static_round(graph: Graph) -> Result<Self, NetworkError> {
        let matrix = metropolis_matrix(&graph);
        TopologySchedule::new(vec![ScheduleRound { graph, matrix }], 1)
    }

    /// Periodicity alone makes window checks exhaustive: every start
    /// index is congruent to one in `0..period`.
    fn check_window_connectivity(&self) -> Result<(), NetworkError> {
        let period = self.rounds.len();
        let b = self.connectivity_window;
        for start in 0..period {
            let graphs: Vec<&Graph> = (0..b)
                .map(|s| &self.rounds[(start + s) % period].graph)
                .collect();
            let union = Graph::union(&graphs)?;
            if !union.is_connected() {
                return Err(NetworkError::DisconnectedWindow {
                    start,
                    start_plus_window: start + b,
                });
            }
        }
        Ok(())
    }

    pub fn period(&self) -> usize {
        self.rounds.len()
    }

    pub fn connectivity_window(&self) -> usize {
        self.connectivity_window
    }

    pub fn node_count(&self) -> usize {
        self.rounds[0].graph.node_count()
    }

    /// Mixing matrix in effect at time `t`.
    pub fn round(&self, t: usize) -> &MixingMatrix {
        &self.rounds[t % self.rounds.len()].matrix
    }

    pub fn rounds(&self) -> &[ScheduleRound] {
        &self.rounds
    }

    /// Smallest positive-entry floor across rounds.
    pub fn min_zeta(&self) -> f64 {
        self.rounds
            .iter()
            .map(|r| r.matrix.zeta())
            .fold(f64::INFINITY, f64::min)
    }

    /// Random periodic schedule with period equal to the connectivity
    /// window: every window unions back to the full connected graph.
    pub fn random_periodic(
        node_count: usize,
        window: usize,
        radius: f64,
        seed: u64,
    ) -> Result<Self, NetworkError> {
        TopologySchedule::random_dealt(node_count, window, window, radius, seed)
    }

    /// Random periodic schedule: draws a connected geometric graph and
    /// deals its edges round-robin (after a seeded shuffle) across
    /// `period` rounds. Window connectivity is then validated as usual,
    /// so periods longer than the window are rejected unless a single
    /// round already happens to be connected.
    pub fn random_dealt(
        node_count: usize,
        period: usize,
        window: usize,
        radius: f64,
        seed: u64,
    ) -> Result<Self, NetworkError> {
        if period == 0 {
            return Err(NetworkError::EmptySchedule);
        }
        let base = random_geometric_graph(node_count, radius, seed)?;
        if period == 1 {
            let matrix = metropolis_matrix(&base);
            return TopologySchedule::new(
                vec![ScheduleRound {
                    graph: base,
                    matrix,
                }],
                window,
            );
        }
        let mut rng = keyed_rng(seed, stream::GRAPH, &[node_count as u64, period as u64]);
        let mut edges: Vec<(usize, usize)> = base.edges().to_vec();
        // Fisher-Yates with the keyed generator.
        for i in (1..edges.len()).rev() {
            let j = rng.random_range(0..=i);
            edges.swap(i, j);
        }
        let mut per_round: Vec<Vec<(usize, usize)>> = vec![Vec::new(); period];
        for (k, e) in edges.into_iter().enumerate() {
            per_round[k % period].push(e);
        }
        let rounds = per_round
            .into_iter()
            .map(|es| {
                let graph = Graph::new(node_count, &es)?;
                let matrix = metropolis_matrix(&graph);
                Ok(ScheduleRound { graph, matrix })
            })
            .collect::<Result<Vec<_>, NetworkError>>()?;
        TopologySchedule::new(rounds, window)
    }
}

/// Nodes placed uniformly in the unit square, edges between pairs within
/// `radius`. Resamples positions until the graph is connected, up to 1000
/// retries.
pub fn random_geometric_graph(
    node_count: usize,
    radius: f64,
    seed: u64,
) -> Result<Graph, NetworkError> {
    if node_count == 0 {
        return Err(NetworkError::EmptyGraph);
    }
    if !(radius > 0.0 && radius <= std::f64::consts::SQRT_2) {
        return Err(NetworkError::BadRadius(radius));
    }
    const MAX_RETRIES: usize = 1000;
    for attempt in 0..MAX_RETRIES {
        let mut rng = keyed_rng(seed, stream::GRAPH, &[attempt as u64]);
        let positions: Vec<(f64, f64)> = (0..node_count)
            .map(|_| (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)))
            .collect();
        let mut edges = Vec::new();
        for i in 0..node_count {
            for j in (i + 1)..node_count {
                let dx = positions[i].0 - positions[j].0;
                let dy = positions[i].1 - positions[j].1;
                if (dx * dx + dy * dy).sqrt() <= radius {
                    edges.push((i, j));
                }
            }
        }
        let graph = Graph::new(node_count, &edges)?;
        if graph.is_connected() {
            return Ok(graph);
        }
    }
    Err(NetworkError::RetriesExhausted {
        retries: MAX_RETRIES,
        radius,
    })
}

/// Ordered product of round matrices from time `s` through `t`
/// (latest factor leftmost). Doubly stochastic by inheritance.
pub fn transition_product(
    schedule: &TopologySchedule,
    t: usize,
    s: usize,
) -> Result<SquareMatrix, NetworkError> {
    if t < s {
        return Err(NetworkError::BadProductRange { t, s });
    }
    let mut product = schedule.round(s).matrix().clone();
    for k in (s + 1)..=t {
        product = schedule.round(k).matrix().matmul(&product);
    }
    Ok(product)
}

/// Outcome of checking the geometric decay of transition products:
/// `|[P(t,s)]_{ij} - 1/N| <= coefficient * decay^(t-s)` for all
/// `0 <= s <= t <= horizon`.
#[derive(Debug, Clone)]
pub struct MixingCertificate {
    /// Leading coefficient `(1 - zeta / (4 N^2))^{-2}`.
    pub coefficient: f64,
    /// Per-step decay `(1 - zeta / (4 N^2))^{1/B}`, in (0, 1).
    pub decay: f64,
    /// Largest excess of `|[P(t,s)]_{ij} - 1/N|` over the bound; at or
    /// below zero means the bound held everywhere checked.
    pub max_violation: f64,
    /// Largest `t` checked.
    pub horizon: usize,
}

/// Computes the decay constants from the schedule's entry floor and
/// window, then checks the bound for every pair `s <= t` up to `horizon`
/// and every matrix entry.
pub fn mixing_bound_check(
    schedule: &TopologySchedule,
    horizon: usize,
) -> Result<MixingCertificate, NetworkError> {
    let n = schedule.node_count();
    let zeta = schedule.min_zeta();
    let b = schedule.connectivity_window();
    let base = 1.0 - zeta / (4.0 * (n * n) as f64);
    let coefficient = base.powi(-2);
    let decay = base.powf(1.0 / b as f64);
    let uniform = 1.0 / n as f64;

    let mut max_violation = f64::NEG_INFINITY;
    for s in 0..=horizon {
        let mut product = schedule.round(s).matrix().clone();
        let mut t = s;
        loop {
            let envelope = coefficient * decay.powi((t - s) as i32);
            for i in 0..n {
                for j in 0..n {
                    let violation = (product.get(i, j) - uniform).abs() - envelope;
                    if violation > max_violation {
                        max_violation = violation;
                    }
                }
            }
            if t == horizon {
                break;
            }
            t += 1;
            product = schedule.round(t).matrix().matmul(&product);
        }
    }
    Ok(MixingCertificate {
        coefficient,
        decay,
        max_violation,
        horizon,
    })
}
