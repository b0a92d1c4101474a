//! The distributed gradient-free mirror-descent iteration and its
//! variants.
//!
//! One iteration: every agent averages its neighbors' states with the
//! current mixing matrix, queries the two-point oracle at the configured
//! estimator site, and takes a proximal mirror step. Three variants
//! share this skeleton:
//!
//! - `drgfmd` — the mirror step with stepsize `alpha_t`;
//! - `drgfmd-prime` — the same step scaled by `L_phi / sigma_f`, the
//!   form the strongly convex weighted-averaging analysis uses;
//! - `dgfp` — the Euclidean projection baseline
//!   `P_X(y - alpha_t g)`, which coincides with `drgfmd` under the
//!   Euclidean map.
//!
//! Approximating sequences accumulate from the first post-update state:
//! the uniform running mean, the reciprocal-weighted average (weight
//! `1 / alpha_t`), and the stepsize-weighted average (weight `alpha_t`,
//! the baseline's convention).

pub mod bounds;

use thiserror::Error;

use crate::geometry::{Domain, GeometryError, MirrorMap, Point};
use crate::netgraph::{MixingMatrix, TopologySchedule};
use crate::objective::{GradientFreeOracle, ObjectiveError, ProblemInstance};
use crate::vecmath::{all_finite, dist};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("{what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("tracked node {node} out of range for {agents} agents")]
    TrackedNodeOutOfRange { node: usize, agents: usize },
    #[error("invalid stepsize schedule: {0}")]
    ScheduleInvalid(String),
    #[error("variant requires {0}")]
    VariantRequires(&'static str),
    #[error("non-finite state at agent {agent}, iteration {iteration}")]
    NonFinite { agent: usize, iteration: usize },
    #[error("bound evaluation needs {0}, which this configuration does not provide")]
    UnsupportedBound(&'static str),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
}

/// Which algorithm the iteration runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Drgfmd,
    DrgfmdPrime,
    Dgfp,
}

impl Variant {
    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Drgfmd => "drgfmd",
            Variant::DrgfmdPrime => "drgfmd-prime",
            Variant::Dgfp => "dgfp",
        }
    }

    pub fn parse(s: &str) -> Option<Variant> {
        match s {
            "drgfmd" => Some(Variant::Drgfmd),
            "drgfmd-prime" => Some(Variant::DrgfmdPrime),
            "dgfp" => Some(Variant::Dgfp),
            _ => None,
        }
    }
}

/// Where the oracle is queried: at the post-consensus state `y_i` or the
/// pre-consensus state `x_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorSite {
    PostConsensus,
    PreConsensus,
}

impl EstimatorSite {
    pub fn as_str(&self) -> &'static str {
        match self {
            EstimatorSite::PostConsensus => "post-consensus",
            EstimatorSite::PreConsensus => "pre-consensus",
        }
    }

    pub fn parse(s: &str) -> Option<EstimatorSite> {
        match s {
            "post-consensus" => Some(EstimatorSite::PostConsensus),
            "pre-consensus" => Some(EstimatorSite::PreConsensus),
            _ => None,
        }
    }
}

/// Diminishing stepsize schedules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSchedule {
    /// `alpha_t = eta / sqrt(t + 1)`.
    Sqrt { eta: f64 },
    /// `alpha_0 = L_phi / sigma_f`, `alpha_t = L_phi / (sigma_f t)`.
    StronglyConvex { grad_lipschitz: f64, sigma_f: f64 },
    /// `alpha_0 = 1`, `alpha_t = rho / (t + 1)^delta` with `delta` in (0, 1).
    Power { rho: f64, delta: f64 },
    /// `alpha_0 = 1`, `alpha_t = 2 / (t + 1)`.
    ScaledHarmonic,
}

impl StepSchedule {
    pub fn alpha(&self, t: usize) -> f64 {
        match *self {
            StepSchedule::Sqrt { eta } => eta / ((t + 1) as f64).sqrt(),
            StepSchedule::StronglyConvex {
                grad_lipschitz,
                sigma_f,
            } => {
                if t == 0 {
                    grad_lipschitz / sigma_f
                } else {
                    grad_lipschitz / (sigma_f * t as f64)
                }
            }
            StepSchedule::Power { rho, delta } => {
                if t == 0 {
                    1.0
                } else {
                    rho / ((t + 1) as f64).powf(delta)
                }
            }
            StepSchedule::ScaledHarmonic => {
                if t == 0 {
                    1.0
                } else {
                    2.0 / (t as f64 + 1.0)
                }
            }
        }
    }

    /// Positivity and monotonicity of the closed forms.
    pub fn validate(&self) -> Result<(), SolverError> {
        match *self {
            StepSchedule::Sqrt { eta } => {
                if eta <= 0.0 || !eta.is_finite() {
                    return Err(SolverError::ScheduleInvalid(format!(
                        "sqrt schedule needs positive eta, got {eta}"
                    )));
                }
            }
            StepSchedule::StronglyConvex {
                grad_lipschitz,
                sigma_f,
            } => {
                if grad_lipschitz <= 0.0 || sigma_f <= 0.0 {
                    return Err(SolverError::ScheduleInvalid(format!(
                        "strongly-convex schedule needs positive constants, got \
                         grad_lipschitz = {grad_lipschitz}, sigma_f = {sigma_f}"
                    )));
                }
            }
            StepSchedule::Power { rho, delta } => {
                if !(0.0 < delta && delta < 1.0) {
                    return Err(SolverError::ScheduleInvalid(format!(
                        "power schedule needs delta in (0, 1), got {delta}"
                    )));
                }
                // alpha_1 = rho / 2^delta must not exceed alpha_0 = 1.
                if !(0.0 < rho && rho <= 2.0f64.powf(delta)) {
                    return Err(SolverError::ScheduleInvalid(format!(
                        "power schedule needs 0 < rho <= 2^delta for a \
                         non-increasing sequence, got rho = {rho}"
                    )));
                }
            }
            StepSchedule::ScaledHarmonic => {}
        }
        Ok(())
    }

    /// Scaled-variant precondition `(1 - alpha_t) / alpha_t^2 <= 1 /
    /// alpha_{t-1}^2`, checked numerically over the horizon.
    pub fn check_prime_precondition(&self, horizon: usize) -> Result<(), SolverError> {
        for t in 1..=horizon.max(1) {
            let a = self.alpha(t);
            let prev = self.alpha(t - 1);
            if (1.0 - a) / (a * a) > 1.0 / (prev * prev) + 1e-9 {
                return Err(SolverError::ScheduleInvalid(format!(
                    "scaled-variant precondition fails at t = {t}: \
                     (1 - {a}) / {a}^2 > 1 / {prev}^2"
                )));
            }
        }
        Ok(())
    }
}

/// Which approximating sequences a run maintains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AveragingModes {
    pub running_mean: bool,
    pub reciprocal: bool,
    pub alpha_weighted: bool,
}

impl Default for AveragingModes {
    fn default() -> Self {
        AveragingModes {
            running_mean: true,
            reciprocal: true,
            alpha_weighted: false,
        }
    }
}

impl AveragingModes {
    pub fn all() -> Self {
        AveragingModes {
            running_mean: true,
            reciprocal: true,
            alpha_weighted: true,
        }
    }
}

/// When metric checkpoints are recorded: densely up to `dense_until`,
/// then every `stride` iterations (and always at the horizon).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckpointPolicy {
    pub dense_until: usize,
    pub stride: usize,
}

impl CheckpointPolicy {
    /// Dense for the first 100 iterations, then about 400 checkpoints
    /// across the rest of the horizon.
    pub fn default_for(horizon: usize) -> Self {
        CheckpointPolicy {
            dense_until: 100,
            stride: horizon.div_ceil(400).max(1),
        }
    }

    pub fn is_checkpoint(&self, t: usize, horizon: usize) -> bool {
        t > 0 && (t <= self.dense_until || t % self.stride == 0 || t == horizon)
    }
}

/// Full description of a run apart from the problem, topology, map, and
/// oracle objects themselves.
#[derive(Debug, Clone)]
pub struct AlgorithmConfig {
    pub variant: Variant,
    pub estimator_site: EstimatorSite,
    pub averaging: AveragingModes,
    pub schedule: StepSchedule,
    pub horizon: usize,
    pub tracked_node: usize,
    /// Starting state for every agent; defaults to the domain center.
    pub initial_point: Option<Point>,
    pub checkpoints: Option<CheckpointPolicy>,
}

impl AlgorithmConfig {
    pub fn new(variant: Variant, schedule: StepSchedule, horizon: usize) -> Self {
        AlgorithmConfig {
            variant,
            estimator_site: match variant {
                Variant::DrgfmdPrime => EstimatorSite::PostConsensus,
                _ => EstimatorSite::PostConsensus,
            },
            averaging: AveragingModes::default(),
            schedule,
            horizon,
            tracked_node: 0,
            initial_point: None,
            checkpoints: None,
        }
    }

    pub fn with_site(mut self, site: EstimatorSite) -> Self {
        self.estimator_site = site;
        self
    }

    pub fn with_averaging(mut self, averaging: AveragingModes) -> Self {
        self.averaging = averaging;
        self
    }

    pub fn with_tracked_node(mut self, node: usize) -> Self {
        self.tracked_node = node;
        self
    }

    /// Cross-checks the configuration against the problem and map.
    pub fn validate(
        &self,
        problem: &ProblemInstance,
        map: &dyn MirrorMap,
    ) -> Result<(), SolverError> {
        self.schedule.validate()?;
        if self.tracked_node >= problem.n_agents() {
            return Err(SolverError::TrackedNodeOutOfRange {
                node: self.tracked_node,
                agents: problem.n_agents(),
            });
        }
        if map.dimension() != problem.dimension() {
            return Err(SolverError::DimensionMismatch {
                what: "mirror map dimension",
                expected: problem.dimension(),
                got: map.dimension(),
            });
        }
        match self.variant {
            Variant::DrgfmdPrime => {
                if map.grad_lipschitz().is_none() {
                    return Err(SolverError::VariantRequires(
                        "a mirror map with a Lipschitz gradient",
                    ));
                }
                if problem.strong_convexity().is_none() {
                    return Err(SolverError::VariantRequires(
                        "strongly convex local objectives",
                    ));
                }
                self.schedule.check_prime_precondition(self.horizon)?;
            }
            Variant::Dgfp => {
                if map.grad_lipschitz() != Some(1.0) || map.strong_convexity() != 1.0 {
                    return Err(SolverError::VariantRequires("the Euclidean mirror map"));
                }
            }
            Variant::Drgfmd => {}
        }
        if let Some(p) = &self.initial_point {
            if p.dim() != problem.dimension() {
                return Err(SolverError::DimensionMismatch {
                    what: "initial point dimension",
                    expected: problem.dimension(),
                    got: p.dim(),
                });
            }
        }
        Ok(())
    }
}

/// Consensus averaging: `y_i = sum_j P_ij x_j`. Convex combinations keep
/// feasibility.
pub fn consensus_step(
    states: &[Vec<f64>],
    mixing: &MixingMatrix,
) -> Result<Vec<Vec<f64>>, SolverError> {
    let n_agents = states.len();
    if mixing.size() != n_agents {
        return Err(SolverError::DimensionMismatch {
            what: "mixing matrix size",
            expected: n_agents,
            got: mixing.size(),
        });
    }
    let dim = states.first().map_or(0, Vec::len);
    let mut out = vec![vec![0.0; dim]; n_agents];
    for i in 0..n_agents {
        for j in 0..n_agents {
            let w = mixing.get(i, j);
            if w == 0.0 {
                continue;
            }
            for d in 0..dim {
                out[i][d] += w * states[j][d];
            }
        }
    }
    Ok(out)
}

/// One local update from the post-consensus state `y` with oracle sample
/// `g`. `prime_ratio` is `grad_lipschitz / sigma_f`, used only by the
/// scaled variant.
pub fn local_step(
    map: &dyn MirrorMap,
    domain: &Domain,
    y: &[f64],
    g: &[f64],
    alpha: f64,
    variant: Variant,
    prime_ratio: f64,
) -> Result<Point, SolverError> {
    let stepped = match variant {
        Variant::Drgfmd => map.mirror_step(y, g, alpha)?,
        Variant::DrgfmdPrime => map.mirror_step(y, g, alpha * prime_ratio)?,
        Variant::Dgfp => {
            let target: Vec<f64> = y.iter().zip(g).map(|(&yv, &gv)| yv - alpha * gv).collect();
            Point::new(domain.project(&target))?
        }
    };
    Ok(stepped)
}

/// Incremental accumulators for the approximating sequences of one node.
#[derive(Debug, Clone)]
pub struct RunningAverages {
    modes: AveragingModes,
    count: usize,
    sum: Vec<f64>,
    reciprocal_num: Vec<f64>,
    reciprocal_den: f64,
    alpha_num: Vec<f64>,
    alpha_den: f64,
}

impl RunningAverages {
    pub fn new(dim: usize, modes: AveragingModes) -> Self {
        RunningAverages {
            modes,
            count: 0,
            sum: vec![0.0; dim],
            reciprocal_num: vec![0.0; dim],
            reciprocal_den: 0.0,
            alpha_num: vec![0.0; dim],
            alpha_den: 0.0,
        }
    }

    /// Folds in the iterate with index `t >= 1` and schedule value
    /// `alpha_t` at that index.
    pub fn update(&mut self, x: &[f64], alpha_t: f64, t: usize) {
        debug_assert!(t >= 1, "averages accumulate from the first update");
        let _ = t;
        self.count += 1;
        for (s, &v) in self.sum.iter_mut().zip(x) {
            *s += v;
        }
        let w = 1.0 / alpha_t;
        for (s, &v) in self.reciprocal_num.iter_mut().zip(x) {
            *s += w * v;
        }
        self.reciprocal_den += w;
        for (s, &v) in self.alpha_num.iter_mut().zip(x) {
            *s += alpha_t * v;
        }
        self.alpha_den += alpha_t;
    }

    pub fn running_mean(&self) -> Option<Point> {
        if !self.modes.running_mean || self.count == 0 {
            return None;
        }
        Some(Point::trusted(
            self.sum.iter().map(|s| s / self.count as f64).collect(),
        ))
    }

    pub fn reciprocal(&self) -> Option<Point> {
        if !self.modes.reciprocal || self.count == 0 {
            return None;
        }
        Some(Point::trusted(
            self.reciprocal_num
                .iter()
                .map(|s| s / self.reciprocal_den)
                .collect(),
        ))
    }

    pub fn alpha_weighted(&self) -> Option<Point> {
        if !self.modes.alpha_weighted || self.count == 0 {
            return None;
        }
        Some(Point::trusted(
            self.alpha_num.iter().map(|s| s / self.alpha_den).collect(),
        ))
    }
}

/// State snapshot at one recorded iteration.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    /// State index: `t = 0` is the initial state.
    pub t: usize,
    /// Every agent's current estimate.
    pub agents: Vec<Point>,
    /// Per-agent displacement of the step that produced this state,
    /// `||x_i^t - y_i^{t-1}||`; empty at `t = 0`.
    pub step_error: Vec<f64>,
    pub running_mean: Option<Point>,
    pub reciprocal: Option<Point>,
    pub alpha_weighted: Option<Point>,
}

impl Checkpoint {
    /// Largest pairwise distance between agent estimates.
    pub fn consensus_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.agents.len() {
            for j in (i + 1)..self.agents.len() {
                worst = worst.max(dist(&self.agents[i], &self.agents[j]));
            }
        }
        worst
    }

    /// Per-agent distance from the network mean.
    pub fn disagreement_from_mean(&self) -> Vec<f64> {
        let n = self.agents.len();
        let dim = self.agents[0].dim();
        let mut mean = vec![0.0; dim];
        for a in &self.agents {
            for d in 0..dim {
                mean[d] += a[d] / n as f64;
            }
        }
        self.agents.iter().map(|a| dist(a, &mean)).collect()
    }
}

/// Deterministic trace of one run: replaying with the same inputs
/// reproduces it bit for bit.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub trial: u64,
    pub oracle_seed: u64,
    pub horizon: usize,
    pub tracked_node: usize,
    pub checkpoints: Vec<Checkpoint>,
}

/// Executes the configured iteration for `config.horizon` steps.
pub fn run(
    problem: &ProblemInstance,
    topology: &TopologySchedule,
    map: &dyn MirrorMap,
    oracle: &GradientFreeOracle,
    config: &AlgorithmConfig,
    trial: u64,
) -> Result<RunRecord, SolverError> {
    config.validate(problem, map)?;
    let n_agents = problem.n_agents();
    if topology.node_count() != n_agents {
        return Err(SolverError::DimensionMismatch {
            what: "topology node count",
            expected: n_agents,
            got: topology.node_count(),
        });
    }
    if oracle.n_agents() != n_agents {
        return Err(SolverError::DimensionMismatch {
            what: "oracle agent count",
            expected: n_agents,
            got: oracle.n_agents(),
        });
    }
    let dim = problem.dimension();
    let initial = match &config.initial_point {
        Some(p) => p.as_slice().to_vec(),
        None => problem.domain.center(),
    };
    let policy = config
        .checkpoints
        .unwrap_or_else(|| CheckpointPolicy::default_for(config.horizon));
    let prime_ratio = match config.variant {
        Variant::DrgfmdPrime => {
            map.grad_lipschitz().expect("validated above")
                / problem.strong_convexity().expect("validated above")
        }
        _ => 1.0,
    };

    let mut states: Vec<Vec<f64>> = vec![initial; n_agents];
    let mut averages = RunningAverages::new(dim, config.averaging);
    let mut checkpoints = Vec::new();
    checkpoints.push(Checkpoint {
        t: 0,
        agents: states.iter().map(|s| Point::trusted(s.clone())).collect(),
        step_error: Vec::new(),
        running_mean: None,
        reciprocal: None,
        alpha_weighted: None,
    });

    let mut step_error = vec![0.0; n_agents];
    for t in 0..config.horizon {
        let mixing = topology.round(t);
        let post = consensus_step(&states, mixing)?;
        let alpha = config.schedule.alpha(t);
        let mut next = Vec::with_capacity(n_agents);
        for i in 0..n_agents {
            let site = match config.estimator_site {
                EstimatorSite::PostConsensus => &post[i],
                EstimatorSite::PreConsensus => &states[i],
            };
            let g = oracle.sample(&problem.agents[i], site, trial, i, t as u64)?;
            let stepped = local_step(
                map,
                &problem.domain,
                &post[i],
                &g,
                alpha,
                config.variant,
                prime_ratio,
            )?;
            if !all_finite(&stepped) {
                return Err(SolverError::NonFinite {
                    agent: i,
                    iteration: t,
                });
            }
            step_error[i] = dist(&stepped, &post[i]);
            next.push(stepped.into_vec());
        }
        states = next;
        let state_index = t + 1;
        averages.update(
            &states[config.tracked_node],
            config.schedule.alpha(state_index),
            state_index,
        );
        if policy.is_checkpoint(state_index, config.horizon) {
            checkpoints.push(Checkpoint {
                t: state_index,
                agents: states.iter().map(|s| Point::trusted(s.clone())).collect(),
                step_error: step_error.clone(),
                running_mean: averages.running_mean(),
                reciprocal: averages.reciprocal(),
                alpha_weighted: averages.alpha_weighted(),
            });
        }
    }
    Ok(RunRecord {
        trial,
        oracle_seed: oracle.seed(),
        horizon: config.horizon,
        tracked_node: config.tracked_node,
        checkpoints,
    })
}
