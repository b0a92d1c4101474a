//! Flat experiment configuration: `key = value` lines with `#` comments
//! and dotted section prefixes.
//!
//! Every key has a default matching the simulation study, every value is
//! validated with an error naming the key, and unknown keys are
//! rejected. A canonical fingerprint of the normalized document is
//! embedded in all outputs.

use std::path::PathBuf;

use thiserror::Error;

use crate::geometry::{EntropyMap, EuclideanMap, MirrorMap, Point};
use crate::lab::LabError;
use crate::netgraph::{metropolis_matrix, Graph, ScheduleRound, TopologySchedule};
use crate::objective::{
    default_costs, nesterov_problem, strongly_convex_problem, GradientFreeOracle, ProblemInstance,
};
use crate::rng::fnv1a64;
use crate::solver::{
    AlgorithmConfig, AveragingModes, CheckpointPolicy, EstimatorSite, StepSchedule, Variant,
};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{key}`: {reason}")]
    BadValue { key: String, reason: String },
    #[error("key `{key}` conflicts: {reason}")]
    Conflict { key: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Nesterov,
    StronglyConvex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapKind {
    Entropy,
    Euclidean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleKind {
    Sqrt,
    StronglyConvex,
    Power,
    ScaledHarmonic,
}

/// Per-round topology source: generated geometric graphs or explicit
/// adjacency lists.
#[derive(Debug, Clone, PartialEq)]
pub enum NetworkSource {
    Generated,
    Explicit(Vec<Vec<(usize, usize)>>),
}

/// Typed view of a configuration document. Field groups mirror the
/// dotted key prefixes.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem_kind: ProblemKind,
    pub dimension: usize,
    pub agents: usize,
    pub cost_seed: u64,
    pub costs: Option<Vec<f64>>,
    pub sigma_f: f64,
    /// `None` means every anchor at the simplex center.
    pub anchors: Option<Vec<Vec<f64>>>,

    pub radius: f64,
    pub period: usize,
    pub window: usize,
    pub graph_seed: u64,
    pub network: NetworkSource,

    pub map_kind: MapKind,
    pub interior_floor: f64,

    pub mu: Vec<f64>,
    pub direction_scale: f64,

    pub variant: Variant,
    pub estimator_site: EstimatorSite,
    pub averaging: AveragingModes,
    pub schedule_kind: ScheduleKind,
    pub eta: f64,
    pub rho: f64,
    pub delta: f64,
    pub horizon: usize,
    pub tracked_node: usize,
    pub initial_point: Option<Vec<f64>>,

    pub trials: usize,
    pub base_seed: u64,

    pub out_dir: PathBuf,
    pub dense_until: usize,
    /// 0 selects the automatic stride (about 400 checkpoints).
    pub stride: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            problem_kind: ProblemKind::Nesterov,
            dimension: 3,
            agents: 5,
            cost_seed: 7,
            costs: None,
            sigma_f: 1.0,
            anchors: None,
            radius: 0.6,
            period: 1,
            window: 1,
            graph_seed: 2,
            network: NetworkSource::Generated,
            map_kind: MapKind::Entropy,
            interior_floor: 1e-12,
            mu: vec![1e-4],
            direction_scale: 0.5,
            variant: Variant::Drgfmd,
            estimator_site: EstimatorSite::PostConsensus,
            averaging: AveragingModes::default(),
            schedule_kind: ScheduleKind::Sqrt,
            eta: 1.0,
            rho: 1.0,
            delta: 0.5,
            horizon: 10_000,
            tracked_node: 0,
            initial_point: None,
            trials: 30,
            base_seed: 1,
            out_dir: PathBuf::from("out"),
            dense_until: 100,
            stride: 0,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e| ConfigError::BadValue {
        key: key.to_string(),
        reason: format!("{e}"),
    })
}

fn parse_f64_list(key: &str, value: &str) -> Result<Vec<f64>, ConfigError> {
    value
        .split(',')
        .map(|s| parse_num::<f64>(key, s.trim()))
        .collect()
}

fn parse_point_list(key: &str, value: &str) -> Result<Vec<Vec<f64>>, ConfigError> {
    value
        .split(';')
        .map(|seg| parse_f64_list(key, seg.trim()))
        .collect()
}

fn parse_rounds(key: &str, value: &str) -> Result<Vec<Vec<(usize, usize)>>, ConfigError> {
    value
        .split(';')
        .map(|seg| {
            let seg = seg.trim();
            if seg.is_empty() || seg == "none" {
                return Ok(Vec::new());
            }
            seg.split(',')
                .map(|edge| {
                    let edge = edge.trim();
                    let (a, b) = edge.split_once('-').ok_or_else(|| ConfigError::BadValue {
                        key: key.to_string(),
                        reason: format!("edge `{edge}` must look like `0-1`"),
                    })?;
                    Ok((
                        parse_num::<usize>(key, a.trim())?,
                        parse_num::<usize>(key, b.trim())?,
                    ))
                })
                .collect()
        })
        .collect()
}

impl ExperimentConfig {
    /// Parses a document, starting from the defaults.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut config = ExperimentConfig::default();
        for (idx, raw_line) in text.lines().enumerate() {
            let line = raw_line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: idx + 1,
                text: raw_line.trim().to_string(),
            })?;
            config.set(key.trim(), value.trim())?;
        }
        config.check()?;
        Ok(config)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = |reason: String| ConfigError::BadValue {
            key: key.to_string(),
            reason,
        };
        match key {
            "problem.kind" => {
                self.problem_kind = match value {
                    "nesterov" => ProblemKind::Nesterov,
                    "strongly-convex" => ProblemKind::StronglyConvex,
                    _ => return Err(bad(format!("`{value}` is not nesterov | strongly-convex"))),
                }
            }
            "problem.dimension" => self.dimension = parse_num(key, value)?,
            "problem.agents" => self.agents = parse_num(key, value)?,
            "problem.cost_seed" => self.cost_seed = parse_num(key, value)?,
            "problem.costs" => self.costs = Some(parse_f64_list(key, value)?),
            "problem.sigma_f" => self.sigma_f = parse_num(key, value)?,
            "problem.anchors" => {
                self.anchors = if value == "center" {
                    None
                } else {
                    Some(parse_point_list(key, value)?)
                }
            }
            "network.radius" => self.radius = parse_num(key, value)?,
            "network.period" => self.period = parse_num(key, value)?,
            "network.window" => self.window = parse_num(key, value)?,
            "network.graph_seed" => self.graph_seed = parse_num(key, value)?,
            "network.rounds" => self.network = NetworkSource::Explicit(parse_rounds(key, value)?),
            "map.kind" => {
                self.map_kind = match value {
                    "entropy" => MapKind::Entropy,
                    "euclidean" => MapKind::Euclidean,
                    _ => return Err(bad(format!("`{value}` is not entropy | euclidean"))),
                }
            }
            "map.interior_floor" => self.interior_floor = parse_num(key, value)?,
            "oracle.mu" => self.mu = parse_f64_list(key, value)?,
            "oracle.direction_scale" => self.direction_scale = parse_num(key, value)?,
            "algorithm.variant" => {
                self.variant = Variant::parse(value)
                    .ok_or_else(|| bad(format!("`{value}` is not drgfmd | drgfmd-prime | dgfp")))?
            }
            "algorithm.estimator_site" => {
                self.estimator_site = EstimatorSite::parse(value).ok_or_else(|| {
                    bad(format!("`{value}` is not post-consensus | pre-consensus"))
                })?
            }
            "algorithm.averaging" => {
                let mut modes = AveragingModes {
                    running_mean: false,
                    reciprocal: false,
                    alpha_weighted: false,
                };
                for mode in value.split(',') {
                    match mode.trim() {
                        "running-mean" => modes.running_mean = true,
                        "reciprocal-weighted" => modes.reciprocal = true,
                        "alpha-weighted" => modes.alpha_weighted = true,
                        other => {
                            return Err(bad(format!(
                                "`{other}` is not running-mean | reciprocal-weighted | alpha-weighted"
                            )))
                        }
                    }
                }
                self.averaging = modes;
            }
            "algorithm.schedule" => {
                self.schedule_kind = match value {
                    "sqrt" => ScheduleKind::Sqrt,
                    "strongly-convex" => ScheduleKind::StronglyConvex,
                    "power" => ScheduleKind::Power,
                    "scaled-harmonic" => ScheduleKind::ScaledHarmonic,
                    _ => {
                        return Err(bad(format!(
                            "`{value}` is not sqrt | strongly-convex | power | scaled-harmonic"
                        )))
                    }
                }
            }
            "algorithm.eta" => self.eta = parse_num(key, value)?,
            "algorithm.rho" => self.rho = parse_num(key, value)?,
            "algorithm.delta" => self.delta = parse_num(key, value)?,
            "algorithm.horizon" => self.horizon = parse_num(key, value)?,
            "algorithm.tracked_node" => self.tracked_node = parse_num(key, value)?,
            "algorithm.initial_point" => self.initial_point = Some(parse_f64_list(key, value)?),
            "trials.count" => self.trials = parse_num(key, value)?,
            "trials.base_seed" => self.base_seed = parse_num(key, value)?,
            "output.dir" => self.out_dir = PathBuf::from(value),
            "output.dense_until" => self.dense_until = parse_num(key, value)?,
            "output.stride" => self.stride = parse_num(key, value)?,
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Value-level validation beyond what the builders check.
    fn check(&self) -> Result<(), ConfigError> {
        let bad = |key: &str, reason: String| {
            Err(ConfigError::BadValue {
                key: key.to_string(),
                reason,
            })
        };
        if self.dimension == 0 {
            return bad("problem.dimension", "must be at least 1".into());
        }
        if self.agents == 0 {
            return bad("problem.agents", "must be at least 1".into());
        }
        if let Some(costs) = &self.costs {
            if costs.len() != self.agents {
                return Err(ConfigError::Conflict {
                    key: "problem.costs".into(),
                    reason: format!("{} entries for {} agents", costs.len(), self.agents),
                });
            }
        }
        if let Some(anchors) = &self.anchors {
            if anchors.len() != 1 && anchors.len() != self.agents {
                return Err(ConfigError::Conflict {
                    key: "problem.anchors".into(),
                    reason: format!(
                        "{} anchors; give 1 (shared) or {} (per agent)",
                        anchors.len(),
                        self.agents
                    ),
                });
            }
            if let Some(a) = anchors.iter().find(|a| a.len() != self.dimension) {
                return Err(ConfigError::Conflict {
                    key: "problem.anchors".into(),
                    reason: format!(
                        "anchor of length {} in dimension {}",
                        a.len(),
                        self.dimension
                    ),
                });
            }
        }
        if !(self.radius > 0.0 && self.radius <= std::f64::consts::SQRT_2) {
            return bad(
                "network.radius",
                format!("{} not in (0, sqrt(2)]", self.radius),
            );
        }
        if self.period == 0 {
            return bad("network.period", "must be at least 1".into());
        }
        if self.window == 0 {
            return bad("network.window", "must be at least 1".into());
        }
        if let NetworkSource::Explicit(rounds) = &self.network {
            if rounds.len() != self.period {
                return Err(ConfigError::Conflict {
                    key: "network.rounds".into(),
                    reason: format!(
                        "{} rounds but network.period = {}",
                        rounds.len(),
                        self.period
                    ),
                });
            }
        }
        if !(self.interior_floor > 0.0 && self.interior_floor * (self.dimension as f64) < 1.0) {
            return bad(
                "map.interior_floor",
                format!("{} leaves no simplex interior", self.interior_floor),
            );
        }
        if self.mu.len() != 1 && self.mu.len() != self.agents {
            return Err(ConfigError::Conflict {
                key: "oracle.mu".into(),
                reason: format!("{} values for {} agents", self.mu.len(), self.agents),
            });
        }
        if let Some(&m) = self.mu.iter().find(|&&m| m <= 0.0) {
            return bad("oracle.mu", format!("{m} must be positive"));
        }
        if self.direction_scale <= 0.0 {
            return bad(
                "oracle.direction_scale",
                format!("{} must be positive", self.direction_scale),
            );
        }
        if self.eta <= 0.0 {
            return bad("algorithm.eta", format!("{} must be positive", self.eta));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad("algorithm.delta", format!("{} not in (0, 1)", self.delta));
        }
        if self.rho <= 0.0 {
            return bad("algorithm.rho", format!("{} must be positive", self.rho));
        }
        if self.tracked_node >= self.agents {
            return Err(ConfigError::Conflict {
                key: "algorithm.tracked_node".into(),
                reason: format!("node {} with {} agents", self.tracked_node, self.agents),
            });
        }
        if let Some(p) = &self.initial_point {
            if p.len() != self.dimension {
                return Err(ConfigError::Conflict {
                    key: "algorithm.initial_point".into(),
                    reason: format!("length {} in dimension {}", p.len(), self.dimension),
                });
            }
        }
        if self.trials == 0 {
            return bad("trials.count", "must be at least 1".into());
        }
        Ok(())
    }

    /// CLI-level overrides.
    pub fn apply_overrides(&mut self, seed: Option<u64>, trials: Option<usize>) {
        if let Some(s) = seed {
            self.base_seed = s;
        }
        if let Some(t) = trials {
            self.trials = t;
        }
    }

    /// Canonical rendering of the normalized document: every key, sorted,
    /// with full-precision values.
    pub fn canonical(&self) -> String {
        use std::fmt::Write;
        let mut lines: Vec<String> = Vec::new();
        let f = |v: f64| format!("{v:.17e}");
        lines.push(format!(
            "algorithm.averaging = {}{}{}",
            self.averaging.running_mean as u8,
            self.averaging.reciprocal as u8,
            self.averaging.alpha_weighted as u8
        ));
        lines.push(format!("algorithm.delta = {}", f(self.delta)));
        lines.push(format!(
            "algorithm.estimator_site = {}",
            self.estimator_site.as_str()
        ));
        lines.push(format!("algorithm.eta = {}", f(self.eta)));
        lines.push(format!("algorithm.horizon = {}", self.horizon));
        if let Some(p) = &self.initial_point {
            let mut s = String::new();
            for v in p {
                let _ = write!(s, "{},", f(*v));
            }
            lines.push(format!("algorithm.initial_point = {s}"));
        }
        lines.push(format!("algorithm.rho = {}", f(self.rho)));
        lines.push(format!("algorithm.schedule = {:?}", self.schedule_kind));
        lines.push(format!("algorithm.tracked_node = {}", self.tracked_node));
        lines.push(format!("algorithm.variant = {}", self.variant.as_str()));
        lines.push(format!("map.interior_floor = {}", f(self.interior_floor)));
        lines.push(format!("map.kind = {:?}", self.map_kind));
        lines.push(format!("network.graph_seed = {}", self.graph_seed));
        lines.push(format!("network.period = {}", self.period));
        lines.push(format!("network.radius = {}", f(self.radius)));
        match &self.network {
            NetworkSource::Generated => lines.push("network.rounds = generated".into()),
            NetworkSource::Explicit(rounds) => {
                let mut s = String::new();
                for round in rounds {
                    for (a, b) in round {
                        let _ = write!(s, "{a}-{b},");
                    }
                    let _ = write!(s, ";");
                }
                lines.push(format!("network.rounds = {s}"));
            }
        }
        lines.push(format!("network.window = {}", self.window));
        lines.push(format!(
            "oracle.direction_scale = {}",
            f(self.direction_scale)
        ));
        let mut mu = String::new();
        for m in &self.mu {
            let _ = write!(mu, "{},", f(*m));
        }
        lines.push(format!("oracle.mu = {mu}"));
        match &self.anchors {
            None => lines.push("problem.anchors = center".into()),
            Some(anchors) => {
                let mut s = String::new();
                for a in anchors {
                    for v in a {
                        let _ = write!(s, "{},", f(*v));
                    }
                    let _ = write!(s, ";");
                }
                lines.push(format!("problem.anchors = {s}"));
            }
        }
        lines.push(format!("problem.agents = {}", self.agents));
        match &self.costs {
            None => lines.push(format!("problem.cost_seed = {}", self.cost_seed)),
            Some(costs) => {
                let mut s = String::new();
                for c in costs {
                    let _ = write!(s, "{},", f(*c));
                }
                lines.push(format!("problem.costs = {s}"));
            }
        }
        lines.push(format!("problem.dimension = {}", self.dimension));
        lines.push(format!("problem.kind = {:?}", self.problem_kind));
        lines.push(format!("problem.sigma_f = {}", f(self.sigma_f)));
        lines.push(format!("output.dense_until = {}", self.dense_until));
        lines.push(format!("output.stride = {}", self.stride));
        lines.push(format!("trials.base_seed = {}", self.base_seed));
        lines.push(format!("trials.count = {}", self.trials));
        lines.sort();
        lines.join("\n")
    }

    /// Stable hash of the normalized document.
    pub fn fingerprint(&self) -> u64 {
        fnv1a64(self.canonical().as_bytes())
    }

    /// Builds the run components this configuration describes.
    pub fn build(&self) -> Result<ExperimentComponents, LabError> {
        let costs = self
            .costs
            .clone()
            .unwrap_or_else(|| default_costs(self.agents, self.cost_seed));
        let problem = match self.problem_kind {
            ProblemKind::Nesterov => nesterov_problem(self.agents, self.dimension, &costs)?,
            ProblemKind::StronglyConvex => {
                let center = vec![1.0 / self.dimension as f64; self.dimension];
                let anchors: Vec<Vec<f64>> = match &self.anchors {
                    None => vec![center; self.agents],
                    Some(list) if list.len() == 1 => vec![list[0].clone(); self.agents],
                    Some(list) => list.clone(),
                };
                strongly_convex_problem(
                    self.agents,
                    self.dimension,
                    &costs,
                    self.sigma_f,
                    &anchors,
                )?
            }
        };
        let topology = match &self.network {
            NetworkSource::Generated => TopologySchedule::random_dealt(
                self.agents,
                self.period,
                self.window,
                self.radius,
                self.graph_seed,
            )?,
            NetworkSource::Explicit(rounds) => {
                let rounds = rounds
                    .iter()
                    .map(|edges| {
                        let graph = Graph::new(self.agents, edges)?;
                        let matrix = metropolis_matrix(&graph);
                        Ok(ScheduleRound { graph, matrix })
                    })
                    .collect::<Result<Vec<_>, crate::netgraph::NetworkError>>()?;
                TopologySchedule::new(rounds, self.window)?
            }
        };
        let map: Box<dyn MirrorMap> = match self.map_kind {
            MapKind::Entropy => Box::new(EntropyMap::new(self.dimension, self.interior_floor)),
            MapKind::Euclidean => Box::new(EuclideanMap::on_simplex(self.dimension)),
        };
        let mu = if self.mu.len() == 1 {
            vec![self.mu[0]; self.agents]
        } else {
            self.mu.clone()
        };
        let oracle = GradientFreeOracle::new(mu, self.direction_scale, self.base_seed)?;
        let schedule = match self.schedule_kind {
            ScheduleKind::Sqrt => StepSchedule::Sqrt { eta: self.eta },
            ScheduleKind::StronglyConvex => StepSchedule::StronglyConvex {
                grad_lipschitz: map.grad_lipschitz().unwrap_or(1.0),
                sigma_f: self.sigma_f,
            },
            ScheduleKind::Power => StepSchedule::Power {
                rho: self.rho,
                delta: self.delta,
            },
            ScheduleKind::ScaledHarmonic => StepSchedule::ScaledHarmonic,
        };
        let mut algorithm = AlgorithmConfig::new(self.variant, schedule, self.horizon)
            .with_site(self.estimator_site)
            .with_averaging(self.averaging)
            .with_tracked_node(self.tracked_node);
        if let Some(p) = &self.initial_point {
            algorithm.initial_point =
                Some(Point::new(p.clone()).map_err(crate::solver::SolverError::Geometry)?);
        }
        let mut policy = CheckpointPolicy::default_for(self.horizon);
        policy.dense_until = self.dense_until;
        if self.stride > 0 {
            policy.stride = self.stride;
        }
        algorithm.checkpoints = Some(policy);
        // Surface schedule/variant mismatches now rather than at run time.
        algorithm.validate(&problem, map.as_ref())?;
        Ok(ExperimentComponents {
            problem,
            topology,
            map,
            oracle,
            algorithm,
            trials: self.trials,
            out_dir: self.out_dir.clone(),
        })
    }
}

/// Everything `run` needs, built and cross-validated.
pub struct ExperimentComponents {
    pub problem: ProblemInstance,
    pub topology: TopologySchedule,
    pub map: Box<dyn MirrorMap>,
    pub oracle: GradientFreeOracle,
    pub algorithm: AlgorithmConfig,
    pub trials: usize,
    pub out_dir: PathBuf,
}

impl ExperimentComponents {
    pub fn experiment(&self) -> crate::lab::Experiment<'_> {
        crate::lab::Experiment {
            problem: &self.problem,
            topology: &self.topology,
            map: self.map.as_ref(),
            oracle: &self.oracle,
            config: &self.algorithm,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_the_default() {
        let parsed = ExperimentConfig::parse("").unwrap();
        assert_eq!(parsed, ExperimentConfig::default());
    }

    #[test]
    fn comments_and_blanks_are_ignored() {
        let text = "\n# a comment\nproblem.dimension = 4  # trailing\n\n";
        let parsed = ExperimentConfig::parse(text).unwrap();
        assert_eq!(parsed.dimension, 4);
    }

    #[test]
    fn unknown_keys_are_rejected_by_name() {
        let err = ExperimentConfig::parse("stepsize_type = sqrt").unwrap_err();
        match err {
            ConfigError::UnknownKey(k) => assert_eq!(k, "stepsize_type"),
            other => panic!("wrong error {other}"),
        }
    }

    #[test]
    fn bad_values_name_their_key() {
        let err = ExperimentConfig::parse("oracle.mu = -1").unwrap_err();
        assert!(err.to_string().contains("oracle.mu"));
        let err = ExperimentConfig::parse("map.kind = manhattan").unwrap_err();
        assert!(err.to_string().contains("map.kind"));
        let err = ExperimentConfig::parse("problem.costs = 1,2").unwrap_err();
        assert!(err.to_string().contains("problem.costs"));
    }

    #[test]
    fn fingerprint_tracks_normalized_content() {
        let a = ExperimentConfig::parse("problem.dimension = 3").unwrap();
        let b = ExperimentConfig::parse("# nothing\nproblem.dimension=3").unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
        let c = ExperimentConfig::parse("problem.dimension = 4").unwrap();
        assert_ne!(a.fingerprint(), c.fingerprint());
    }

    #[test]
    fn build_produces_consistent_components() {
        let config = ExperimentConfig::parse(
            "problem.dimension = 2\nalgorithm.horizon = 50\ntrials.count = 2",
        )
        .unwrap();
        let parts = config.build().unwrap();
        assert_eq!(parts.problem.dimension(), 2);
        assert_eq!(parts.oracle.n_agents(), 5);
        assert_eq!(parts.topology.node_count(), 5);
        let summary = parts.experiment().trial_average(parts.trials).unwrap();
        assert_eq!(summary.n_trials, 2);
    }

    #[test]
    fn explicit_rounds_are_validated() {
        let text =
            "problem.agents = 3\nnetwork.period = 2\nnetwork.window = 2\nnetwork.rounds = 0-1 ; 1-2";
        let config = ExperimentConfig::parse(text).unwrap();
        let parts = config.build().unwrap();
        assert_eq!(parts.topology.period(), 2);
        // A window-1 requirement on split rounds fails connectivity.
        let text =
            "problem.agents = 3\nnetwork.period = 2\nnetwork.window = 1\nnetwork.rounds = 0-1 ; 1-2";
        let config = ExperimentConfig::parse(text).unwrap();
        assert!(config.build().is_err());
    }

    #[test]
    fn variant_schedule_mismatch_fails_at_build() {
        let text = "algorithm.variant = dgfp\nmap.kind = entropy";
        let config = ExperimentConfig::parse(text).unwrap();
        assert!(config.build().is_err());
    }

    #[test]
    fn overrides_replace_seed_and_trials() {
        let mut config = ExperimentConfig::default();
        config.apply_overrides(Some(99), Some(3));
        assert_eq!(config.base_seed, 99);
        assert_eq!(config.trials, 3);
    }
}
