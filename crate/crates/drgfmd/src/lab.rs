//! Experiment orchestration: multi-trial averaging, rate-slope
//! estimation, bound overlays, and the canned simulation suites.
//!
//! Trials are independent keyed-stream runs; aggregation always folds
//! them in trial-index order, so summaries are deterministic functions of
//! the configuration regardless of execution interleaving.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{EntropyMap, EuclideanMap, MirrorMap};
use crate::netgraph::{mixing_bound_check, NetworkError, TopologySchedule};
use crate::objective::{
    default_costs, nesterov_problem, strongly_convex_problem, GradientFreeOracle, ObjectiveError,
    ProblemInstance, ProblemStructure,
};
use crate::report::{self, CsvRow, LinePlot, ReportError, Series};
use crate::rng::fnv1a64;
use crate::solver::{
    self, bounds, AlgorithmConfig, AveragingModes, EstimatorSite, RunRecord, SolverError,
    StepSchedule, Variant,
};
use crate::vecmath::mean_stderr;

#[derive(Debug, Error)]
pub enum LabError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("gap metrics need a problem with a known optimum")]
    GapRequiresOptimum,
    #[error("need at least one trial")]
    NoTrials,
    #[error("log-log fit window kept only {kept} positive checkpoints")]
    FitWindow { kept: usize },
    #[error("bound was built for fingerprint {expected:016x}, summary has {got:016x}")]
    FingerprintMismatch { expected: u64, got: u64 },
    #[error("unknown suite `{0}`")]
    UnknownSuite(String),
}

/// Metric families a summary can carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    GapRunningMean,
    GapReciprocal,
    GapAlphaWeighted,
    ConsensusMaxPairwise,
    BoundOverlay,
}

/// A named series over checkpoint indices.
#[derive(Debug, Clone)]
pub struct Metric {
    pub kind: MetricKind,
    pub series: Vec<(usize, f64)>,
}

/// Per-checkpoint cross-trial statistics of one metric.
#[derive(Debug, Clone)]
pub struct SeriesStat {
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Row per trial, column per checkpoint.
    pub per_trial: Vec<Vec<f64>>,
}

impl SeriesStat {
    fn from_rows(rows: Vec<Vec<f64>>) -> SeriesStat {
        let cols = rows.first().map_or(0, Vec::len);
        let mut mean = Vec::with_capacity(cols);
        let mut stderr = Vec::with_capacity(cols);
        let mut column = Vec::with_capacity(rows.len());
        for c in 0..cols {
            column.clear();
            column.extend(rows.iter().map(|r| r[c]));
            let (m, se) = mean_stderr(&column);
            mean.push(m);
            stderr.push(se);
        }
        SeriesStat {
            mean,
            stderr,
            per_trial: rows,
        }
    }
}

/// Cross-trial aggregate of one experiment.
#[derive(Debug, Clone)]
pub struct TrialSummary {
    /// Checkpoint state indices (the initial state is excluded).
    pub checkpoints: Vec<usize>,
    pub gap_running_mean: Option<SeriesStat>,
    pub gap_reciprocal: Option<SeriesStat>,
    pub gap_alpha_weighted: Option<SeriesStat>,
    pub consensus: SeriesStat,
    /// Trial-mean per-step displacement, `[agent][checkpoint]`.
    pub step_error_mean: Vec<Vec<f64>>,
    /// Trial-mean distance from the network mean, `[agent][checkpoint]`.
    pub disagreement_mean: Vec<Vec<f64>>,
    /// Derived per-trial stream seeds, for the record.
    pub trial_seeds: Vec<u64>,
    pub n_trials: usize,
    pub fingerprint: u64,
}

impl TrialSummary {
    pub fn stat(&self, kind: MetricKind) -> Option<&SeriesStat> {
        match kind {
            MetricKind::GapRunningMean => self.gap_running_mean.as_ref(),
            MetricKind::GapReciprocal => self.gap_reciprocal.as_ref(),
            MetricKind::GapAlphaWeighted => self.gap_alpha_weighted.as_ref(),
            MetricKind::ConsensusMaxPairwise => Some(&self.consensus),
            MetricKind::BoundOverlay => None,
        }
    }

    /// Mean series as (t, value) pairs.
    pub fn mean_series(&self, kind: MetricKind) -> Option<Vec<(usize, f64)>> {
        let stat = self.stat(kind)?;
        Some(
            self.checkpoints
                .iter()
                .copied()
                .zip(stat.mean.iter().copied())
                .collect(),
        )
    }

    /// Mean value at the final checkpoint.
    pub fn terminal_mean(&self, kind: MetricKind) -> Option<f64> {
        self.stat(kind).and_then(|s| s.mean.last().copied())
    }
}

/// Borrowed bundle of everything one experiment needs.
#[derive(Clone, Copy)]
pub struct Experiment<'a> {
    pub problem: &'a ProblemInstance,
    pub topology: &'a TopologySchedule,
    pub map: &'a dyn MirrorMap,
    pub oracle: &'a GradientFreeOracle,
    pub config: &'a AlgorithmConfig,
}

impl Experiment<'_> {
    /// Stable hash of every parameter that shapes the output.
    pub fn fingerprint(&self, n_trials: usize) -> u64 {
        use std::fmt::Write;
        let mut desc = String::new();
        let w = &mut desc;
        match &self.problem.structure {
            ProblemStructure::PiecewiseLinearChain { costs } => {
                let _ = write!(w, "problem=chain;costs=");
                for c in costs {
                    let _ = write!(w, "{c:.17e},");
                }
            }
            ProblemStructure::StronglyConvexChain {
                costs,
                sigma_f,
                anchors,
            } => {
                let _ = write!(w, "problem=strongly-convex-chain;sigma={sigma_f:.17e};costs=");
                for c in costs {
                    let _ = write!(w, "{c:.17e},");
                }
                let _ = write!(w, ";anchors=");
                for a in anchors {
                    for v in a {
                        let _ = write!(w, "{v:.17e},");
                    }
                    let _ = write!(w, "|");
                }
            }
            ProblemStructure::Custom => {
                let _ = write!(w, "problem=custom");
            }
        }
        let _ = write!(
            w,
            ";dim={};map.strong={:.17e};map.lip={:?};map.diam={:?}",
            self.problem.dimension(),
            self.map.strong_convexity(),
            self.map.grad_lipschitz(),
            self.map.diameter_sq(),
        );
        let _ = write!(
            w,
            ";oracle.seed={};oracle.scale={:.17e};oracle.mu=",
            self.oracle.seed(),
            self.oracle.direction_scale()
        );
        for m in self.oracle.mus() {
            let _ = write!(w, "{m:.17e},");
        }
        let _ = write!(
            w,
            ";alg={};site={};sched={:?};horizon={};node={};avg={}{}{}",
            self.config.variant.as_str(),
            self.config.estimator_site.as_str(),
            self.config.schedule,
            self.config.horizon,
            self.config.tracked_node,
            self.config.averaging.running_mean as u8,
            self.config.averaging.reciprocal as u8,
            self.config.averaging.alpha_weighted as u8,
        );
        if let Some(p) = &self.config.initial_point {
            let _ = write!(w, ";x0=");
            for v in p.as_slice() {
                let _ = write!(w, "{v:.17e},");
            }
        }
        let _ = write!(
            w,
            ";net.period={};net.window={};net.entries=",
            self.topology.period(),
            self.topology.connectivity_window()
        );
        for round in self.topology.rounds() {
            let n = round.matrix.size();
            for i in 0..n {
                for j in 0..n {
                    let _ = write!(w, "{:.17e},", round.matrix.get(i, j));
                }
            }
            let _ = write!(w, "|");
        }
        let _ = write!(w, ";trials={n_trials}");
        fnv1a64(desc.as_bytes())
    }

    /// Runs `n_trials` independent trials and aggregates matched
    /// checkpoints. Fails fast if gap reporting is requested without a
    /// known optimum.
    pub fn trial_average(&self, n_trials: usize) -> Result<TrialSummary, LabError> {
        if n_trials == 0 {
            return Err(LabError::NoTrials);
        }
        let wants_gap = self.config.averaging.running_mean
            || self.config.averaging.reciprocal
            || self.config.averaging.alpha_weighted;
        let optimum = match (&self.problem.optimum, wants_gap) {
            (Some(o), _) => Some(o.value),
            (None, false) => None,
            (None, true) => return Err(LabError::GapRequiresOptimum),
        };

        let records: Vec<RunRecord> = (0..n_trials)
            .into_par_iter()
            .map(|k| {
                solver::run(
                    self.problem,
                    self.topology,
                    self.map,
                    self.oracle,
                    self.config,
                    k as u64,
                )
            })
            .collect::<Result<_, _>>()?;

        let checkpoints: Vec<usize> = records[0]
            .checkpoints
            .iter()
            .skip(1)
            .map(|c| c.t)
            .collect();
        let n_cp = checkpoints.len();
        let n_agents = self.problem.n_agents();

        let gap_of = |avg: &Option<crate::geometry::Point>| -> f64 {
            let f_star = optimum.expect("checked above");
            avg.as_ref()
                .map(|p| self.problem.global(p) - f_star)
                .unwrap_or(f64::NAN)
        };

        let mut rm_rows = Vec::new();
        let mut rc_rows = Vec::new();
        let mut aw_rows = Vec::new();
        let mut cons_rows = Vec::new();
        let mut step_sum = vec![vec![0.0; n_cp]; n_agents];
        let mut disagree_sum = vec![vec![0.0; n_cp]; n_agents];
        for record in &records {
            debug_assert_eq!(record.checkpoints.len(), n_cp + 1);
            let cps = &record.checkpoints[1..];
            if self.config.averaging.running_mean {
                rm_rows.push(cps.iter().map(|c| gap_of(&c.running_mean)).collect());
            }
            if self.config.averaging.reciprocal {
                rc_rows.push(cps.iter().map(|c| gap_of(&c.reciprocal)).collect());
            }
            if self.config.averaging.alpha_weighted {
                aw_rows.push(cps.iter().map(|c| gap_of(&c.alpha_weighted)).collect());
            }
            cons_rows.push(cps.iter().map(|c| c.consensus_error()).collect::<Vec<_>>());
            for (ci, cp) in cps.iter().enumerate() {
                let disagreement = cp.disagreement_from_mean();
                for a in 0..n_agents {
                    step_sum[a][ci] += cp.step_error[a];
                    disagree_sum[a][ci] += disagreement[a];
                }
            }
        }
        let scale = 1.0 / n_trials as f64;
        for row in step_sum.iter_mut().chain(disagree_sum.iter_mut()) {
            for v in row.iter_mut() {
                *v *= scale;
            }
        }

        Ok(TrialSummary {
            checkpoints,
            gap_running_mean: (!rm_rows.is_empty()).then(|| SeriesStat::from_rows(rm_rows)),
            gap_reciprocal: (!rc_rows.is_empty()).then(|| SeriesStat::from_rows(rc_rows)),
            gap_alpha_weighted: (!aw_rows.is_empty()).then(|| SeriesStat::from_rows(aw_rows)),
            consensus: SeriesStat::from_rows(cons_rows),
            step_error_mean: step_sum,
            disagreement_mean: disagree_sum,
            trial_seeds: (0..n_trials)
                .map(|k| crate::rng::trial_seed(self.oracle.seed(), k as u64))
                .collect(),
            n_trials,
            fingerprint: self.fingerprint(n_trials),
        })
    }

    /// Builds the matching rate bound, tagged with this experiment's
    /// fingerprint so overlays cannot be paired with foreign summaries.
    pub fn bound(&self, n_trials: usize) -> Result<TaggedBound, LabError> {
        let certificate = mixing_bound_check(self.topology, 200)?;
        let bound = bounds::bound_constants(
            self.config,
            self.problem,
            self.map,
            self.oracle,
            &certificate,
        )?;
        Ok(TaggedBound {
            bound,
            fingerprint: self.fingerprint(n_trials),
        })
    }
}

/// A rate bound tied to the experiment it was derived from.
#[derive(Debug, Clone)]
pub struct TaggedBound {
    pub bound: bounds::RateBound,
    pub fingerprint: u64,
}

/// Evaluates the bound curve at the summary's checkpoints.
pub fn bound_overlay(summary: &TrialSummary, tagged: &TaggedBound) -> Result<Metric, LabError> {
    if summary.fingerprint != tagged.fingerprint {
        return Err(LabError::FingerprintMismatch {
            expected: tagged.fingerprint,
            got: summary.fingerprint,
        });
    }
    let values = tagged.bound.series(&summary.checkpoints);
    Ok(Metric {
        kind: MetricKind::BoundOverlay,
        series: summary
            .checkpoints
            .iter()
            .copied()
            .zip(values)
            .collect(),
    })
}

/// Fraction of checkpoints at which an empirical mean series stays at or
/// below its bound.
#[derive(Debug, Clone, Copy)]
pub struct Compliance {
    pub fraction_within: f64,
    pub checked: usize,
}

fn compliance_fraction(pairs: impl Iterator<Item = (f64, f64)>) -> Compliance {
    let mut ok = 0usize;
    let mut total = 0usize;
    for (value, limit) in pairs {
        total += 1;
        if value <= limit {
            ok += 1;
        }
    }
    Compliance {
        fraction_within: if total == 0 {
            1.0
        } else {
            ok as f64 / total as f64
        },
        checked: total,
    }
}

/// Checks the trial-mean per-step displacement of every agent against
/// `(n + 4) L alpha_{t-1} / s` at every checkpoint.
pub fn step_error_compliance(
    summary: &TrialSummary,
    schedule: StepSchedule,
    dimension: usize,
    max_lipschitz: f64,
    map_strong_convexity: f64,
) -> Compliance {
    let limits: Vec<f64> = summary
        .checkpoints
        .iter()
        .map(|&t| {
            bounds::step_error_bound(
                dimension,
                max_lipschitz,
                map_strong_convexity,
                schedule.alpha(t - 1),
            )
        })
        .collect();
    compliance_fraction(summary.step_error_mean.iter().flat_map(|agent_row| {
        agent_row
            .iter()
            .copied()
            .zip(limits.iter().copied())
    }))
}

/// Checks the trial-mean distance from the network mean against the
/// geometric-mixing envelope at every checkpoint.
pub fn disagreement_compliance(
    summary: &TrialSummary,
    schedule: StepSchedule,
    certificate: &crate::netgraph::MixingCertificate,
    dimension: usize,
    n_agents: usize,
    max_lipschitz: f64,
    map_strong_convexity: f64,
) -> Compliance {
    let t_max = summary.checkpoints.last().copied().unwrap_or(0);
    let envelopes = bounds::disagreement_bounds(
        schedule,
        certificate,
        dimension,
        n_agents,
        max_lipschitz,
        map_strong_convexity,
        t_max,
    );
    compliance_fraction(summary.disagreement_mean.iter().flat_map(|agent_row| {
        agent_row
            .iter()
            .copied()
            .zip(summary.checkpoints.iter().map(|&t| envelopes.from_mean[t]))
    }))
}

/// Least-squares fit of `log(value)` against `log(t)`.
#[derive(Debug, Clone, Copy)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Fits the log-log rate over `[t_min, t_max]`, excluding nonpositive
/// values. Errors when fewer than two usable checkpoints remain.
pub fn rate_slope(
    series: &[(usize, f64)],
    t_min: usize,
    t_max: usize,
) -> Result<SlopeFit, LabError> {
    let points: Vec<(f64, f64)> = series
        .iter()
        .filter(|(t, v)| *t >= t_min && *t <= t_max && *v > 0.0)
        .map(|&(t, v)| ((t as f64).ln(), v.ln()))
        .collect();
    if points.len() < 2 {
        return Err(LabError::FitWindow { kept: points.len() });
    }
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-12 {
        return Err(LabError::FitWindow { kept: points.len() });
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let mean_y = sy / n;
    let ss_tot: f64 = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1 - (intercept + slope * p.0)).powi(2))
        .sum();
    // A numerically constant series fits perfectly with slope ~0.
    let degenerate = ss_tot <= n * (mean_y.abs() + 1.0).powi(2) * 1e-24;
    let r_squared = if degenerate { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(SlopeFit {
        slope,
        intercept,
        r_squared,
    })
}

pub mod suites {
    //! Canned experiment definitions mirroring the simulation study:
    //! five agents on a random geometric graph, entropy geometry on the
    //! simplex, two-point oracle with covariance `0.5 I` and `mu = 1e-4`,
    //! uniform initial state, 30 trials.

    use super::*;

    pub const N_AGENTS: usize = 5;
    pub const GRAPH_RADIUS: f64 = 0.6;
    pub const GRAPH_SEED: u64 = 2;
    pub const COST_SEED: u64 = 7;
    pub const MU: f64 = 1e-4;
    pub const DIRECTION_SCALE: f64 = 0.5;
    pub const HORIZON: usize = 10_000;
    pub const TRIALS: usize = 30;
    pub const BASE_SEED: u64 = 1;

    /// Runtime knobs shared by every suite; defaults match the study.
    #[derive(Debug, Clone, Copy)]
    pub struct SuiteOptions {
        pub trials: usize,
        pub base_seed: u64,
        pub horizon: usize,
    }

    impl Default for SuiteOptions {
        fn default() -> Self {
            SuiteOptions {
                trials: TRIALS,
                base_seed: BASE_SEED,
                horizon: HORIZON,
            }
        }
    }

    #[derive(Debug, Clone, Copy, PartialEq, Eq)]
    pub enum SuiteId {
        ConvergenceConsensus,
        DimensionSweep,
        DeltaSweep,
        AlgorithmComparison,
        StronglyConvex,
    }

    impl SuiteId {
        pub fn parse(s: &str) -> Option<SuiteId> {
            match s {
                "convergence-consensus" => Some(SuiteId::ConvergenceConsensus),
                "dimension-sweep" => Some(SuiteId::DimensionSweep),
                "delta-sweep" => Some(SuiteId::DeltaSweep),
                "algorithm-comparison" => Some(SuiteId::AlgorithmComparison),
                "strongly-convex" => Some(SuiteId::StronglyConvex),
                _ => None,
            }
        }

        pub fn as_str(&self) -> &'static str {
            match self {
                SuiteId::ConvergenceConsensus => "convergence-consensus",
                SuiteId::DimensionSweep => "dimension-sweep",
                SuiteId::DeltaSweep => "delta-sweep",
                SuiteId::AlgorithmComparison => "algorithm-comparison",
                SuiteId::StronglyConvex => "strongly-convex",
            }
        }

        pub fn all() -> [SuiteId; 5] {
            [
                SuiteId::ConvergenceConsensus,
                SuiteId::DimensionSweep,
                SuiteId::DeltaSweep,
                SuiteId::AlgorithmComparison,
                SuiteId::StronglyConvex,
            ]
        }
    }

    /// One fully built experiment, owning its components.
    pub struct SuiteRun {
        pub label: String,
        pub problem: ProblemInstance,
        pub topology: TopologySchedule,
        pub map: Box<dyn MirrorMap>,
        pub oracle: GradientFreeOracle,
        pub config: AlgorithmConfig,
        pub n_trials: usize,
    }

    impl SuiteRun {
        pub fn experiment(&self) -> Experiment<'_> {
            Experiment {
                problem: &self.problem,
                topology: &self.topology,
                map: self.map.as_ref(),
                oracle: &self.oracle,
                config: &self.config,
            }
        }
    }

    /// The shared five-node random geometric topology.
    pub fn paper_topology() -> Result<TopologySchedule, LabError> {
        Ok(TopologySchedule::random_periodic(
            N_AGENTS,
            1,
            GRAPH_RADIUS,
            GRAPH_SEED,
        )?)
    }

    fn entropy_run(
        label: String,
        dimension: usize,
        schedule: StepSchedule,
        averaging: AveragingModes,
        opts: SuiteOptions,
    ) -> Result<SuiteRun, LabError> {
        let costs = default_costs(N_AGENTS, COST_SEED);
        let problem = nesterov_problem(N_AGENTS, dimension, &costs)?;
        let oracle =
            GradientFreeOracle::uniform(N_AGENTS, MU, DIRECTION_SCALE, opts.base_seed)?;
        let config = AlgorithmConfig::new(Variant::Drgfmd, schedule, opts.horizon)
            .with_site(EstimatorSite::PostConsensus)
            .with_averaging(averaging);
        Ok(SuiteRun {
            label,
            problem,
            topology: paper_topology()?,
            map: Box::new(EntropyMap::on_simplex(dimension)),
            oracle,
            config,
            n_trials: opts.trials,
        })
    }

    /// Builds the experiments of one suite.
    pub fn suite_runs(id: SuiteId, opts: SuiteOptions) -> Result<Vec<SuiteRun>, LabError> {
        match id {
            // The study plots these at n = 1, where the simplex collapses
            // to a point and every curve is exactly zero; an n = 3
            // companion shows actual motion.
            SuiteId::ConvergenceConsensus => [1usize, 3]
                .iter()
                .map(|&dim| {
                    entropy_run(
                        format!("convergence-consensus-n{dim}"),
                        dim,
                        StepSchedule::Sqrt { eta: 1.0 },
                        AveragingModes::default(),
                        opts,
                    )
                })
                .collect(),
            SuiteId::DimensionSweep => [1usize, 3, 6]
                .iter()
                .map(|&dim| {
                    entropy_run(
                        format!("dimension-sweep-n{dim}"),
                        dim,
                        StepSchedule::Sqrt { eta: 1.0 },
                        AveragingModes::default(),
                        opts,
                    )
                })
                .collect(),
            SuiteId::DeltaSweep => [0.3f64, 0.4, 0.5]
                .iter()
                .map(|&delta| {
                    entropy_run(
                        format!("delta-sweep-delta{delta}"),
                        3,
                        StepSchedule::Power { rho: 1.0, delta },
                        AveragingModes::default(),
                        opts,
                    )
                })
                .collect(),
            SuiteId::AlgorithmComparison => {
                let mirror = entropy_run(
                    "algorithm-comparison-drgfmd".into(),
                    2,
                    StepSchedule::Sqrt { eta: 1.0 },
                    AveragingModes::default(),
                    opts,
                )?;
                let costs = default_costs(N_AGENTS, COST_SEED);
                let problem = nesterov_problem(N_AGENTS, 2, &costs)?;
                let oracle =
                    GradientFreeOracle::uniform(N_AGENTS, MU, DIRECTION_SCALE, opts.base_seed)?;
                let config = AlgorithmConfig::new(
                    Variant::Dgfp,
                    StepSchedule::Sqrt { eta: 1.0 },
                    opts.horizon,
                )
                .with_averaging(AveragingModes {
                    running_mean: false,
                    reciprocal: false,
                    alpha_weighted: true,
                });
                let baseline = SuiteRun {
                    label: "algorithm-comparison-dgfp".into(),
                    problem,
                    topology: paper_topology()?,
                    map: Box::new(EuclideanMap::on_simplex(2)),
                    oracle,
                    config,
                    n_trials: opts.trials,
                };
                Ok(vec![mirror, baseline])
            }
            SuiteId::StronglyConvex => {
                let dimension = 3;
                let costs = default_costs(N_AGENTS, COST_SEED);
                let center = vec![1.0 / dimension as f64; dimension];
                let anchors = vec![center; N_AGENTS];
                let problem =
                    strongly_convex_problem(N_AGENTS, dimension, &costs, 1.0, &anchors)?;
                let oracle =
                    GradientFreeOracle::uniform(N_AGENTS, MU, DIRECTION_SCALE, opts.base_seed)?;
                // Running-mean estimate with the 1/t schedule, oracle at
                // the pre-consensus state.
                let classic = SuiteRun {
                    label: "strongly-convex-drgfmd".into(),
                    problem: problem.clone(),
                    topology: paper_topology()?,
                    map: Box::new(EuclideanMap::on_simplex(dimension)),
                    oracle: oracle.clone(),
                    config: AlgorithmConfig::new(
                        Variant::Drgfmd,
                        StepSchedule::StronglyConvex {
                            grad_lipschitz: 1.0,
                            sigma_f: 1.0,
                        },
                        opts.horizon,
                    )
                    .with_site(EstimatorSite::PreConsensus),
                    n_trials: opts.trials,
                };
                // Scaled variant with reciprocal weighting.
                let scaled = SuiteRun {
                    label: "strongly-convex-prime".into(),
                    problem,
                    topology: paper_topology()?,
                    map: Box::new(EuclideanMap::on_simplex(dimension)),
                    oracle,
                    config: AlgorithmConfig::new(
                        Variant::DrgfmdPrime,
                        StepSchedule::ScaledHarmonic,
                        opts.horizon,
                    ),
                    n_trials: opts.trials,
                };
                Ok(vec![classic, scaled])
            }
        }
    }
}

/// Serializes one summary to the CSV schema: per-trial rows first, then
/// aggregate rows (empty trial column) carrying the bound overlay.
pub fn summary_rows(suite: &str, summary: &TrialSummary, overlay: Option<&Metric>) -> Vec<CsvRow> {
    summary_rows_with_fingerprint(summary.fingerprint, suite, summary, overlay)
}

/// [`summary_rows`] with an externally supplied fingerprint, used when a
/// configuration document rather than the component hash identifies the
/// run.
pub fn summary_rows_with_fingerprint(
    fingerprint: u64,
    suite: &str,
    summary: &TrialSummary,
    overlay: Option<&Metric>,
) -> Vec<CsvRow> {
    let fp = format!("{fingerprint:016x}");
    let mut rows = Vec::new();
    let value_at = |stat: &Option<SeriesStat>, trial: usize, ci: usize| -> Option<f64> {
        stat.as_ref().map(|s| s.per_trial[trial][ci])
    };
    for trial in 0..summary.n_trials {
        for (ci, &t) in summary.checkpoints.iter().enumerate() {
            rows.push(CsvRow {
                config_fingerprint: fp.clone(),
                suite: suite.to_string(),
                trial: Some(trial as u64),
                t: t as u64,
                agent: None,
                gap_running_mean: value_at(&summary.gap_running_mean, trial, ci),
                gap_reciprocal: value_at(&summary.gap_reciprocal, trial, ci),
                gap_alpha_weighted: value_at(&summary.gap_alpha_weighted, trial, ci),
                consensus: Some(summary.consensus.per_trial[trial][ci]),
                bound: None,
            });
        }
    }
    for (ci, &t) in summary.checkpoints.iter().enumerate() {
        let mean_of = |stat: &Option<SeriesStat>| stat.as_ref().map(|s| s.mean[ci]);
        rows.push(CsvRow {
            config_fingerprint: fp.clone(),
            suite: suite.to_string(),
            trial: None,
            t: t as u64,
            agent: None,
            gap_running_mean: mean_of(&summary.gap_running_mean),
            gap_reciprocal: mean_of(&summary.gap_reciprocal),
            gap_alpha_weighted: mean_of(&summary.gap_alpha_weighted),
            consensus: Some(summary.consensus.mean[ci]),
            bound: overlay
                .map(|m| m.series[ci].1)
                .filter(|v| v.is_finite()),
        });
    }
    rows
}

/// Gap and consensus curves on log-linear and log-log panels.
pub fn summary_plots(suite: &str, summary: &TrialSummary, overlay: Option<&Metric>) -> Vec<LinePlot> {
    let mut series = Vec::new();
    let mut push = |label: &str, kind: MetricKind| {
        if let Some(s) = summary.mean_series(kind) {
            series.push(Series {
                label: label.to_string(),
                points: s.iter().map(|&(t, v)| (t as f64, v)).collect(),
            });
        }
    };
    push("gap (running mean)", MetricKind::GapRunningMean);
    push("gap (reciprocal)", MetricKind::GapReciprocal);
    push("gap (alpha weighted)", MetricKind::GapAlphaWeighted);
    push("consensus", MetricKind::ConsensusMaxPairwise);
    if let Some(m) = overlay {
        series.push(Series {
            label: "bound".to_string(),
            points: m.series.iter().map(|&(t, v)| (t as f64, v)).collect(),
        });
    }
    let base = LinePlot {
        title: format!("{suite} ({} trials)", summary.n_trials),
        x_label: "iteration".into(),
        y_label: "value".into(),
        log_x: false,
        log_y: true,
        series,
    };
    let mut loglog = base.clone();
    loglog.log_x = true;
    loglog.title = format!("{suite} (log-log)");
    vec![base, loglog]
}

/// Runs every experiment of a suite and writes one CSV and one SVG per
/// summary. Returns the paths written.
pub fn run_paper_suite(
    id: suites::SuiteId,
    out_dir: &Path,
    opts: suites::SuiteOptions,
) -> Result<Vec<PathBuf>, LabError> {
    std::fs::create_dir_all(out_dir).map_err(ReportError::from)?;
    let mut written = Vec::new();
    for run in suites::suite_runs(id, opts)? {
        let experiment = run.experiment();
        let summary = experiment.trial_average(run.n_trials)?;
        let overlay = match experiment.bound(run.n_trials) {
            Ok(tagged) => Some(bound_overlay(&summary, &tagged)?),
            Err(LabError::Solver(SolverError::UnsupportedBound(_))) => None,
            Err(e) => return Err(e),
        };
        let rows = summary_rows(&run.label, &summary, overlay.as_ref());
        let csv_path = out_dir.join(format!("{}.csv", run.label));
        report::write_csv(&csv_path, &rows)?;
        let svg_path = out_dir.join(format!("{}.svg", run.label));
        report::write_svg(&svg_path, &summary_plots(&run.label, &summary, overlay.as_ref()))?;
        written.push(csv_path);
        written.push(svg_path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgraph::Graph;

    fn tiny_experiment_parts() -> (
        ProblemInstance,
        TopologySchedule,
        EntropyMap,
        GradientFreeOracle,
        AlgorithmConfig,
    ) {
        let problem = nesterov_problem(3, 2, &[1.0, 1.0, 1.0]).unwrap();
        let topology =
            TopologySchedule::static_round(Graph::new(3, &[(0, 1), (1, 2)]).unwrap()).unwrap();
        let map = EntropyMap::on_simplex(2);
        let oracle = GradientFreeOracle::uniform(3, 1e-4, 0.5, 5).unwrap();
        let config = AlgorithmConfig::new(Variant::Drgfmd, StepSchedule::Sqrt { eta: 1.0 }, 300)
            .with_averaging(AveragingModes::all());
        (problem, topology, map, oracle, config)
    }

    #[test]
    fn single_trial_summary_equals_run_metrics() {
        let (problem, topology, map, oracle, config) = tiny_experiment_parts();
        let exp = Experiment {
            problem: &problem,
            topology: &topology,
            map: &map,
            oracle: &oracle,
            config: &config,
        };
        let summary = exp.trial_average(1).unwrap();
        let record = solver::run(&problem, &topology, &map, &oracle, &config, 0).unwrap();
        let f_star = problem.optimum.as_ref().unwrap().value;
        for (ci, cp) in record.checkpoints.iter().skip(1).enumerate() {
            let gap = problem.global(cp.running_mean.as_ref().unwrap()) - f_star;
            assert_eq!(summary.gap_running_mean.as_ref().unwrap().mean[ci], gap);
            assert_eq!(summary.consensus.mean[ci], cp.consensus_error());
            assert_eq!(summary.consensus.stderr[ci], 0.0);
        }
    }

    #[test]
    fn summaries_replay_identically() {
        let (problem, topology, map, oracle, config) = tiny_experiment_parts();
        let exp = Experiment {
            problem: &problem,
            topology: &topology,
            map: &map,
            oracle: &oracle,
            config: &config,
        };
        let a = exp.trial_average(4).unwrap();
        let b = exp.trial_average(4).unwrap();
        assert_eq!(a.fingerprint, b.fingerprint);
        assert_eq!(
            a.gap_running_mean.as_ref().unwrap().mean,
            b.gap_running_mean.as_ref().unwrap().mean
        );
        assert_eq!(a.consensus.mean, b.consensus.mean);
        assert_eq!(a.trial_seeds, b.trial_seeds);
    }

    #[test]
    fn fingerprints_react_to_any_parameter() {
        let (problem, topology, map, oracle, config) = tiny_experiment_parts();
        let exp = Experiment {
            problem: &problem,
            topology: &topology,
            map: &map,
            oracle: &oracle,
            config: &config,
        };
        let base = exp.fingerprint(4);
        assert_ne!(base, exp.fingerprint(5));
        let mut other_config = config.clone();
        other_config.horizon += 1;
        let other = Experiment {
            config: &other_config,
            ..exp
        };
        assert_ne!(base, other.fingerprint(4));
        let other_oracle = GradientFreeOracle::uniform(3, 1e-4, 0.5, 6).unwrap();
        let other = Experiment {
            oracle: &other_oracle,
            ..exp
        };
        assert_ne!(base, other.fingerprint(4));
    }

    #[test]
    fn overlay_rejects_foreign_bound() {
        let (problem, topology, map, oracle, config) = tiny_experiment_parts();
        let exp = Experiment {
            problem: &problem,
            topology: &topology,
            map: &map,
            oracle: &oracle,
            config: &config,
        };
        let summary = exp.trial_average(2).unwrap();
        let tagged = exp.bound(3).unwrap(); // built for a different trial count
        assert!(matches!(
            bound_overlay(&summary, &tagged),
            Err(LabError::FingerprintMismatch { .. })
        ));
        let tagged = exp.bound(2).unwrap();
        let overlay = bound_overlay(&summary, &tagged).unwrap();
        assert_eq!(overlay.series.len(), summary.checkpoints.len());
    }

    #[test]
    fn slope_of_exact_power_law() {
        let series: Vec<(usize, f64)> = (1..=2000).map(|t| (t, (t as f64).powf(-0.5))).collect();
        let fit = rate_slope(&series, 10, 2000).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-9, "slope {}", fit.slope);
        assert!(fit.r_squared > 0.999999);
    }

    #[test]
    fn slope_of_log_over_t() {
        let series: Vec<(usize, f64)> =
            (100..=10_000).map(|t| (t, (t as f64).ln() / t as f64)).collect();
        let fit = rate_slope(&series, 100, 10_000).unwrap();
        assert!(
            fit.slope > -1.0 && fit.slope < -0.85,
            "slope {}",
            fit.slope
        );
    }

    #[test]
    fn slope_of_constant_series_is_zero() {
        let series: Vec<(usize, f64)> = (1..=100).map(|t| (t, 2.5)).collect();
        let fit = rate_slope(&series, 1, 100).unwrap();
        assert!(fit.slope.abs() < 1e-9, "slope {}", fit.slope);
        assert_eq!(fit.r_squared, 1.0);
    }

    #[test]
    fn slope_excludes_nonpositive_and_errors_when_empty() {
        let series: Vec<(usize, f64)> = (1..=50).map(|t| (t, -1.0)).collect();
        assert!(matches!(
            rate_slope(&series, 1, 50),
            Err(LabError::FitWindow { kept: 0 })
        ));
    }

    #[test]
    fn constant_objective_trials_have_zero_spread() {
        // With a constant objective every oracle sample is the zero
        // vector, so all trials coincide and the spread vanishes exactly.
        use crate::geometry::{Domain, Point};
        use crate::objective::{LocalObjective, Optimum, ProblemStructure};
        let agents = (0..3)
            .map(|_| LocalObjective::new(1.0, |_: &[f64]| 2.5))
            .collect();
        let problem = ProblemInstance {
            agents,
            domain: Domain::simplex(2),
            structure: ProblemStructure::Custom,
            optimum: Some(Optimum {
                value: 2.5,
                point: Point::new(vec![0.5, 0.5]).unwrap(),
            }),
        };
        let topology =
            TopologySchedule::static_round(Graph::complete(3).unwrap()).unwrap();
        let map = EntropyMap::on_simplex(2);
        let oracle = GradientFreeOracle::uniform(3, 1e-4, 0.5, 9).unwrap();
        let config = AlgorithmConfig::new(Variant::Drgfmd, StepSchedule::Sqrt { eta: 1.0 }, 100);
        let exp = Experiment {
            problem: &problem,
            topology: &topology,
            map: &map,
            oracle: &oracle,
            config: &config,
        };
        let summary = exp.trial_average(6).unwrap();
        let stat = summary.gap_running_mean.as_ref().unwrap();
        assert!(stat.mean.iter().all(|&v| v.abs() < 1e-15));
        assert!(stat.stderr.iter().all(|&v| v == 0.0));
        assert!(summary.consensus.stderr.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gap_metrics_require_an_optimum() {
        use crate::geometry::Domain;
        use crate::objective::{LocalObjective, ProblemStructure};
        let agents = (0..2)
            .map(|_| LocalObjective::new(1.0, |x: &[f64]| x[0]))
            .collect();
        let problem = ProblemInstance {
            agents,
            domain: Domain::simplex(2),
            structure: ProblemStructure::Custom,
            optimum: None,
        };
        let topology = TopologySchedule::static_round(Graph::complete(2).unwrap()).unwrap();
        let map = EntropyMap::on_simplex(2);
        let oracle = GradientFreeOracle::uniform(2, 1e-4, 0.5, 9).unwrap();
        let config = AlgorithmConfig::new(Variant::Drgfmd, StepSchedule::Sqrt { eta: 1.0 }, 10);
        let exp = Experiment {
            problem: &problem,
            topology: &topology,
            map: &map,
            oracle: &oracle,
            config: &config,
        };
        assert!(matches!(
            exp.trial_average(2),
            Err(LabError::GapRequiresOptimum)
        ));
        // Disabling gap reporting makes the same experiment legal.
        let mut consensus_only = config.clone();
        consensus_only.averaging = AveragingModes {
            running_mean: false,
            reciprocal: false,
            alpha_weighted: false,
        };
        let exp = Experiment {
            config: &consensus_only,
            ..exp
        };
        let summary = exp.trial_average(2).unwrap();
        assert!(summary.gap_running_mean.is_none());
    }

    #[test]
    fn degenerate_dimension_suite_sits_at_zero() {
        // Dimension 1 collapses the simplex to a point: gap and
        // consensus are exactly zero at every horizon.
        let opts = suites::SuiteOptions {
            trials: 3,
            horizon: 500,
            ..Default::default()
        };
        let runs = suites::suite_runs(suites::SuiteId::ConvergenceConsensus, opts).unwrap();
        let summary = runs[0].experiment().trial_average(3).unwrap();
        assert!(summary
            .consensus
            .mean
            .iter()
            .all(|&v| v == 0.0));
        assert!(summary
            .gap_running_mean
            .as_ref()
            .unwrap()
            .mean
            .iter()
            .all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn summary_rows_round_trip_through_csv() {
        let (problem, topology, map, oracle, mut config) = tiny_experiment_parts();
        config.horizon = 50;
        let exp = Experiment {
            problem: &problem,
            topology: &topology,
            map: &map,
            oracle: &oracle,
            config: &config,
        };
        let summary = exp.trial_average(2).unwrap();
        let rows = summary_rows("demo", &summary, None);
        let text = report::csv_to_string(&rows);
        let parsed = report::parse_csv(&text).unwrap();
        assert_eq!(parsed, rows);
        // Aggregate rows carry no trial index; per-trial rows do.
        assert!(rows.iter().any(|r| r.trial.is_none()));
        assert!(rows.iter().any(|r| r.trial == Some(1)));
    }
}
