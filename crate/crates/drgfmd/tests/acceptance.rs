//! Acceptance suite: one test per criterion, each printing a PASS line
//! with the measured quantities. Tolerances are pinned in the asserts.
//!
//! Heavy summaries (30 trials, horizon 10^4) are computed once per suite
//! and shared across criteria through `OnceLock`.

use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use drgfmd::geometry::{simplex_projection, three_point_residual, EntropyMap, EuclideanMap, MirrorMap};
use drgfmd::lab::{self, suites, MetricKind, TrialSummary};
use drgfmd::netgraph::{mixing_bound_check, TopologySchedule};
use drgfmd::objective::{
    nesterov_problem, oracle_moment_check, sandwich_check, CheckStatus, GradientFreeOracle,
};
use drgfmd::sampling::simplex_interior;
use drgfmd::solver::{self, AlgorithmConfig, AveragingModes, StepSchedule, Variant};
use drgfmd::vecmath::dist;
use drgfmd::verify::{entropy_step_argmin, projection_qp_oracle};

type SuiteCache = Vec<(suites::SuiteRun, TrialSummary)>;

fn suite_summaries(
    id: suites::SuiteId,
    cell: &'static OnceLock<SuiteCache>,
) -> &'static SuiteCache {
    cell.get_or_init(|| {
        suites::suite_runs(id, suites::SuiteOptions::default())
            .expect("suite construction")
            .into_iter()
            .map(|run| {
                let summary = run
                    .experiment()
                    .trial_average(run.n_trials)
                    .expect("trial average");
                (run, summary)
            })
            .collect()
    })
}

fn dimension_sweep() -> &'static SuiteCache {
    static CACHE: OnceLock<SuiteCache> = OnceLock::new();
    suite_summaries(suites::SuiteId::DimensionSweep, &CACHE)
}

fn delta_sweep() -> &'static SuiteCache {
    static CACHE: OnceLock<SuiteCache> = OnceLock::new();
    suite_summaries(suites::SuiteId::DeltaSweep, &CACHE)
}

fn comparison() -> &'static SuiteCache {
    static CACHE: OnceLock<SuiteCache> = OnceLock::new();
    suite_summaries(suites::SuiteId::AlgorithmComparison, &CACHE)
}

fn strongly_convex() -> &'static SuiteCache {
    static CACHE: OnceLock<SuiteCache> = OnceLock::new();
    suite_summaries(suites::SuiteId::StronglyConvex, &CACHE)
}

/// Mixing envelope holds exactly over horizon 200 for 20 random periodic
/// schedules with windows 1 through 3.
#[test]
fn a01_mixing_envelope_holds_on_random_schedules() {
    let mut worst = f64::NEG_INFINITY;
    for seed in 0..20u64 {
        let window = 1 + (seed as usize % 3);
        let schedule = TopologySchedule::random_periodic(5, window, 0.7, 1000 + seed)
            .expect("schedule construction");
        let cert = mixing_bound_check(&schedule, 200).expect("certificate");
        assert!(
            cert.max_violation <= 0.0,
            "seed {seed}, window {window}: violation {}",
            cert.max_violation
        );
        worst = worst.max(cert.max_violation);
    }
    println!("acceptance 01 mixing-envelope: PASS (worst violation {worst:.3e} over 20 schedules)");
}

/// Smoothing sandwich, oracle unbiasedness, and second-moment bound at
/// 10 random simplex points for the chain objectives, n in {1, 3, 6},
/// mu in {1e-2, 1e-4}, 1e5 Monte Carlo samples.
#[test]
fn a02_oracle_smoothing_properties() {
    let samples = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(424242);
    let mut checked = 0usize;
    for &dim in &[1usize, 3, 6] {
        let problem = nesterov_problem(1, dim, &[1.0]).expect("problem");
        let f = &problem.agents[0];
        let l = problem.max_lipschitz();
        for &mu in &[1e-2f64, 1e-4] {
            for point in 0..10u64 {
                let x = simplex_interior(&mut rng, dim, 1e-9);
                let sandwich =
                    sandwich_check(f, &x, mu, l, samples, 9_000 + point).expect("sandwich");
                assert_ne!(
                    sandwich.status,
                    CheckStatus::Fail,
                    "sandwich failed at dim {dim}, mu {mu}: estimate {} for value {} width {}",
                    sandwich.estimate,
                    sandwich.value,
                    sandwich.width
                );
                let moments = oracle_moment_check(f, &x, mu, l, samples, 10_000 + point)
                    .expect("moment check");
                assert_eq!(
                    moments.status,
                    CheckStatus::Pass,
                    "moments failed at dim {dim}, mu {mu}: worst sigma {}, \
                     second moment {} vs bound {}",
                    moments.worst_sigma,
                    moments.second_moment,
                    moments.second_moment_bound
                );
                checked += 1;
            }
        }
    }
    println!("acceptance 02 oracle-smoothing: PASS ({checked} point configurations)");
}

/// The mirror iteration under the Euclidean map and the projection
/// baseline produce identical trajectories (1e-10) over a full horizon
/// for five independent streams.
#[test]
fn a03_euclidean_projection_equivalence() {
    let costs = drgfmd::objective::default_costs(suites::N_AGENTS, suites::COST_SEED);
    let problem = nesterov_problem(suites::N_AGENTS, 3, &costs).expect("problem");
    let topology = suites::paper_topology().expect("topology");
    let map = EuclideanMap::on_simplex(3);
    let oracle = GradientFreeOracle::uniform(
        suites::N_AGENTS,
        suites::MU,
        suites::DIRECTION_SCALE,
        suites::BASE_SEED,
    )
    .expect("oracle");
    let config = AlgorithmConfig::new(Variant::Drgfmd, StepSchedule::Sqrt { eta: 1.0 }, 1000)
        .with_averaging(AveragingModes::all());
    let mut dgfp_config = config.clone();
    dgfp_config.variant = Variant::Dgfp;

    let mut worst: f64 = 0.0;
    for trial in 0..5u64 {
        let mirror =
            solver::run(&problem, &topology, &map, &oracle, &config, trial).expect("mirror run");
        let baseline = solver::run(&problem, &topology, &map, &oracle, &dgfp_config, trial)
            .expect("baseline run");
        assert_eq!(mirror.checkpoints.len(), baseline.checkpoints.len());
        for (a, b) in mirror.checkpoints.iter().zip(&baseline.checkpoints) {
            for (pa, pb) in a.agents.iter().zip(&b.agents) {
                worst = worst.max(dist(pa, pb));
            }
            for (pa, pb) in [
                (&a.running_mean, &b.running_mean),
                (&a.reciprocal, &b.reciprocal),
                (&a.alpha_weighted, &b.alpha_weighted),
            ] {
                if let (Some(pa), Some(pb)) = (pa, pb) {
                    worst = worst.max(dist(pa, pb));
                }
            }
        }
    }
    assert!(worst <= 1e-10, "worst trajectory deviation {worst}");
    println!("acceptance 03 projection-equivalence: PASS (worst deviation {worst:.3e})");
}

/// Trial-mean step displacement and network disagreement stay below
/// their envelopes at 95 percent of checkpoints over 30 trials.
#[test]
fn a04_empirical_error_and_disagreement_bounds() {
    let (run, summary) = &dimension_sweep()[1]; // the n = 3 study config
    let schedule = run.config.schedule;
    let step = lab::step_error_compliance(
        summary,
        schedule,
        run.problem.dimension(),
        run.problem.max_lipschitz(),
        run.map.strong_convexity(),
    );
    assert!(
        step.fraction_within >= 0.95,
        "step displacement within bound at only {:.1}% of {} checks",
        100.0 * step.fraction_within,
        step.checked
    );
    let cert = mixing_bound_check(&run.topology, 200).expect("certificate");
    let disagreement = lab::disagreement_compliance(
        summary,
        schedule,
        &cert,
        run.problem.dimension(),
        run.problem.n_agents(),
        run.problem.max_lipschitz(),
        run.map.strong_convexity(),
    );
    assert!(
        disagreement.fraction_within >= 0.95,
        "disagreement within bound at only {:.1}% of {} checks",
        100.0 * disagreement.fraction_within,
        disagreement.checked
    );
    println!(
        "acceptance 04 error-and-disagreement-bounds: PASS (step {:.1}%, disagreement {:.1}%)",
        100.0 * step.fraction_within,
        100.0 * disagreement.fraction_within
    );
}

/// The running-mean gap stays under the sqrt-schedule bound curve at 95
/// percent of checkpoints, decays with a log-log slope in [-0.7, -0.3],
/// and ends below twice the smoothing penalty plus the decaying term.
#[test]
fn a05_sqrt_rate_bound_dominance_and_slope() {
    let (run, summary) = &dimension_sweep()[1]; // n = 3
    let tagged = run.experiment().bound(run.n_trials).expect("bound");
    let overlay = lab::bound_overlay(summary, &tagged).expect("overlay");
    let gap = summary.stat(MetricKind::GapRunningMean).expect("gap");
    let mut below = 0usize;
    for (ci, &(t, bound)) in overlay.series.iter().enumerate() {
        assert_eq!(t, summary.checkpoints[ci]);
        if gap.mean[ci] <= bound {
            below += 1;
        }
    }
    let fraction = below as f64 / overlay.series.len() as f64;
    assert!(
        fraction >= 0.95,
        "gap below bound at only {:.1}% of checkpoints",
        100.0 * fraction
    );

    let series = summary.mean_series(MetricKind::GapRunningMean).unwrap();
    let fit = lab::rate_slope(&series, 100, 10_000).expect("slope fit");
    assert!(
        (-0.7..=-0.3).contains(&fit.slope),
        "log-log slope {} outside [-0.7, -0.3]",
        fit.slope
    );

    let penalty = tagged.bound.smoothing_penalty();
    let terminal = summary.terminal_mean(MetricKind::GapRunningMean).unwrap();
    let horizon = *summary.checkpoints.last().unwrap();
    let limit = 2.0 * penalty + (tagged.bound.eval(horizon) - penalty);
    assert!(
        terminal <= limit,
        "terminal gap {terminal} above {limit} at T = {horizon}"
    );
    println!(
        "acceptance 05 sqrt-rate-bound: PASS (dominance {:.1}%, slope {:.3}, terminal {terminal:.3e} <= {limit:.3e})",
        100.0 * fraction,
        fit.slope
    );
}

/// Strongly convex configuration decays with a log-log slope in
/// [-1.2, -0.75] over the fit window.
#[test]
fn a06_strongly_convex_slope() {
    let (_, summary) = &strongly_convex()[0];
    let series = summary.mean_series(MetricKind::GapRunningMean).unwrap();
    let fit = lab::rate_slope(&series, 100, 10_000).expect("slope fit");
    assert!(
        (-1.2..=-0.75).contains(&fit.slope),
        "log-log slope {} outside [-1.2, -0.75]",
        fit.slope
    );
    println!("acceptance 06 strongly-convex-rate: PASS (slope {:.3})", fit.slope);
}

/// Reciprocal-weighted averaging under the power schedule: delta = 0.5
/// decays with slope in [-0.7, -0.3]; smaller delta decays strictly
/// slower, and terminal gaps order accordingly.
#[test]
fn a07_weighted_average_delta_ordering() {
    let runs = delta_sweep();
    let slope_of = |idx: usize| {
        let (_, summary) = &runs[idx];
        let series = summary.mean_series(MetricKind::GapReciprocal).unwrap();
        lab::rate_slope(&series, 100, 10_000).expect("slope fit").slope
    };
    let (s03, s04, s05) = (slope_of(0), slope_of(1), slope_of(2));
    assert!(
        (-0.7..=-0.3).contains(&s05),
        "slope at delta 0.5 is {s05}, outside [-0.7, -0.3]"
    );
    assert!(
        s03 > s05,
        "delta 0.3 slope {s03} not strictly shallower than delta 0.5 slope {s05}"
    );
    let gap_of = |idx: usize| {
        runs[idx]
            .1
            .terminal_mean(MetricKind::GapReciprocal)
            .unwrap()
    };
    let (g03, g04, g05) = (gap_of(0), gap_of(1), gap_of(2));
    assert!(
        g05 <= g04 && g04 <= g03,
        "terminal gaps not ordered: {g05} (0.5) vs {g04} (0.4) vs {g03} (0.3)"
    );
    println!(
        "acceptance 07 weighted-average-deltas: PASS (slopes {s03:.3} / {s04:.3} / {s05:.3}, gaps {g03:.3e} >= {g04:.3e} >= {g05:.3e})"
    );
}

/// Terminal mean gaps grow with the decision dimension at matched
/// horizon, for both averaging sequences.
#[test]
fn a08_dimension_ordering() {
    let runs = dimension_sweep();
    for kind in [MetricKind::GapRunningMean, MetricKind::GapReciprocal] {
        let gaps: Vec<f64> = runs
            .iter()
            .map(|(_, s)| s.terminal_mean(kind).unwrap())
            .collect();
        assert!(
            gaps[0] <= gaps[1] && gaps[1] <= gaps[2],
            "{kind:?} gaps not ordered by dimension: {gaps:?}"
        );
    }
    let gaps: Vec<f64> = runs
        .iter()
        .map(|(_, s)| s.terminal_mean(MetricKind::GapRunningMean).unwrap())
        .collect();
    println!(
        "acceptance 08 dimension-ordering: PASS (gaps {:.3e} <= {:.3e} <= {:.3e})",
        gaps[0], gaps[1], gaps[2]
    );
}

/// At matched budget the mirror methods land within a decade of 1e-2
/// while the stepsize-weighted projection baseline lands within a decade
/// of 1e-1.
#[test]
fn a09_algorithm_comparison_decades() {
    let runs = comparison();
    let (_, mirror) = &runs[0];
    let (_, baseline) = &runs[1];
    let rm = mirror.terminal_mean(MetricKind::GapRunningMean).unwrap();
    let rc = mirror.terminal_mean(MetricKind::GapReciprocal).unwrap();
    let aw = baseline.terminal_mean(MetricKind::GapAlphaWeighted).unwrap();
    for (name, gap) in [("running mean", rm), ("reciprocal", rc)] {
        let decade = gap.log10();
        assert!(
            (-3.0..=-1.0).contains(&decade),
            "mirror {name} gap {gap:.3e} outside one decade of 1e-2"
        );
    }
    let decade = aw.log10();
    assert!(
        (-2.0..=0.0).contains(&decade),
        "baseline gap {aw:.3e} outside one decade of 1e-1"
    );
    println!(
        "acceptance 09 algorithm-comparison: PASS (mirror {rm:.3e} / {rc:.3e}, baseline {aw:.3e})"
    );
}

/// Rerunning every suite with the same options produces byte-identical
/// CSV (and SVG) files.
#[test]
fn a10_suite_determinism() {
    let base = std::env::temp_dir().join(format!("drgfmd-acceptance-{}", std::process::id()));
    let dir_a = base.join("a");
    let dir_b = base.join("b");
    let opts = suites::SuiteOptions {
        trials: 5,
        horizon: 2000,
        ..Default::default()
    };
    let mut compared = 0usize;
    for id in suites::SuiteId::all() {
        let paths_a = lab::run_paper_suite(id, &dir_a, opts).expect("first run");
        let paths_b = lab::run_paper_suite(id, &dir_b, opts).expect("second run");
        assert_eq!(paths_a.len(), paths_b.len());
        for (pa, pb) in paths_a.iter().zip(&paths_b) {
            let a = std::fs::read(pa).expect("read first");
            let b = std::fs::read(pb).expect("read second");
            assert_eq!(
                a,
                b,
                "{} differs between reruns",
                pa.file_name().unwrap().to_string_lossy()
            );
            compared += 1;
        }
    }
    let _ = std::fs::remove_dir_all(&base);
    println!("acceptance 10 suite-determinism: PASS ({compared} files byte-identical)");
}

/// Geometry oracle agreements: closed-form entropic step vs Newton
/// argmin (1e-6 over 1e3 instances), sort-threshold projection vs
/// support-enumeration QP (1e-6 over 1e3 instances), three-point
/// identity residual (1e-9 over 1e4 triples).
#[test]
fn a11_geometry_oracle_agreement() {
    let mut rng = ChaCha8Rng::seed_from_u64(777);
    let entropy = EntropyMap::on_simplex(4);
    let mut worst_step: f64 = 0.0;
    for _ in 0..1000 {
        let y = simplex_interior(&mut rng, 4, 1e-3);
        let g: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
        let alpha = rng.random_range(0.05..1.0);
        let closed = entropy.mirror_step(&y, &g, alpha).expect("closed form");
        let numeric = entropy_step_argmin(&y, &g, alpha);
        worst_step = worst_step.max(dist(&closed, &numeric));
    }
    assert!(worst_step <= 1e-6, "entropic step disagreement {worst_step}");

    let mut worst_proj: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.random_range(2..7);
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        worst_proj = worst_proj.max(dist(&simplex_projection(&v), &projection_qp_oracle(&v)));
    }
    assert!(worst_proj <= 1e-6, "projection disagreement {worst_proj}");

    let mut worst_identity: f64 = 0.0;
    for map in [&entropy as &dyn MirrorMap, &EuclideanMap::on_simplex(4)] {
        for _ in 0..5000 {
            let x = simplex_interior(&mut rng, 4, 1e-6);
            let y = simplex_interior(&mut rng, 4, 1e-6);
            let z = simplex_interior(&mut rng, 4, 1e-6);
            let r = three_point_residual(map, &x, &y, &z).expect("residual");
            worst_identity = worst_identity.max(r.abs());
        }
    }
    assert!(
        worst_identity <= 1e-9,
        "three-point residual {worst_identity}"
    );
    println!(
        "acceptance 11 geometry-oracles: PASS (step {worst_step:.3e}, projection {worst_proj:.3e}, identity {worst_identity:.3e})"
    );
}
