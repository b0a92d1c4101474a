//! Local objectives, Gaussian smoothing, and the two-point gradient-free
//! oracle.
//!
//! The shipped problem family is the nonsmooth piecewise-linear chain
//! objective on the probability simplex, optionally augmented with a
//! quadratic proximity term to make it strongly convex. Ground-truth
//! optima come from an exact epigraph linear program, cross-checked by an
//! independent grid-plus-refinement search.

mod lp;

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::geometry::{Domain, Point};
use crate::rng::{keyed_rng, stream};
use crate::vecmath::{dist, mean_stderr, norm};

#[derive(Debug, Error)]
pub enum ObjectiveError {
    #[error("cost vector has {got} entries, expected {expected}")]
    CostCount { expected: usize, got: usize },
    #[error("cost {0} must be positive")]
    NonPositiveCost(f64),
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("strong-convexity modulus {0} must be positive")]
    NonPositiveSigma(f64),
    #[error("anchor {index} has dimension {got}, expected {expected}")]
    AnchorDimension {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("anchor count {got} does not match agent count {expected}")]
    AnchorCount { expected: usize, got: usize },
    #[error("smoothing parameter must be positive, got {0}")]
    NonPositiveMu(f64),
    #[error("agent index {agent} out of range for {agents} agents")]
    AgentOutOfRange { agent: usize, agents: usize },
    #[error("need at least {need} Monte Carlo samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("optimum oracle supports dimension <= {max}, got {got}")]
    UnsupportedDimension { max: usize, got: usize },
    #[error("instance is not piecewise linear; no exact linear program available")]
    UnsupportedInstance,
    #[error("linear program failed: {0}")]
    Lp(#[from] lp::LpError),
}

/// One agent's objective with its Lipschitz constant over the domain.
#[derive(Clone)]
pub struct LocalObjective {
    eval: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    lipschitz: f64,
    strong_convexity: Option<f64>,
}

impl LocalObjective {
    pub fn new(lipschitz: f64, eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        LocalObjective {
            eval: Arc::new(eval),
            lipschitz,
            strong_convexity: None,
        }
    }

    pub fn with_strong_convexity(mut self, sigma: f64) -> Self {
        self.strong_convexity = Some(sigma);
        self
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn strong_convexity(&self) -> Option<f64> {
        self.strong_convexity
    }
}

impl std::fmt::Debug for LocalObjective {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LocalObjective")
            .field("lipschitz", &self.lipschitz)
            .field("strong_convexity", &self.strong_convexity)
            .finish()
    }
}

/// What the instance is made of, kept for exact optimum computation and
/// config fingerprinting.
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemStructure {
    PiecewiseLinearChain {
        costs: Vec<f64>,
    },
    StronglyConvexChain {
        costs: Vec<f64>,
        sigma_f: f64,
        anchors: Vec<Vec<f64>>,
    },
    Custom,
}

#[derive(Debug, Clone)]
pub struct Optimum {
    pub value: f64,
    pub point: Point,
}

/// A distributed problem: one objective per agent over a shared domain.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub agents: Vec<LocalObjective>,
    pub domain: Domain,
    pub structure: ProblemStructure,
    pub optimum: Option<Optimum>,
}

impl ProblemInstance {
    pub fn n_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn dimension(&self) -> usize {
        self.domain.dim()
    }

    /// Largest per-agent Lipschitz constant.
    pub fn max_lipschitz(&self) -> f64 {
        self.agents.iter().map(|a| a.lipschitz).fold(0.0, f64::max)
    }

    /// Common strong-convexity modulus, when every agent has one.
    pub fn strong_convexity(&self) -> Option<f64> {
        let mut sigma = f64::INFINITY;
        for agent in &self.agents {
            sigma = sigma.min(agent.strong_convexity?);
        }
        Some(sigma)
    }

    /// Global objective: the average of the agents' objectives.
    pub fn global(&self, x: &[f64]) -> f64 {
        self.agents.iter().map(|a| a.eval(x)).sum::<f64>() / self.n_agents() as f64
    }
}

/// The piecewise-linear chain term
/// `|x_1 - 1| + sum_k |1 + x_{k+1} - 2 x_k|`.
pub fn chain_term(x: &[f64]) -> f64 {
    let mut v = (x[0] - 1.0).abs();
    for k in 1..x.len() {
        v += (1.0 + x[k] - 2.0 * x[k - 1]).abs();
    }
    v
}

/// Conservative Euclidean Lipschitz constant of `chain_term` from the
/// subgradient norms of its pieces.
pub fn chain_lipschitz(dim: usize) -> f64 {
    1.0 + 3.0 * (dim as f64 - 1.0)
}

/// Default heterogeneous per-agent costs, drawn uniformly from
/// [0.5, 1.5] with a keyed stream.
pub fn default_costs(n_agents: usize, seed: u64) -> Vec<f64> {
    let mut rng = keyed_rng(seed, stream::COSTS, &[n_agents as u64]);
    (0..n_agents).map(|_| rng.random_range(0.5..1.5)).collect()
}

fn validate_costs(n_agents: usize, costs: &[f64]) -> Result<(), ObjectiveError> {
    if costs.len() != n_agents {
        return Err(ObjectiveError::CostCount {
            expected: n_agents,
            got: costs.len(),
        });
    }
    if let Some(&c) = costs.iter().find(|&&c| c <= 0.0) {
        return Err(ObjectiveError::NonPositiveCost(c));
    }
    Ok(())
}

/// Nonsmooth convex test problem on the probability simplex: agent `i`
/// holds `c_i * chain_term(x)`. The exact optimum is attached via the
/// epigraph linear program.
pub fn nesterov_problem(
    n_agents: usize,
    dimension: usize,
    costs: &[f64],
) -> Result<ProblemInstance, ObjectiveError> {
    if dimension == 0 {
        return Err(ObjectiveError::ZeroDimension);
    }
    validate_costs(n_agents, costs)?;
    let agents = costs
        .iter()
        .map(|&c| {
            LocalObjective::new(c * chain_lipschitz(dimension), move |x: &[f64]| {
                c * chain_term(x)
            })
        })
        .collect();
    let mut instance = ProblemInstance {
        agents,
        domain: Domain::simplex(dimension),
        structure: ProblemStructure::PiecewiseLinearChain {
            costs: costs.to_vec(),
        },
        optimum: None,
    };
    let (value, point) = lp_optimum(&instance)?;
    instance.optimum = Some(Optimum { value, point });
    Ok(instance)
}

/// Strongly convex variant: agent `i` holds
/// `c_i * chain_term(x) + sigma_f / 2 * ||x - a_i||^2`.
///
/// Costs of zero are allowed here so the pure-quadratic case is
/// expressible. Anchors may sit outside the simplex; the Lipschitz
/// constant accounts for the worst vertex distance.
pub fn strongly_convex_problem(
    n_agents: usize,
    dimension: usize,
    costs: &[f64],
    sigma_f: f64,
    anchors: &[Vec<f64>],
) -> Result<ProblemInstance, ObjectiveError> {
    if dimension == 0 {
        return Err(ObjectiveError::ZeroDimension);
    }
    if sigma_f <= 0.0 {
        return Err(ObjectiveError::NonPositiveSigma(sigma_f));
    }
    if costs.len() != n_agents {
        return Err(ObjectiveError::CostCount {
            expected: n_agents,
            got: costs.len(),
        });
    }
    if let Some(&c) = costs.iter().find(|&&c| c < 0.0) {
        return Err(ObjectiveError::NonPositiveCost(c));
    }
    if anchors.len() != n_agents {
        return Err(ObjectiveError::AnchorCount {
            expected: n_agents,
            got: anchors.len(),
        });
    }
    for (index, a) in anchors.iter().enumerate() {
        if a.len() != dimension {
            return Err(ObjectiveError::AnchorDimension {
                index,
                expected: dimension,
                got: a.len(),
            });
        }
    }
    let agents = costs
        .iter()
        .zip(anchors)
        .map(|(&c, anchor)| {
            let anchor = anchor.clone();
            // sup over the simplex of ||x - a|| is attained at a vertex.
            let max_dist = (0..dimension)
                .map(|j| {
                    let mut v = anchor.clone();
                    v[j] -= 1.0;
                    norm(&v)
                })
                .fold(0.0, f64::max);
            let lipschitz = c * chain_lipschitz(dimension) + sigma_f * max_dist;
            LocalObjective::new(lipschitz, move |x: &[f64]| {
                c * chain_term(x) + 0.5 * sigma_f * dist(x, &anchor).powi(2)
            })
            .with_strong_convexity(sigma_f)
        })
        .collect();
    let mut instance = ProblemInstance {
        agents,
        domain: Domain::simplex(dimension),
        structure: ProblemStructure::StronglyConvexChain {
            costs: costs.to_vec(),
            sigma_f,
            anchors: anchors.to_vec(),
        },
        optimum: None,
    };
    let global = instance.clone();
    let (value, point) = grid_minimize_simplex(&|x| global.global(x), dimension, 120, 200)?;
    instance.optimum = Some(Optimum {
        value,
        point: Point::new(point).expect("grid points are finite"),
    });
    Ok(instance)
}

/// Exact optimum of a piecewise-linear chain instance via the epigraph
/// linear program: slack `u_k >= |t_k(x)|` for each absolute-value term,
/// minimized over the simplex.
pub fn lp_optimum(instance: &ProblemInstance) -> Result<(f64, Point), ObjectiveError> {
    let ProblemStructure::PiecewiseLinearChain { costs } = &instance.structure else {
        return Err(ObjectiveError::UnsupportedInstance);
    };
    let n = instance.dimension();
    let mean_cost = costs.iter().sum::<f64>() / costs.len() as f64;

    // Columns: x (n) | u (n) | surplus for u >= t (n) | surplus for u >= -t (n).
    let cols = 4 * n;
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(2 * n + 1);
    let mut rhs: Vec<f64> = Vec::with_capacity(2 * n + 1);

    let mut simplex_row = vec![0.0; cols];
    simplex_row[..n].fill(1.0);
    rows.push(simplex_row);
    rhs.push(1.0);

    // Term k: t_k = a_k . x + b_k.
    let term = |k: usize| -> (Vec<f64>, f64) {
        let mut a = vec![0.0; n];
        if k == 0 {
            a[0] = 1.0;
            (a, -1.0)
        } else {
            a[k] = 1.0;
            a[k - 1] = -2.0;
            (a, 1.0)
        }
    };
    for k in 0..n {
        let (a, b) = term(k);
        // u_k - a.x - sp_k = b
        let mut row = vec![0.0; cols];
        for j in 0..n {
            row[j] = -a[j];
        }
        row[n + k] = 1.0;
        row[2 * n + k] = -1.0;
        rows.push(row);
        rhs.push(b);
        // u_k + a.x - sm_k = -b
        let mut row = vec![0.0; cols];
        row[..n].copy_from_slice(&a);
        row[n + k] = 1.0;
        row[3 * n + k] = -1.0;
        rows.push(row);
        rhs.push(-b);
    }

    let mut objective = vec![0.0; cols];
    objective[n..2 * n].fill(1.0);

    let sol = lp::solve(&rows, &rhs, &objective)?;
    let x = sol.point[..n].to_vec();
    let value = mean_cost * sol.objective;
    Ok((value, Point::new(x).expect("LP solutions are finite")))
}

/// Exhaustive lattice search over the simplex followed by shrinking local
/// grid refinement. Independent of the linear program; intended as a
/// ground-truth oracle at desk scale (dimension <= 4).
pub fn grid_minimize_simplex(
    f: &dyn Fn(&[f64]) -> f64,
    dimension: usize,
    divisions: usize,
    refine_rounds: usize,
) -> Result<(f64, Vec<f64>), ObjectiveError> {
    const MAX_DIM: usize = 4;
    if dimension == 0 {
        return Err(ObjectiveError::ZeroDimension);
    }
    if dimension > MAX_DIM {
        return Err(ObjectiveError::UnsupportedDimension {
            max: MAX_DIM,
            got: dimension,
        });
    }
    if dimension == 1 {
        return Ok((f(&[1.0]), vec![1.0]));
    }

    // Stage 1: lattice points k / divisions.
    let mut best_x = vec![0.0; dimension];
    best_x[0] = 1.0;
    let mut best_v = f(&best_x);
    let mut point = vec![0usize; dimension];
    enumerate_compositions(divisions, dimension, &mut point, 0, &mut |comp| {
        let x: Vec<f64> = comp.iter().map(|&k| k as f64 / divisions as f64).collect();
        let v = f(&x);
        if v < best_v {
            best_v = v;
            best_x = x;
        }
    });

    // Stage 2: full local grid around the incumbent, radius halved
    // whenever a sweep finds no improvement.
    let span = 3i64; // offsets -3..=3 per free coordinate
    let mut radius = 2.0 / divisions as f64;
    let free = dimension - 1;
    for _ in 0..refine_rounds {
        let mut improved = false;
        let mut candidate_best = best_v;
        let mut candidate_x = best_x.clone();
        let mut offsets = vec![-span; free];
        'sweep: loop {
            // Materialize the offset point, last coordinate takes the slack.
            let mut x = vec![0.0; dimension];
            let mut sum = 0.0;
            let mut feasible = true;
            for d in 0..free {
                x[d] = best_x[d] + offsets[d] as f64 * radius / span as f64;
                if x[d] < 0.0 {
                    feasible = false;
                }
                sum += x[d];
            }
            x[dimension - 1] = 1.0 - sum;
            if x[dimension - 1] < 0.0 {
                feasible = false;
            }
            if feasible {
                let v = f(&x);
                if v < candidate_best {
                    candidate_best = v;
                    candidate_x = x;
                    improved = true;
                }
            }
            // Odometer over the offset grid.
            let mut d = 0;
            loop {
                if d == free {
                    break 'sweep;
                }
                offsets[d] += 1;
                if offsets[d] <= span {
                    break;
                }
                offsets[d] = -span;
                d += 1;
            }
        }
        best_v = candidate_best;
        best_x = candidate_x;
        if !improved {
            radius *= 0.5;
            if radius < 1e-14 {
                break;
            }
        }
    }
    Ok((best_v, best_x))
}

fn enumerate_compositions(
    total: usize,
    parts: usize,
    scratch: &mut Vec<usize>,
    index: usize,
    visit: &mut impl FnMut(&[usize]),
) {
    if index == parts - 1 {
        scratch[index] = total - scratch[..index].iter().sum::<usize>();
        visit(scratch);
        return;
    }
    let used: usize = scratch[..index].iter().sum();
    for k in 0..=(total - used) {
        scratch[index] = k;
        enumerate_compositions(total, parts, scratch, index + 1, visit);
    }
}

/// Two-point gradient-free oracle with keyed Gaussian direction streams.
///
/// `sample` is a pure function of `(seed, trial, agent, iteration)`; the
/// same key always reproduces the same direction bit-for-bit.
#[derive(Debug, Clone)]
pub struct GradientFreeOracle {
    mu: Vec<f64>,
    direction_scale: f64,
    seed: u64,
}

impl GradientFreeOracle {
    pub fn new(mu: Vec<f64>, direction_scale: f64, seed: u64) -> Result<Self, ObjectiveError> {
        if let Some(&m) = mu.iter().find(|&&m| m <= 0.0) {
            return Err(ObjectiveError::NonPositiveMu(m));
        }
        if direction_scale <= 0.0 {
            return Err(ObjectiveError::NonPositiveMu(direction_scale));
        }
        Ok(GradientFreeOracle {
            mu,
            direction_scale,
            seed,
        })
    }

    /// Same smoothing parameter for every agent.
    pub fn uniform(
        n_agents: usize,
        mu: f64,
        direction_scale: f64,
        seed: u64,
    ) -> Result<Self, ObjectiveError> {
        GradientFreeOracle::new(vec![mu; n_agents], direction_scale, seed)
    }

    pub fn n_agents(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self, agent: usize) -> Result<f64, ObjectiveError> {
        self.mu
            .get(agent)
            .copied()
            .ok_or(ObjectiveError::AgentOutOfRange {
                agent,
                agents: self.mu.len(),
            })
    }

    pub fn mus(&self) -> &[f64] {
        &self.mu
    }

    pub fn direction_scale(&self) -> f64 {
        self.direction_scale
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Mean smoothing parameter across agents.
    pub fn mean_mu(&self) -> f64 {
        self.mu.iter().sum::<f64>() / self.mu.len() as f64
    }

    /// Gaussian direction with covariance `direction_scale * I`.
    pub fn direction(&self, trial: u64, agent: usize, iteration: u64, dim: usize) -> Vec<f64> {
        let mut rng = keyed_rng(
            self.seed,
            stream::DIRECTIONS,
            &[trial, agent as u64, iteration],
        );
        let scale = self.direction_scale.sqrt();
        (0..dim)
            .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
            .collect()
    }

    /// Finite-difference-times-direction estimate
    /// `(f(z + mu xi) - f(z)) / mu * xi`.
    pub fn sample(
        &self,
        f: &LocalObjective,
        z: &[f64],
        trial: u64,
        agent: usize,
        iteration: u64,
    ) -> Result<Vec<f64>, ObjectiveError> {
        let mu = self.mu(agent)?;
        let xi = self.direction(trial, agent, iteration, z.len());
        let shifted: Vec<f64> = z.iter().zip(&xi).map(|(&zv, &xv)| zv + mu * xv).collect();
        let quotient = (f.eval(&shifted) - f.eval(z)) / mu;
        Ok(xi.into_iter().map(|x| quotient * x).collect())
    }
}

/// Monte Carlo estimate of the Gaussian-smoothed value
/// `E[f(x + mu xi)]` with standard-normal directions.
/// Returns (estimate, standard error).
pub fn smoothed_value_mc(
    f: &LocalObjective,
    x: &[f64],
    mu: f64,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64), ObjectiveError> {
    if samples < 2 {
        return Err(ObjectiveError::TooFewSamples {
            need: 2,
            got: samples,
        });
    }
    let mut rng = keyed_rng(seed, stream::SMOOTHING_MC, &[]);
    let n = x.len();
    let mut shifted = vec![0.0; n];
    let mut acc = Welford::new();
    for _ in 0..samples {
        for d in 0..n {
            shifted[d] = x[d] + mu * rng.sample::<f64, _>(StandardNormal);
        }
        acc.push(f.eval(&shifted));
    }
    Ok((acc.mean(), acc.stderr()))
}

/// Online mean/variance accumulator; numerically stable under
/// cancellation, unlike the raw sum-of-squares formula.
#[derive(Debug, Clone, Copy, Default)]
struct Welford {
    count: usize,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn new() -> Self {
        Welford::default()
    }

    #[inline]
    fn push(&mut self, v: f64) {
        self.count += 1;
        let delta = v - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (v - self.mean);
    }

    fn mean(&self) -> f64 {
        self.mean
    }

    fn stderr(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        (self.m2 / (self.count as f64 - 1.0) / self.count as f64).sqrt()
    }
}

/// Central-difference estimate of the smoothed gradient with common
/// random numbers across the stencil. Returns per-coordinate means and
/// standard errors.
pub fn smoothed_gradient_fd(
    f: &LocalObjective,
    x: &[f64],
    mu: f64,
    h: f64,
    samples: usize,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>), ObjectiveError> {
    if samples < 2 {
        return Err(ObjectiveError::TooFewSamples {
            need: 2,
            got: samples,
        });
    }
    let n = x.len();
    let mut rng = keyed_rng(seed, stream::SMOOTHING_MC, &[1]);
    let mut acc = vec![Welford::new(); n];
    let mut plus = vec![0.0; n];
    let mut minus = vec![0.0; n];
    let mut xi = vec![0.0; n];
    for _ in 0..samples {
        for v in xi.iter_mut() {
            *v = rng.sample::<f64, _>(StandardNormal);
        }
        for e in 0..n {
            let base = x[e] + mu * xi[e];
            plus[e] = base;
            minus[e] = base;
        }
        for d in 0..n {
            let keep = (plus[d], minus[d]);
            plus[d] += h;
            minus[d] -= h;
            acc[d].push((f.eval(&plus) - f.eval(&minus)) / (2.0 * h));
            plus[d] = keep.0;
            minus[d] = keep.1;
        }
    }
    Ok((
        acc.iter().map(Welford::mean).collect(),
        acc.iter().map(Welford::stderr).collect(),
    ))
}

/// Monte Carlo estimate of the midpoint strong-convexity gap of the
/// smoothed function,
/// `(f_mu(x) + f_mu(y)) / 2 - f_mu((x + y) / 2) - sigma / 8 ||x - y||^2`,
/// using common random numbers. The smoothed function is sigma-strongly
/// convex iff the mean is nonnegative up to noise.
pub fn smoothed_midpoint_gap(
    f: &LocalObjective,
    x: &[f64],
    y: &[f64],
    sigma: f64,
    mu: f64,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64), ObjectiveError> {
    if samples < 2 {
        return Err(ObjectiveError::TooFewSamples {
            need: 2,
            got: samples,
        });
    }
    let n = x.len();
    let mid: Vec<f64> = x.iter().zip(y).map(|(&a, &b)| 0.5 * (a + b)).collect();
    let offset = 0.125 * sigma * dist(x, y).powi(2);
    let mut rng = keyed_rng(seed, stream::SMOOTHING_MC, &[2]);
    let mut gaps = Vec::with_capacity(samples);
    let mut px = vec![0.0; n];
    let mut py = vec![0.0; n];
    let mut pm = vec![0.0; n];
    for _ in 0..samples {
        for d in 0..n {
            let noise = mu * rng.sample::<f64, _>(StandardNormal);
            px[d] = x[d] + noise;
            py[d] = y[d] + noise;
            pm[d] = mid[d] + noise;
        }
        gaps.push(0.5 * (f.eval(&px) + f.eval(&py)) - f.eval(&pm) - offset);
    }
    Ok(mean_stderr(&gaps))
}

/// Outcome of a Monte Carlo property check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    /// The estimator noise was too large relative to the quantity checked.
    Inconclusive,
}

/// Report of the smoothing sandwich check
/// `f(x) <= f_mu(x) <= f(x) + sqrt(n) mu L`.
#[derive(Debug, Clone)]
pub struct SandwichReport {
    pub value: f64,
    pub estimate: f64,
    pub stderr: f64,
    /// Width of the sandwich: `sqrt(n) * mu * max_lipschitz`.
    pub width: f64,
    pub status: CheckStatus,
}

/// Monte Carlo check that the smoothed value sits between the raw value
/// and the raw value plus the dimension-dependent smoothing penalty.
pub fn sandwich_check(
    f: &LocalObjective,
    x: &[f64],
    mu: f64,
    max_lipschitz: f64,
    samples: usize,
    seed: u64,
) -> Result<SandwichReport, ObjectiveError> {
    let (estimate, stderr) = smoothed_value_mc(f, x, mu, samples, seed)?;
    let value = f.eval(x);
    let width = (x.len() as f64).sqrt() * mu * max_lipschitz;
    let status = if 4.0 * stderr >= width / 4.0 {
        CheckStatus::Inconclusive
    } else if estimate >= value - 4.0 * stderr && estimate <= value + width + 4.0 * stderr {
        CheckStatus::Pass
    } else {
        CheckStatus::Fail
    };
    Ok(SandwichReport {
        value,
        estimate,
        stderr,
        width,
        status,
    })
}

/// Report of the oracle moment checks: the sample mean of the oracle
/// against an independent finite-difference estimate of the smoothed
/// gradient, and the second moment against `(n + 4)^2 L^2`.
#[derive(Debug, Clone)]
pub struct MomentReport {
    pub oracle_mean: Vec<f64>,
    pub fd_gradient: Vec<f64>,
    /// Worst per-coordinate discrepancy measured in combined standard
    /// errors; at most 5 to pass.
    pub worst_sigma: f64,
    pub second_moment: f64,
    pub second_moment_stderr: f64,
    pub second_moment_bound: f64,
    pub status: CheckStatus,
}

/// Monte Carlo check of the oracle's conditional mean and second moment.
///
/// The mean check compares the empirical oracle average against a
/// central-difference estimate of the smoothed gradient computed with a
/// separate stream (5 combined standard errors); the second-moment check
/// allows 4 standard errors over `(n + 4)^2 L^2`.
pub fn oracle_moment_check(
    f: &LocalObjective,
    z: &[f64],
    mu: f64,
    max_lipschitz: f64,
    samples: usize,
    seed: u64,
) -> Result<MomentReport, ObjectiveError> {
    if samples < 10_000 {
        return Err(ObjectiveError::TooFewSamples {
            need: 10_000,
            got: samples,
        });
    }
    let n = z.len();
    let oracle = GradientFreeOracle::uniform(1, mu, 1.0, seed)?;
    let mut acc = vec![Welford::new(); n];
    let mut norm_acc = Welford::new();
    for it in 0..samples {
        let g = oracle.sample(f, z, 0, 0, it as u64)?;
        for d in 0..n {
            acc[d].push(g[d]);
        }
        norm_acc.push(g.iter().map(|v| v * v).sum::<f64>());
    }
    let oracle_mean: Vec<f64> = acc.iter().map(Welford::mean).collect();
    let oracle_se: Vec<f64> = acc.iter().map(Welford::stderr).collect();

    let h = 0.05 * mu;
    let (fd_gradient, fd_se) = smoothed_gradient_fd(f, z, mu, h, samples, seed ^ 0x5EED)?;

    let mut worst_sigma: f64 = 0.0;
    for d in 0..n {
        let combined = (oracle_se[d] * oracle_se[d] + fd_se[d] * fd_se[d]).sqrt();
        let sigmas = (oracle_mean[d] - fd_gradient[d]).abs() / combined.max(1e-300);
        worst_sigma = worst_sigma.max(sigmas);
    }

    let (second_moment, second_moment_stderr) = (norm_acc.mean(), norm_acc.stderr());
    let second_moment_bound = ((n + 4) as f64).powi(2) * max_lipschitz * max_lipschitz;

    let mean_ok = worst_sigma <= 5.0;
    let moment_ok = second_moment <= second_moment_bound + 4.0 * second_moment_stderr;
    let status = if mean_ok && moment_ok {
        CheckStatus::Pass
    } else {
        CheckStatus::Fail
    };
    Ok(MomentReport {
        oracle_mean,
        fd_gradient,
        worst_sigma,
        second_moment,
        second_moment_stderr,
        second_moment_bound,
        status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vecmath::dot;

    fn linear_objective(a: Vec<f64>) -> LocalObjective {
        let lip = norm(&a);
        LocalObjective::new(lip, move |x: &[f64]| dot(&a, x))
    }

    fn abs_objective() -> LocalObjective {
        LocalObjective::new(1.0, |x: &[f64]| x[0].abs())
    }

    fn quadratic_objective(radius: f64) -> LocalObjective {
        // ||x||^2 with Lipschitz bound 2 * radius on the ball of that radius.
        LocalObjective::new(2.0 * radius, |x: &[f64]| dot(x, x))
    }

    #[test]
    fn chain_term_hand_values() {
        // Uniform point in dimension 3: each of the three pieces is 2/3.
        let x = [1.0 / 3.0; 3];
        assert!((chain_term(&x) - 2.0).abs() < 1e-12);
        assert_eq!(chain_term(&[1.0]), 0.0);
    }

    #[test]
    fn nesterov_problem_shapes_and_optimum() {
        let inst = nesterov_problem(1, 2, &[1.0]).unwrap();
        let opt = inst.optimum.as_ref().unwrap();
        assert!((opt.value - 1.0 / 3.0).abs() < 1e-9, "f* = {}", opt.value);
        assert!((opt.point[0] - 2.0 / 3.0).abs() < 1e-9);
        assert!((opt.point[1] - 1.0 / 3.0).abs() < 1e-9);

        let inst = nesterov_problem(3, 1, &[0.5, 1.0, 1.5]).unwrap();
        let opt = inst.optimum.as_ref().unwrap();
        assert_eq!(opt.value, 0.0);
        assert_eq!(opt.point.as_slice(), &[1.0]);
    }

    #[test]
    fn nesterov_problem_rejects_bad_costs() {
        assert!(matches!(
            nesterov_problem(2, 2, &[1.0]),
            Err(ObjectiveError::CostCount { .. })
        ));
        assert!(matches!(
            nesterov_problem(1, 2, &[0.0]),
            Err(ObjectiveError::NonPositiveCost(_))
        ));
    }

    #[test]
    fn lp_matches_grid_for_small_dimensions() {
        for dim in 2..=4 {
            let inst = nesterov_problem(1, dim, &[1.0]).unwrap();
            let (lp_value, _) = lp_optimum(&inst).unwrap();
            let (grid_value, _) = grid_minimize_simplex(&|x| chain_term(x), dim, 80, 200).unwrap();
            assert!(
                (lp_value - grid_value).abs() < 1e-6,
                "dim {dim}: lp {lp_value} vs grid {grid_value}"
            );
        }
    }

    #[test]
    fn lp_rejects_quadratic_instances() {
        let center = vec![1.0 / 3.0; 3];
        let inst = strongly_convex_problem(1, 3, &[1.0], 1.0, &[center]).unwrap();
        assert!(matches!(
            lp_optimum(&inst),
            Err(ObjectiveError::UnsupportedInstance)
        ));
    }

    #[test]
    fn strongly_convex_pure_quadratic_optima() {
        // Zero costs, anchors on the simplex: minimum 0 at the anchor.
        let anchor = vec![0.25, 0.75];
        let inst =
            strongly_convex_problem(2, 2, &[0.0, 0.0], 1.0, &[anchor.clone(), anchor.clone()])
                .unwrap();
        let opt = inst.optimum.as_ref().unwrap();
        assert!(opt.value.abs() < 1e-10, "f* = {}", opt.value);
        assert!(dist(&opt.point, &anchor) < 1e-5);

        // Anchor outside the simplex: optimum at the nearest vertex.
        let inst = strongly_convex_problem(1, 2, &[0.0], 1.0, &[vec![2.0, 0.0]]).unwrap();
        let opt = inst.optimum.as_ref().unwrap();
        assert!((opt.value - 0.5).abs() < 1e-8, "f* = {}", opt.value);
        assert!(dist(&opt.point, &[1.0, 0.0]) < 1e-4);
    }

    #[test]
    fn oracle_is_exact_for_linear_objectives() {
        // (f(z + mu xi) - f(z)) / mu = <a, xi> regardless of mu.
        let f = linear_objective(vec![2.0, 3.0]);
        let oracle = GradientFreeOracle::uniform(1, 1e-3, 1.0, 99).unwrap();
        let z = [0.25, 0.75];
        let g = oracle.sample(&f, &z, 0, 0, 0).unwrap();
        let xi = oracle.direction(0, 0, 0, 2);
        let expected: Vec<f64> = xi
            .iter()
            .map(|&x| (2.0 * xi[0] + 3.0 * xi[1]) * x)
            .collect();
        for d in 0..2 {
            assert!((g[d] - expected[d]).abs() < 1e-9);
        }
        // mu cancels exactly: a different mu gives the same value.
        let oracle2 = GradientFreeOracle::uniform(1, 1e-7, 1.0, 99).unwrap();
        let g2 = oracle2.sample(&f, &z, 0, 0, 0).unwrap();
        for d in 0..2 {
            assert!((g[d] - g2[d]).abs() < 1e-6);
        }
    }

    #[test]
    fn oracle_quadratic_at_origin() {
        // f = ||x||^2 at z = 0: (f(mu xi) - 0) / mu = mu ||xi||^2.
        let f = quadratic_objective(1.0);
        let mu = 0.5;
        let oracle = GradientFreeOracle::uniform(1, mu, 1.0, 5).unwrap();
        let z = [0.0, 0.0];
        let g = oracle.sample(&f, &z, 0, 0, 7).unwrap();
        let xi = oracle.direction(0, 0, 7, 2);
        let xi_norm_sq = dot(&xi, &xi);
        for d in 0..2 {
            assert!((g[d] - mu * xi_norm_sq * xi[d]).abs() < 1e-12);
        }
    }

    #[test]
    fn oracle_replays_bit_exactly() {
        let f = abs_objective();
        let oracle = GradientFreeOracle::uniform(3, 1e-4, 0.5, 1234).unwrap();
        let z = [0.3];
        let a = oracle.sample(&f, &z, 5, 2, 77).unwrap();
        let b = oracle.sample(&f, &z, 5, 2, 77).unwrap();
        assert_eq!(a, b);
        let c = oracle.sample(&f, &z, 5, 2, 78).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn oracle_rejects_zero_mu() {
        assert!(matches!(
            GradientFreeOracle::uniform(1, 0.0, 1.0, 0),
            Err(ObjectiveError::NonPositiveMu(_))
        ));
    }

    #[test]
    fn smoothed_quadratic_has_known_mean() {
        // E ||x + mu xi||^2 at x = 0 is mu^2 n.
        let f = quadratic_objective(1.0);
        let mu = 0.1;
        let (est, se) = smoothed_value_mc(&f, &[0.0, 0.0], mu, 100_000, 3).unwrap();
        assert!(
            (est - mu * mu * 2.0).abs() < 4.0 * se + 1e-12,
            "estimate {est}, stderr {se}"
        );
    }

    #[test]
    fn smoothing_vanishes_with_mu() {
        let f = abs_objective();
        let (est, _) = smoothed_value_mc(&f, &[0.4], 1e-12, 1000, 3).unwrap();
        assert!((est - 0.4).abs() < 1e-9);
    }

    #[test]
    fn smoothing_of_affine_function_is_itself() {
        // The Gaussian has zero mean, so E f(x + mu xi) = f(x) exactly;
        // both sandwich inequalities hold with the slack the bound forces.
        let f = linear_objective(vec![1.0, -2.0]);
        let x = [0.3, 0.7];
        let (est, se) = smoothed_value_mc(&f, &x, 0.5, 50_000, 13).unwrap();
        assert!((est - f.eval(&x)).abs() <= 4.0 * se);
        let report = sandwich_check(&f, &x, 0.5, norm(&[1.0, -2.0]), 50_000, 13).unwrap();
        assert_eq!(report.status, CheckStatus::Pass);
    }

    #[test]
    fn folded_gaussian_sandwich() {
        // f = |x| at 0 with mu = 1: smoothed value sqrt(2/pi) in [0, 1].
        let f = abs_objective();
        let report = sandwich_check(&f, &[0.0], 1.0, 1.0, 100_000, 11).unwrap();
        assert_eq!(report.status, CheckStatus::Pass);
        assert!((report.estimate - (2.0 / std::f64::consts::PI).sqrt()).abs() < 0.02);
    }

    #[test]
    fn sandwich_inconclusive_when_noise_dominates() {
        let f = abs_objective();
        // Tiny mu with few samples: the width shrinks below the noise.
        let report = sandwich_check(&f, &[0.5], 1e-9, 1.0, 100, 11).unwrap();
        assert_eq!(report.status, CheckStatus::Inconclusive);
    }

    #[test]
    fn moment_check_smooth_quadratic() {
        // Smoothed gradient of ||x||^2 is exactly 2x.
        let f = quadratic_objective(2.0);
        let report = oracle_moment_check(&f, &[1.0, 0.0], 1e-2, 4.0, 20_000, 21).unwrap();
        assert_eq!(report.status, CheckStatus::Pass, "{report:?}");
        assert!((report.oracle_mean[0] - 2.0).abs() < 0.2);
        assert!(report.oracle_mean[1].abs() < 0.2);
    }

    #[test]
    fn moment_check_chain_objective() {
        let inst = nesterov_problem(1, 3, &[1.0]).unwrap();
        let report = oracle_moment_check(
            &inst.agents[0],
            &[1.0 / 3.0; 3],
            1e-2,
            inst.max_lipschitz(),
            30_000,
            22,
        )
        .unwrap();
        assert_eq!(report.status, CheckStatus::Pass, "{report:?}");
    }

    #[test]
    fn default_costs_deterministic_and_in_range() {
        let a = default_costs(5, 7);
        let b = default_costs(5, 7);
        assert_eq!(a, b);
        assert!(a.iter().all(|&c| (0.5..1.5).contains(&c)));
        assert_ne!(default_costs(5, 8), a);
    }
}
