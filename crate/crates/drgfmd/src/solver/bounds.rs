//! Numeric evaluation of the convergence-bound constants.
//!
//! Every bound has the shape `smoothing penalty + decaying term`; the
//! penalty `sqrt(n) L mu_bar` is the price of the two-point oracle and
//! does not decay. The decaying term depends on the schedule family and,
//! for the weighted-average variants, on running sums of the schedule.

use crate::geometry::MirrorMap;
use crate::netgraph::MixingCertificate;
use crate::objective::{GradientFreeOracle, ProblemInstance};
use crate::solver::{AlgorithmConfig, EstimatorSite, SolverError, StepSchedule, Variant};

/// The non-decaying optimality-gap floor `sqrt(n) * L * mean(mu)`.
pub fn smoothing_penalty(dimension: usize, max_lipschitz: f64, mean_smoothing: f64) -> f64 {
    (dimension as f64).sqrt() * max_lipschitz * mean_smoothing
}

/// Everything the bound formulas consume, gathered from the run
/// components.
#[derive(Debug, Clone)]
pub struct BoundInputs {
    pub dimension: usize,
    pub n_agents: usize,
    pub max_lipschitz: f64,
    pub map_strong_convexity: f64,
    pub mean_smoothing: f64,
    /// Mixing envelope coefficient from the certificate.
    pub mixing_coefficient: f64,
    /// Mixing envelope decay from the certificate, in (0, 1).
    pub mixing_decay: f64,
    pub diameter_sq: Option<f64>,
    pub grad_lipschitz: Option<f64>,
    pub sigma_f: Option<f64>,
}

impl BoundInputs {
    pub fn gather(
        problem: &ProblemInstance,
        map: &dyn MirrorMap,
        oracle: &GradientFreeOracle,
        certificate: &MixingCertificate,
    ) -> Self {
        BoundInputs {
            dimension: problem.dimension(),
            n_agents: problem.n_agents(),
            max_lipschitz: problem.max_lipschitz(),
            map_strong_convexity: map.strong_convexity(),
            mean_smoothing: oracle.mean_mu(),
            mixing_coefficient: certificate.coefficient,
            mixing_decay: certificate.decay,
            diameter_sq: map.diameter_sq(),
            grad_lipschitz: map.grad_lipschitz(),
            sigma_f: problem.strong_convexity(),
        }
    }

    fn np4(&self) -> f64 {
        (self.dimension + 4) as f64
    }

    fn penalty(&self) -> f64 {
        smoothing_penalty(self.dimension, self.max_lipschitz, self.mean_smoothing)
    }

    /// The network consensus coefficient shared by the weighted-average
    /// bounds: `2 N G (n+4)^2 L^2 / (s (1-g)) + 4 (n+4)^2 L^2 / s`.
    fn consensus_coefficient(&self) -> f64 {
        let np4_sq = self.np4() * self.np4();
        let l_sq = self.max_lipschitz * self.max_lipschitz;
        let s = self.map_strong_convexity;
        2.0 * self.n_agents as f64 * self.mixing_coefficient * np4_sq * l_sq
            / (s * (1.0 - self.mixing_decay))
            + 4.0 * np4_sq * l_sq / s
    }

    fn require_diameter(&self) -> Result<f64, SolverError> {
        self.diameter_sq
            .ok_or(SolverError::UnsupportedBound("a finite divergence diameter"))
    }
}

/// A fully specified optimality-gap bound curve `t -> bound(t)`.
#[derive(Debug, Clone)]
pub enum RateBound {
    /// Running-mean bound for any non-increasing schedule on a compact
    /// domain: `penalty + d^2 / (t a_t) + coefficient * (1/t) sum a`.
    GeneralConvex {
        penalty: f64,
        diameter_sq: f64,
        sum_coefficient: f64,
        schedule: StepSchedule,
    },
    /// Running-mean bound under the sqrt schedule:
    /// `penalty + constant / sqrt(t)`.
    SqrtRate { penalty: f64, constant: f64 },
    /// Running-mean bound under the strongly convex schedule:
    /// `penalty + constant * ln(t) / t`, valid from `t = 8`.
    StronglyConvexRate { penalty: f64, constant: f64 },
    /// Reciprocal-weighted bound under the power schedule:
    /// `penalty + leading / (t+1)^(1-delta) + secondary / (t+1)^delta`.
    PowerWa {
        penalty: f64,
        leading: f64,
        secondary: f64,
        delta: f64,
    },
    /// Reciprocal-weighted bound for the scaled variant; evaluated from
    /// schedule running sums.
    PrimeWa {
        penalty: f64,
        initial_term: f64,
        centering_coefficient: f64,
        network_coefficient: f64,
        schedule: StepSchedule,
    },
}

impl RateBound {
    pub fn smoothing_penalty(&self) -> f64 {
        match *self {
            RateBound::GeneralConvex { penalty, .. }
            | RateBound::SqrtRate { penalty, .. }
            | RateBound::StronglyConvexRate { penalty, .. }
            | RateBound::PowerWa { penalty, .. }
            | RateBound::PrimeWa { penalty, .. } => penalty,
        }
    }

    /// Bound value at horizon `t`. Horizons where the bound is not yet
    /// valid evaluate to infinity.
    pub fn eval(&self, t: usize) -> f64 {
        self.series(&[t])[0]
    }

    /// Bound values at ascending horizons, sharing one pass over the
    /// schedule prefix sums.
    pub fn series(&self, ts: &[usize]) -> Vec<f64> {
        debug_assert!(ts.windows(2).all(|w| w[0] <= w[1]));
        match *self {
            RateBound::SqrtRate { penalty, constant } => ts
                .iter()
                .map(|&t| {
                    if t == 0 {
                        f64::INFINITY
                    } else {
                        penalty + constant / (t as f64).sqrt()
                    }
                })
                .collect(),
            RateBound::StronglyConvexRate { penalty, constant } => ts
                .iter()
                .map(|&t| {
                    if t < 8 {
                        f64::INFINITY
                    } else {
                        penalty + constant * (t as f64).ln() / t as f64
                    }
                })
                .collect(),
            RateBound::PowerWa {
                penalty,
                leading,
                secondary,
                delta,
            } => ts
                .iter()
                .map(|&t| {
                    let tp1 = (t + 1) as f64;
                    penalty + leading / tp1.powf(1.0 - delta) + secondary / tp1.powf(delta)
                })
                .collect(),
            RateBound::GeneralConvex {
                penalty,
                diameter_sq,
                sum_coefficient,
                schedule,
            } => {
                let mut out = Vec::with_capacity(ts.len());
                let mut alpha_sum = schedule.alpha(0);
                let mut t_now = 0usize;
                for &t in ts {
                    while t_now < t {
                        t_now += 1;
                        alpha_sum += schedule.alpha(t_now);
                    }
                    if t == 0 {
                        out.push(f64::INFINITY);
                    } else {
                        out.push(
                            penalty
                                + diameter_sq / (t as f64 * schedule.alpha(t))
                                + sum_coefficient * alpha_sum / t as f64,
                        );
                    }
                }
                out
            }
            RateBound::PrimeWa {
                penalty,
                initial_term,
                centering_coefficient,
                network_coefficient,
                schedule,
            } => {
                let mut out = Vec::with_capacity(ts.len());
                let mut alpha_sum = schedule.alpha(0);
                let mut inv_sum = 0.0;
                let mut t_now = 0usize;
                for &t in ts {
                    while t_now < t {
                        t_now += 1;
                        alpha_sum += schedule.alpha(t_now);
                        inv_sum += 1.0 / schedule.alpha(t_now);
                    }
                    if t == 0 {
                        out.push(f64::INFINITY);
                    } else {
                        let alpha_t = schedule.alpha(t);
                        out.push(
                            penalty
                                + (initial_term
                                    + centering_coefficient * t as f64
                                    + network_coefficient * alpha_sum / alpha_t)
                                    / inv_sum,
                        );
                    }
                }
                out
            }
        }
    }
}

/// Running-mean bound for an arbitrary non-increasing schedule on a
/// compact domain.
pub fn general_convex_bound(
    inputs: &BoundInputs,
    schedule: StepSchedule,
) -> Result<RateBound, SolverError> {
    let diameter_sq = inputs.require_diameter()?;
    let np4_sq = inputs.np4() * inputs.np4();
    let l_sq = inputs.max_lipschitz * inputs.max_lipschitz;
    let s = inputs.map_strong_convexity;
    let sum_coefficient = 9.0 * np4_sq * l_sq / (2.0 * s)
        + 2.0 * inputs.n_agents as f64 * np4_sq * inputs.mixing_coefficient * l_sq
            / (s * (1.0 - inputs.mixing_decay));
    Ok(RateBound::GeneralConvex {
        penalty: inputs.penalty(),
        diameter_sq,
        sum_coefficient,
        schedule,
    })
}

/// `1/sqrt(t)` bound constant under the sqrt schedule; the pre-consensus
/// estimator carries a different constant.
pub fn sqrt_rate_bound(
    inputs: &BoundInputs,
    eta: f64,
    site: EstimatorSite,
) -> Result<RateBound, SolverError> {
    let diameter_sq = inputs.require_diameter()?;
    let root2 = std::f64::consts::SQRT_2;
    let np4_sq = inputs.np4() * inputs.np4();
    let l = inputs.max_lipschitz;
    let s = inputs.map_strong_convexity;
    let n_agents = inputs.n_agents as f64;
    let coeff = inputs.mixing_coefficient;
    let decay = inputs.mixing_decay;
    let constant = match site {
        EstimatorSite::PostConsensus => {
            root2 * diameter_sq / eta
                + 9.0 * root2 * np4_sq * l * eta / s
                + 4.0 * root2 * n_agents * np4_sq * coeff * l * l * eta * decay
                    / (s * (1.0 - decay))
        }
        EstimatorSite::PreConsensus => {
            root2 * diameter_sq / eta
                + 8.0 * root2 * n_agents * n_agents * np4_sq * coeff * l * l * eta
                    / ((1.0 - decay) * s)
                + root2 * (16.0 * n_agents + 1.0) * np4_sq * l * l * eta / s
        }
    };
    Ok(RateBound::SqrtRate {
        penalty: inputs.penalty(),
        constant,
    })
}

/// `ln(t)/t` bound constant under the strongly convex schedule.
pub fn strongly_convex_bound(inputs: &BoundInputs) -> Result<RateBound, SolverError> {
    let grad_lipschitz = inputs
        .grad_lipschitz
        .ok_or(SolverError::UnsupportedBound("a Lipschitz map gradient"))?;
    let sigma_f = inputs
        .sigma_f
        .ok_or(SolverError::UnsupportedBound("strongly convex objectives"))?;
    let np4_sq = inputs.np4() * inputs.np4();
    let l_sq = inputs.max_lipschitz * inputs.max_lipschitz;
    let s = inputs.map_strong_convexity;
    let n_agents = inputs.n_agents as f64;
    let constant = (4.0 * n_agents * n_agents * np4_sq * inputs.mixing_coefficient * l_sq
        / ((1.0 - inputs.mixing_decay) * s)
        + (16.0 * n_agents + 1.0) * np4_sq * l_sq / (2.0 * s))
        * (2.0 * grad_lipschitz / sigma_f);
    Ok(RateBound::StronglyConvexRate {
        penalty: inputs.penalty(),
        constant,
    })
}

/// Two-exponent bound for the reciprocal-weighted average under the
/// power schedule.
pub fn power_wa_bound(inputs: &BoundInputs, rho: f64, delta: f64) -> Result<RateBound, SolverError> {
    let diameter_sq = inputs.require_diameter()?;
    // Largest admissible lower-bound fraction of the inverse-stepsize sum.
    let p = 1.0 - 0.5f64.powf(1.0 + delta);
    let np4_sq = inputs.np4() * inputs.np4();
    let l_sq = inputs.max_lipschitz * inputs.max_lipschitz;
    let s = inputs.map_strong_convexity;
    let leading = (delta + 1.0) * diameter_sq / (p * rho);
    let secondary = (np4_sq * l_sq / (2.0 * s)
        + inputs.consensus_coefficient() * (rho + 1.0 - delta) / (rho * (1.0 - delta)))
        * rho
        * (delta + 1.0)
        / p;
    Ok(RateBound::PowerWa {
        penalty: inputs.penalty(),
        leading,
        secondary,
        delta,
    })
}

/// Reciprocal-weighted bound for the scaled variant. `initial_divergence`
/// is the divergence from the optimum to the starting state.
pub fn prime_wa_bound(
    inputs: &BoundInputs,
    schedule: StepSchedule,
    initial_divergence: f64,
) -> Result<RateBound, SolverError> {
    let grad_lipschitz = inputs
        .grad_lipschitz
        .ok_or(SolverError::UnsupportedBound("a Lipschitz map gradient"))?;
    let sigma_f = inputs
        .sigma_f
        .ok_or(SolverError::UnsupportedBound("strongly convex objectives"))?;
    let np4_sq = inputs.np4() * inputs.np4();
    let l_sq = inputs.max_lipschitz * inputs.max_lipschitz;
    Ok(RateBound::PrimeWa {
        penalty: inputs.penalty(),
        initial_term: sigma_f * initial_divergence / grad_lipschitz,
        centering_coefficient: grad_lipschitz * np4_sq * l_sq
            / (2.0 * sigma_f * inputs.map_strong_convexity),
        network_coefficient: inputs.consensus_coefficient(),
        schedule,
    })
}

/// Picks the bound family matching the configured schedule and variant.
pub fn bound_constants(
    config: &AlgorithmConfig,
    problem: &ProblemInstance,
    map: &dyn MirrorMap,
    oracle: &GradientFreeOracle,
    certificate: &MixingCertificate,
) -> Result<RateBound, SolverError> {
    let inputs = BoundInputs::gather(problem, map, oracle, certificate);
    match config.schedule {
        StepSchedule::Sqrt { eta } => sqrt_rate_bound(&inputs, eta, config.estimator_site),
        StepSchedule::StronglyConvex { .. } => strongly_convex_bound(&inputs),
        StepSchedule::Power { rho, delta } => power_wa_bound(&inputs, rho, delta),
        StepSchedule::ScaledHarmonic => {
            if config.variant == Variant::DrgfmdPrime {
                let optimum = problem
                    .optimum
                    .as_ref()
                    .ok_or(SolverError::UnsupportedBound("a known optimum"))?;
                let initial = match &config.initial_point {
                    Some(p) => p.as_slice().to_vec(),
                    None => problem.domain.center(),
                };
                let divergence = map.bregman(&optimum.point, &initial)?;
                prime_wa_bound(&inputs, config.schedule, divergence)
            } else {
                general_convex_bound(&inputs, config.schedule)
            }
        }
    }
}

/// Per-step displacement bound `(n + 4) L alpha / s`.
pub fn step_error_bound(
    dimension: usize,
    max_lipschitz: f64,
    map_strong_convexity: f64,
    alpha: f64,
) -> f64 {
    (dimension + 4) as f64 * max_lipschitz * alpha / map_strong_convexity
}

/// Expected-disagreement envelopes per state index `t` in `0..=t_max`:
/// distance of one agent from the network mean (`from_mean`) and between
/// two agents (`pairwise`). Index 0 is unbounded (no step has run).
pub struct DisagreementBounds {
    pub from_mean: Vec<f64>,
    pub pairwise: Vec<f64>,
}

pub fn disagreement_bounds(
    schedule: StepSchedule,
    certificate: &MixingCertificate,
    dimension: usize,
    n_agents: usize,
    max_lipschitz: f64,
    map_strong_convexity: f64,
    t_max: usize,
) -> DisagreementBounds {
    let np4 = (dimension + 4) as f64;
    let base = np4 * max_lipschitz / map_strong_convexity;
    let net = n_agents as f64 * certificate.coefficient * base;
    let decay = certificate.decay;
    let mut from_mean = Vec::with_capacity(t_max + 1);
    let mut pairwise = Vec::with_capacity(t_max + 1);
    from_mean.push(f64::INFINITY);
    pairwise.push(f64::INFINITY);
    // geometric_sum at t is sum_{k=1}^{t-1} decay^(t-k) alpha_{k-1}.
    let mut geometric_sum = 0.0;
    for t in 1..=t_max {
        if t > 1 {
            geometric_sum = decay * (geometric_sum + schedule.alpha(t - 2));
        }
        let tail = base * schedule.alpha(t - 1);
        from_mean.push(net * geometric_sum + 2.0 * tail);
        pairwise.push(2.0 * net * geometric_sum + 4.0 * tail);
    }
    DisagreementBounds {
        from_mean,
        pairwise,
    }
}
