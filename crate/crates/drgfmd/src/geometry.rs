//! Mirror-map geometry: distance-generating functions, Bregman
//! divergences, and the proximal mirror step.
//!
//! Two maps are shipped, both strongly convex with modulus 1 with respect
//! to the Euclidean norm on their domains: the Euclidean half-squared-norm
//! and the negative entropy on the probability simplex. The entropy map
//! operates on an interior-floored simplex so that its gradient and the
//! divergence stay finite; steps that underflow the floor are clamped and
//! renormalized.

use thiserror::Error;

use crate::vecmath::{all_finite, dist, dot, sub};

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point has a non-finite coordinate")]
    NonFinite,
    #[error("coordinate {index} = {value} is below the interior floor {floor}")]
    NotInterior { index: usize, value: f64, floor: f64 },
    #[error("point outside domain: {0}")]
    OutsideDomain(String),
    #[error("weights do not form a convex combination: {0}")]
    BadWeights(String),
    #[error("inner solver failed to reach tolerance {tol} within {max_iters} iterations")]
    InnerSolveFailed { tol: f64, max_iters: usize },
}

/// Feasible set descriptor.
#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    /// Probability simplex with an interior floor used by the entropy map.
    Simplex { dim: usize, interior_floor: f64 },
    /// Axis-aligned box.
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// Unconstrained.
    FullSpace { dim: usize },
}

impl Domain {
    pub fn simplex(dim: usize) -> Self {
        Domain::Simplex {
            dim,
            interior_floor: 1e-12,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Simplex { dim, .. } | Domain::FullSpace { dim } => *dim,
            Domain::Box { lower, .. } => lower.len(),
        }
    }

    /// Deterministic membership test.
    ///
    /// Simplex membership allows |sum - 1| up to 1e-10 and coordinates
    /// down to -1e-12, matching what renormalized floating-point iterates
    /// can produce.
    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dim() || !all_finite(x) {
            return false;
        }
        match self {
            Domain::Simplex { .. } => {
                let sum: f64 = x.iter().sum();
                (sum - 1.0).abs() <= 1e-10 && x.iter().all(|&v| v >= -1e-12)
            }
            Domain::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(&v, (&lo, &hi))| v >= lo - 1e-12 && v <= hi + 1e-12),
            Domain::FullSpace { .. } => true,
        }
    }

    /// Euclidean projection onto the domain.
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        match self {
            Domain::Simplex { .. } => simplex_projection(v),
            Domain::Box { lower, upper } => v
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(&x, (&lo, &hi))| x.clamp(lo, hi))
                .collect(),
            Domain::FullSpace { .. } => v.to_vec(),
        }
    }

    /// A canonical interior point (simplex center, box midpoint, origin).
    pub fn center(&self) -> Vec<f64> {
        match self {
            Domain::Simplex { dim, .. } => vec![1.0 / *dim as f64; *dim],
            Domain::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(&lo, &hi)| 0.5 * (lo + hi))
                .collect(),
            Domain::FullSpace { dim } => vec![0.0; *dim],
        }
    }
}

/// A point of the decision space. Construction checks finiteness.
#[derive(Debug, Clone, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self, GeometryError> {
        if !all_finite(&coords) {
            return Err(GeometryError::NonFinite);
        }
        Ok(Point(coords))
    }

    /// Construction for coordinates already known to be finite.
    pub(crate) fn trusted(coords: Vec<f64>) -> Self {
        debug_assert!(all_finite(&coords));
        Point(coords)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl std::ops::Deref for Point {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Euclidean projection onto the probability simplex by sort and
/// threshold. Deterministic: the stable descending sort leaves equal
/// coordinates in index order.
pub fn simplex_projection(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    assert!(n > 0, "empty vector");
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite coordinates"));
    let mut cumsum = 0.0;
    let mut threshold = 0.0;
    for (j, &val) in sorted.iter().enumerate() {
        cumsum += val;
        let candidate = (cumsum - 1.0) / (j + 1) as f64;
        if val - candidate > 0.0 {
            threshold = candidate;
        }
    }
    v.iter().map(|&x| (x - threshold).max(0.0)).collect()
}

/// A distance-generating function together with its domain and the
/// constants the convergence bounds need.
pub trait MirrorMap: Send + Sync {
    fn dimension(&self) -> usize;
    fn domain(&self) -> &Domain;

    /// Value of the distance-generating function.
    fn phi(&self, x: &[f64]) -> Result<f64, GeometryError>;

    /// Gradient of the distance-generating function. Requires an interior
    /// point for the entropy map.
    fn grad_phi(&self, x: &[f64]) -> Result<Vec<f64>, GeometryError>;

    /// Strong-convexity modulus with respect to the Euclidean norm.
    fn strong_convexity(&self) -> f64;

    /// Lipschitz constant of the gradient on the domain, when finite.
    fn grad_lipschitz(&self) -> Option<f64>;

    /// Upper bound on the divergence over the domain, when finite.
    fn diameter_sq(&self) -> Option<f64>;

    /// Bregman divergence `phi(x) - phi(y) - <grad phi(y), x - y>`.
    fn bregman(&self, x: &[f64], y: &[f64]) -> Result<f64, GeometryError> {
        check_dim(self.dimension(), x)?;
        check_dim(self.dimension(), y)?;
        let grad_y = self.grad_phi(y)?;
        Ok(self.phi(x)? - self.phi(y)? - dot(&grad_y, &sub(x, y)))
    }

    /// Proximal mirror step: the domain-constrained minimizer of
    /// `alpha * <g, x> + D(x, y)`.
    ///
    /// The default implementation is an accelerated projected-gradient
    /// inner solve (tolerance 1e-10, at most 10^4 iterations); maps with a
    /// closed form override it.
    fn mirror_step(&self, y: &[f64], g: &[f64], alpha: f64) -> Result<Point, GeometryError> {
        mirror_step_numeric(
            &|x| self.phi(x),
            &|x| self.grad_phi(x),
            self.domain(),
            y,
            g,
            alpha,
            1e-10,
            10_000,
        )
    }
}

fn check_dim(expected: usize, x: &[f64]) -> Result<(), GeometryError> {
    if x.len() != expected {
        return Err(GeometryError::DimensionMismatch {
            expected,
            got: x.len(),
        });
    }
    if !all_finite(x) {
        return Err(GeometryError::NonFinite);
    }
    Ok(())
}

/// Accelerated projected-gradient solve of the mirror-step objective.
/// Generic fallback for maps without a closed-form step.
#[allow(clippy::too_many_arguments)]
fn mirror_step_numeric(
    phi: &dyn Fn(&[f64]) -> Result<f64, GeometryError>,
    grad_phi: &dyn Fn(&[f64]) -> Result<Vec<f64>, GeometryError>,
    domain: &Domain,
    y: &[f64],
    g: &[f64],
    alpha: f64,
    tol: f64,
    max_iters: usize,
) -> Result<Point, GeometryError> {
    let grad_phi_y = grad_phi(y)?;
    // Keep iterates strictly inside the simplex so entropy-like gradients
    // stay finite.
    let nudge = |x: Vec<f64>| -> Vec<f64> {
        if let Domain::Simplex { interior_floor, .. } = domain {
            clamp_to_floored_simplex(x, (*interior_floor).max(1e-15))
        } else {
            x
        }
    };
    // Objective up to a constant: alpha <g, x> + phi(x) - <grad phi(y), x>.
    let objective = |x: &[f64]| -> Result<f64, GeometryError> {
        Ok(alpha * dot(g, x) + phi(x)? - dot(&grad_phi_y, x))
    };
    let gradient = |x: &[f64]| -> Result<Vec<f64>, GeometryError> {
        let gp = grad_phi(x)?;
        Ok((0..x.len())
            .map(|d| alpha * g[d] + gp[d] - grad_phi_y[d])
            .collect())
    };

    let mut x = nudge(domain.project(y));
    let mut x_prev = x.clone();
    let mut momentum = 1.0f64;
    let mut lipschitz_est = 1.0f64;
    for iter in 0..max_iters {
        // Extrapolate, pulled back inside the domain.
        let next_momentum = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
        let beta = (momentum - 1.0) / next_momentum;
        let probe: Vec<f64> = if iter == 0 {
            x.clone()
        } else {
            nudge(domain.project(
                &x.iter()
                    .zip(&x_prev)
                    .map(|(&a, &b)| a + beta * (a - b))
                    .collect::<Vec<f64>>(),
            ))
        };
        let f_probe = objective(&probe)?;
        let grad = gradient(&probe)?;
        // Backtrack on the quadratic upper model at the probe point.
        let mut accepted: Option<Vec<f64>> = None;
        for _ in 0..120 {
            let step = 1.0 / lipschitz_est;
            let trial: Vec<f64> = probe.iter().zip(&grad).map(|(&p, &gr)| p - step * gr).collect();
            let trial = nudge(domain.project(&trial));
            let move_sq: f64 = trial
                .iter()
                .zip(&probe)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            let linear: f64 = trial
                .iter()
                .zip(&probe)
                .zip(&grad)
                .map(|((a, b), gr)| gr * (a - b))
                .sum();
            if objective(&trial)? <= f_probe + linear + 0.5 * lipschitz_est * move_sq + 1e-15 {
                accepted = Some(trial);
                break;
            }
            lipschitz_est *= 2.0;
        }
        let next = accepted.ok_or(GeometryError::InnerSolveFailed { tol, max_iters })?;
        let advance = dist(&next, &x);
        x_prev = std::mem::replace(&mut x, next);
        momentum = next_momentum;
        // Occasional relaxation lets the estimate track local curvature.
        lipschitz_est = (lipschitz_est * 0.9).max(1e-12);
        if advance <= tol && iter > 0 {
            return Ok(Point::trusted(x));
        }
    }
    Err(GeometryError::InnerSolveFailed { tol, max_iters })
}

/// Clamps coordinates below `floor` up to it and rescales the remaining
/// mass so the result stays on the simplex with every coordinate at or
/// above the floor.
fn clamp_to_floored_simplex(mut x: Vec<f64>, floor: f64) -> Vec<f64> {
    let n = x.len();
    if n == 1 {
        x[0] = 1.0;
        return x;
    }
    for _ in 0..n {
        let mut clamped_mass = 0.0;
        let mut free_mass = 0.0;
        let mut any_low = false;
        for &v in &x {
            if v <= floor {
                clamped_mass += floor;
                any_low = true;
            } else {
                free_mass += v;
            }
        }
        let scale = (1.0 - clamped_mass) / free_mass;
        let mut stable = true;
        for v in x.iter_mut() {
            if *v <= floor {
                *v = floor;
            } else {
                *v *= scale;
                if *v < floor {
                    stable = false;
                }
            }
        }
        if !any_low || stable {
            break;
        }
    }
    x
}

/// Half squared Euclidean norm on an arbitrary domain.
#[derive(Debug, Clone)]
pub struct EuclideanMap {
    domain: Domain,
}

impl EuclideanMap {
    pub fn new(domain: Domain) -> Self {
        EuclideanMap { domain }
    }

    pub fn on_simplex(dim: usize) -> Self {
        EuclideanMap::new(Domain::simplex(dim))
    }
}

impl MirrorMap for EuclideanMap {
    fn dimension(&self) -> usize {
        self.domain.dim()
    }

    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn phi(&self, x: &[f64]) -> Result<f64, GeometryError> {
        check_dim(self.dimension(), x)?;
        Ok(0.5 * dot(x, x))
    }

    fn grad_phi(&self, x: &[f64]) -> Result<Vec<f64>, GeometryError> {
        check_dim(self.dimension(), x)?;
        Ok(x.to_vec())
    }

    fn strong_convexity(&self) -> f64 {
        1.0
    }

    fn grad_lipschitz(&self) -> Option<f64> {
        Some(1.0)
    }

    fn diameter_sq(&self) -> Option<f64> {
        match &self.domain {
            // sup over the simplex of half the squared distance: vertices
            // are sqrt(2) apart.
            Domain::Simplex { .. } => Some(1.0),
            Domain::Box { lower, upper } => {
                let d_sq: f64 = lower
                    .iter()
                    .zip(upper)
                    .map(|(&lo, &hi)| (hi - lo) * (hi - lo))
                    .sum();
                Some(0.5 * d_sq)
            }
            Domain::FullSpace { .. } => None,
        }
    }

    fn mirror_step(&self, y: &[f64], g: &[f64], alpha: f64) -> Result<Point, GeometryError> {
        check_dim(self.dimension(), y)?;
        check_dim(self.dimension(), g)?;
        let target: Vec<f64> = y.iter().zip(g).map(|(&yv, &gv)| yv - alpha * gv).collect();
        Ok(Point::trusted(self.domain.project(&target)))
    }
}

/// Negative entropy on the interior-floored probability simplex.
#[derive(Debug, Clone)]
pub struct EntropyMap {
    domain: Domain,
    floor: f64,
}

impl EntropyMap {
    pub fn new(dim: usize, interior_floor: f64) -> Self {
        assert!(
            interior_floor > 0.0 && interior_floor * (dim as f64) < 1.0,
            "interior floor must be positive and leave room for the simplex"
        );
        EntropyMap {
            domain: Domain::Simplex {
                dim,
                interior_floor,
            },
            floor: interior_floor,
        }
    }

    pub fn on_simplex(dim: usize) -> Self {
        EntropyMap::new(dim, 1e-12)
    }

    pub fn interior_floor(&self) -> f64 {
        self.floor
    }

    fn check_interior(&self, x: &[f64]) -> Result<(), GeometryError> {
        // Consensus averaging of floored points can undershoot the floor
        // by a few ulps; allow a small relative slack.
        let limit = self.floor * (1.0 - 1e-6);
        for (index, &value) in x.iter().enumerate() {
            if value < limit {
                return Err(GeometryError::NotInterior {
                    index,
                    value,
                    floor: self.floor,
                });
            }
        }
        Ok(())
    }
}

impl MirrorMap for EntropyMap {
    fn dimension(&self) -> usize {
        self.domain.dim()
    }

    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn phi(&self, x: &[f64]) -> Result<f64, GeometryError> {
        check_dim(self.dimension(), x)?;
        // x ln x extends continuously to 0 at x = 0.
        Ok(x.iter()
            .map(|&v| if v > 0.0 { v * v.ln() } else { 0.0 })
            .sum())
    }

    fn grad_phi(&self, x: &[f64]) -> Result<Vec<f64>, GeometryError> {
        check_dim(self.dimension(), x)?;
        self.check_interior(x)?;
        Ok(x.iter().map(|&v| 1.0 + v.ln()).collect())
    }

    fn strong_convexity(&self) -> f64 {
        // Pinsker: KL(x, y) >= 0.5 ||x - y||_1^2 >= 0.5 ||x - y||_2^2.
        1.0
    }

    fn grad_lipschitz(&self) -> Option<f64> {
        // Hessian diag(1/x_d) on the floored interior.
        Some(1.0 / self.floor)
    }

    fn diameter_sq(&self) -> Option<f64> {
        // Conservative finite surrogate for the floored simplex; the
        // divergence is unbounded on the closed simplex.
        Some((self.dimension() as f64 / self.floor).ln())
    }

    fn bregman(&self, x: &[f64], y: &[f64]) -> Result<f64, GeometryError> {
        check_dim(self.dimension(), x)?;
        check_dim(self.dimension(), y)?;
        self.check_interior(y)?;
        // KL form of the divergence on the simplex; numerically kinder
        // than the three-term definition.
        let mut acc = 0.0;
        for (&xv, &yv) in x.iter().zip(y) {
            if xv > 0.0 {
                acc += xv * (xv / yv).ln();
            }
            acc += yv - xv;
        }
        Ok(acc)
    }

    fn mirror_step(&self, y: &[f64], g: &[f64], alpha: f64) -> Result<Point, GeometryError> {
        check_dim(self.dimension(), y)?;
        check_dim(self.dimension(), g)?;
        self.check_interior(y)?;
        // Exponentiated-gradient update x_d ∝ y_d exp(-alpha g_d),
        // computed in log space to dodge overflow.
        let logits: Vec<f64> = y
            .iter()
            .zip(g)
            .map(|(&yv, &gv)| yv.ln() - alpha * gv)
            .collect();
        let max_logit = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = logits.iter().map(|&l| (l - max_logit).exp()).collect();
        let total: f64 = weights.iter().sum();
        let x: Vec<f64> = weights.iter().map(|&w| w / total).collect();
        Ok(Point::trusted(clamp_to_floored_simplex(x, self.floor)))
    }
}

/// Residual of the three-point identity
/// `<grad phi(x) - grad phi(y), y - z> = D(z,x) - D(z,y) - D(y,x)`.
pub fn three_point_residual(
    map: &dyn MirrorMap,
    x: &[f64],
    y: &[f64],
    z: &[f64],
) -> Result<f64, GeometryError> {
    let grad_x = map.grad_phi(x)?;
    let grad_y = map.grad_phi(y)?;
    let lhs = dot(&sub(&grad_x, &grad_y), &sub(y, z));
    let rhs = map.bregman(z, x)? - map.bregman(z, y)? - map.bregman(y, x)?;
    Ok(lhs - rhs)
}

/// Residual of separate convexity in the second argument:
/// `D(x, sum_j theta_j y_j) - sum_j theta_j D(x, y_j)`, nonpositive for
/// maps satisfying the separate-convexity property.
pub fn separate_convexity_residual(
    map: &dyn MirrorMap,
    x: &[f64],
    ys: &[Vec<f64>],
    thetas: &[f64],
) -> Result<f64, GeometryError> {
    if ys.len() != thetas.len() || ys.is_empty() {
        return Err(GeometryError::BadWeights(format!(
            "{} points vs {} weights",
            ys.len(),
            thetas.len()
        )));
    }
    let total: f64 = thetas.iter().sum();
    if (total - 1.0).abs() > 1e-12 || thetas.iter().any(|&t| t < 0.0) {
        return Err(GeometryError::BadWeights(format!(
            "weights sum to {total}, all must be nonnegative"
        )));
    }
    let n = map.dimension();
    let mut blend = vec![0.0; n];
    for (y, &theta) in ys.iter().zip(thetas) {
        check_dim(n, y)?;
        for d in 0..n {
            blend[d] += theta * y[d];
        }
    }
    let mut weighted = 0.0;
    for (y, &theta) in ys.iter().zip(thetas) {
        weighted += theta * map.bregman(x, y)?;
    }
    Ok(map.bregman(x, &blend)? - weighted)
}
