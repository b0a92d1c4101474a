//! Random point generators for property suites and diagnostics.

use rand::Rng;

/// Uniform (Dirichlet(1)) sample from the simplex interior, with every
/// coordinate clamped to at least `floor`.
pub fn simplex_interior<R: Rng>(rng: &mut R, dim: usize, floor: f64) -> Vec<f64> {
    assert!(dim >= 1);
    if dim == 1 {
        return vec![1.0];
    }
    // Normalized exponentials are Dirichlet(1) distributed.
    let mut x: Vec<f64> = (0..dim)
        .map(|_| -rng.random_range(f64::MIN_POSITIVE..1.0f64).ln())
        .collect();
    let sum: f64 = x.iter().sum();
    for v in x.iter_mut() {
        *v /= sum;
    }
    let clamped_mass = floor * dim as f64;
    debug_assert!(clamped_mass < 1.0);
    // Blend toward the center enough to respect the floor.
    let min = x.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < floor {
        let center = 1.0 / dim as f64;
        let lambda = (floor - min) / (center - min);
        for v in x.iter_mut() {
            *v += lambda * (center - *v);
        }
    }
    x
}

/// Convex weights of the given length, uniformly from the simplex.
pub fn convex_weights<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    simplex_interior(rng, len, 0.0)
}
